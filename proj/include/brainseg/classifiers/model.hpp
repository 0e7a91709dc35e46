#pragma once

#include <span>
#include <string>
#include <variant>

#include "brainseg/classifiers/isnn.hpp"
#include "brainseg/classifiers/knn.hpp"
#include "brainseg/classifiers/pnn.hpp"
#include "brainseg/classifiers/samples.hpp"
#include "brainseg/classifiers/svm.hpp"
#include "brainseg/feature_grid.hpp"
#include "brainseg/gabor.hpp"
#include "brainseg/image.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

/// Hyperparameters for all four classifiers; only the block matching the
/// trained kind is consulted.
struct ClassifierConfig {
  PnnConfig pnn;
  KnnConfig knn;
  IsnnConfig isnn;
  SvmConfig svm;
};

using Model = std::variant<PnnModel, KnnModel, IsnnModel, SvmModel>;

inline ClassifierKind kind_of(const Model& model) {
  return static_cast<ClassifierKind>(model.index());
}

inline Model train_classifier(ClassifierKind kind, SampleView samples, const ClassifierConfig& config) {
  switch (kind) {
    case ClassifierKind::Pnn: return train_pnn(samples, config.pnn);
    case ClassifierKind::Knn: return train_knn(samples, config.knn);
    case ClassifierKind::Isnn: return train_isnn(samples, config.isnn);
    case ClassifierKind::Svm: return train_svm(samples, config.svm);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown classifier kind");
}

inline Tissue predict(const Model& model, std::span<const double> x) {
  struct Visitor {
    std::span<const double> x;
    Tissue operator()(const PnnModel& m) const { return pnn_predict(m, x); }
    Tissue operator()(const KnnModel& m) const { return knn_predict(m, x); }
    Tissue operator()(const IsnnModel& m) const { return isnn_predict(m, x); }
    Tissue operator()(const SvmModel& m) const { return svm_predict(m, x); }
  };
  return std::visit(Visitor{x}, model);
}

/// Normalise each pixel's features with `stats`, then classify it.
inline LabelMap segment_image(const FeatureGrid& grid, const FeatureStats& stats, const Model& model) {
  require_feature_dim(grid.dim(), "segment_image");
  LabelMap out(grid.width(), grid.height());
  std::array<double, kFeatureDim> z{};
  for (std::size_t p = 0; p < grid.pixel_count(); ++p) {
    stats.apply(grid.pixel(p), z);
    try {
      out[p] = predict(model, z);
    } catch (const Error& e) {
      e.rethrow_with_context("pixel (" + std::to_string(p % grid.width()) + "," +
                             std::to_string(p / grid.width()) + ")");
    }
  }
  return out;
}

}  // namespace brainseg
