#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "brainseg/classifiers/samples.hpp"
#include "brainseg/error.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

struct PnnConfig {
  double sigma = 0.5;
  std::array<double, kTissueCount> priors = {0.2, 0.2, 0.2, 0.2, 0.2};
  std::array<double, kTissueCount> costs = {1.0, 1.0, 1.0, 1.0, 1.0};

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw Error(ErrorCode::InvalidConfig, "PNN sigma must be > 0");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < kTissueCount; ++c) {
      if (!(priors[c] >= 0.0) || !(costs[c] >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "PNN priors and costs must be >= 0");
      }
      total += priors[c];
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidConfig, "PNN priors must sum to 1");
  }
};

/// Parzen-window classifier: stored patterns per class plus the smoothing
/// width. There is no fitting step.
struct PnnModel {
  std::size_t dim = 0;
  PnnConfig config;
  std::array<FeatureMatrix, kTissueCount> patterns;

  /// Builds a model straight from per-class pattern lists; classes may be
  /// left empty, in which case they never win a prediction.
  static PnnModel from_patterns(std::size_t dim, PnnConfig config,
                                std::array<FeatureMatrix, kTissueCount> patterns) {
    config.validate();
    for (auto& p : patterns) {
      if (p.cols() == 0) p = FeatureMatrix(dim);
      if (p.cols() != dim) throw Error(ErrorCode::DimensionMismatch, "PNN pattern width");
    }
    return PnnModel{dim, config, std::move(patterns)};
  }
};

inline PnnModel train_pnn(SampleView samples, const PnnConfig& config) {
  config.validate();
  std::array<FeatureMatrix, kTissueCount> patterns;
  for (auto& p : patterns) p = FeatureMatrix(samples.dim());
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    patterns[index_of(samples.labels[r])].append(samples.features.row(r));
  }
  for (Tissue t : kAllTissues) {
    if (patterns[index_of(t)].rows() == 0) {
      throw Error(ErrorCode::InvalidConfig,
                  "PNN training set has no " + std::string(tissue_name(t)) + " rows");
    }
  }
  return PnnModel{samples.dim(), config, std::move(patterns)};
}

/// Gaussian Parzen density of one class:
/// f(x) = 1 / ((2 pi)^(n/2) sigma^n) * (1/m) * sum_i exp(-|x - x_i|^2 / (2 sigma^2)).
inline double pnn_class_pdf(const PnnModel& model, Tissue cls, std::span<const double> x) {
  const FeatureMatrix& pats = model.patterns[index_of(cls)];
  if (pats.rows() == 0) {
    throw Error(ErrorCode::UnknownClass,
                "PNN has no patterns for " + std::string(tissue_name(cls)));
  }
  const double n = static_cast<double>(model.dim);
  const double sigma = model.config.sigma;
  const double normalizer = 1.0 / (std::pow(2.0 * std::numbers::pi, n / 2.0) * std::pow(sigma, n));
  const double two_sigma2 = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (std::size_t i = 0; i < pats.rows(); ++i) {
    sum += std::exp(-squared_distance(x, pats.row(i)) / two_sigma2);
  }
  return normalizer * sum / static_cast<double>(pats.rows());
}

/// argmax over classes of prior * cost * density; ties go to the lowest
/// tissue code. When every density underflows to zero the class of the
/// nearest stored pattern is returned instead.
inline Tissue pnn_predict(const PnnModel& model, std::span<const double> x) {
  double best_score = -1.0;
  Tissue best = Tissue::Background;
  bool any = false;
  for (Tissue t : kAllTissues) {
    const std::size_t c = index_of(t);
    if (model.patterns[c].rows() == 0) continue;
    const double score = model.config.priors[c] * model.config.costs[c] * pnn_class_pdf(model, t, x);
    if (!any || score > best_score) {
      best_score = score;
      best = t;
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::UnknownClass, "PNN model has no patterns");
  if (best_score > 0.0) return best;

  double nearest = std::numeric_limits<double>::infinity();
  for (Tissue t : kAllTissues) {
    const FeatureMatrix& pats = model.patterns[index_of(t)];
    for (std::size_t i = 0; i < pats.rows(); ++i) {
      const double d = squared_distance(x, pats.row(i));
      if (d < nearest) {
        nearest = d;
        best = t;
      }
    }
  }
  return best;
}

}  // namespace brainseg
