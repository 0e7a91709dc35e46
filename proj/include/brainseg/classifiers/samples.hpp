#pragma once

#include <span>
#include <string>

#include "brainseg/dataset.hpp"
#include "brainseg/error.hpp"
#include "brainseg/image.hpp"

namespace brainseg {

/// Labelled rows handed to a trainer. Width is generic so the algorithms can
/// be exercised on small hand-built problems; pipeline code always passes 9.
struct SampleView {
  const FeatureMatrix& features;
  std::span<const Tissue> labels;

  SampleView(const FeatureMatrix& f, std::span<const Tissue> l) : features(f), labels(l) {
    if (features.rows() != labels.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature rows " + std::to_string(features.rows()) + " != labels " +
                      std::to_string(labels.size()));
    }
  }
  SampleView(const TrainingSet& ts) : SampleView(ts.features(), ts.labels()) {}  // NOLINT

  std::size_t rows() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

}  // namespace brainseg
