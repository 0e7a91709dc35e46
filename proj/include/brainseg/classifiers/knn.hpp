#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "brainseg/classifiers/samples.hpp"
#include "brainseg/error.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

struct KnnConfig {
  std::size_t k = 5;
};

struct KnnModel {
  FeatureMatrix points;
  std::vector<Tissue> labels;
  std::size_t k = 1;
};

inline KnnModel train_knn(SampleView samples, const KnnConfig& config) {
  if (config.k < 1 || config.k > samples.rows()) {
    throw Error(ErrorCode::InvalidK, "k=" + std::to_string(config.k) + " with " +
                                         std::to_string(samples.rows()) + " training rows");
  }
  return KnnModel{samples.features, {samples.labels.begin(), samples.labels.end()}, config.k};
}

/// Majority vote of the k nearest rows (Euclidean). Distance ties at rank k
/// go to the lower row index. Vote ties go to the tied class whose nearest
/// neighbour is closest, then to the lowest tissue code.
inline Tissue knn_predict(const KnnModel& model, std::span<const double> x) {
  const std::size_t n = model.points.rows();
  std::vector<std::pair<double, std::size_t>> ranked(n);
  for (std::size_t i = 0; i < n; ++i) ranked[i] = {squared_distance(x, model.points.row(i)), i};
  const auto kth = ranked.begin() + static_cast<std::ptrdiff_t>(model.k);
  std::partial_sort(ranked.begin(), kth, ranked.end());

  std::array<std::size_t, kTissueCount> votes{};
  std::array<double, kTissueCount> closest;
  closest.fill(std::numeric_limits<double>::infinity());
  for (auto it = ranked.begin(); it != kth; ++it) {
    const std::size_t c = index_of(model.labels[it->second]);
    ++votes[c];
    closest[c] = std::min(closest[c], it->first);
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < kTissueCount; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && closest[c] < closest[best])) best = c;
  }
  return static_cast<Tissue>(best);
}

}  // namespace brainseg
