#pragma once

#include <vector>

#include "brainseg/image.hpp"
#include "brainseg/rng.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg::testing {

/// Labelled random rows: class c is centred at (2c, -c, c, ...) with unit
/// spread, so the classes overlap partially.
struct Problem {
  FeatureMatrix features;
  std::vector<Tissue> labels;
};

inline Problem gaussian_blobs(std::size_t per_class, std::size_t dim, std::uint64_t seed, double spread = 1.0) {
  Rng rng(seed);
  Problem p{FeatureMatrix(dim), {}};
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (Tissue t : kAllTissues) {
      const double c = static_cast<double>(index_of(t));
      for (std::size_t d = 0; d < dim; ++d) row[d] = (d % 2 == 0 ? c : -0.5 * c) + spread * rng.normal();
      p.features.append(row);
      p.labels.push_back(t);
    }
  }
  return p;
}

inline std::vector<double> random_query(Rng& rng, std::size_t dim, double scale = 2.5) {
  std::vector<double> q(dim);
  for (auto& v : q) v = scale * (2.0 * rng.uniform() - 1.0) + 1.0;
  return q;
}

}  // namespace brainseg::testing
