#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "brainseg/classifiers/samples.hpp"
#include "brainseg/error.hpp"
#include "brainseg/rng.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

struct IsnnConfig {
  double mu = 0.1;
  std::size_t epochs = 1;
  /// When set, each epoch visits rows in a permutation drawn from stream
  /// ("isnn-order", epoch); otherwise rows are visited in order.
  std::optional<std::uint64_t> shuffle_seed;

  void validate() const {
    if (!(mu > 0.0 && mu < 1.0)) throw Error(ErrorCode::InvalidConfig, "ISNN mu must lie in (0, 1)");
    if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "ISNN epochs must be >= 1");
  }
};

struct IsnnNode {
  std::vector<double> weight;
  Tissue cls = Tissue::Background;
  std::size_t insertion_index = 0;

  friend bool operator==(const IsnnNode&, const IsnnNode&) = default;
};

/// Prototype network: nodes are kept in insertion order.
struct IsnnModel {
  std::size_t dim = 0;
  IsnnConfig config;
  std::vector<IsnnNode> nodes;
};

struct IsnnEvent {
  enum class Kind { Matched, Inserted };
  Kind kind;
  std::size_t epoch;
  std::size_t row;
  std::size_t node;  // winner (Matched) or the new node (Inserted)
  std::size_t nodes_before;
  std::size_t nodes_after;
  std::vector<double> weight_before;  // winner weight before the update
  std::vector<double> weight_after;
};

using IsnnObserver = std::function<void(const IsnnEvent&)>;

namespace detail {

inline std::size_t nearest_node(const std::vector<IsnnNode>& nodes, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = squared_distance(x, nodes[i].weight);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace detail

/// Incremental supervised training. Seed nodes are the first row of each
/// class in row order. For every row x of class c: the nearest node w moves
/// to w + mu (x - w) when its class is c; otherwise x is appended as a new
/// node of class c. Nodes are never removed.
inline IsnnModel train_isnn(SampleView samples, const IsnnConfig& config,
                            const IsnnObserver& observer = {}) {
  config.validate();
  if (samples.rows() == 0) throw Error(ErrorCode::InvalidConfig, "ISNN training set is empty");

  IsnnModel model{samples.dim(), config, {}};
  std::array<bool, kTissueCount> seeded{};
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    const Tissue t = samples.labels[r];
    if (seeded[index_of(t)]) continue;
    seeded[index_of(t)] = true;
    const auto row = samples.features.row(r);
    model.nodes.push_back({{row.begin(), row.end()}, t, model.nodes.size()});
  }

  std::vector<std::size_t> order(samples.rows());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle_seed) {
      Rng rng = Rng::stream(*config.shuffle_seed, "isnn-order", epoch);
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
      }
    }
    for (std::size_t r : order) {
      const auto x = samples.features.row(r);
      const Tissue c = samples.labels[r];
      const std::size_t win = detail::nearest_node(model.nodes, x);
      const std::size_t before = model.nodes.size();
      if (model.nodes[win].cls == c) {
        std::vector<double> old;
        if (observer) old = model.nodes[win].weight;
        auto& w = model.nodes[win].weight;
        for (std::size_t d = 0; d < w.size(); ++d) w[d] += config.mu * (x[d] - w[d]);
        if (observer) {
          observer({IsnnEvent::Kind::Matched, epoch, r, win, before, before, std::move(old), w});
        }
      } else {
        model.nodes.push_back({{x.begin(), x.end()}, c, before});
        if (observer) {
          observer({IsnnEvent::Kind::Inserted, epoch, r, before, before, model.nodes.size(),
                    model.nodes[win].weight, model.nodes[win].weight});
        }
      }
    }
  }
  return model;
}

/// Class of the nearest node; equidistant nodes resolve to the earlier one.
inline Tissue isnn_predict(const IsnnModel& model, std::span<const double> x) {
  if (model.nodes.empty()) throw Error(ErrorCode::UnknownClass, "ISNN model has no nodes");
  return model.nodes[detail::nearest_node(model.nodes, x)].cls;
}

}  // namespace brainseg
