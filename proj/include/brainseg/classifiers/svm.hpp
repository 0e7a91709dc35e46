#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brainseg/classifiers/samples.hpp"
#include "brainseg/error.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

enum class SvmKernel { Linear, Rbf };

struct SvmConfig {
  SvmKernel kernel = SvmKernel::Rbf;
  /// RBF width; defaults to 1 / feature width.
  std::optional<double> gamma;
  double C = 1.0;
  double tol = 1e-3;

  double gamma_for(std::size_t dim) const { return gamma ? *gamma : 1.0 / static_cast<double>(dim); }

  void validate() const {
    if (!(C > 0.0) || !std::isfinite(C)) throw Error(ErrorCode::InvalidConfig, "SVM C must be > 0");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "SVM tol must be > 0");
    if (gamma && !(*gamma > 0.0)) throw Error(ErrorCode::InvalidConfig, "SVM gamma must be > 0");
  }
};

inline double svm_kernel(SvmKernel kernel, double gamma, std::span<const double> a,
                         std::span<const double> b) {
  if (kernel == SvmKernel::Linear) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  }
  return std::exp(-gamma * squared_distance(a, b));
}

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Soft-margin dual by sequential minimal optimisation,
///   min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a <= C,  Q_ij = y_i y_j K_ij,
/// with the maximal-violating i and second-order choice of j. Stops once the
/// KKT gap m(a) - M(a) drops below tol, or after max_iterations steps.
/// Decision function: sum_t a_t y_t K(x_t, x) + bias.
inline SmoResult solve_smo(std::span<const double> kernel, std::span<const int> y, double C,
                           double tol, std::size_t max_iterations) {
  const std::size_t n = y.size();
  if (kernel.size() != n * n) throw Error(ErrorCode::DimensionMismatch, "SMO kernel matrix size");
  constexpr double kTau = 1e-12;
  const auto K = [&](std::size_t i, std::size_t j) { return kernel[i * n + j]; };

  SmoResult res;
  res.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = res.alpha;
  const auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < C : alpha[t] > 0.0; };
  const auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < C; };

  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmin = std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i == n) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax - gmin < tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iterations) break;
    ++res.iterations;

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    const double qij = y[i] * y[j] * K(i, j);
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * K(t, i) * di + y[j] * K(t, j) * dj);
    }
  }

  // Offset: mean of y*grad over free variables, else the midpoint of the
  // feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;
  res.bias = -rho;
  return res;
}

/// One binary machine: +1 is `positive` (lower tissue code), -1 `negative`.
struct SvmPairModel {
  Tissue positive = Tissue::Background;
  Tissue negative = Tissue::Skull;
  FeatureMatrix support;
  std::vector<double> coef;              // alpha_t * y_t
  std::vector<std::size_t> support_rows; // training row of each support vector
  double bias = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
};

struct SvmModel {
  std::size_t dim = 0;
  SvmConfig config;  // gamma always resolved
  std::vector<SvmPairModel> pairs;
  std::vector<std::pair<Tissue, Tissue>> skipped_pairs;

  std::size_t unconverged_pairs() const {
    std::size_t count = 0;
    for (const auto& p : pairs) count += p.converged ? 0 : 1;
    return count;
  }
};

inline constexpr double kSupportThreshold = 1e-8;

/// Iteration budget for one pair of n points: 10 n passes of n steps.
constexpr std::size_t smo_iteration_budget(std::size_t n) { return 10 * n * n; }

inline double svm_pair_decision(const SvmModel& model, const SvmPairModel& pair,
                                 std::span<const double> x) {
  const double gamma = *model.config.gamma;
  double sum = 0.0;
  for (std::size_t t = 0; t < pair.coef.size(); ++t) {
    sum += pair.coef[t] * svm_kernel(model.config.kernel, gamma, pair.support.row(t), x);
  }
  return sum + pair.bias;
}

/// One-vs-one training over the classes present (pairs in tissue-code order).
/// A pair lacking samples on either side is skipped and recorded.
inline SvmModel train_svm(SampleView samples, const SvmConfig& config) {
  config.validate();
  SvmModel model;
  model.dim = samples.dim();
  model.config = config;
  model.config.gamma = config.gamma_for(samples.dim());
  const double gamma = *model.config.gamma;

  std::array<std::vector<std::size_t>, kTissueCount> rows_of;
  for (std::size_t r = 0; r < samples.rows(); ++r) rows_of[index_of(samples.labels[r])].push_back(r);
  std::size_t present = 0;
  for (const auto& rows : rows_of) present += rows.empty() ? 0 : 1;
  if (present < 2) throw Error(ErrorCode::InvalidConfig, "SVM needs at least two classes");

  for (std::size_t a = 0; a < kTissueCount; ++a) {
    for (std::size_t b = a + 1; b < kTissueCount; ++b) {
      const Tissue ta = static_cast<Tissue>(a);
      const Tissue tb = static_cast<Tissue>(b);
      if (rows_of[a].empty() || rows_of[b].empty()) {
        model.skipped_pairs.emplace_back(ta, tb);
        continue;
      }
      std::vector<std::size_t> rows = rows_of[a];
      rows.insert(rows.end(), rows_of[b].begin(), rows_of[b].end());
      const std::size_t n = rows.size();
      std::vector<int> y(n);
      for (std::size_t t = 0; t < n; ++t) y[t] = t < rows_of[a].size() ? 1 : -1;
      std::vector<double> K(n * n);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = s; t < n; ++t) {
          const double k = svm_kernel(config.kernel, gamma, samples.features.row(rows[s]),
                                      samples.features.row(rows[t]));
          K[s * n + t] = k;
          K[t * n + s] = k;
        }
      }
      const SmoResult sol = solve_smo(K, y, config.C, config.tol, smo_iteration_budget(n));

      SvmPairModel pair;
      pair.positive = ta;
      pair.negative = tb;
      pair.support = FeatureMatrix(samples.dim());
      pair.bias = sol.bias;
      pair.converged = sol.converged;
      pair.iterations = sol.iterations;
      for (std::size_t t = 0; t < n; ++t) {
        if (sol.alpha[t] > kSupportThreshold) {
          pair.support.append(samples.features.row(rows[t]));
          pair.coef.push_back(sol.alpha[t] * y[t]);
          pair.support_rows.push_back(rows[t]);
        }
      }
      model.pairs.push_back(std::move(pair));
    }
  }
  return model;
}

/// Pairwise majority vote. A pair votes for `positive` when its decision
/// value is >= 0. Vote ties go to the largest summed |decision| over the
/// contests each tied class won, then to the lowest tissue code.
inline Tissue svm_predict(const SvmModel& model, std::span<const double> x) {
  std::array<std::size_t, kTissueCount> votes{};
  std::array<double, kTissueCount> strength{};
  for (const auto& pair : model.pairs) {
    const double dec = svm_pair_decision(model, pair, x);
    const std::size_t winner = index_of(dec >= 0.0 ? pair.positive : pair.negative);
    ++votes[winner];
    strength[winner] += std::abs(dec);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < kTissueCount; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best])) best = c;
  }
  return static_cast<Tissue>(best);
}

}  // namespace brainseg
