#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace brainseg::testing {

inline double dual_objective(const std::vector<double>& K, const std::vector<int>& y, const std::vector<double>& a) {
  const std::size_t n = y.size();
  double lin = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < n; ++j) quad += a[i] * a[j] * y[i] * y[j] * K[i * n + j];
  }
  return lin - 0.5 * quad;
}

// Dense Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
    }
    if (std::abs(A[p][c]) < 1e-12) return std::nullopt;
    std::swap(A[p], A[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= A[i][i];
  return b;
}

/// Exact maximiser of the soft-margin dual by enumerating every assignment
/// of each variable to {0, C, free} and solving the equality-constrained
/// stationarity system for the free ones. Exponential; for tiny n only.
inline double brute_force_dual(const std::vector<double>& K, const std::vector<int>& y, double C) {
  const std::size_t n = y.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<int> state(n);
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
    }
    std::vector<double> a(n, 0.0);
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 1) a[i] = C;
      if (state[i] == 2) free.push_back(i);
    }
    if (!free.empty()) {
      const std::size_t m = free.size();
      std::vector<std::vector<double>> A(m + 1, std::vector<double>(m + 1, 0.0));
      std::vector<double> rhs(m + 1, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t i = free[r];
        for (std::size_t s = 0; s < m; ++s) A[r][s] = y[i] * y[free[s]] * K[i * n + free[s]];
        A[r][m] = y[i];
        rhs[r] = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (state[j] == 1) rhs[r] -= y[i] * y[j] * K[i * n + j] * C;
        }
        A[m][r] = y[i];
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (state[j] == 1) rhs[m] -= y[j] * C;
      }
      const auto sol = solve_linear(A, rhs);
      if (!sol) continue;
      for (std::size_t r = 0; r < m; ++r) a[free[r]] = (*sol)[r];
    }
    double balance = 0.0;
    bool feasible = true;
    for (std::size_t i = 0; i < n; ++i) {
      balance += a[i] * y[i];
      feasible = feasible && a[i] >= -1e-12 && a[i] <= C + 1e-12;
    }
    if (!feasible || std::abs(balance) > 1e-9) continue;
    best = std::max(best, dual_objective(K, y, a));
  }
  return best;
}

}  // namespace brainseg::testing
