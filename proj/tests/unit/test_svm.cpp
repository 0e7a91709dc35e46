#include <gtest/gtest.h>

#include "brainseg/classifiers/svm.hpp"
#include "classifier_fixtures.hpp"
#include "svm_oracle.hpp"

using namespace brainseg;
using brainseg::testing::brute_force_dual;
using brainseg::testing::dual_objective;
using brainseg::testing::gaussian_blobs;

namespace {

struct PairProblem {
  std::vector<double> K;
  std::vector<int> y;
};

PairProblem random_pair_problem(std::uint64_t seed, std::size_t n, double gamma) {
  Rng rng(seed);
  std::vector<std::vector<double>> x(n, std::vector<double>(2));
  PairProblem p;
  for (std::size_t i = 0; i < n; ++i) {
    p.y.push_back(i < n / 2 ? 1 : -1);
    for (auto& v : x[i]) v = 2.0 * rng.uniform() - 1.0 + (i < n / 2 ? 0.4 : -0.4);
  }
  p.K.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) p.K[i * n + j] = svm_kernel(SvmKernel::Rbf, gamma, x[i], x[j]);
  }
  return p;
}

// Largest KKT violation of the solution, measured on y_i f(x_i).
double kkt_violation(const PairProblem& p, const SmoResult& s, double C) {
  const std::size_t n = p.y.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = s.bias;
    for (std::size_t j = 0; j < n; ++j) f += s.alpha[j] * p.y[j] * p.K[i * n + j];
    const double m = p.y[i] * f;
    if (s.alpha[i] <= 0.0) {
      worst = std::max(worst, 1.0 - m);
    } else if (s.alpha[i] >= C) {
      worst = std::max(worst, m - 1.0);
    } else {
      worst = std::max(worst, std::abs(m - 1.0));
    }
  }
  return worst;
}

}  // namespace

TEST(Smo, MatchesBruteForceDual) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    for (double C : {0.5, 1.0, 10.0}) {
      const PairProblem p = random_pair_problem(seed, 6, 1.0);
      // Stopping tolerance tightened so the objective lands within 1e-6.
      const SmoResult s = solve_smo(p.K, p.y, C, 1e-6, smo_iteration_budget(6));
      EXPECT_TRUE(s.converged);
      const double oracle = brute_force_dual(p.K, p.y, C);
      EXPECT_NEAR(dual_objective(p.K, p.y, s.alpha), oracle, 1e-6) << "seed " << seed << " C " << C;
    }
  }
}

TEST(Smo, FeasibilityAndKkt) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PairProblem p = random_pair_problem(seed * 31, 40, 0.7);
    const double C = 1.0;
    const SmoResult s = solve_smo(p.K, p.y, C, 1e-3, smo_iteration_budget(40));
    ASSERT_TRUE(s.converged);
    double balance = 0.0;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      EXPECT_GE(s.alpha[i], 0.0);
      EXPECT_LE(s.alpha[i], C);
      balance += s.alpha[i] * p.y[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-6);
    EXPECT_LE(kkt_violation(p, s, C), 1e-3);
  }
}

TEST(Smo, BudgetExhaustionIsReported) {
  const PairProblem p = random_pair_problem(3, 30, 0.5);
  const SmoResult s = solve_smo(p.K, p.y, 100.0, 1e-12, 3);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.iterations, 3u);
}

TEST(Svm, SeparableLinear) {
  FeatureMatrix f(3);
  std::vector<Tissue> l;
  for (double v : {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0}) {
    f.append(std::vector<double>{v, 0.0, 0.0});
    l.push_back(v < 0 ? Tissue::Csf : Tissue::WhiteMatter);
  }
  SvmConfig cfg;
  cfg.kernel = SvmKernel::Linear;
  cfg.C = 10.0;
  const SvmModel m = train_svm({f, l}, cfg);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.skipped_pairs.size(), 9u);
  const auto& pair = m.pairs[0];
  EXPECT_EQ(pair.positive, Tissue::Csf);
  EXPECT_LT(svm_pair_decision(m, pair, std::vector<double>{1.0, 0.0, 0.0}), 0.0);
  EXPECT_GT(svm_pair_decision(m, pair, std::vector<double>{-1.0, 0.0, 0.0}), 0.0);
  for (std::size_t r = 0; r < f.rows(); ++r) EXPECT_EQ(svm_predict(m, f.row(r)), l[r]);
}

TEST(Svm, FiveClassInvariants) {
  const auto p = gaussian_blobs(20, 9, 41);
  const SvmModel m = train_svm({p.features, p.labels}, {});
  EXPECT_EQ(m.pairs.size(), 10u);
  EXPECT_DOUBLE_EQ(*m.config.gamma, 1.0 / 9.0);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a + 1; b < 5; ++b) {
      const auto& pair = m.pairs[idx++];
      EXPECT_EQ(pair.positive, static_cast<Tissue>(a));
      EXPECT_EQ(pair.negative, static_cast<Tissue>(b));
      EXPECT_TRUE(pair.converged);
      double balance = 0.0;
      for (double c : pair.coef) {
        EXPECT_LE(std::abs(c), m.config.C + 1e-12);
        EXPECT_GT(std::abs(c), kSupportThreshold);
        balance += c;
      }
      EXPECT_NEAR(balance, 0.0, 1e-6);
      for (std::size_t t = 0; t < pair.support_rows.size(); ++t) {
        EXPECT_EQ(p.labels[pair.support_rows[t]], pair.coef[t] > 0 ? pair.positive : pair.negative);
      }
    }
  }
}

TEST(Svm, MidpointTieIsDeterministic) {
  FeatureMatrix f(1);
  f.append(std::vector<double>{-1.0});
  f.append(std::vector<double>{1.0});
  const std::vector<Tissue> l = {Tissue::Skull, Tissue::GrayMatter};
  SvmConfig cfg;
  cfg.kernel = SvmKernel::Linear;
  const SvmModel m = train_svm({f, l}, cfg);
  const double dec = svm_pair_decision(m, m.pairs[0], std::vector<double>{0.0});
  EXPECT_NEAR(dec, 0.0, 1e-12);
  // A decision of exactly zero votes for the lower code.
  SvmModel exact = m;
  exact.pairs[0].bias -= dec;
  EXPECT_EQ(svm_predict(exact, std::vector<double>{0.0}), Tissue::Skull);
  EXPECT_EQ(svm_predict(m, std::vector<double>{0.0}), svm_predict(m, std::vector<double>{0.0}));
}

TEST(Svm, VoteTieUsesDecisionStrength) {
  // Three classes on a line; a point between classes can collect one vote
  // each. The class with the largest summed |decision| wins.
  SvmModel m;
  m.dim = 1;
  m.config.kernel = SvmKernel::Linear;
  m.config.gamma = 1.0;
  auto make_pair = [](Tissue pos, Tissue neg, double bias) {
    SvmPairModel p;
    p.positive = pos;
    p.negative = neg;
    p.support = FeatureMatrix(1);
    p.bias = bias;
    return p;
  };
  m.pairs.push_back(make_pair(Tissue::Background, Tissue::Skull, 0.5));   // Background +0.5
  m.pairs.push_back(make_pair(Tissue::Background, Tissue::Csf, -0.25));   // Csf 0.25
  m.pairs.push_back(make_pair(Tissue::Skull, Tissue::Csf, 2.0));          // Skull 2
  EXPECT_EQ(svm_predict(m, std::vector<double>{0.0}), Tissue::Skull);
  m.pairs[2].bias = 0.4;  // Skull 0.4 < Background 0.5
  EXPECT_EQ(svm_predict(m, std::vector<double>{0.0}), Tissue::Background);
  m.pairs[2].bias = 0.5;  // exact strength tie: lowest code
  EXPECT_EQ(svm_predict(m, std::vector<double>{0.0}), Tissue::Background);
}

TEST(Svm, DuplicatingNonSupportPointKeepsPredictions) {
  const auto p = gaussian_blobs(15, 9, 43, 0.6);
  const SvmModel m = train_svm({p.features, p.labels}, {});
  std::vector<bool> is_support(p.labels.size(), false);
  for (const auto& pair : m.pairs) {
    for (std::size_t r : pair.support_rows) is_support[r] = true;
  }
  std::size_t extra = 0;
  while (extra < is_support.size() && is_support[extra]) ++extra;
  ASSERT_LT(extra, is_support.size()) << "every row is a support vector";

  FeatureMatrix f2 = p.features;
  std::vector<Tissue> l2 = p.labels;
  f2.append(p.features.row(extra));
  l2.push_back(p.labels[extra]);
  const SvmModel m2 = train_svm({f2, l2}, {});
  Rng rng(8);
  for (int q = 0; q < 100; ++q) {
    const auto x = brainseg::testing::random_query(rng, 9);
    EXPECT_EQ(svm_predict(m, x), svm_predict(m2, x));
  }
}

TEST(Svm, Errors) {
  FeatureMatrix f(2);
  f.append(std::vector<double>{0, 0});
  const std::vector<Tissue> l = {Tissue::Skull};
  EXPECT_THROW(train_svm({f, l}, {}), Error);
  const auto p = gaussian_blobs(3, 9, 1);
  SvmConfig bad;
  bad.C = 0.0;
  EXPECT_THROW(train_svm({p.features, p.labels}, bad), Error);
}
