#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "brainseg/classifiers/knn.hpp"
#include "classifier_fixtures.hpp"
#include "oracles.hpp"

using namespace brainseg;
using namespace brainseg::testing::oracle;
using brainseg::testing::gaussian_blobs;
using brainseg::testing::random_query;

TEST(Knn, NearestOfTwo) {
  FeatureMatrix f(3);
  f.append(std::vector<double>{0, 0, 0});
  f.append(std::vector<double>{100, 100, 100});
  const std::vector<Tissue> l = {Tissue::Background, Tissue::Skull};
  const KnnModel m = train_knn({f, l}, {1});
  EXPECT_EQ(knn_predict(m, std::vector<double>{0.1, -0.2, 0.0}), Tissue::Background);
}

TEST(Knn, MajorityOfThree) {
  FeatureMatrix f(1);
  for (double v : {0.0, 1.0, 2.0, 10.0}) f.append(std::vector<double>{v});
  const std::vector<Tissue> l = {Tissue::WhiteMatter, Tissue::GrayMatter, Tissue::GrayMatter, Tissue::Skull};
  EXPECT_EQ(knn_predict(train_knn({f, l}, {3}), std::vector<double>{0.2}), Tissue::GrayMatter);
}

TEST(Knn, VoteTieGoesToClosestClass) {
  FeatureMatrix f(1);
  for (double v : {-1.0, 2.0}) f.append(std::vector<double>{v});
  const std::vector<Tissue> l = {Tissue::WhiteMatter, Tissue::Skull};
  EXPECT_EQ(knn_predict(train_knn({f, l}, {2}), std::vector<double>{0.0}), Tissue::WhiteMatter);
  // Equal distance as well: lowest code.
  EXPECT_EQ(knn_predict(train_knn({f, l}, {2}), std::vector<double>{0.5}), Tissue::Skull);
}

TEST(Knn, DistanceTieAtRankKUsesLowerRow) {
  FeatureMatrix f(1);
  for (double v : {1.0, -1.0}) f.append(std::vector<double>{v});
  const std::vector<Tissue> l = {Tissue::Csf, Tissue::Background};
  EXPECT_EQ(knn_predict(train_knn({f, l}, {1}), std::vector<double>{0.0}), Tissue::Csf);
}

TEST(Knn, InvalidK) {
  const auto p = gaussian_blobs(2, 9, 1);
  for (std::size_t k : {std::size_t{0}, std::size_t{11}}) {
    try {
      train_knn({p.features, p.labels}, {k});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidK);
    }
  }
  EXPECT_NO_THROW(train_knn({p.features, p.labels}, {10}));
}

TEST(Knn, ExhaustiveOracle) {
  const auto p = gaussian_blobs(20, 9, 8);
  Rng rng(17);
  for (std::size_t k : {1u, 3u, 5u}) {
    const KnnModel m = train_knn({p.features, p.labels}, {k});
    for (int q = 0; q < 200; ++q) {
      const auto x = random_query(rng, 9);
      EXPECT_EQ(knn_predict(m, x), exhaustive_knn(p.features, p.labels, x, k));
    }
  }
}

TEST(Knn, OracleOnLatticeWithManyTies) {
  // Integer coordinates make equal distances common.
  Rng rng(4);
  FeatureMatrix f(2);
  std::vector<Tissue> l;
  for (int i = 0; i < 60; ++i) {
    f.append(std::vector<double>{static_cast<double>(rng.below(5)), static_cast<double>(rng.below(5))});
    l.push_back(static_cast<Tissue>(rng.below(5)));
  }
  for (std::size_t k : {1u, 2u, 3u, 4u, 5u, 7u}) {
    const KnnModel m = train_knn({f, l}, {k});
    for (int q = 0; q < 50; ++q) {
      const std::vector<double> x = {static_cast<double>(rng.below(5)), static_cast<double>(rng.below(5))};
      EXPECT_EQ(knn_predict(m, x), exhaustive_knn(f, l, x, k));
    }
  }
}
