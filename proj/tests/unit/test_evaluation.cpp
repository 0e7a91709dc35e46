#include <gtest/gtest.h>

#include <algorithm>

#include "brainseg/dataset.hpp"
#include "brainseg/evaluation.hpp"
#include "brainseg/serialization.hpp"

using namespace brainseg;

namespace {

LabelMap map_of(std::size_t w, std::size_t h, std::initializer_list<int> codes) {
  std::vector<Tissue> v;
  for (int c : codes) v.push_back(static_cast<Tissue>(c));
  return LabelMap(w, h, std::move(v));
}

constexpr int B = 0, S = 1, C = 2, G = 3, W = 4;

struct Fraction {
  long num;
  long den;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace

TEST(Confusion, HandCount) {
  const LabelMap pred = map_of(2, 2, {G, G, W, B});
  const LabelMap truth = map_of(2, 2, {G, W, W, B});
  EXPECT_EQ(confusion_counts(pred, truth, Tissue::GrayMatter), (ConfusionCounts{1, 1, 0}));
  EXPECT_EQ(confusion_counts(pred, pred, Tissue::WhiteMatter), (ConfusionCounts{1, 0, 0}));
  EXPECT_EQ(confusion_counts(pred, truth, Tissue::Csf), (ConfusionCounts{0, 0, 0}));
  EXPECT_THROW(confusion_counts(pred, LabelMap(3, 2), Tissue::Csf), Error);
}

TEST(Metrics, WorkedExample) {
  const ConfusionCounts c{1, 1, 0};
  EXPECT_EQ(precision(c), 0.5);
  EXPECT_EQ(recall(c), 1.0);
  EXPECT_NEAR(f_measure(c), 2.0 / 3.0, 1e-15);
}

TEST(Metrics, DegenerateConventions) {
  const TissueScore absent = score_counts(Tissue::Csf, {0, 0, 0});
  EXPECT_EQ(absent.f_measure, 1.0);
  EXPECT_TRUE(absent.degenerate);
  const TissueScore missed = score_counts(Tissue::Csf, {0, 0, 4});
  EXPECT_EQ(missed.precision, 0.0);
  EXPECT_EQ(missed.recall, 0.0);
  EXPECT_EQ(missed.f_measure, 0.0);
  EXPECT_TRUE(missed.degenerate);
  const TissueScore spurious = score_counts(Tissue::Csf, {0, 3, 0});
  EXPECT_EQ(spurious.recall, 0.0);
  EXPECT_EQ(spurious.f_measure, 0.0);
  EXPECT_TRUE(spurious.degenerate);
  const TissueScore wrong = score_counts(Tissue::Csf, {0, 2, 2});
  EXPECT_EQ(wrong.f_measure, 0.0);
  EXPECT_FALSE(wrong.degenerate);
}

// Twelve crafted 4x4 pairs; expected precision and recall as exact fractions
// counted by hand, for the tissue named in each case.
TEST(Metrics, CraftedFourByFourPairs) {
  struct Case {
    std::initializer_list<int> pred;
    std::initializer_list<int> truth;
    int tissue;
    Fraction p;
    Fraction r;
  };
  const Case cases[] = {
      {{B, B, B, B, B, S, S, B, B, S, S, B, B, B, B, B}, {B, B, B, B, B, S, S, B, B, S, S, B, B, B, B, B}, S, {4, 4}, {4, 4}},
      {{B, B, B, B, B, S, S, B, B, S, S, B, B, B, B, B}, {B, B, B, B, B, S, S, S, B, S, S, S, B, B, B, B}, S, {4, 4}, {4, 6}},
      {{B, B, B, B, S, S, S, S, B, S, S, B, B, B, B, B}, {B, B, B, B, B, S, S, B, B, S, S, B, B, B, B, B}, S, {4, 6}, {4, 4}},
      {{B, B, B, B, S, S, S, S, B, S, S, B, B, B, B, B}, {B, B, B, B, B, S, S, B, B, S, S, B, B, B, B, B}, B, {10, 10}, {10, 12}},
      {{G, G, W, W, G, G, W, W, C, C, W, W, C, C, W, W}, {G, W, W, W, G, G, W, W, C, C, C, W, C, C, W, W}, W, {7, 8}, {7, 8}},
      {{G, G, W, W, G, G, W, W, C, C, W, W, C, C, W, W}, {G, W, W, W, G, G, W, W, C, C, C, W, C, C, W, W}, G, {3, 4}, {3, 3}},
      {{G, G, W, W, G, G, W, W, C, C, W, W, C, C, W, W}, {G, W, W, W, G, G, W, W, C, C, C, W, C, C, W, W}, C, {4, 4}, {4, 5}},
      {{S, S, S, S, S, S, S, S, S, S, S, S, S, S, S, S}, {S, C, G, W, B, S, C, G, W, B, S, C, G, W, B, S}, S, {4, 16}, {4, 4}},
      {{S, S, S, S, S, S, S, S, S, S, S, S, S, S, S, S}, {S, C, G, W, B, S, C, G, W, B, S, C, G, W, B, S}, W, {0, 1}, {0, 3}},
      {{B, S, C, G, W, B, S, C, G, W, B, S, C, G, W, B}, {W, B, S, C, G, W, B, S, C, G, W, B, S, C, G, W}, B, {0, 4}, {0, 3}},
      {{B, S, C, G, W, B, S, C, G, W, B, S, C, G, W, B}, {B, S, C, G, W, B, S, C, G, W, B, S, C, G, W, W}, W, {3, 3}, {3, 4}},
      {{B, S, C, G, W, B, S, C, G, W, B, S, C, G, W, B}, {B, S, C, G, W, B, S, C, G, W, B, S, C, G, W, W}, B, {3, 4}, {3, 3}},
  };
  for (const auto& c : cases) {
    const ConfusionCounts cc = confusion_counts(map_of(4, 4, c.pred), map_of(4, 4, c.truth), static_cast<Tissue>(c.tissue));
    const double p = c.p.num == 0 ? 0.0 : c.p.value();
    const double r = c.r.num == 0 ? 0.0 : c.r.value();
    EXPECT_NEAR(precision(cc), p, 1e-12);
    EXPECT_NEAR(recall(cc), r, 1e-12);
    // F as the exact rational 2 tp / (2 tp + fp + fn).
    const double f = (p + r == 0.0) ? 0.0 : 2.0 * p * r / (p + r);
    EXPECT_NEAR(f_measure(cc), f, 1e-12);
    if (cc.tp > 0) {
      EXPECT_NEAR(f_measure(cc), static_cast<double>(2 * cc.tp) / static_cast<double>(2 * cc.tp + cc.fp + cc.fn),
                  1e-12);
    }
  }
}

TEST(Scores, IdentityAndSingleError) {
  LabelMap truth(128, 128, Tissue::Background);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = static_cast<Tissue>((i / 700) % 5);
  for (const auto& s : score_segmentation(truth, truth)) EXPECT_EQ(s.f_measure, 1.0);

  LabelMap pred = truth;
  pred[5000] = pred[5000] == Tissue::Skull ? Tissue::Csf : Tissue::Skull;
  int below = 0;
  for (const auto& s : score_segmentation(pred, truth)) below += s.f_measure < 1.0 ? 1 : 0;
  EXPECT_EQ(below, 2);
}

TEST(Scores, CountInvariantsAndOrderIndependence) {
  Rng rng(3);
  LabelMap pred(16, 9);
  LabelMap truth(16, 9);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<Tissue>(rng.below(5));
    truth[i] = static_cast<Tissue>(rng.below(5));
  }
  const auto s = score_segmentation(pred, truth);
  std::size_t total = 0;
  for (const auto& ts : s) {
    total += ts.counts.tp + ts.counts.fn;
    EXPECT_GE(ts.f_measure, 0.0);
    EXPECT_LE(ts.f_measure, 1.0);
    if (ts.precision > 0 && ts.recall > 0) {
      EXPECT_LE(ts.f_measure, std::max(ts.precision, ts.recall) + 1e-15);
      EXPECT_GE(ts.f_measure, std::min(ts.precision, ts.recall) - 1e-15);
    }
  }
  EXPECT_EQ(total, pred.size());

  // Reverse both maps jointly: identical scores.
  LabelMap rp(16, 9);
  LabelMap rt(16, 9);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    rp[i] = pred[pred.size() - 1 - i];
    rt[i] = truth[truth.size() - 1 - i];
  }
  EXPECT_EQ(score_segmentation(rp, rt), s);
}

TEST(Aggregate, MeansAndRanking) {
  EvalReport report;
  auto add = [&](std::size_t fold, ClassifierKind k, std::array<double, 5> f) {
    FoldResult r;
    r.fold = fold;
    r.classifier = k;
    for (std::size_t t = 0; t < 5; ++t) {
      r.scores[t].tissue = static_cast<Tissue>(t);
      r.scores[t].f_measure = f[t];
    }
    report.folds.push_back(r);
  };
  add(0, ClassifierKind::Knn, {1.0, 0.5, 0.5, 0.5, 0.5});
  add(1, ClassifierKind::Knn, {1.0, 0.7, 0.3, 0.5, 0.5});
  add(0, ClassifierKind::Svm, {1.0, 0.9, 0.9, 0.9, 0.9});

  const ComparisonTable t = aggregate_reports(report);
  EXPECT_NEAR(t.mean_f.get(ClassifierKind::Knn, Tissue::Skull), 0.6, 1e-15);
  EXPECT_NEAR(t.mean_f.get(ClassifierKind::Knn, Tissue::Csf), 0.4, 1e-15);
  EXPECT_NEAR(*t.overall[index_of(ClassifierKind::Knn)], 0.6, 1e-15);
  EXPECT_EQ(t.mean_f.get(ClassifierKind::Svm, Tissue::Csf), 0.9);
  EXPECT_EQ(t.fold_count[index_of(ClassifierKind::Knn)], 2u);
  EXPECT_FALSE(t.mean_f.has(ClassifierKind::Pnn, Tissue::Csf));
  EXPECT_EQ(t.ranking(), (std::vector<ClassifierKind>{ClassifierKind::Svm, ClassifierKind::Knn}));

  std::reverse(report.folds.begin(), report.folds.end());
  const ComparisonTable r = aggregate_reports(report);
  EXPECT_EQ(r.mean_f, t.mean_f);
}

TEST(Aggregate, ReferenceGridRanksSvmFirst) {
  ScoreMatrix m;
  const double rows[4][5] = {
      {1.0, 0.89, 0.85, 0.74, 0.85},      // pnn
      {1.0, 0.87, 0.83, 0.72, 0.82},      // knn
      {1.0, 0.88, 0.84, 0.7626, 0.85},    // isnn
      {1.0, 0.9182, 0.8772, 0.75, 0.84},  // svm
  };
  for (ClassifierKind k : kAllClassifiers) {
    for (Tissue t : kAllTissues) m.set(k, t, rows[index_of(k)][index_of(t)]);
  }
  EXPECT_EQ(comparison_from_scores(m).ranking().front(), ClassifierKind::Svm);
}

TEST(ReportCsv, HeaderAndRows) {
  EvalReport report;
  FoldResult r;
  r.fold = 3;
  r.classifier = ClassifierKind::Isnn;
  r.scores = score_segmentation(map_of(2, 2, {G, G, W, B}), map_of(2, 2, {G, W, W, B}));
  report.folds.push_back(r);
  const std::string csv = report_to_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "fold,classifier,tissue,tp,fp,fn,precision,recall,f_measure,degenerate");
  EXPECT_NE(csv.find("3,isnn,gray_matter,1,1,0,0.5,1,0.666666666667,0\n"), std::string::npos);
  EXPECT_NE(csv.find("3,isnn,csf,0,0,0,1,1,1,1\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
}

namespace {

std::vector<LabeledImage> phantoms(std::size_t count, std::size_t size) {
  PhantomConfig cfg;
  cfg.size = size;
  cfg.seed = 4;
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto [img, lab] = generate_phantom(cfg, i);
    out.push_back({"p" + std::to_string(i), std::move(img), std::move(lab)});
  }
  return out;
}

}  // namespace

TEST(Loocv, TwoImagesGiveTwoFoldsOfHundredRows) {
  const auto data = phantoms(2, 32);
  LoocvConfig cfg;
  cfg.keep_predictions = true;
  const EvalReport r = run_loocv(data, ClassifierKind::Knn, cfg);
  ASSERT_EQ(r.folds.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.folds[i].fold, i);
    EXPECT_EQ(r.folds[i].image_id, data[i].id);
    EXPECT_EQ(r.folds[i].train_rows, 100u);
    ASSERT_TRUE(r.folds[i].prediction.has_value());
    EXPECT_EQ(score_segmentation(*r.folds[i].prediction, data[i].labels), r.folds[i].scores);
  }
}

TEST(Loocv, NeedsTwoImages) {
  const auto data = phantoms(1, 32);
  try {
    run_loocv(data, ClassifierKind::Knn, LoocvConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDataset);
  }
}

TEST(Loocv, PoolExcludesTestImage) {
  auto data = phantoms(3, 32);
  const GaborConfig gabor;
  auto prepared = prepare_dataset(data, gabor);
  const auto samples = sample_dataset(prepared, 20, 1);
  const FoldModel before = train_fold(samples, 1, ClassifierKind::Pnn, {});

  // Replace the held-out image with unrelated content; fold 1 must not move.
  Rng rng(77);
  for (std::size_t i = 0; i < data[1].image.size(); ++i) data[1].image[i] = static_cast<std::uint8_t>(rng.below(256));
  prepared = prepare_dataset(data, gabor);
  auto changed = sample_dataset(prepared, 20, 1);
  EXPECT_NE(changed[1], samples[1]);
  EXPECT_EQ(changed[0], samples[0]);
  EXPECT_EQ(changed[2], samples[2]);
  const FoldModel after = train_fold(changed, 1, ClassifierKind::Pnn, {});
  EXPECT_EQ(after.stats, before.stats);
  EXPECT_EQ(model_to_json(after.model).dump(), model_to_json(before.model).dump());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 1) continue;
    for (const auto& src : samples[i].sources()) EXPECT_NE(src.image_id, data[1].id);
  }
}

TEST(Loocv, DeterministicAndClassifierMajor) {
  const auto data = phantoms(3, 32);
  const auto prepared = prepare_dataset(data, GaborConfig{});
  const std::vector<ClassifierKind> kinds = {ClassifierKind::Knn, ClassifierKind::Isnn};
  const EvalReport a = run_loocv(prepared, kinds, LoocvConfig{});
  const EvalReport b = run_loocv(prepared, kinds, LoocvConfig{});
  ASSERT_EQ(a.folds.size(), 6u);
  EXPECT_EQ(a.folds[2].classifier, ClassifierKind::Knn);
  EXPECT_EQ(a.folds[3].classifier, ClassifierKind::Isnn);
  EXPECT_EQ(a.folds[3].fold, 0u);
  EXPECT_EQ(report_to_csv(a), report_to_csv(b));
  EXPECT_EQ(a.classifiers(), kinds);
  EXPECT_EQ(a.folds_of(ClassifierKind::Isnn).size(), 3u);
}
