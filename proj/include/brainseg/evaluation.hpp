#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brainseg/classifiers/model.hpp"
#include "brainseg/dataset.hpp"
#include "brainseg/error.hpp"
#include "brainseg/gabor.hpp"
#include "brainseg/image.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

// ---------------------------------------------------------------- metrics

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion_counts(const LabelMap& pred, const LabelMap& truth, Tissue tissue) {
  require_same_shape(pred, truth, "confusion_counts");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == tissue;
    const bool t = truth[i] == tissue;
    c.tp += (p && t) ? 1 : 0;
    c.fp += (p && !t) ? 1 : 0;
    c.fn += (!p && t) ? 1 : 0;
  }
  return c;
}

// Empty denominators: a ratio whose denominator is zero is 1 when all three
// counts are zero (the tissue is correctly absent) and 0 otherwise.

inline double precision(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0) return c.fn == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline double recall(const ConfusionCounts& c) {
  if (c.tp + c.fn == 0) return c.fp == 0 ? 1.0 : 0.0;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double f_measure(const ConfusionCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

struct TissueScore {
  Tissue tissue = Tissue::Background;
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  /// Set when precision or recall had an empty denominator.
  bool degenerate = false;

  friend bool operator==(const TissueScore&, const TissueScore&) = default;
};

inline TissueScore score_counts(Tissue tissue, const ConfusionCounts& c) {
  return {tissue, c, precision(c), recall(c), f_measure(c), c.tp + c.fp == 0 || c.tp + c.fn == 0};
}

using SegmentationScores = std::array<TissueScore, kTissueCount>;

inline SegmentationScores score_segmentation(const LabelMap& pred, const LabelMap& truth) {
  SegmentationScores out;
  for (Tissue t : kAllTissues) out[index_of(t)] = score_counts(t, confusion_counts(pred, truth, t));
  return out;
}

inline double mean_f(const SegmentationScores& s) {
  double sum = 0.0;
  for (const auto& ts : s) sum += ts.f_measure;
  return sum / static_cast<double>(kTissueCount);
}

// ---------------------------------------------------------------- LOOCV

struct LoocvConfig {
  GaborConfig gabor;
  ClassifierConfig classifiers;
  std::size_t per_class = 20;
  std::uint64_t seed = 1;
  bool keep_predictions = false;
};

/// An image with its feature grid computed once and reused by every fold.
struct PreparedImage {
  std::string id;
  FeatureGrid features;
  LabelMap labels;
};

inline std::vector<PreparedImage> prepare_dataset(std::span<const LabeledImage> dataset, const GaborConfig& gabor) {
  const FilterBank bank = build_filter_bank(gabor);
  std::vector<PreparedImage> out;
  out.reserve(dataset.size());
  for (const auto& item : dataset) out.push_back({item.id, extract_features(item.image, bank), item.labels});
  return out;
}

/// Each image's training points, drawn on stream ("sample", image index)
/// from that image alone, so no fold's pool depends on its test image.
inline std::vector<TrainingSet> sample_dataset(std::span<const PreparedImage> images, std::size_t per_class,
                                               std::uint64_t seed) {
  std::vector<TrainingSet> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    try {
      out.push_back(sample_training_points(images[i].features, images[i].labels, per_class, seed, images[i].id, i));
    } catch (const Error& e) {
      e.rethrow_with_context("image '" + images[i].id + "'");
    }
  }
  return out;
}

struct FoldModel {
  FeatureStats stats;
  Model model;
};

/// Pools every image's points except `test_index`, fits the z-scoring on
/// that pool alone, and trains on the normalised pool.
inline FoldModel train_fold(std::span<const TrainingSet> samples, std::size_t test_index, ClassifierKind kind,
                            const ClassifierConfig& config) {
  TrainingSet pool;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i != test_index) pool.append_all(samples[i]);
  }
  const FeatureStats stats = fit_stats(pool);
  const TrainingSet normalized = normalize(pool, stats);
  return {stats, train_classifier(kind, normalized, config)};
}

struct FoldResult {
  std::size_t fold = 0;
  std::string image_id;
  ClassifierKind classifier = ClassifierKind::Pnn;
  std::size_t train_rows = 0;
  SegmentationScores scores;
  double runtime_seconds = 0.0;  // wall clock; never serialised
  std::optional<LabelMap> prediction;
};

/// Per-fold, per-classifier, per-tissue scores.
struct EvalReport {
  std::vector<FoldResult> folds;

  std::vector<ClassifierKind> classifiers() const {
    std::vector<ClassifierKind> out;
    for (ClassifierKind k : kAllClassifiers) {
      for (const auto& f : folds) {
        if (f.classifier == k) {
          out.push_back(k);
          break;
        }
      }
    }
    return out;
  }

  std::vector<const FoldResult*> folds_of(ClassifierKind kind) const {
    std::vector<const FoldResult*> out;
    for (const auto& f : folds) {
      if (f.classifier == kind) out.push_back(&f);
    }
    return out;
  }

  void append(const EvalReport& other) { folds.insert(folds.end(), other.folds.begin(), other.folds.end()); }
};

/// Leave-one-out over the prepared images: fold i trains on every other
/// image's sampled points and segments image i in full. Folds are recorded
/// in image order, classifier-major.
inline EvalReport run_loocv(std::span<const PreparedImage> images, std::span<const ClassifierKind> kinds,
                            const LoocvConfig& config) {
  if (images.size() < 2) {
    throw Error(ErrorCode::EmptyDataset, "leave-one-out needs at least 2 images, got " + std::to_string(images.size()));
  }
  const auto samples = sample_dataset(images, config.per_class, config.seed);
  EvalReport report;
  for (ClassifierKind kind : kinds) {
    for (std::size_t fold = 0; fold < images.size(); ++fold) {
      const auto start = std::chrono::steady_clock::now();
      FoldResult result;
      result.fold = fold;
      result.image_id = images[fold].id;
      result.classifier = kind;
      try {
        const FoldModel fm = train_fold(samples, fold, kind, config.classifiers);
        const LabelMap pred = segment_image(images[fold].features, fm.stats, fm.model);
        result.scores = score_segmentation(pred, images[fold].labels);
        if (config.keep_predictions) result.prediction = pred;
      } catch (const Error& e) {
        e.rethrow_with_context("fold " + std::to_string(fold) + " (" + std::string(classifier_name(kind)) + ")");
      }
      for (std::size_t i = 0; i < samples.size(); ++i) result.train_rows += i == fold ? 0 : samples[i].rows();
      result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.folds.push_back(std::move(result));
    }
  }
  return report;
}

inline EvalReport run_loocv(std::span<const LabeledImage> dataset, ClassifierKind kind, const LoocvConfig& config) {
  if (dataset.size() < 2) {
    throw Error(ErrorCode::EmptyDataset, "leave-one-out needs at least 2 images, got " + std::to_string(dataset.size()));
  }
  const auto prepared = prepare_dataset(dataset, config.gabor);
  const std::array<ClassifierKind, 1> kinds = {kind};
  return run_loocv(prepared, kinds, config);
}

// ---------------------------------------------------------------- aggregation

/// Classifier x tissue grid of scores; any cell may be missing.
class ScoreMatrix {
 public:
  void set(ClassifierKind k, Tissue t, double value) { cells_[index_of(k)][index_of(t)] = value; }
  bool has(ClassifierKind k, Tissue t) const { return cells_[index_of(k)][index_of(t)].has_value(); }

  double get(ClassifierKind k, Tissue t) const {
    const auto& cell = cells_[index_of(k)][index_of(t)];
    if (!cell) {
      throw Error(ErrorCode::MissingCell, "no score for (" + std::string(classifier_name(k)) + ", " +
                                              std::string(tissue_name(t)) + ")");
    }
    return *cell;
  }

  /// Unweighted mean over the five tissues.
  double overall(ClassifierKind k) const {
    double sum = 0.0;
    for (Tissue t : kAllTissues) sum += get(k, t);
    return sum / static_cast<double>(kTissueCount);
  }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::array<std::array<std::optional<double>, kTissueCount>, kClassifierCount> cells_{};
};

struct ComparisonTable {
  ScoreMatrix mean_f;  // fold mean per (classifier, tissue)
  std::array<std::optional<double>, kClassifierCount> overall{};  // fold mean of tissue-mean F
  std::array<std::size_t, kClassifierCount> fold_count{};

  /// Classifiers present, best overall first; equal scores keep precedence order.
  std::vector<ClassifierKind> ranking() const {
    std::vector<ClassifierKind> out;
    for (ClassifierKind k : kAllClassifiers) {
      if (overall[index_of(k)]) out.push_back(k);
    }
    std::stable_sort(out.begin(), out.end(), [&](ClassifierKind a, ClassifierKind b) {
      const double fa = *overall[index_of(a)];
      const double fb = *overall[index_of(b)];
      if (fa != fb) return fa > fb;
      return precedence(a) > precedence(b);
    });
    return out;
  }
};

/// Unweighted fold means per (classifier, tissue) and per classifier.
inline ComparisonTable aggregate_reports(const EvalReport& report) {
  ComparisonTable table;
  for (ClassifierKind k : report.classifiers()) {
    const auto folds = report.folds_of(k);
    const double n = static_cast<double>(folds.size());
    for (Tissue t : kAllTissues) {
      double sum = 0.0;
      for (const auto* f : folds) sum += f->scores[index_of(t)].f_measure;
      table.mean_f.set(k, t, sum / n);
    }
    double overall = 0.0;
    for (const auto* f : folds) overall += mean_f(f->scores);
    table.overall[index_of(k)] = overall / n;
    table.fold_count[index_of(k)] = folds.size();
  }
  return table;
}

/// Builds a comparison table directly from a supplied score grid; overall
/// is the tissue mean of each row.
inline ComparisonTable comparison_from_scores(const ScoreMatrix& scores) {
  ComparisonTable table;
  table.mean_f = scores;
  for (ClassifierKind k : kAllClassifiers) {
    bool complete = true;
    for (Tissue t : kAllTissues) complete = complete && scores.has(k, t);
    if (complete) {
      table.overall[index_of(k)] = scores.overall(k);
      table.fold_count[index_of(k)] = 1;
    }
  }
  return table;
}

// ---------------------------------------------------------------- reports

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline constexpr const char* kReportCsvHeader =
    "fold,classifier,tissue,tp,fp,fn,precision,recall,f_measure,degenerate";

inline std::string report_to_csv(const EvalReport& report) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& f : report.folds) {
    for (const auto& s : f.scores) {
      out += std::to_string(f.fold) + "," + std::string(classifier_name(f.classifier)) + "," +
             std::string(tissue_name(s.tissue)) + "," + std::to_string(s.counts.tp) + "," +
             std::to_string(s.counts.fp) + "," + std::to_string(s.counts.fn) + "," + format_real(s.precision) +
             "," + format_real(s.recall) + "," + format_real(s.f_measure) + "," + (s.degenerate ? "1" : "0") + "\n";
    }
  }
  return out;
}

inline nlohmann::json comparison_to_json(const ComparisonTable& table) {
  nlohmann::json classifiers = nlohmann::json::object();
  for (ClassifierKind k : kAllClassifiers) {
    if (!table.overall[index_of(k)]) continue;
    nlohmann::json per_tissue = nlohmann::json::object();
    for (Tissue t : kAllTissues) per_tissue[std::string(tissue_name(t))] = table.mean_f.get(k, t);
    classifiers[std::string(classifier_name(k))] = {{"mean_f", per_tissue},
                                                    {"overall_mean_f", *table.overall[index_of(k)]},
                                                    {"folds", table.fold_count[index_of(k)]}};
  }
  nlohmann::json ranking = nlohmann::json::array();
  for (ClassifierKind k : table.ranking()) ranking.push_back(classifier_name(k));
  return {{"classifiers", classifiers},
          {"ranking", ranking},
          {"overall_definition", "fold mean of the per-image mean F over the five tissues"}};
}

inline nlohmann::json report_summary_json(const EvalReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    if (f.classifier != report.folds.front().classifier) break;
    folds.push_back({{"fold", f.fold}, {"image_id", f.image_id}, {"train_rows", f.train_rows}});
  }
  nlohmann::json j = comparison_to_json(aggregate_reports(report));
  j["format"] = "brainseg-eval";
  j["version"] = 1;
  j["fold_images"] = folds;
  return j;
}

}  // namespace brainseg
