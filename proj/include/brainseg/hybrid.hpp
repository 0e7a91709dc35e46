#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brainseg/error.hpp"
#include "brainseg/evaluation.hpp"
#include "brainseg/image.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

struct RuleTable {
  std::array<ClassifierKind, kTissueCount> assignment{};
  ClassifierKind fallback = ClassifierKind::Svm;
  ScoreMatrix scores;

  ClassifierKind designated(Tissue t) const { return assignment[index_of(t)]; }

  friend bool operator==(const RuleTable&, const RuleTable&) = default;
};

namespace detail {

inline Tissue require_tissue(const std::string& name) {
  const auto t = tissue_from_name(name);
  if (!t) throw Error(ErrorCode::InvalidConfig, "unknown tissue '" + name + "'");
  return *t;
}

// True when `a` should be preferred over `b` given their scores:
// higher score, then higher overall mean, then fixed precedence.
inline bool better_choice(const ScoreMatrix& s, ClassifierKind a, double fa, ClassifierKind b, double fb) {
  if (fa != fb) return fa > fb;
  const double oa = s.overall(a);
  const double ob = s.overall(b);
  if (oa != ob) return oa > ob;
  return precedence(a) > precedence(b);
}

}  // namespace detail

/// Per tissue, the classifier with the best mean F; the fallback is the
/// best overall. Every cell must be present.
inline RuleTable derive_rule_table(const ScoreMatrix& scores) {
  for (ClassifierKind k : kAllClassifiers) {
    for (Tissue t : kAllTissues) (void)scores.get(k, t);
  }
  RuleTable table;
  table.scores = scores;
  for (Tissue t : kAllTissues) {
    ClassifierKind best = kAllClassifiers.front();
    for (ClassifierKind k : kAllClassifiers) {
      if (detail::better_choice(scores, k, scores.get(k, t), best, scores.get(best, t))) best = k;
    }
    table.assignment[index_of(t)] = best;
  }
  ClassifierKind best = kAllClassifiers.front();
  for (ClassifierKind k : kAllClassifiers) {
    const double ok = scores.overall(k);
    const double ob = scores.overall(best);
    if (ok > ob || (ok == ob && precedence(k) > precedence(best))) best = k;
  }
  table.fallback = best;
  return table;
}

inline RuleTable derive_rule_table(const EvalReport& report) {
  return derive_rule_table(aggregate_reports(report).mean_f);
}

/// Maps indexed by ClassifierKind.
using ClassifierMaps = std::array<LabelMap, kClassifierCount>;

/// Each pixel's candidates are the tissues whose designated classifier
/// claims them there. One candidate wins outright; several are resolved by
/// the designated classifier's score (lowest code on ties); none defers to
/// the fallback classifier.
inline LabelMap hybrid_segment(const ClassifierMaps& predictions, const RuleTable& rules) {
  const LabelMap& ref = predictions.front();
  for (const auto& m : predictions) require_same_shape(ref, m, "hybrid_segment");
  std::array<double, kTissueCount> weight{};
  for (Tissue t : kAllTissues) weight[index_of(t)] = rules.scores.get(rules.designated(t), t);

  LabelMap out(ref.width(), ref.height(), Tissue::Background);
  for (std::size_t p = 0; p < out.size(); ++p) {
    bool found = false;
    Tissue pick = Tissue::Background;
    for (Tissue t : kAllTissues) {
      if (predictions[index_of(rules.designated(t))][p] != t) continue;
      if (!found || weight[index_of(t)] > weight[index_of(pick)]) pick = t;
      found = true;
    }
    out[p] = found ? pick : predictions[index_of(rules.fallback)][p];
  }
  return out;
}

// ---------------------------------------------------------------- JSON

inline constexpr const char* kRuleTableFormat = "brainseg-rules";

inline nlohmann::json rule_table_to_json(const RuleTable& rules) {
  nlohmann::json assignment = nlohmann::json::object();
  for (Tissue t : kAllTissues) assignment[std::string(tissue_name(t))] = classifier_name(rules.designated(t));
  nlohmann::json scores = nlohmann::json::object();
  for (ClassifierKind k : kAllClassifiers) {
    nlohmann::json row = nlohmann::json::object();
    for (Tissue t : kAllTissues) row[std::string(tissue_name(t))] = rules.scores.get(k, t);
    scores[std::string(classifier_name(k))] = row;
  }
  return {{"format", kRuleTableFormat},
          {"version", 1},
          {"assignment", assignment},
          {"fallback", classifier_name(rules.fallback)},
          {"scores", scores}};
}

/// Reads a score grid shaped {"svm": {"csf": 0.87, ...}, ...}. Absent
/// cells stay absent.
inline ScoreMatrix score_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "scores must be an object");
  ScoreMatrix m;
  for (const auto& [kname, row] : j.items()) {
    const ClassifierKind k = classifier_from_name(kname);
    if (!row.is_object()) throw Error(ErrorCode::InvalidConfig, "scores." + kname + " must be an object");
    for (const auto& [tname, v] : row.items()) {
      if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, "scores." + kname + "." + tname + " must be a number");
      m.set(k, detail::require_tissue(tname), v.get<double>());
    }
  }
  return m;
}

/// Loads a rule table and checks it against the table its own scores derive.
inline RuleTable rule_table_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("assignment") || !j.contains("fallback") || !j.contains("scores")) {
      throw Error(ErrorCode::InvalidConfig, "rule table needs assignment, fallback and scores");
    }
    const RuleTable derived = derive_rule_table(score_matrix_from_json(j.at("scores")));
    const auto& assignment = j.at("assignment");
    if (!assignment.is_object() || assignment.size() != kTissueCount) {
      throw Error(ErrorCode::InvalidConfig, "assignment must name all five tissues");
    }
    RuleTable table;
    table.scores = derived.scores;
    for (const auto& [tname, kname] : assignment.items()) {
      table.assignment[index_of(detail::require_tissue(tname))] = classifier_from_name(kname.get<std::string>());
    }
    table.fallback = classifier_from_name(j.at("fallback").get<std::string>());
    for (Tissue t : kAllTissues) {
      if (table.designated(t) != derived.designated(t)) {
        throw Error(ErrorCode::InvalidConfig, "assignment for " + std::string(tissue_name(t)) + " is " +
                                                  std::string(classifier_name(table.designated(t))) +
                                                  " but its scores select " +
                                                  std::string(classifier_name(derived.designated(t))));
      }
    }
    if (table.fallback != derived.fallback) {
      throw Error(ErrorCode::InvalidConfig, "fallback is " + std::string(classifier_name(table.fallback)) +
                                                " but the scores select " +
                                                std::string(classifier_name(derived.fallback)));
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("rule table: ") + e.what());
  } catch (const Error& e) {
    e.rethrow_with_context("rule table");
  }
}

// ---------------------------------------------------------------- evaluation

/// Fuses the kept per-fold predictions of a four-classifier report and
/// scores each fold's hybrid map. `truths` is indexed by fold.
inline std::vector<SegmentationScores> hybrid_fold_scores(const EvalReport& report, const RuleTable& rules,
                                                          std::span<const LabelMap> truths) {
  std::vector<SegmentationScores> out;
  for (std::size_t fold = 0; fold < truths.size(); ++fold) {
    std::array<const LabelMap*, kClassifierCount> found{};
    for (const auto& f : report.folds) {
      if (f.fold == fold) {
        if (!f.prediction) throw Error(ErrorCode::InvalidConfig, "report was run without kept predictions");
        found[index_of(f.classifier)] = &*f.prediction;
      }
    }
    ClassifierMaps maps;
    for (ClassifierKind k : kAllClassifiers) {
      if (found[index_of(k)] == nullptr) {
        throw Error(ErrorCode::MissingCell, "fold " + std::to_string(fold) + " has no " +
                                                std::string(classifier_name(k)) + " prediction");
      }
      maps[index_of(k)] = *found[index_of(k)];
    }
    out.push_back(score_segmentation(hybrid_segment(maps, rules), truths[fold]));
  }
  return out;
}

inline std::array<double, kTissueCount> mean_scores(std::span<const SegmentationScores> folds) {
  std::array<double, kTissueCount> out{};
  for (const auto& s : folds) {
    for (Tissue t : kAllTissues) out[index_of(t)] += s[index_of(t)].f_measure;
  }
  for (double& v : out) v /= static_cast<double>(folds.size());
  return out;
}

}  // namespace brainseg
