#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "brainseg/error.hpp"

namespace brainseg {

/// Tissue codes are stable across every file format and report.
enum class Tissue : std::uint8_t {
  Background = 0,
  Skull = 1,
  Csf = 2,
  GrayMatter = 3,
  WhiteMatter = 4,
};

inline constexpr std::size_t kTissueCount = 5;

inline constexpr std::array<Tissue, kTissueCount> kAllTissues = {
    Tissue::Background, Tissue::Skull, Tissue::Csf, Tissue::GrayMatter,
    Tissue::WhiteMatter};

constexpr std::size_t index_of(Tissue t) { return static_cast<std::size_t>(t); }

constexpr bool is_valid_tissue_code(int code) { return code >= 0 && code < 5; }

constexpr std::string_view tissue_name(Tissue t) {
  switch (t) {
    case Tissue::Background: return "background";
    case Tissue::Skull: return "skull";
    case Tissue::Csf: return "csf";
    case Tissue::GrayMatter: return "gray_matter";
    case Tissue::WhiteMatter: return "white_matter";
  }
  return "?";
}

inline std::optional<Tissue> tissue_from_name(std::string_view name) {
  for (Tissue t : kAllTissues) {
    if (tissue_name(t) == name) return t;
  }
  return std::nullopt;
}

inline Tissue tissue_from_code(int code) {
  if (!is_valid_tissue_code(code)) {
    throw Error(ErrorCode::OutOfRangeLabel,
                "tissue code " + std::to_string(code) + " outside 0..4");
  }
  return static_cast<Tissue>(code);
}

enum class ClassifierKind : std::uint8_t { Pnn, Knn, Isnn, Svm };

inline constexpr std::size_t kClassifierCount = 4;

inline constexpr std::array<ClassifierKind, kClassifierCount> kAllClassifiers = {
    ClassifierKind::Pnn, ClassifierKind::Knn, ClassifierKind::Isnn,
    ClassifierKind::Svm};

constexpr std::size_t index_of(ClassifierKind k) {
  return static_cast<std::size_t>(k);
}

constexpr std::string_view classifier_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Pnn: return "pnn";
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Isnn: return "isnn";
    case ClassifierKind::Svm: return "svm";
  }
  return "?";
}

/// Tie-break precedence: SVM > ISNN > PNN > KNN. Higher wins.
constexpr int precedence(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Svm: return 3;
    case ClassifierKind::Isnn: return 2;
    case ClassifierKind::Pnn: return 1;
    case ClassifierKind::Knn: return 0;
  }
  return -1;
}

inline ClassifierKind classifier_from_name(std::string_view name) {
  for (ClassifierKind k : kAllClassifiers) {
    if (classifier_name(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidConfig,
              "unknown classifier '" + std::string(name) + "'");
}

}  // namespace brainseg
