#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "brainseg/classifiers/model.hpp"
#include "brainseg/dataset.hpp"
#include "brainseg/error.hpp"
#include "brainseg/gabor.hpp"
#include "brainseg/serialization.hpp"

namespace brainseg {

/// Fully resolved settings of one command run. Built from the defaults
/// below, then a JSON config file, then command-line flags.
struct RunConfig {
  std::string subcommand;
  std::string manifest;
  ClassifierKind classifier = ClassifierKind::Svm;
  ClassifierConfig classifiers;
  GaborConfig gabor;
  std::size_t per_class = 20;
  std::uint64_t seed = 1;
  bool emit_overlays = false;
  bool emit_feature_dumps = false;
  std::size_t phantom_count = 11;
  PhantomConfig phantom;  // its seed is always `seed`

  void validate() const {
    gabor.validate();
    if (per_class == 0) throw Error(ErrorCode::InvalidConfig, "per_class must be >= 1");
    classifiers.pnn.validate();
    if (classifiers.knn.k == 0) throw Error(ErrorCode::InvalidK, "k must be >= 1");
    classifiers.isnn.validate();
    classifiers.svm.validate();
    PhantomConfig p = phantom;
    p.seed = seed;
    p.validate();
  }

  PhantomConfig phantom_config() const {
    PhantomConfig p = phantom;
    p.seed = seed;
    return p;
  }
};

inline nlohmann::json to_json(const RunConfig& rc) {
  return {{"subcommand", rc.subcommand},
          {"manifest", rc.manifest},
          {"classifier", classifier_name(rc.classifier)},
          {"classifiers", to_json(rc.classifiers)},
          {"gabor", to_json(rc.gabor)},
          {"per_class", rc.per_class},
          {"seed", rc.seed},
          {"emit_overlays", rc.emit_overlays},
          {"emit_feature_dumps", rc.emit_feature_dumps},
          {"phantom",
           {{"count", rc.phantom_count},
            {"size", rc.phantom.size},
            {"noise_sigma", rc.phantom.noise_sigma},
            {"tissue_means", rc.phantom.tissue_means},
            {"ellipse_jitter", rc.phantom.ellipse_jitter}}}};
}

/// Overlays the keys present in `j` onto `base`; unknown keys are rejected
/// so that typos do not silently fall back to defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  static const char* const kKeys[] = {"subcommand", "manifest",      "classifier",         "classifiers",
                                      "gabor",      "per_class",     "seed",               "emit_overlays",
                                      "emit_feature_dumps", "phantom"};
  try {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* k : kKeys) known = known || key == k;
      if (!known) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
    if (j.contains("manifest")) base.manifest = j.at("manifest").get<std::string>();
    if (j.contains("classifier")) base.classifier = classifier_from_name(j.at("classifier").get<std::string>());
    if (j.contains("classifiers")) base.classifiers = classifier_config_from_json(j.at("classifiers"), base.classifiers);
    if (j.contains("gabor")) base.gabor = gabor_config_from_json(j.at("gabor"), base.gabor);
    if (j.contains("per_class")) base.per_class = j.at("per_class").get<std::size_t>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("emit_overlays")) base.emit_overlays = j.at("emit_overlays").get<bool>();
    if (j.contains("emit_feature_dumps")) base.emit_feature_dumps = j.at("emit_feature_dumps").get<bool>();
    if (j.contains("phantom")) {
      const auto& p = j.at("phantom");
      if (p.contains("count")) base.phantom_count = p.at("count").get<std::size_t>();
      if (p.contains("size")) base.phantom.size = p.at("size").get<std::size_t>();
      if (p.contains("noise_sigma")) base.phantom.noise_sigma = p.at("noise_sigma").get<double>();
      if (p.contains("tissue_means")) {
        base.phantom.tissue_means = p.at("tissue_means").get<std::array<double, kTissueCount>>();
      }
      if (p.contains("ellipse_jitter")) base.phantom.ellipse_jitter = p.at("ellipse_jitter").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  return base;
}

}  // namespace brainseg
