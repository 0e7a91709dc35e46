#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brainseg/classifiers/model.hpp"
#include "brainseg/error.hpp"
#include "brainseg/gabor.hpp"
#include "brainseg/image_io.hpp"

namespace brainseg {

using nlohmann::json;

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormat = "brainseg-model";

// ---------------------------------------------------------------- configs

inline json to_json(const GaborConfig& c) {
  return {{"frequencies", c.frequencies},
          {"orientations", c.orientations},
          {"sigma_envelope", c.sigma_envelope ? json(*c.sigma_envelope) : json(nullptr)},
          {"kernel_radius", c.kernel_radius ? json(*c.kernel_radius) : json(nullptr)},
          {"gamma_aspect", c.gamma_aspect}};
}

/// Keys absent from `j` keep their value in `base`.
inline GaborConfig gabor_config_from_json(const json& j, GaborConfig base = {}) {
  if (j.contains("frequencies")) base.frequencies = j.at("frequencies").get<std::vector<double>>();
  if (j.contains("orientations")) base.orientations = j.at("orientations").get<std::vector<double>>();
  if (j.contains("sigma_envelope")) {
    base.sigma_envelope = j.at("sigma_envelope").is_null()
                              ? std::nullopt
                              : std::optional<double>(j.at("sigma_envelope").get<double>());
  }
  if (j.contains("kernel_radius")) {
    base.kernel_radius = j.at("kernel_radius").is_null()
                             ? std::nullopt
                             : std::optional<int>(j.at("kernel_radius").get<int>());
  }
  if (j.contains("gamma_aspect")) base.gamma_aspect = j.at("gamma_aspect").get<double>();
  return base;
}

inline std::string svm_kernel_name(SvmKernel k) { return k == SvmKernel::Linear ? "linear" : "rbf"; }

inline SvmKernel svm_kernel_from_name(const std::string& name) {
  if (name == "linear") return SvmKernel::Linear;
  if (name == "rbf") return SvmKernel::Rbf;
  throw Error(ErrorCode::InvalidConfig, "unknown SVM kernel '" + name + "'");
}

inline json to_json(const ClassifierConfig& c) {
  return {
      {"pnn", {{"sigma", c.pnn.sigma}, {"priors", c.pnn.priors}, {"costs", c.pnn.costs}}},
      {"knn", {{"k", c.knn.k}}},
      {"isnn",
       {{"mu", c.isnn.mu},
        {"epochs", c.isnn.epochs},
        {"shuffle_seed", c.isnn.shuffle_seed ? json(*c.isnn.shuffle_seed) : json(nullptr)}}},
      {"svm",
       {{"kernel", svm_kernel_name(c.svm.kernel)},
        {"gamma", c.svm.gamma ? json(*c.svm.gamma) : json(nullptr)},
        {"C", c.svm.C},
        {"tol", c.svm.tol}}},
  };
}

inline ClassifierConfig classifier_config_from_json(const json& j, ClassifierConfig base = {}) {
  if (j.contains("pnn")) {
    const auto& p = j.at("pnn");
    if (p.contains("sigma")) base.pnn.sigma = p.at("sigma").get<double>();
    if (p.contains("priors")) base.pnn.priors = p.at("priors").get<std::array<double, kTissueCount>>();
    if (p.contains("costs")) base.pnn.costs = p.at("costs").get<std::array<double, kTissueCount>>();
  }
  if (j.contains("knn") && j.at("knn").contains("k")) base.knn.k = j.at("knn").at("k").get<std::size_t>();
  if (j.contains("isnn")) {
    const auto& p = j.at("isnn");
    if (p.contains("mu")) base.isnn.mu = p.at("mu").get<double>();
    if (p.contains("epochs")) base.isnn.epochs = p.at("epochs").get<std::size_t>();
    if (p.contains("shuffle_seed")) {
      base.isnn.shuffle_seed = p.at("shuffle_seed").is_null()
                                   ? std::nullopt
                                   : std::optional<std::uint64_t>(p.at("shuffle_seed").get<std::uint64_t>());
    }
  }
  if (j.contains("svm")) {
    const auto& p = j.at("svm");
    if (p.contains("kernel")) base.svm.kernel = svm_kernel_from_name(p.at("kernel").get<std::string>());
    if (p.contains("gamma")) {
      base.svm.gamma = p.at("gamma").is_null() ? std::nullopt
                                               : std::optional<double>(p.at("gamma").get<double>());
    }
    if (p.contains("C")) base.svm.C = p.at("C").get<double>();
    if (p.contains("tol")) base.svm.tol = p.at("tol").get<double>();
  }
  return base;
}

inline json to_json(const FeatureStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline FeatureStats feature_stats_from_json(const json& j) {
  FeatureStats s;
  s.mean = j.at("mean").get<std::array<double, kFeatureDim>>();
  s.std = j.at("std").get<std::array<double, kFeatureDim>>();
  for (double v : s.std) {
    if (!(v > 0.0)) throw Error(ErrorCode::ModelLoadError, "feature std must be > 0");
  }
  return s;
}

// ---------------------------------------------------------------- models

namespace detail {

inline std::vector<double> flatten(const FeatureMatrix& m) { return {m.values().begin(), m.values().end()}; }

inline FeatureMatrix unflatten(const json& j, std::size_t dim, std::size_t rows) {
  auto values = j.get<std::vector<double>>();
  if (values.size() != rows * dim) throw Error(ErrorCode::ModelLoadError, "flattened array has wrong length");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::ModelLoadError, "non-finite model value");
  }
  if (rows == 0) return FeatureMatrix(dim);
  return FeatureMatrix(rows, dim, std::move(values));
}

inline std::vector<int> tissue_codes(std::span<const Tissue> labels) {
  std::vector<int> out;
  for (Tissue t : labels) out.push_back(static_cast<int>(t));
  return out;
}

inline std::vector<Tissue> tissues_from_codes(const json& j) {
  std::vector<Tissue> out;
  for (int c : j.get<std::vector<int>>()) {
    if (!is_valid_tissue_code(c)) throw Error(ErrorCode::ModelLoadError, "tissue code out of range");
    out.push_back(static_cast<Tissue>(c));
  }
  return out;
}

inline json model_body(const PnnModel& m) {
  std::vector<std::size_t> counts;
  std::vector<double> flat;
  for (const auto& p : m.patterns) {
    counts.push_back(p.rows());
    flat.insert(flat.end(), p.values().begin(), p.values().end());
  }
  return {{"class_counts", counts}, {"patterns", flat}};
}

inline json model_body(const KnnModel& m) {
  return {{"labels", tissue_codes(m.labels)}, {"points", flatten(m.points)}};
}

inline json model_body(const IsnnModel& m) {
  std::vector<int> classes;
  std::vector<double> flat;
  for (const auto& node : m.nodes) {
    classes.push_back(static_cast<int>(node.cls));
    flat.insert(flat.end(), node.weight.begin(), node.weight.end());
  }
  return {{"node_classes", classes}, {"weights", flat}};
}

inline json model_body(const SvmModel& m) {
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"positive", static_cast<int>(p.positive)},
                     {"negative", static_cast<int>(p.negative)},
                     {"bias", p.bias},
                     {"coef", p.coef},
                     {"support", flatten(p.support)},
                     {"support_rows", p.support_rows},
                     {"converged", p.converged},
                     {"iterations", p.iterations}});
  }
  json skipped = json::array();
  for (const auto& [a, b] : m.skipped_pairs) skipped.push_back({static_cast<int>(a), static_cast<int>(b)});
  return {{"pairs", pairs}, {"skipped_pairs", skipped}};
}

inline ClassifierConfig config_of(const Model& model) {
  ClassifierConfig c;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PnnModel>) c.pnn = m.config;
        if constexpr (std::is_same_v<T, KnnModel>) c.knn.k = m.k;
        if constexpr (std::is_same_v<T, IsnnModel>) c.isnn = m.config;
        if constexpr (std::is_same_v<T, SvmModel>) c.svm = m.config;
      },
      model);
  return c;
}

inline json kind_config(const Model& model) {
  return to_json(config_of(model))[std::string(classifier_name(kind_of(model)))];
}

}  // namespace detail

/// Versioned document: kind, config, and flattened numeric arrays.
inline json model_to_json(const Model& model) {
  json body = std::visit([](const auto& m) { return detail::model_body(m); }, model);
  const std::size_t dim = std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KnnModel>) return m.points.cols();
        else return m.dim;
      },
      model);
  return {{"kind", classifier_name(kind_of(model))},
          {"dim", dim},
          {"config", detail::kind_config(model)},
          {"model", body}};
}

/// Parses and validates a model document; any defect is a ModelLoadError.
inline Model model_from_json(const json& j) {
  try {
    const ClassifierKind kind = classifier_from_name(j.at("kind").get<std::string>());
    const std::size_t dim = j.at("dim").get<std::size_t>();
    if (dim == 0) throw Error(ErrorCode::ModelLoadError, "dim must be >= 1");
    json wrapped = {{std::string(classifier_name(kind)), j.at("config")}};
    const ClassifierConfig cfg = classifier_config_from_json(wrapped);
    const json& body = j.at("model");

    switch (kind) {
      case ClassifierKind::Pnn: {
        cfg.pnn.validate();
        const auto counts = body.at("class_counts").get<std::vector<std::size_t>>();
        if (counts.size() != kTissueCount) throw Error(ErrorCode::ModelLoadError, "class_counts length");
        const auto flat = body.at("patterns").get<std::vector<double>>();
        std::array<FeatureMatrix, kTissueCount> pats;
        std::size_t offset = 0;
        for (std::size_t c = 0; c < kTissueCount; ++c) {
          if (counts[c] == 0) throw Error(ErrorCode::ModelLoadError, "PNN class without patterns");
          if (offset + counts[c] * dim > flat.size()) throw Error(ErrorCode::ModelLoadError, "patterns too short");
          pats[c] = detail::unflatten(json(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                                                               flat.begin() + static_cast<std::ptrdiff_t>(offset + counts[c] * dim))),
                                      dim, counts[c]);
          offset += counts[c] * dim;
        }
        if (offset != flat.size()) throw Error(ErrorCode::ModelLoadError, "patterns too long");
        return PnnModel::from_patterns(dim, cfg.pnn, std::move(pats));
      }
      case ClassifierKind::Knn: {
        auto labels = detail::tissues_from_codes(body.at("labels"));
        FeatureMatrix points = detail::unflatten(body.at("points"), dim, labels.size());
        if (cfg.knn.k < 1 || cfg.knn.k > labels.size()) throw Error(ErrorCode::ModelLoadError, "k out of range");
        return KnnModel{std::move(points), std::move(labels), cfg.knn.k};
      }
      case ClassifierKind::Isnn: {
        cfg.isnn.validate();
        const auto classes = detail::tissues_from_codes(body.at("node_classes"));
        if (classes.empty()) throw Error(ErrorCode::ModelLoadError, "ISNN without nodes");
        const FeatureMatrix w = detail::unflatten(body.at("weights"), dim, classes.size());
        IsnnModel m{dim, cfg.isnn, {}};
        for (std::size_t i = 0; i < classes.size(); ++i) {
          m.nodes.push_back({{w.row(i).begin(), w.row(i).end()}, classes[i], i});
        }
        return m;
      }
      case ClassifierKind::Svm: {
        cfg.svm.validate();
        SvmModel m;
        m.dim = dim;
        m.config = cfg.svm;
        m.config.gamma = cfg.svm.gamma_for(dim);
        for (const auto& p : body.at("pairs")) {
          SvmPairModel pair;
          pair.positive = tissue_from_code(p.at("positive").get<int>());
          pair.negative = tissue_from_code(p.at("negative").get<int>());
          pair.bias = p.at("bias").get<double>();
          pair.coef = p.at("coef").get<std::vector<double>>();
          pair.support = detail::unflatten(p.at("support"), dim, pair.coef.size());
          pair.support_rows = p.at("support_rows").get<std::vector<std::size_t>>();
          pair.converged = p.at("converged").get<bool>();
          pair.iterations = p.at("iterations").get<std::size_t>();
          if (pair.support_rows.size() != pair.coef.size()) {
            throw Error(ErrorCode::ModelLoadError, "support_rows length");
          }
          double balance = 0.0;
          for (double c : pair.coef) {
            if (!(std::abs(c) <= m.config.C * (1.0 + 1e-12))) {
              throw Error(ErrorCode::ModelLoadError, "SVM dual coefficient outside [0, C]");
            }
            balance += c;
          }
          if (std::abs(balance) > 1e-6) throw Error(ErrorCode::ModelLoadError, "SVM sum(alpha*y) != 0");
          if (!std::isfinite(pair.bias)) throw Error(ErrorCode::ModelLoadError, "SVM bias not finite");
          m.pairs.push_back(std::move(pair));
        }
        for (const auto& s : body.at("skipped_pairs")) {
          m.skipped_pairs.emplace_back(tissue_from_code(s.at(0).get<int>()), tissue_from_code(s.at(1).get<int>()));
        }
        if (m.pairs.size() + m.skipped_pairs.size() != kTissueCount * (kTissueCount - 1) / 2) {
          throw Error(ErrorCode::ModelLoadError, "SVM must account for all 10 class pairs");
        }
        return m;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ModelLoadError, std::string("model document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ModelLoadError) throw;
    throw Error(ErrorCode::ModelLoadError, e.what());
  }
  throw Error(ErrorCode::ModelLoadError, "unreachable model kind");
}

/// Everything `segment` needs to label a raw image: features, scaling and
/// the classifier, plus the resolved run configuration that produced it.
struct ModelBundle {
  GaborConfig gabor;
  FeatureStats stats;
  Model model;
  json run_config = json::object();
};

inline json bundle_to_json(const ModelBundle& b) {
  json j = model_to_json(b.model);
  j["format"] = kModelFormat;
  j["version"] = kModelFormatVersion;
  j["gabor"] = to_json(b.gabor);
  j["feature_stats"] = to_json(b.stats);
  j["run_config"] = b.run_config;
  return j;
}

inline ModelBundle bundle_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorCode::ModelLoadError, "not a brainseg model document");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::ModelLoadError, "unsupported model version");
    }
    ModelBundle b{gabor_config_from_json(j.at("gabor")), feature_stats_from_json(j.at("feature_stats")),
                  model_from_json(j), j.value("run_config", json::object())};
    b.gabor.validate();
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ModelLoadError, std::string("model document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ModelLoadError) throw;
    throw Error(ErrorCode::ModelLoadError, e.what());
  }
}

inline json load_json_file(const std::filesystem::path& path, ErrorCode parse_error) {
  const auto bytes = read_file_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(parse_error, path.string() + ": " + e.what());
  }
}

inline ModelBundle load_model_bundle(const std::filesystem::path& path) {
  return bundle_from_json(load_json_file(path, ErrorCode::ModelLoadError));
}

inline void save_model_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  write_text_atomic(path, bundle_to_json(bundle).dump(1) + "\n");
}

}  // namespace brainseg
