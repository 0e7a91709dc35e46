#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "brainseg/error.hpp"
#include "brainseg/feature_grid.hpp"
#include "brainseg/image.hpp"
#include "brainseg/image_io.hpp"
#include "brainseg/rng.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

// ---------------------------------------------------------------- training set

struct SampleSource {
  std::string image_id;
  std::size_t x = 0;
  std::size_t y = 0;

  friend bool operator==(const SampleSource&, const SampleSource&) = default;
};

/// Labelled feature rows with per-row provenance. Always 9 columns wide.
class TrainingSet {
 public:
  TrainingSet() : features_(kFeatureDim) {}

  std::size_t rows() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  const FeatureMatrix& features() const noexcept { return features_; }
  FeatureMatrix& features() noexcept { return features_; }
  const std::vector<Tissue>& labels() const noexcept { return labels_; }
  const std::vector<SampleSource>& sources() const noexcept { return sources_; }

  void append(std::span<const double> row, Tissue label, SampleSource source) {
    features_.append(row);
    labels_.push_back(label);
    sources_.push_back(std::move(source));
  }

  void append_all(const TrainingSet& other) {
    for (std::size_t r = 0; r < other.rows(); ++r) {
      append(other.features_.row(r), other.labels_[r], other.sources_[r]);
    }
  }

  std::array<std::size_t, kTissueCount> class_histogram() const {
    std::array<std::size_t, kTissueCount> counts{};
    for (Tissue t : labels_) ++counts[index_of(t)];
    return counts;
  }

  friend bool operator==(const TrainingSet&, const TrainingSet&) = default;

 private:
  FeatureMatrix features_;
  std::vector<Tissue> labels_;
  std::vector<SampleSource> sources_;
};

/// Draws `per_class` pixels of every tissue uniformly without replacement.
/// Candidates are enumerated in raster order and chosen by a partial
/// Fisher-Yates shuffle on the stream ("sample", stream_index); rows are
/// emitted tissue by tissue in draw order.
inline TrainingSet sample_training_points(const FeatureGrid& features, const LabelMap& labels,
                                          std::size_t per_class, std::uint64_t seed,
                                          const std::string& image_id = "",
                                          std::uint64_t stream_index = 0) {
  require_same_shape(features, labels, "sample_training_points");
  if (per_class == 0) throw Error(ErrorCode::InvalidConfig, "per_class must be >= 1");

  std::array<std::vector<std::size_t>, kTissueCount> candidates;
  for (std::size_t i = 0; i < labels.size(); ++i) candidates[index_of(labels[i])].push_back(i);
  for (Tissue t : kAllTissues) {
    if (candidates[index_of(t)].size() < per_class) {
      throw Error(ErrorCode::InsufficientPixels,
                  "InsufficientPixels(" + std::string(tissue_name(t)) + "): " +
                      std::to_string(candidates[index_of(t)].size()) + " pixels < " +
                      std::to_string(per_class));
    }
  }

  Rng rng = Rng::stream(seed, "sample", stream_index);
  TrainingSet ts;
  for (Tissue t : kAllTissues) {
    auto& pool = candidates[index_of(t)];
    for (std::size_t k = 0; k < per_class; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[pick]);
      const std::size_t p = pool[k];
      ts.append(features.pixel(p), t, {image_id, p % labels.width(), p / labels.width()});
    }
  }
  return ts;
}

// ---------------------------------------------------------------- manifest

struct ManifestEntry {
  std::string id;
  std::string image;
  std::string label;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

struct LabeledImage {
  std::string id;
  GrayImage image;
  LabelMap labels;
};

inline DatasetManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  try {
    const std::filesystem::path root = doc.at("root").get<std::string>();
    m.root = root.is_absolute() ? root : base_dir / root;
    std::set<std::string> seen;
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry{e.at("id").get<std::string>(), e.at("image").get<std::string>(),
                          e.at("label").get<std::string>()};
      if (!seen.insert(entry.id).second) {
        throw Error(ErrorCode::DuplicateId, "duplicate manifest id '" + entry.id + "'");
      }
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestParse, std::string("manifest: ") + e.what());
  }
  return m;
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m, const std::string& root_text) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"id", e.id}, {"image", e.image}, {"label", e.label}});
  }
  return {{"root", root_text}, {"entries", entries}};
}

/// Loads every pair a manifest names. Paths resolve against `root`, which
/// itself resolves against the manifest's directory when relative.
inline std::vector<LabeledImage> load_dataset(const DatasetManifest& manifest) {
  if (manifest.entries.empty()) {
    throw Error(ErrorCode::EmptyDataset, "manifest has no entries");
  }
  std::vector<LabeledImage> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    try {
      GrayImage image = load_image(manifest.root / e.image);
      LabelMap labels = load_label_map(manifest.root / e.label);
      require_same_shape(image, labels, "image vs label");
      out.push_back({e.id, std::move(image), std::move(labels)});
    } catch (const Error& err) {
      err.rethrow_with_context("entry '" + e.id + "'");
    }
  }
  return out;
}

inline std::pair<DatasetManifest, std::vector<LabeledImage>> load_manifest(
    const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestParse, path.string() + ": " + e.what());
  }
  DatasetManifest m = parse_manifest(doc, path.parent_path());
  auto pairs = load_dataset(m);
  return {std::move(m), std::move(pairs)};
}

// ---------------------------------------------------------------- phantom

struct PhantomConfig {
  std::size_t size = 128;
  double noise_sigma = 10.0;
  std::uint64_t seed = 1;
  /// Indexed by tissue code.
  std::array<double, kTissueCount> tissue_means = {10.0, 220.0, 60.0, 120.0, 180.0};
  double ellipse_jitter = 0.05;

  void validate() const {
    if (size < 16) throw Error(ErrorCode::InvalidConfig, "phantom size must be >= 16");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "noise_sigma must be >= 0");
    if (!(ellipse_jitter >= 0.0 && ellipse_jitter <= 0.2)) {
      throw Error(ErrorCode::InvalidConfig, "ellipse_jitter must lie in [0, 0.2]");
    }
    for (std::size_t i = 0; i < kTissueCount; ++i) {
      if (!(tissue_means[i] >= 0.0 && tissue_means[i] <= 255.0)) {
        throw Error(ErrorCode::InvalidConfig, "tissue means must lie in [0, 255]");
      }
      for (std::size_t j = i + 1; j < kTissueCount; ++j) {
        if (tissue_means[i] == tissue_means[j]) {
          throw Error(ErrorCode::InvalidConfig, "tissue means must be pairwise distinct");
        }
      }
    }
  }
};

/// Outer semi-axes (fraction of the image size) of the skull, CSF, gray
/// matter and white matter ellipses, outermost first.
inline constexpr std::array<std::pair<double, double>, 4> kPhantomAxes = {{
    {0.45, 0.40}, {0.40, 0.35}, {0.35, 0.30}, {0.26, 0.21}}};

/// Nested-ellipse head phantom number `index` of a seeded series. One
/// generator on stream ("phantom", index) supplies two jitter draws (x then y axis scale) followed by one normal
/// draw per pixel in raster order.
inline std::pair<GrayImage, LabelMap> generate_phantom(const PhantomConfig& config, std::uint64_t index = 0) {
  config.validate();
  Rng rng = Rng::stream(config.seed, "phantom", index);
  const double jx = 1.0 + config.ellipse_jitter * (2.0 * rng.uniform() - 1.0);
  const double jy = 1.0 + config.ellipse_jitter * (2.0 * rng.uniform() - 1.0);

  const std::size_t n = config.size;
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  LabelMap labels(n, n, Tissue::Background);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - centre;
      const double dy = static_cast<double>(y) - centre;
      for (std::size_t ring = 0; ring < kPhantomAxes.size(); ++ring) {
        const double a = kPhantomAxes[ring].first * static_cast<double>(n) * jx;
        const double b = kPhantomAxes[ring].second * static_cast<double>(n) * jy;
        if ((dx / a) * (dx / a) + (dy / b) * (dy / b) <= 1.0) {
          labels.at(x, y) = static_cast<Tissue>(ring + 1);
        }
      }
    }
  }

  std::array<bool, kTissueCount> present{};
  for (Tissue t : labels.cells()) present[index_of(t)] = true;
  if (!std::all_of(present.begin(), present.end(), [](bool p) { return p; })) {
    throw Error(ErrorCode::InvalidConfig, "phantom too small to contain all five tissues");
  }

  GrayImage image(n, n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double value = config.tissue_means[index_of(labels[i])] + config.noise_sigma * rng.normal();
    image[i] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(value), 0.0, 255.0));
  }
  return {std::move(image), std::move(labels)};
}

}  // namespace brainseg
