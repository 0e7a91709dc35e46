// brainseg command-line front end.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brainseg/brainseg.hpp"

namespace fs = std::filesystem;
using namespace brainseg;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Collects flag overrides; they are applied after the config file so that
/// flags > config file > defaults.
class Overrides {
 public:
  template <typename T, typename Apply>
  CLI::Option* add(CLI::App* app, const std::string& name, T& storage, Apply apply, const std::string& help) {
    CLI::Option* opt = app->add_option(name, storage, help);
    items_.push_back({opt, [&storage, apply](RunConfig& rc) { apply(rc, storage); }});
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& name, bool& storage, std::function<void(RunConfig&)> apply,
                    const std::string& help) {
    CLI::Option* opt = app->add_flag(name, storage, help);
    items_.push_back({opt, std::move(apply)});
    return opt;
  }

  void apply(RunConfig& rc) const {
    for (const auto& [opt, fn] : items_) {
      if (opt->count() > 0) fn(rc);
    }
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items_;
};

struct Flags {
  std::string config_file;
  std::string manifest;
  std::string classifier;
  std::size_t per_class = 0;
  std::uint64_t seed = 0;
  bool overlays = false;
  bool feature_dumps = false;
  double pnn_sigma = 0.0;
  std::size_t knn_k = 0;
  double isnn_mu = 0.0;
  std::size_t isnn_epochs = 0;
  std::uint64_t isnn_shuffle = 0;
  std::string svm_kernel;
  double svm_c = 0.0;
  double svm_gamma = 0.0;
  std::vector<double> frequencies;
  std::vector<double> orientations_deg;
  double sigma_envelope = 0.0;
  int kernel_radius = 0;
  std::size_t count = 0;
  std::size_t size = 0;
  double noise = 0.0;
  double jitter = 0.0;
};

struct Command {
  explicit Command(CLI::App* sub) : app(sub) {}

  CLI::App* app;
  Overrides overrides;
  CLI::Option* config = nullptr;
};

void add_common(Command& cmd, Flags& f) {
  cmd.config = cmd.app->add_option("--config", f.config_file, "JSON config file (flags take precedence)")
                   ->check(CLI::ExistingFile);
  cmd.overrides.add(cmd.app, "--seed", f.seed, [](RunConfig& rc, std::uint64_t v) { rc.seed = v; },
                    "random seed");
}

void add_gabor(Command& cmd, Flags& f) {
  auto& o = cmd.overrides;
  o.add(cmd.app, "--frequencies", f.frequencies,
        [](RunConfig& rc, const std::vector<double>& v) { rc.gabor.frequencies = v; }, "Gabor frequencies (cycles/px)");
  o.add(cmd.app, "--orientations", f.orientations_deg,
        [](RunConfig& rc, const std::vector<double>& v) {
          rc.gabor.orientations.clear();
          for (double d : v) rc.gabor.orientations.push_back(d * kPi / 180.0);
        },
        "Gabor orientations (degrees)");
  o.add(cmd.app, "--sigma-envelope", f.sigma_envelope,
        [](RunConfig& rc, double v) { rc.gabor.sigma_envelope = v; }, "Gaussian envelope sigma for every filter");
  o.add(cmd.app, "--kernel-radius", f.kernel_radius, [](RunConfig& rc, int v) { rc.gabor.kernel_radius = v; },
        "kernel radius for every filter");
}

void add_training(Command& cmd, Flags& f, bool with_classifier) {
  auto& o = cmd.overrides;
  o.add(cmd.app, "--manifest,-m", f.manifest, [](RunConfig& rc, const std::string& v) { rc.manifest = v; },
        "dataset manifest");
  if (with_classifier) {
    o.add(cmd.app, "--classifier,-c", f.classifier,
          [](RunConfig& rc, const std::string& v) { rc.classifier = classifier_from_name(v); },
          "pnn | knn | isnn | svm");
  }
  o.add(cmd.app, "--per-class", f.per_class, [](RunConfig& rc, std::size_t v) { rc.per_class = v; },
        "training points per tissue per image");
  o.add(cmd.app, "--pnn-sigma", f.pnn_sigma, [](RunConfig& rc, double v) { rc.classifiers.pnn.sigma = v; },
        "PNN smoothing parameter");
  o.add(cmd.app, "--knn-k", f.knn_k, [](RunConfig& rc, std::size_t v) { rc.classifiers.knn.k = v; }, "KNN k");
  o.add(cmd.app, "--isnn-mu", f.isnn_mu, [](RunConfig& rc, double v) { rc.classifiers.isnn.mu = v; },
        "ISNN learning rate");
  o.add(cmd.app, "--isnn-epochs", f.isnn_epochs, [](RunConfig& rc, std::size_t v) { rc.classifiers.isnn.epochs = v; },
        "ISNN passes over the data");
  o.add(cmd.app, "--isnn-shuffle-seed", f.isnn_shuffle,
        [](RunConfig& rc, std::uint64_t v) { rc.classifiers.isnn.shuffle_seed = v; }, "shuffle ISNN rows per epoch");
  o.add(cmd.app, "--svm-kernel", f.svm_kernel,
        [](RunConfig& rc, const std::string& v) { rc.classifiers.svm.kernel = svm_kernel_from_name(v); },
        "rbf | linear");
  o.add(cmd.app, "--svm-C", f.svm_c, [](RunConfig& rc, double v) { rc.classifiers.svm.C = v; }, "SVM box constraint");
  o.add(cmd.app, "--svm-gamma", f.svm_gamma, [](RunConfig& rc, double v) { rc.classifiers.svm.gamma = v; },
        "RBF width (default 1/9)");
  add_gabor(cmd, f);
}

void add_outputs(Command& cmd, Flags& f) {
  cmd.overrides.flag(cmd.app, "--emit-overlays", f.overlays, [](RunConfig& rc) { rc.emit_overlays = true; },
                     "also write colour overlay PNGs");
  cmd.overrides.flag(cmd.app, "--emit-feature-dumps", f.feature_dumps,
                     [](RunConfig& rc) { rc.emit_feature_dumps = true; }, "also write per-channel feature PNGs");
}

RunConfig resolve(const Command& cmd, const Flags& f, const std::string& subcommand) {
  RunConfig rc;
  if (cmd.config->count() > 0) rc = run_config_from_json(load_json_file(f.config_file, ErrorCode::InvalidConfig), rc);
  cmd.overrides.apply(rc);
  rc.subcommand = subcommand;
  rc.validate();
  return rc;
}

std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + dir.string() + "': " + ec.message());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

std::vector<LabeledImage> load_manifest_images(const RunConfig& rc) {
  if (rc.manifest.empty()) throw Error(ErrorCode::InvalidConfig, "a dataset manifest is required (--manifest)");
  return load_manifest(rc.manifest).second;
}

void write_feature_dumps(const FeatureGrid& grid, const FilterBank& bank, const fs::path& dir,
                         const std::string& prefix, json* index) {
  for (std::size_t c = 0; c < bank.size(); ++c) {
    const fs::path file = dir / (prefix + "feature_" + two_digits(c) + ".png");
    save_png(feature_channel_image(grid, c), file);
    if (index != nullptr) {
      const auto& g = bank.filters[c];
      double lo = grid.pixel(0)[c];
      double hi = lo;
      for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
        lo = std::min(lo, grid.pixel(i)[c]);
        hi = std::max(hi, grid.pixel(i)[c]);
      }
      index->push_back({{"channel", c},
                        {"file", file.filename().string()},
                        {"frequency", g.frequency},
                        {"orientation_deg", g.orientation * 180.0 / kPi},
                        {"sigma", g.sigma},
                        {"radius", g.radius},
                        {"min", lo},
                        {"max", hi}});
    }
  }
}

void write_overlay(const GrayImage& image, const LabelMap& labels, const fs::path& path) {
  save_rgb_png(image.width(), image.height(), render_overlay(image, labels), path);
}

// ---------------------------------------------------------------- commands

int cmd_phantom(const RunConfig& rc, const fs::path& out) {
  if (rc.phantom_count == 0) throw Error(ErrorCode::InvalidConfig, "phantom count must be >= 1");
  ensure_dir(out);
  DatasetManifest manifest;
  for (std::size_t i = 0; i < rc.phantom_count; ++i) {
    const auto [image, labels] = generate_phantom(rc.phantom_config(), i);
    const std::string id = "phantom_" + two_digits(i);
    save_pgm(image, out / (id + ".pgm"));
    save_label_map(labels, out / (id + "_labels.pgm"));
    if (rc.emit_overlays) write_overlay(image, labels, out / (id + "_overlay.png"));
    manifest.entries.push_back({id, id + ".pgm", id + "_labels.pgm"});
  }
  json doc = manifest_to_json(manifest, ".");
  doc["run_config"] = to_json(rc);
  write_json(out / "manifest.json", doc);
  std::cerr << "wrote " << rc.phantom_count << " phantoms to " << out.string() << "\n";
  return 0;
}

int cmd_features(const RunConfig& rc, const fs::path& image_path, const fs::path& out) {
  const GrayImage image = load_image(image_path);
  const FilterBank bank = build_filter_bank(rc.gabor);
  const FeatureGrid grid = extract_features(image, bank);
  ensure_dir(out);
  json channels = json::array();
  write_feature_dumps(grid, bank, out, "", &channels);
  write_json(out / "features.json", {{"image", image_path.filename().string()},
                                     {"width", grid.width()},
                                     {"height", grid.height()},
                                     {"dim", grid.dim()},
                                     {"channels", channels},
                                     {"run_config", to_json(rc)}});
  return 0;
}

int cmd_train(const RunConfig& rc, const fs::path& out) {
  const auto images = prepare_dataset(load_manifest_images(rc), rc.gabor);
  TrainingSet pool;
  for (const auto& ts : sample_dataset(images, rc.per_class, rc.seed)) pool.append_all(ts);
  const FeatureStats stats = fit_stats(pool);
  const Model model = train_classifier(rc.classifier, normalize(pool, stats), rc.classifiers);
  if (const auto* svm = std::get_if<SvmModel>(&model); svm != nullptr && svm->unconverged_pairs() > 0) {
    std::cerr << "warning: " << svm->unconverged_pairs() << " SVM pair(s) hit the iteration budget\n";
  }
  ensure_parent(out);
  save_model_bundle({rc.gabor, stats, model, to_json(rc)}, out);
  std::cerr << "trained " << classifier_name(rc.classifier) << " on " << pool.rows() << " rows\n";
  return 0;
}

int cmd_segment(const RunConfig& rc, const fs::path& image_path, const fs::path& model_path, const fs::path& out,
                const std::string& overlay_path) {
  const ModelBundle bundle = load_model_bundle(model_path);
  const GrayImage image = load_image(image_path);
  const FilterBank bank = build_filter_bank(bundle.gabor);
  const FeatureGrid grid = extract_features(image, bank);
  const LabelMap labels = segment_image(grid, bundle.stats, bundle.model);
  ensure_parent(out);
  save_label_map(labels, out);
  if (!overlay_path.empty()) {
    write_overlay(image, labels, overlay_path);
  } else if (rc.emit_overlays) {
    write_overlay(image, labels, with_suffix(out, "_overlay.png"));
  }
  if (rc.emit_feature_dumps) write_feature_dumps(grid, bank, out.parent_path(), out.stem().string() + "_", nullptr);
  write_json(with_suffix(out, ".run_config.json"),
             {{"run_config", to_json(rc)},
              {"model", {{"kind", classifier_name(kind_of(bundle.model))}, {"run_config", bundle.run_config}}}});
  return 0;
}

void log_folds(const EvalReport& report) {
  for (const auto& f : report.folds) {
    std::fprintf(stderr, "fold %zu (%s) %s: mean F %.4f, %.2f s\n", f.fold, f.image_id.c_str(),
                 std::string(classifier_name(f.classifier)).c_str(), mean_f(f.scores), f.runtime_seconds);
  }
}

LoocvConfig loocv_config(const RunConfig& rc, bool keep_predictions) {
  return {rc.gabor, rc.classifiers, rc.per_class, rc.seed, keep_predictions};
}

int cmd_evaluate(const RunConfig& rc, const fs::path& out) {
  const auto images = prepare_dataset(load_manifest_images(rc), rc.gabor);
  const std::array<ClassifierKind, 1> kinds = {rc.classifier};
  const EvalReport report = run_loocv(images, kinds, loocv_config(rc, false));
  log_folds(report);
  ensure_dir(out);
  write_text_atomic(out / "report.csv", report_to_csv(report));
  json summary = report_summary_json(report);
  summary["run_config"] = to_json(rc);
  write_json(out / "summary.json", summary);
  write_json(out / "run_config.json", to_json(rc));
  return 0;
}

std::string hybrid_csv(std::span<const SegmentationScores> folds, std::span<const std::string> ids) {
  std::string out = "fold,image_id,tissue,tp,fp,fn,precision,recall,f_measure,degenerate\n";
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (const auto& s : folds[i]) {
      out += std::to_string(i) + "," + ids[i] + "," + std::string(tissue_name(s.tissue)) + "," +
             std::to_string(s.counts.tp) + "," + std::to_string(s.counts.fp) + "," + std::to_string(s.counts.fn) +
             "," + format_real(s.precision) + "," + format_real(s.recall) + "," + format_real(s.f_measure) + "," +
             (s.degenerate ? "1" : "0") + "\n";
    }
  }
  return out;
}

int cmd_compare(const RunConfig& rc, const fs::path& out, const std::string& scores_file) {
  ensure_dir(out);
  if (!scores_file.empty()) {
    // Rule derivation from a supplied score grid, no dataset involved.
    const json doc = load_json_file(scores_file, ErrorCode::InvalidConfig);
    const ScoreMatrix scores = score_matrix_from_json(doc.contains("scores") ? doc.at("scores") : doc);
    const RuleTable rules = derive_rule_table(scores);
    json comparison = comparison_to_json(comparison_from_scores(scores));
    comparison["run_config"] = to_json(rc);
    write_json(out / "comparison.json", comparison);
    write_json(out / "rules.json", rule_table_to_json(rules));
    return 0;
  }

  const auto dataset = load_manifest_images(rc);
  const auto images = prepare_dataset(dataset, rc.gabor);
  const EvalReport report = run_loocv(images, kAllClassifiers, loocv_config(rc, true));
  log_folds(report);
  const ComparisonTable table = aggregate_reports(report);
  const RuleTable rules = derive_rule_table(table.mean_f);

  std::vector<LabelMap> truths;
  std::vector<std::string> ids;
  for (const auto& img : images) {
    truths.push_back(img.labels);
    ids.push_back(img.id);
  }
  const auto hybrid = hybrid_fold_scores(report, rules, truths);
  const auto hybrid_mean = mean_scores(hybrid);

  json comparison = comparison_to_json(table);
  json hyb = json::object();
  for (Tissue t : kAllTissues) {
    hyb[std::string(tissue_name(t))] = {{"hybrid_mean_f", hybrid_mean[index_of(t)]},
                                        {"designated", classifier_name(rules.designated(t))},
                                        {"designated_mean_f", table.mean_f.get(rules.designated(t), t)}};
  }
  comparison["hybrid"] = hyb;
  comparison["format"] = "brainseg-comparison";
  comparison["version"] = 1;
  comparison["run_config"] = to_json(rc);

  write_text_atomic(out / "report.csv", report_to_csv(report));
  write_text_atomic(out / "hybrid.csv", hybrid_csv(hybrid, ids));
  write_json(out / "comparison.json", comparison);
  write_json(out / "rules.json", rule_table_to_json(rules));
  write_json(out / "run_config.json", to_json(rc));

  if (rc.emit_overlays) {
    ensure_dir(out / "overlays");
    for (std::size_t fold = 0; fold < images.size(); ++fold) {
      ClassifierMaps maps;
      for (const auto& f : report.folds) {
        if (f.fold == fold) maps[index_of(f.classifier)] = *f.prediction;
      }
      write_overlay(dataset[fold].image, hybrid_segment(maps, rules), out / "overlays" / (ids[fold] + "_hybrid.png"));
    }
  }
  return 0;
}

struct HybridInputs {
  std::string image;
  std::string rules;
  std::array<std::string, kClassifierCount> models;
};

int cmd_hybrid(const RunConfig& rc, const HybridInputs& in, const fs::path& out) {
  const RuleTable rules = rule_table_from_json(load_json_file(in.rules, ErrorCode::InvalidConfig));
  std::array<std::optional<ModelBundle>, kClassifierCount> bundles;
  for (ClassifierKind k : kAllClassifiers) {
    const std::string& path = in.models[index_of(k)];
    if (path.empty()) {
      throw Error(ErrorCode::InvalidConfig, "missing --" + std::string(classifier_name(k)) + " model file");
    }
    try {
      bundles[index_of(k)] = load_model_bundle(path);
    } catch (const Error& e) {
      e.rethrow_with_context(path);
    }
    const ClassifierKind got = kind_of(bundles[index_of(k)]->model);
    if (got != k) {
      throw Error(ErrorCode::InvalidConfig, "--" + std::string(classifier_name(k)) + " was given a " +
                                                std::string(classifier_name(got)) + " model (" + path + ")");
    }
  }

  auto fuse = [&](const GrayImage& image) {
    ClassifierMaps maps;
    for (ClassifierKind k : kAllClassifiers) {
      const ModelBundle& b = *bundles[index_of(k)];
      maps[index_of(k)] = segment_image(extract_features(image, build_filter_bank(b.gabor)), b.stats, b.model);
    }
    return hybrid_segment(maps, rules);
  };

  json echo = {{"run_config", to_json(rc)}, {"rules", rule_table_to_json(rules)}};
  if (!in.image.empty()) {
    const GrayImage image = load_image(in.image);
    const LabelMap labels = fuse(image);
    ensure_parent(out);
    save_label_map(labels, out);
    if (rc.emit_overlays) write_overlay(image, labels, with_suffix(out, "_overlay.png"));
    write_json(with_suffix(out, ".run_config.json"), echo);
    return 0;
  }

  const auto dataset = load_manifest_images(rc);
  ensure_dir(out);
  std::vector<SegmentationScores> scores;
  std::vector<std::string> ids;
  for (const auto& item : dataset) {
    const LabelMap labels = fuse(item.image);
    save_label_map(labels, out / (item.id + "_hybrid.pgm"));
    if (rc.emit_overlays) write_overlay(item.image, labels, out / (item.id + "_hybrid_overlay.png"));
    scores.push_back(score_segmentation(labels, item.labels));
    ids.push_back(item.id);
  }
  write_text_atomic(out / "hybrid.csv", hybrid_csv(scores, ids));
  write_json(out / "run_config.json", echo);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brain MRI tissue segmentation with Gabor features and four classifiers"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Flags f;
  std::string out;
  std::string image;
  std::string model;
  std::string overlay;
  std::string scores;
  HybridInputs hybrid_in;

  Command phantom{app.add_subcommand("phantom", "generate a seeded phantom dataset and manifest")};
  add_common(phantom, f);
  phantom.overrides.add(phantom.app, "--count,-n", f.count, [](RunConfig& rc, std::size_t v) { rc.phantom_count = v; },
                        "number of phantoms");
  phantom.overrides.add(phantom.app, "--size", f.size, [](RunConfig& rc, std::size_t v) { rc.phantom.size = v; },
                        "image side in pixels");
  phantom.overrides.add(phantom.app, "--noise", f.noise, [](RunConfig& rc, double v) { rc.phantom.noise_sigma = v; },
                        "Gaussian noise sigma");
  phantom.overrides.add(phantom.app, "--jitter", f.jitter,
                        [](RunConfig& rc, double v) { rc.phantom.ellipse_jitter = v; }, "ellipse axis jitter");
  add_outputs(phantom, f);
  phantom.app->add_option("--out,-o", out, "output directory")->required();

  Command features{app.add_subcommand("features", "extract and dump the Gabor feature channels of one image")};
  add_common(features, f);
  add_gabor(features, f);
  features.app->add_option("--image,-i", image, "input PGM/PNG")->required();
  features.app->add_option("--out,-o", out, "output directory")->required();

  Command train{app.add_subcommand("train", "train one classifier on every image of a manifest")};
  add_common(train, f);
  add_training(train, f, true);
  train.app->add_option("--out,-o", out, "model JSON to write")->required();

  Command segment{app.add_subcommand("segment", "label one image with a trained model")};
  add_common(segment, f);
  add_outputs(segment, f);
  segment.app->add_option("--image,-i", image, "input PGM/PNG")->required();
  segment.app->add_option("--model", model, "model JSON")->required();
  segment.app->add_option("--out,-o", out, "label map PGM to write")->required();
  segment.app->add_option("--overlay", overlay, "colour overlay PNG to write");

  Command evaluate{app.add_subcommand("evaluate", "leave-one-out evaluation of one classifier")};
  add_common(evaluate, f);
  add_training(evaluate, f, true);
  evaluate.app->add_option("--out,-o", out, "report directory")->required();

  Command compare{app.add_subcommand("compare", "evaluate all four classifiers and derive the rule table")};
  add_common(compare, f);
  add_training(compare, f, false);
  add_outputs(compare, f);
  compare.app->add_option("--scores", scores, "derive rules from this score grid instead of a dataset");
  compare.app->add_option("--out,-o", out, "report directory")->required();

  Command hybrid{app.add_subcommand("hybrid", "fuse four models' segmentations with a rule table")};
  add_common(hybrid, f);
  add_outputs(hybrid, f);
  hybrid.overrides.add(hybrid.app, "--manifest,-m", f.manifest,
                       [](RunConfig& rc, const std::string& v) { rc.manifest = v; }, "dataset manifest");
  hybrid.app->add_option("--image,-i", hybrid_in.image, "input PGM/PNG");
  hybrid.app->add_option("--rules", hybrid_in.rules, "rule table JSON")->required();
  for (ClassifierKind k : kAllClassifiers) {
    const std::string name(classifier_name(k));
    hybrid.app->add_option("--" + name, hybrid_in.models[index_of(k)], name + " model JSON")->required();
  }
  hybrid.app->add_option("--out,-o", out, "label map (with --image) or directory (with --manifest)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (phantom.app->parsed()) return cmd_phantom(resolve(phantom, f, "phantom"), out);
    if (features.app->parsed()) return cmd_features(resolve(features, f, "features"), image, out);
    if (train.app->parsed()) return cmd_train(resolve(train, f, "train"), out);
    if (segment.app->parsed()) return cmd_segment(resolve(segment, f, "segment"), image, model, out, overlay);
    if (evaluate.app->parsed()) return cmd_evaluate(resolve(evaluate, f, "evaluate"), out);
    if (compare.app->parsed()) return cmd_compare(resolve(compare, f, "compare"), out, scores);
    if (hybrid.app->parsed()) {
      const RunConfig rc = resolve(hybrid, f, "hybrid");
      if (hybrid_in.image.empty() == rc.manifest.empty()) {
        throw Error(ErrorCode::InvalidConfig, "hybrid needs exactly one of --image or --manifest");
      }
      return cmd_hybrid(rc, hybrid_in, out);
    }
  } catch (const Error& e) {
    std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
