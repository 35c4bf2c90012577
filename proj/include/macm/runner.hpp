#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "macm/dataset.hpp"
#include "macm/export.hpp"
#include "macm/interpret.hpp"
#include "macm/model.hpp"
#include "macm/oracle.hpp"
#include "macm/presets.hpp"
#include "macm/serialize.hpp"
#include "macm/training.hpp"

namespace macm {

// Fully describes one reproducible run; everything a command writes is a
// deterministic function of (config, seed).
struct RunConfig {
  std::string csv_path;
  std::string dataset_spec_ref;           // name/path, empty when inline
  std::optional<DatasetSpec> dataset;     // inline or resolved spec
  std::string model_preset = "macm_poly";
  std::optional<int> degree;
  std::optional<int> hidden_layers;
  std::optional<int> hidden_width;
  std::optional<double> scale;
  std::optional<double> learning_rate;
  std::optional<double> decay_factor;
  std::optional<int> decay_every;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<double> grad_clip;
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
  int folds = 5;
  std::size_t grid_points = 200;
  std::string output_dir = "out";
};

inline RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  const auto& d = j.at("dataset");
  cfg.csv_path = d.at("csv").get<std::string>();
  const auto& spec = d.at("spec");
  if (spec.is_string())
    cfg.dataset_spec_ref = spec.get<std::string>();
  else
    cfg.dataset = dataset_spec_from_json(spec);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    cfg.model_preset = m.value("preset", cfg.model_preset);
    if (m.contains("degree") && !m.at("degree").is_null()) cfg.degree = m.at("degree").get<int>();
    if (m.contains("hidden_layers") && !m.at("hidden_layers").is_null())
      cfg.hidden_layers = m.at("hidden_layers").get<int>();
    if (m.contains("hidden_width") && !m.at("hidden_width").is_null())
      cfg.hidden_width = m.at("hidden_width").get<int>();
    if (m.contains("scale") && !m.at("scale").is_null()) cfg.scale = m.at("scale").get<double>();
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    if (t.contains("learning_rate") && !t.at("learning_rate").is_null())
      cfg.learning_rate = t.at("learning_rate").get<double>();
    if (t.contains("decay_factor") && !t.at("decay_factor").is_null())
      cfg.decay_factor = t.at("decay_factor").get<double>();
    if (t.contains("decay_every") && !t.at("decay_every").is_null())
      cfg.decay_every = t.at("decay_every").get<int>();
    if (t.contains("batch_size") && !t.at("batch_size").is_null())
      cfg.batch_size = t.at("batch_size").get<int>();
    if (t.contains("epochs") && !t.at("epochs").is_null()) cfg.epochs = t.at("epochs").get<int>();
    if (t.contains("grad_clip") && !t.at("grad_clip").is_null())
      cfg.grad_clip = t.at("grad_clip").get<double>();
  }
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("split")) cfg.test_fraction = j.at("split").value("test_fraction", cfg.test_fraction);
  if (j.contains("cv")) cfg.folds = j.at("cv").value("folds", cfg.folds);
  if (j.contains("export")) cfg.grid_points = j.at("export").value("grid_points", cfg.grid_points);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("malformed config " + path + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument("invalid config schema in " + path + ": " + e.what());
  }
}

struct ResolvedRun {
  RunConfig cfg;        // dataset resolved inline
  DatasetSpec dataset;  // with explicit feature list
  Dataset data;         // loaded, target-transformed, normalized
  Preset preset;        // model + training parameters after overrides
  std::size_t dropped_rows = 0;
};

inline ResolvedRun resolve_run(const RunConfig& in) {
  ResolvedRun run;
  run.cfg = in;
  run.dataset = in.dataset ? *in.dataset : load_dataset_spec(in.dataset_spec_ref);
  if (run.dataset.auto_features) {
    run.dataset.features = resolve_features(run.dataset, in.csv_path);
    run.dataset.auto_features = false;
  }
  run.preset = resolve_preset(in.model_preset, run.dataset.task);
  if (in.degree) run.preset.model.degree = *in.degree;
  if (in.hidden_layers) run.preset.model.hidden_layers = *in.hidden_layers;
  if (in.hidden_width) run.preset.model.hidden_width = *in.hidden_width;
  if (in.scale) run.preset.model.scale = *in.scale;
  if (in.learning_rate) run.preset.train.learning_rate = *in.learning_rate;
  if (in.decay_factor) run.preset.train.decay_factor = *in.decay_factor;
  if (in.decay_every) run.preset.train.decay_every = *in.decay_every;
  if (in.batch_size) run.preset.train.batch_size = *in.batch_size;
  if (in.epochs) run.preset.train.epochs = *in.epochs;
  if (in.grad_clip) run.preset.train.grad_clip = *in.grad_clip;
  run.preset.train.seed = in.seed;
  run.preset.train.validate();

  run.data = load_csv(in.csv_path, run.dataset.target, run.dataset.features,
                      run.dataset.target_transform, &run.dropped_rows);
  if (run.data.n_samples == 0) throw SchemaError("dataset is empty after dropping missing rows");
  if (run.dataset.task == Task::binary)
    for (double y : run.data.target)
      if (y != 0.0 && y != 1.0)
        throw SchemaError("binary task requires a {0,1} target column");
  minmax_normalize(run.data);
  run.cfg.dataset = run.dataset;
  run.cfg.dataset_spec_ref.clear();
  return run;
}

// The fully resolved configuration; re-running from this file reproduces the
// run byte-for-byte.
inline json effective_config_json(const ResolvedRun& run) {
  json j;
  j["dataset"] = {{"csv", run.cfg.csv_path}, {"spec", dataset_spec_to_json(run.dataset)}};
  j["model"] = {{"preset", run.cfg.model_preset},
                {"degree", run.preset.model.degree},
                {"hidden_layers", run.preset.model.hidden_layers},
                {"hidden_width", run.preset.model.hidden_width},
                {"scale", run.preset.model.scale}};
  json t = {{"learning_rate", run.preset.train.learning_rate},
            {"decay_factor", run.preset.train.decay_factor},
            {"decay_every", run.preset.train.decay_every},
            {"batch_size", run.preset.train.batch_size},
            {"epochs", run.preset.train.epochs}};
  if (run.preset.train.grad_clip) t["grad_clip"] = *run.preset.train.grad_clip;
  j["train"] = t;
  j["seed"] = run.cfg.seed;
  j["split"] = {{"test_fraction", run.cfg.test_fraction}};
  j["cv"] = {{"folds", run.cfg.folds}};
  j["export"] = {{"grid_points", run.cfg.grid_points}};
  j["output_dir"] = run.cfg.output_dir;
  return j;
}

namespace detail {

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << content;
}

inline void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << "epoch,loss,lr\n";
  for (const auto& rec : history)
    out << rec.epoch << "," << fmt_double(rec.loss) << "," << fmt_double(rec.lr) << "\n";
}

inline std::string formatted_mean_std(double mean, double std_dev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f±%.4f", mean, std_dev);
  return buf;
}

}  // namespace detail

inline int cmd_train(const RunConfig& cfg_in, std::ostream& log = std::cout) {
  ResolvedRun run = resolve_run(cfg_in);
  namespace fs = std::filesystem;
  fs::create_directories(run.cfg.output_dir);

  const auto [train_idx, test_idx] =
      train_test_split(run.data.n_samples, run.cfg.test_fraction, mix_seed(run.cfg.seed, 0x5B17));
  const Dataset train_data = run.data.subset(train_idx);
  const Dataset test_data = run.data.subset(test_idx);

  Model model = make_model(run.preset.model, run.data.n_features, mix_seed(run.cfg.seed, 0xA11CE));
  const auto history = train(model, train_data, run.preset.train);
  const MetricKind metric = run.dataset.task == Task::binary ? MetricKind::auc : MetricKind::rmse;
  const double score = evaluate(model, test_data, metric);

  save_model(model, run.data.specs, run.dataset.target_transform, run.cfg.output_dir + "/model.json");
  detail::write_history_csv(run.cfg.output_dir + "/loss_history.csv", history);

  json metrics;
  metrics["metric"] = metric == MetricKind::auc ? "auc" : "rmse";
  metrics["value"] = score;
  metrics["final_train_loss"] = history.back().loss;
  metrics["n_train"] = train_data.n_samples;
  metrics["n_test"] = test_data.n_samples;
  metrics["dropped_rows"] = run.dropped_rows;
  metrics["seed"] = run.cfg.seed;
  detail::write_text(run.cfg.output_dir + "/metrics.json", metrics.dump(2) + "\n");
  detail::write_text(run.cfg.output_dir + "/effective_config.json",
                     effective_config_json(run).dump(2) + "\n");
  log << "train: " << (metric == MetricKind::auc ? "test AUC " : "test RMSE ") << score << " ("
      << train_data.n_samples << " train / " << test_data.n_samples << " test)\n";
  return 0;
}

inline int cmd_cv(const RunConfig& cfg_in, std::ostream& log = std::cout) {
  ResolvedRun run = resolve_run(cfg_in);
  namespace fs = std::filesystem;
  fs::create_directories(run.cfg.output_dir);

  const FoldSplit folds = kfold_split(run.data.n_samples, run.cfg.folds, mix_seed(run.cfg.seed, 0xF01D));
  const MetricKind metric = run.dataset.task == Task::binary ? MetricKind::auc : MetricKind::rmse;
  const auto factory = [&](std::uint64_t fold_seed) {
    return make_model(run.preset.model, run.data.n_features, fold_seed);
  };
  const CvResult cv = cross_validate(factory, run.data, folds, run.preset.train, metric);

  for (int f = 0; f < folds.fold_count; ++f) {
    save_model(cv.fold_models[static_cast<std::size_t>(f)], run.data.specs,
               run.dataset.target_transform,
               run.cfg.output_dir + "/fold_" + std::to_string(f) + ".json");
    detail::write_history_csv(run.cfg.output_dir + "/loss_history_fold_" + std::to_string(f) + ".csv",
                              cv.histories[static_cast<std::size_t>(f)]);
  }

  json metrics;
  metrics["metric"] = metric == MetricKind::auc ? "auc" : "rmse";
  metrics["per_fold"] = cv.metrics.per_fold;
  metrics["mean"] = cv.metrics.mean;
  metrics["std"] = cv.metrics.std_dev;
  metrics["formatted"] = detail::formatted_mean_std(cv.metrics.mean, cv.metrics.std_dev);
  metrics["folds"] = folds.fold_count;
  metrics["seed"] = run.cfg.seed;
  detail::write_text(run.cfg.output_dir + "/metrics.json", metrics.dump(2) + "\n");
  detail::write_text(run.cfg.output_dir + "/effective_config.json",
                     effective_config_json(run).dump(2) + "\n");
  log << "cv: " << (metric == MetricKind::auc ? "AUC " : "RMSE ")
      << detail::formatted_mean_std(cv.metrics.mean, cv.metrics.std_dev) << " over "
      << folds.fold_count << " folds\n";
  return 0;
}

struct ExportArgs {
  std::vector<std::string> model_paths;
  std::string csv_path;  // required: supplies the alpha population
  std::string output_dir = "out/curves";
  std::size_t grid_points = 200;
  ExportFormat format = ExportFormat::csv;
};

inline int cmd_export_shapes(const ExportArgs& args, std::ostream& log = std::cout) {
  if (args.model_paths.empty()) throw std::invalid_argument("export-shapes: no model files given");
  if (args.csv_path.empty())
    throw std::invalid_argument(
        "export-shapes: a dataset CSV is required (the dynamic-curve alpha range is computed over "
        "the training samples)");
  std::vector<Model> models;
  std::vector<FeatureSpec> specs;
  TargetTransform target;
  for (const auto& path : args.model_paths) {
    LoadedModel loaded = load_model(path);
    if (models.empty()) {
      specs = loaded.specs;
      target = loaded.target;
    } else if (loaded.specs.size() != specs.size()) {
      throw SchemaError("fold models disagree on feature count");
    }
    models.push_back(std::move(loaded.model));
  }

  Dataset data = load_csv(args.csv_path, "", specs);
  const std::size_t clamped = normalize_with_specs(data, specs);
  if (clamped > 0)
    log << "export-shapes: clamped " << clamped << " out-of-range cells to [-1,1]\n";

  const CurveExport exp = build_curve_export(models, specs, data, args.grid_points);
  export_curves(exp, args.output_dir, args.format);
  log << "export-shapes: wrote curves for " << exp.features.size() << " features to "
      << args.output_dir << "\n";
  for (const auto& w : exp.warnings) log << "  warning: " << w << "\n";
  return 0;
}

// Prints the symbolic term expansion (exponent tuple -> coefficient) of a
// polynomial model, lexicographically sorted.
inline int cmd_expand(const std::string& model_path, std::ostream& out) {
  LoadedModel loaded = load_model(model_path);
  oracle::SymbolicPoly poly;
  if (const auto* p = std::get_if<MacmModel>(&loaded.model)) {
    if (!all_polynomial(p->mult_shapes) || !all_polynomial(p->add_shapes))
      throw std::invalid_argument("expand: only polynomial shape functions can be expanded");
    poly = oracle::expand_macm(*p);
  } else if (const auto* p = std::get_if<CesrModel>(&loaded.model)) {
    poly = oracle::expand_cesr(*p);
  } else if (const auto* p = std::get_if<AblationModel>(&loaded.model)) {
    if (!all_polynomial(p->shapes))
      throw std::invalid_argument("expand: only polynomial shape functions can be expanded");
    poly = oracle::expand_ablation(*p);
  } else {
    const auto& esr = std::get<EsrModel>(loaded.model);
    const auto terms = ergodic_terms(esr.degrees);
    poly.arity = esr.degrees.size();
    for (std::size_t t = 0; t < terms.size(); ++t) poly.add_term(terms[t], esr.coeffs[t]);
  }
  out << "# exponents -> coefficient (" << poly.arity << " features, " << poly.terms.size()
      << " terms)\n";
  for (const auto& [e, c] : poly.terms) {
    for (std::size_t i = 0; i < e.size(); ++i) out << (i ? " " : "") << e[i];
    out << " : " << detail::fmt_double(c) << "\n";
  }
  return 0;
}

struct PredictArgs {
  std::string model_path;
  std::string csv_in;
  std::string csv_out;
};

inline int cmd_predict(const PredictArgs& args, std::ostream& log = std::cout) {
  LoadedModel loaded = load_model(args.model_path);
  Dataset data = load_csv(args.csv_in, "", loaded.specs);
  if (data.n_features != loaded.specs.size())
    throw SchemaError("predict: feature count mismatch");

  // Normalize row-by-row so clamp warnings can be reported per row.
  std::ofstream out(args.csv_out);
  if (!out) throw SchemaError("cannot write " + args.csv_out);
  const bool binary = task_of(loaded.model) == Task::binary;
  out << (binary ? "row,prediction,probability,clamped_cells\n" : "row,prediction,clamped_cells\n");
  std::vector<double> x(data.n_features);
  std::size_t total_clamped = 0;
  for (std::size_t r = 0; r < data.n_samples; ++r) {
    std::size_t clamped = 0;
    for (std::size_t j = 0; j < data.n_features; ++j) {
      const auto& spec = loaded.specs[j];
      if (!spec.has_bounds())
        throw SchemaError("model has no stored normalization bounds for feature '" + spec.name + "'");
      double v = normalize_value(data.at(r, j), spec.raw_min, spec.raw_max);
      if (v < -1.0 || v > 1.0) {
        v = std::clamp(v, -1.0, 1.0);
        ++clamped;
      }
      x[j] = v;
    }
    total_clamped += clamped;
    const double pred = forward(loaded.model, x);
    out << r << "," << detail::fmt_double(pred);
    if (binary) out << "," << detail::fmt_double(sigmoid(pred));
    out << "," << clamped << "\n";
  }
  log << "predict: wrote " << data.n_samples << " predictions to " << args.csv_out;
  if (total_clamped > 0) log << " (" << total_clamped << " cells clamped)";
  log << "\n";
  return 0;
}

// Hidden oracle self-checks, reachable via the `verify` subcommand.
inline int cmd_verify(std::ostream& out) {
  int failures = 0;
  const auto report = [&](const char* name, bool ok) {
    out << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };

  {  // analytic vs finite-difference gradients on a random polynomial MACM
    Rng rng(7);
    MacmModel m;
    for (int i = 0; i < 3; ++i) {
      m.mult_shapes.emplace_back(init_polynomial(3, rng.next_u64(), PolyInit::multiplicative));
      m.add_shapes.emplace_back(init_polynomial(3, rng.next_u64(), PolyInit::additive));
    }
    m.scale = 2.0;
    Model model = m;
    std::vector<double> x{0.3, -0.5, 0.7};
    std::vector<double> analytic(param_count(model), 0.0);
    accumulate_param_grad(model, x, 1.0, analytic);
    Model probe = model;
    const auto fd = oracle::finite_diff_grad(
        [&](std::span<const double> theta) {
          set_params(probe, theta);
          return forward(probe, x);
        },
        get_params(model), 1e-6);
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i)
      worst = std::max(worst, std::abs(fd[i] - analytic[i]) /
                                  std::max({1e-7, std::abs(fd[i]), std::abs(analytic[i])}));
    report("macm gradient vs central differences", worst < 1e-4);
  }
  {  // rank AUC vs brute-force pair counting
    Rng rng(11);
    bool ok = true;
    for (int rep = 0; rep < 20 && ok; ++rep) {
      std::vector<double> scores(40), labels(40);
      for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = static_cast<double>(rng.next_below(8));
        labels[i] = i < 20 ? 1.0 : 0.0;
      }
      ok = auc_score(scores, labels) == oracle::auc_bruteforce(scores, labels);
    }
    report("auc rank statistic vs pair counting", ok);
  }
  {  // symbolic expansion point agreement
    Rng rng(13);
    MacmModel m;
    for (int i = 0; i < 2; ++i) {
      m.mult_shapes.emplace_back(init_polynomial(2, rng.next_u64(), PolyInit::multiplicative));
      m.add_shapes.emplace_back(init_polynomial(2, rng.next_u64(), PolyInit::additive));
    }
    m.scale = 3.0;
    const auto poly = oracle::expand_macm(m);
    bool ok = true;
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      if (std::abs(poly.eval(x) - macm_forward(m, x)) > 1e-10) ok = false;
    }
    report("symbolic expansion vs direct forward", ok);
  }
  {  // least squares recovers exact linear data
    std::vector<double> design;
    std::vector<double> y;
    Rng rng(17);
    for (int r = 0; r < 50; ++r) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
      design.insert(design.end(), {1.0, a, b});
      y.push_back(2.0 - a + 0.5 * b);
    }
    const auto w = oracle::ols_fit(design, 50, 3, y, 0.0);
    const bool ok = std::abs(w[0] - 2.0) < 1e-9 && std::abs(w[1] + 1.0) < 1e-9 &&
                    std::abs(w[2] - 0.5) < 1e-9;
    report("normal-equation least squares on exact data", ok);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace macm
