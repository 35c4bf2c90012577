// Command-line front end: train, cv, export-shapes, expand, predict, and a
// hidden verify subcommand for oracle self-checks.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "macm/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> preset;
  std::optional<int> folds;
  std::optional<std::string> data_csv;
  std::optional<std::string> dataset_spec;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration JSON")->required();
  cmd->add_option("--seed", flags.seed, "override the config seed");
  cmd->add_option("--out", flags.out_dir, "override the output directory");
  cmd->add_option("--preset", flags.preset, "override the model preset name");
  cmd->add_option("--folds", flags.folds, "override the fold count");
  cmd->add_option("--data", flags.data_csv, "override the dataset CSV path");
  cmd->add_option("--dataset-preset", flags.dataset_spec, "override the dataset spec (name or path)");
}

macm::RunConfig resolve_flags(const CommonFlags& flags) {
  macm::RunConfig cfg = macm::load_run_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.output_dir = *flags.out_dir;
  if (flags.preset) cfg.model_preset = *flags.preset;
  if (flags.folds) cfg.folds = *flags.folds;
  if (flags.data_csv) cfg.csv_path = *flags.data_csv;
  if (flags.dataset_spec) {
    cfg.dataset_spec_ref = *flags.dataset_spec;
    cfg.dataset.reset();
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative-additive constrained models: training, evaluation and shape export"};
  app.require_subcommand(1);

  CommonFlags train_flags, cv_flags;
  auto* train_cmd = app.add_subcommand("train", "train on an 80/20 split and write model + metrics");
  add_common(train_cmd, train_flags);
  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation with per-fold models");
  add_common(cv_cmd, cv_flags);

  macm::ExportArgs export_args;
  std::string export_format = "csv";
  auto* export_cmd =
      app.add_subcommand("export-shapes", "emit normalized and dynamic shape-function curves");
  export_cmd->add_option("models", export_args.model_paths, "model JSON files (fold models)")
      ->required();
  export_cmd->add_option("--data", export_args.csv_path,
                         "dataset CSV (required for the dynamic-curve alpha range)");
  export_cmd->add_option("--out", export_args.output_dir, "output directory");
  export_cmd->add_option("--grid", export_args.grid_points, "grid points per curve");
  export_cmd->add_option("--format", export_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string expand_model, expand_out;
  auto* expand_cmd = app.add_subcommand("expand", "print a polynomial model's term expansion");
  expand_cmd->add_option("model", expand_model, "model JSON file")->required();
  expand_cmd->add_option("--out", expand_out, "write to a file instead of stdout");

  macm::PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "apply a saved model to raw CSV rows");
  predict_cmd->add_option("model", predict_args.model_path, "model JSON file")->required();
  predict_cmd->add_option("--in", predict_args.csv_in, "input CSV (raw feature scale)")->required();
  predict_cmd->add_option("--out", predict_args.csv_out, "output CSV path")->required();

  auto* verify_cmd = app.add_subcommand("verify", "run oracle self-checks");
  verify_cmd->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return macm::cmd_train(resolve_flags(train_flags));
    if (cv_cmd->parsed()) return macm::cmd_cv(resolve_flags(cv_flags));
    if (export_cmd->parsed()) {
      export_args.format =
          export_format == "json" ? macm::ExportFormat::json_format : macm::ExportFormat::csv;
      return macm::cmd_export_shapes(export_args);
    }
    if (expand_cmd->parsed()) {
      if (expand_out.empty()) return macm::cmd_expand(expand_model, std::cout);
      std::ofstream out(expand_out);
      if (!out) throw macm::SchemaError("cannot write " + expand_out);
      return macm::cmd_expand(expand_model, out);
    }
    if (predict_cmd->parsed()) return macm::cmd_predict(predict_args);
    if (verify_cmd->parsed()) return macm::cmd_verify(std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
