#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macm/interpret.hpp"
#include "macm/serialize.hpp"

// Curve-file emission for the interpretability artifacts. Per feature and
// part (mult / add / dynamic) one file is written; fold curves share the
// x grid, and a cross-fold mean column is appended. Plain CSV/JSON so any
// plotting stack can consume them.

namespace macm {

enum class ExportFormat { csv, json_format };

struct FeatureCurves {
  std::string name;
  std::vector<double> grid;           // normalized axis
  std::vector<double> grid_original;  // back-transformed axis
  // [fold][grid]
  std::vector<std::vector<double>> mult_folds;
  std::vector<std::vector<double>> add_folds;
  // [fold][alpha][grid]
  std::vector<std::vector<std::vector<double>>> dynamic_folds;
  std::vector<std::pair<double, double>> alpha_range_per_fold;
  bool has_mult = false;
  bool has_add = false;
  bool has_dynamic = false;
};

struct CurveExport {
  double scale = 0.0;
  std::vector<FeatureCurves> features;
  std::vector<double> C_m_per_fold;
  std::vector<double> C_a_per_fold;
  std::vector<std::vector<std::size_t>> unextracted_per_fold;
  std::vector<std::string> warnings;
};

// Samples normalized shapes and dynamic curves for each fold model on a
// shared per-feature grid. `data` supplies the alpha population and must be
// normalized with the models' stored bounds.
inline CurveExport build_curve_export(const std::vector<Model>& fold_models,
                                      const std::vector<FeatureSpec>& specs, const Dataset& data,
                                      std::size_t grid_points) {
  if (fold_models.empty()) throw std::invalid_argument("build_curve_export: no models");
  const std::size_t k = feature_count(fold_models.front());
  if (specs.size() != k) throw SchemaError("build_curve_export: spec/model feature mismatch");
  for (const auto& m : fold_models)
    if (feature_count(m) != k) throw SchemaError("build_curve_export: fold models disagree on features");

  std::vector<std::vector<double>> grids(k);
  for (std::size_t i = 0; i < k; ++i) grids[i] = feature_grid(specs[i], grid_points);

  CurveExport out;
  out.features.resize(k);
  const auto first_view = detail::ShapeView::of(fold_models.front());
  out.scale = first_view.scale();

  std::vector<NormalizedShapes> norms;
  norms.reserve(fold_models.size());
  for (const auto& m : fold_models) norms.push_back(normalize_shapes(m, grids));

  for (std::size_t f = 0; f < fold_models.size(); ++f) {
    out.C_m_per_fold.push_back(norms[f].C_m);
    out.C_a_per_fold.push_back(norms[f].C_a);
    out.unextracted_per_fold.emplace_back(norms[f].unextracted.begin(), norms[f].unextracted.end());
    for (std::size_t i : norms[f].unextracted)
      out.warnings.push_back("fold " + std::to_string(f) + ": feature '" + specs[i].name +
                             "' multiplicative constant left unextracted (f_m(0) ~ 0)");
  }

  for (std::size_t i = 0; i < k; ++i) {
    FeatureCurves& fc = out.features[i];
    fc.name = specs[i].name;
    fc.grid = grids[i];
    fc.grid_original.reserve(grids[i].size());
    for (double x : grids[i])
      fc.grid_original.push_back(
          specs[i].has_bounds() ? denormalize_value(x, specs[i].raw_min, specs[i].raw_max) : x);
    fc.has_mult = norms.front().has_mult;
    fc.has_add = norms.front().has_add;

    bool dynamic_ok = fc.has_mult;
    for (const auto& n : norms)
      if (n.unextracted.count(i)) dynamic_ok = false;
    fc.has_dynamic = dynamic_ok;

    for (std::size_t f = 0; f < fold_models.size(); ++f) {
      if (fc.has_mult) fc.mult_folds.push_back(norms[f].U_m[i].y);
      if (fc.has_add) fc.add_folds.push_back(norms[f].U_a[i].y);
      if (fc.has_dynamic) {
        const auto bounds = dynamic_alphas(fold_models[f], data, i);
        fc.alpha_range_per_fold.push_back(bounds);
        const auto set = sample_dynamic_curves(fold_models[f], i, bounds, grids[i]);
        std::vector<std::vector<double>> curves;
        curves.reserve(set.curves.size());
        for (const auto& c : set.curves) curves.push_back(c.y);
        fc.dynamic_folds.push_back(std::move(curves));
      }
    }
    if (fc.has_mult && !dynamic_ok)
      out.warnings.push_back("feature '" + specs[i].name +
                             "' skipped for dynamic curves (unextracted in at least one fold)");
  }
  return out;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<double> column_mean(const std::vector<std::vector<double>>& folds) {
  std::vector<double> mean(folds.front().size(), 0.0);
  for (const auto& f : folds)
    for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i];
  for (double& m : mean) m /= static_cast<double>(folds.size());
  return mean;
}

inline void write_part_csv(const std::string& path, const FeatureCurves& fc,
                           const std::vector<std::vector<double>>& folds) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << "x_normalized,x_original";
  for (std::size_t f = 0; f < folds.size(); ++f) out << ",fold_" << f + 1;
  out << ",mean\n";
  const auto mean = column_mean(folds);
  for (std::size_t r = 0; r < fc.grid.size(); ++r) {
    out << fmt_double(fc.grid[r]) << "," << fmt_double(fc.grid_original[r]);
    for (const auto& f : folds) out << "," << fmt_double(f[r]);
    out << "," << fmt_double(mean[r]) << "\n";
  }
}

inline void write_dynamic_csv(const std::string& path, const FeatureCurves& fc) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  const std::size_t F = fc.dynamic_folds.size();
  const std::size_t A = fc.dynamic_folds.front().size();
  out << "x_normalized,x_original";
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t a = 0; a < A; ++a) out << ",fold_" << f + 1 << "_alpha_" << a + 1;
  for (std::size_t a = 0; a < A; ++a) out << ",mean_alpha_" << a + 1;
  out << "\n";
  for (std::size_t r = 0; r < fc.grid.size(); ++r) {
    out << fmt_double(fc.grid[r]) << "," << fmt_double(fc.grid_original[r]);
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t a = 0; a < A; ++a) out << "," << fmt_double(fc.dynamic_folds[f][a][r]);
    for (std::size_t a = 0; a < A; ++a) {
      double m = 0.0;
      for (std::size_t f = 0; f < F; ++f) m += fc.dynamic_folds[f][a][r];
      out << "," << fmt_double(m / static_cast<double>(F));
    }
    out << "\n";
  }
}

inline json curves_to_json(const FeatureCurves& fc) {
  json j;
  j["feature"] = fc.name;
  j["x_normalized"] = fc.grid;
  j["x_original"] = fc.grid_original;
  if (fc.has_mult) {
    j["mult"] = {{"folds", fc.mult_folds}, {"mean", column_mean(fc.mult_folds)}};
  }
  if (fc.has_add) {
    j["add"] = {{"folds", fc.add_folds}, {"mean", column_mean(fc.add_folds)}};
  }
  if (fc.has_dynamic) {
    j["dynamic"] = {{"folds", fc.dynamic_folds}};
    json ranges = json::array();
    for (const auto& [lo, hi] : fc.alpha_range_per_fold) ranges.push_back({lo, hi});
    j["alpha_ranges"] = ranges;
  }
  return j;
}

}  // namespace detail

inline json export_summary_json(const CurveExport& exp) {
  json summary;
  summary["scale"] = exp.scale;
  const std::size_t F = exp.C_m_per_fold.size();
  const auto fold_entry = [&](std::size_t f) {
    json e;
    e["C_m"] = exp.C_m_per_fold[f];
    e["C_a"] = exp.C_a_per_fold[f];
    e["unextracted"] = exp.unextracted_per_fold[f];
    json ranges = json::object();
    for (const auto& fc : exp.features)
      if (fc.has_dynamic)
        ranges[fc.name] = {fc.alpha_range_per_fold[f].first, fc.alpha_range_per_fold[f].second};
    e["alpha_ranges"] = ranges;
    return e;
  };
  if (F == 1) {
    const json e = fold_entry(0);
    summary["C_m"] = e["C_m"];
    summary["C_a"] = e["C_a"];
    summary["unextracted"] = e["unextracted"];
    summary["alpha_ranges"] = e["alpha_ranges"];
  } else {
    json folds = json::array();
    for (std::size_t f = 0; f < F; ++f) folds.push_back(fold_entry(f));
    summary["folds"] = folds;
    summary["C_m_mean"] = mean_of(exp.C_m_per_fold);
    summary["C_a_mean"] = mean_of(exp.C_a_per_fold);
  }
  summary["warnings"] = exp.warnings;
  return summary;
}

inline void export_curves(const CurveExport& exp, const std::string& dir, ExportFormat format) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& fc : exp.features) {
    const std::string base = dir + "/" + fc.name;
    if (format == ExportFormat::csv) {
      if (fc.has_mult) detail::write_part_csv(base + "_mult.csv", fc, fc.mult_folds);
      if (fc.has_add) detail::write_part_csv(base + "_add.csv", fc, fc.add_folds);
      if (fc.has_dynamic) detail::write_dynamic_csv(base + "_dynamic.csv", fc);
    } else {
      std::ofstream out(base + "_curves.json");
      if (!out) throw SchemaError("cannot write " + base + "_curves.json");
      out << detail::curves_to_json(fc).dump(2) << "\n";
    }
  }
  std::ofstream out(dir + "/summary.json");
  if (!out) throw SchemaError("cannot write " + dir + "/summary.json");
  out << export_summary_json(exp).dump(2) << "\n";
}

}  // namespace macm
