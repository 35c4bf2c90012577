#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "macm/dataset.hpp"
#include "macm/model.hpp"
#include "macm/util.hpp"

namespace macm {

// Threshold under which |f_mi(0)| counts as zero and the feature's constant
// is left unextracted.
inline constexpr double kExtractTau = 1e-8;

struct Curve {
  std::vector<double> x;  // normalized axis
  std::vector<double> y;
};

// Bias-extracted shape functions: the model rewritten as
//   C_m * prod_i U_mi(x_i) + C_a + sum_i U_ai(x_i)
// with U_mi(0) = 1 and U_ai(0) = 0. Features whose multiplicative shape
// vanishes at zero are listed in `unextracted`; their raw f_mi is sampled
// instead and C_m excludes them.
struct NormalizedShapes {
  double C_m = 0.0;
  double C_a = 0.0;
  std::vector<Curve> U_m;  // per feature; raw f_mi for unextracted features
  std::vector<Curve> U_a;
  std::set<std::size_t> unextracted;
  std::vector<double> mult_at_zero;  // f_mi(0)
  std::vector<double> add_at_zero;   // f_ai(0)
  bool has_mult = false;
  bool has_add = false;
};

namespace detail {

struct ShapeView {
  // Uniform access to the per-feature shape pair of any supported model.
  const MacmModel* macm = nullptr;
  const CesrModel* cesr = nullptr;
  const AblationModel* ablation = nullptr;

  static ShapeView of(const Model& m) {
    ShapeView v;
    if (const auto* p = std::get_if<MacmModel>(&m)) v.macm = p;
    else if (const auto* p = std::get_if<CesrModel>(&m)) v.cesr = p;
    else if (const auto* p = std::get_if<AblationModel>(&m)) v.ablation = p;
    else throw std::invalid_argument("shape-function export is not defined for ESR models");
    return v;
  }

  std::size_t features() const {
    if (macm) return feature_count(*macm);
    if (cesr) return feature_count(*cesr);
    return feature_count(*ablation);
  }
  bool has_mult() const {
    return macm || cesr || ablation->kind == AblationModel::Kind::multiplicative_only;
  }
  bool has_add() const {
    return macm || (ablation && ablation->kind == AblationModel::Kind::additive_only);
  }
  double scale() const {
    if (macm) return macm->scale;
    if (cesr) return cesr->C;
    return ablation->kind == AblationModel::Kind::multiplicative_only ? ablation->scale : 0.0;
  }
  double mult_eval(std::size_t i, double x) const {
    if (macm) return eval(macm->mult_shapes[i], x);
    if (cesr) return cesr->unit_eval(i, x);
    return eval(ablation->shapes[i], x);
  }
  double add_eval(std::size_t i, double x) const {
    if (macm) return eval(macm->add_shapes[i], x);
    return eval(ablation->shapes[i], x);  // additive_only
  }
};

}  // namespace detail

// Samples the normalized decomposition on the given grid (one grid per
// feature; use the uniform-grid overload unless categorical features need
// their code points).
inline NormalizedShapes normalize_shapes(const Model& model,
                                         std::span<const std::vector<double>> grids) {
  const auto view = detail::ShapeView::of(model);
  const std::size_t k = view.features();
  if (grids.size() != k) throw std::invalid_argument("normalize_shapes: one grid per feature");

  NormalizedShapes out;
  out.has_mult = view.has_mult();
  out.has_add = view.has_add();
  out.U_m.resize(k);
  out.U_a.resize(k);
  out.mult_at_zero.assign(k, 0.0);
  out.add_at_zero.assign(k, 0.0);

  if (out.has_mult) {
    out.C_m = view.scale();
    for (std::size_t i = 0; i < k; ++i) {
      const double f0 = view.mult_eval(i, 0.0);
      out.mult_at_zero[i] = f0;
      if (std::abs(f0) < kExtractTau)
        out.unextracted.insert(i);
      else
        out.C_m *= f0;
    }
    for (std::size_t i = 0; i < k; ++i) {
      Curve& c = out.U_m[i];
      c.x = grids[i];
      c.y.reserve(c.x.size());
      const bool extracted = !out.unextracted.count(i);
      for (double x : c.x) {
        const double f = view.mult_eval(i, x);
        c.y.push_back(extracted ? f / out.mult_at_zero[i] : f);
      }
    }
  }
  if (out.has_add) {
    for (std::size_t i = 0; i < k; ++i) {
      out.add_at_zero[i] = view.add_eval(i, 0.0);
      out.C_a += out.add_at_zero[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
      Curve& c = out.U_a[i];
      c.x = grids[i];
      c.y.reserve(c.x.size());
      for (double x : c.x) c.y.push_back(view.add_eval(i, x) - out.add_at_zero[i]);
    }
  }
  return out;
}

inline NormalizedShapes normalize_shapes(const Model& model, std::span<const double> grid) {
  std::vector<std::vector<double>> grids(feature_count(model),
                                         std::vector<double>(grid.begin(), grid.end()));
  return normalize_shapes(model, grids);
}

// Per-sample dynamic scaling factor for feature i:
//   alpha(x) = C_m * prod_{j != i} U_mj(x_j) = scale * f_mi(0) * prod_{j != i} f_mj(x_j),
// computed from the raw products so other unextracted features cannot break it.
inline std::vector<double> dynamic_alpha_per_sample(const Model& model, const Dataset& data,
                                                    std::size_t feature) {
  const auto view = detail::ShapeView::of(model);
  const std::size_t k = view.features();
  if (feature >= k) throw std::invalid_argument("dynamic_alpha_per_sample: feature index out of range");
  if (!view.has_mult())
    throw std::invalid_argument("dynamic curves are undefined for additive-only models");
  if (!data.normalized) throw std::invalid_argument("dynamic_alpha_per_sample: data must be normalized");
  if (data.n_features != k) throw SchemaError("dynamic_alpha_per_sample: feature count mismatch");
  const double f0 = view.mult_eval(feature, 0.0);
  if (std::abs(f0) < kExtractTau)
    throw std::invalid_argument("dynamic curves need f_mi(0) != 0 for feature " +
                                std::to_string(feature));
  std::vector<double> alphas;
  alphas.reserve(data.n_samples);
  for (std::size_t s = 0; s < data.n_samples; ++s) {
    double prod = view.scale();  // scale (MACM/MP) or C (CESR)
    for (std::size_t j = 0; j < k; ++j) {
      if (j == feature) continue;
      prod *= view.mult_eval(j, data.at(s, j));
    }
    if (view.cesr)
      alphas.push_back(prod);  // CESR units are already normalized
    else
      alphas.push_back(prod * f0);
  }
  return alphas;
}

inline std::pair<double, double> dynamic_alphas(const Model& model, const Dataset& data,
                                                std::size_t feature) {
  const auto alphas = dynamic_alpha_per_sample(model, data, feature);
  const auto [lo, hi] = std::minmax_element(alphas.begin(), alphas.end());
  return {*lo, *hi};
}

// Additive remainder beta = C_a + sum_{j != i} U_aj(x_j); together with the
// exact per-sample alpha this reproduces the model output:
//   alpha * U_mi(x_i) + U_ai(x_i) + beta = forward(x).
inline double dynamic_beta(const Model& model, std::span<const double> x, std::size_t feature) {
  const auto view = detail::ShapeView::of(model);
  if (!view.has_add()) return 0.0;
  double beta = view.add_eval(feature, 0.0);
  for (std::size_t j = 0; j < view.features(); ++j) {
    if (j == feature) continue;
    beta += view.add_eval(j, x[j]);
  }
  return beta;
}

inline constexpr int kDynamicCurveCount = 10;

struct DynamicCurveSet {
  std::size_t feature_index = 0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  std::vector<double> alphas;  // kDynamicCurveCount values, uniform inclusive
  std::vector<Curve> curves;   // alpha_t * U_mi(x) + U_ai(x)
  bool degenerate = false;     // alpha_min == alpha_max (single repeated curve)
};

inline DynamicCurveSet sample_dynamic_curves(const Model& model, std::size_t feature,
                                             std::pair<double, double> bounds,
                                             std::span<const double> grid) {
  const auto view = detail::ShapeView::of(model);
  if (feature >= view.features())
    throw std::invalid_argument("sample_dynamic_curves: feature index out of range");
  const double f0 = view.has_mult() ? view.mult_eval(feature, 0.0) : 0.0;
  if (!view.has_mult() || std::abs(f0) < kExtractTau)
    throw std::invalid_argument("sample_dynamic_curves: feature has no extractable multiplicative part");

  DynamicCurveSet out;
  out.feature_index = feature;
  out.alpha_min = bounds.first;
  out.alpha_max = bounds.second;
  out.degenerate = bounds.first == bounds.second;
  out.alphas = linspace(bounds.first, bounds.second, kDynamicCurveCount);

  const double fa0 = view.has_add() ? view.add_eval(feature, 0.0) : 0.0;
  for (double alpha : out.alphas) {
    Curve c;
    c.x.assign(grid.begin(), grid.end());
    c.y.reserve(grid.size());
    for (double x : grid) {
      const double u_m = view.cesr ? view.mult_eval(feature, x) : view.mult_eval(feature, x) / f0;
      const double u_a = view.has_add() ? view.add_eval(feature, x) - fa0 : 0.0;
      c.y.push_back(alpha * u_m + u_a);
    }
    out.curves.push_back(std::move(c));
  }
  return out;
}

// Relabels the x axis to the original feature scale; y values are unchanged.
inline Curve back_transform(const Curve& curve, const FeatureSpec& spec) {
  if (!spec.has_bounds())
    throw std::invalid_argument("back_transform: feature '" + spec.name + "' has no stored bounds");
  Curve out = curve;
  for (double& x : out.x) x = denormalize_value(x, spec.raw_min, spec.raw_max);
  return out;
}

// Sampling grid for one feature: uniform for numeric features, the encoded
// code points for categorical ones (step curves).
inline std::vector<double> feature_grid(const FeatureSpec& spec, std::size_t grid_points) {
  if (spec.kind == FeatureKind::categorical && spec.has_bounds() && !spec.encoding.empty()) {
    std::set<double> codes;
    for (const auto& [label, code] : spec.encoding)
      codes.insert(std::clamp(normalize_value(code, spec.raw_min, spec.raw_max), -1.0, 1.0));
    return std::vector<double>(codes.begin(), codes.end());
  }
  return linspace(-1.0, 1.0, grid_points);
}

}  // namespace macm
