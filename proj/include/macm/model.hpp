#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "macm/shapes.hpp"
#include "macm/util.hpp"

namespace macm {

enum class Task { regression, binary };

// Full ergodic term set for the given per-feature degrees: the Cartesian
// product {0..n_1} x ... x {0..n_k} with the first feature's exponent varying
// fastest, so the enumeration opens with the constant term and matches the
// product expansion order (1, x1, x2, x1*x2 for degrees (1,1)).
inline std::vector<std::vector<int>> ergodic_terms(std::span<const int> degrees) {
  if (degrees.empty()) throw std::invalid_argument("ergodic_terms: empty degree list");
  std::size_t count = 1;
  for (int d : degrees) {
    if (d < 1) throw std::invalid_argument("ergodic_terms: degrees must be >= 1");
    count *= static_cast<std::size_t>(d) + 1;
    if (count > 10'000'000)
      throw std::invalid_argument("ergodic_terms: term set exceeds 1e7 entries");
  }
  std::vector<std::vector<int>> terms;
  terms.reserve(count);
  std::vector<int> tuple(degrees.size(), 0);
  for (std::size_t t = 0; t < count; ++t) {
    terms.push_back(tuple);
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      if (++tuple[i] <= degrees[i]) break;
      tuple[i] = 0;
    }
  }
  return terms;
}

// scale * prod_i f_mi(x_i) + sum_i f_ai(x_i). The scale is a fixed
// hyperparameter, not trained. For binary tasks the forward value is the
// logit; the sigmoid lives in the loss/metric layer.
struct MacmModel {
  std::vector<ShapeFunction> mult_shapes;
  std::vector<ShapeFunction> add_shapes;
  double scale = 1.0;
  Task task = Task::regression;
};

// C * prod_i U_i(x_i) with U_i(x) = 1 + w_i1 x + ... + w_in x^n. The unit
// constant term is structural, so U_i(0) = 1 always holds.
struct CesrModel {
  double C = 1.0;
  std::vector<std::vector<double>> unit_coeffs;  // per feature: w_1..w_n
  Task task = Task::regression;

  double unit_eval(std::size_t feature, double x) const {
    const auto& w = unit_coeffs[feature];
    double acc = 0.0;
    for (std::size_t j = w.size(); j-- > 0;) acc = (acc + w[j]) * x;
    return 1.0 + acc;
  }
};

// Linear model over the full ergodic term set. Terms are enumerated on the
// fly in canonical order, so instances stay plain values (no cached state to
// race on during concurrent evaluation).
struct EsrModel {
  std::vector<int> degrees;
  std::vector<double> coeffs;  // ergodic enumeration order
  Task task = Task::regression;

  std::size_t term_count() const {
    std::size_t count = 1;
    for (int d : degrees) count *= static_cast<std::size_t>(d) + 1;
    return count;
  }
};

// Single-part models used by the ablation rows.
struct AblationModel {
  enum class Kind { multiplicative_only, additive_only };
  Kind kind = Kind::multiplicative_only;
  std::vector<ShapeFunction> shapes;  // one per feature
  double scale = 1.0;                 // multiplicative_only
  Task task = Task::regression;
};

using Model = std::variant<MacmModel, CesrModel, EsrModel, AblationModel>;

inline std::size_t feature_count(const MacmModel& m) { return m.mult_shapes.size(); }
inline std::size_t feature_count(const CesrModel& m) { return m.unit_coeffs.size(); }
inline std::size_t feature_count(const EsrModel& m) { return m.degrees.size(); }
inline std::size_t feature_count(const AblationModel& m) { return m.shapes.size(); }
inline std::size_t feature_count(const Model& m) {
  return std::visit([](const auto& v) { return feature_count(v); }, m);
}

inline Task task_of(const Model& m) {
  return std::visit([](const auto& v) { return v.task; }, m);
}

namespace detail {

inline void check_arity(std::size_t have, std::size_t want, const char* what) {
  if (have != want)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(want) +
                                " features, got " + std::to_string(have));
}

// Exclusive products prod_{j != i} v_j via prefix/suffix arrays; avoids
// division so zero factors are handled exactly.
inline void exclusive_products(std::span<const double> v, std::vector<double>& out) {
  const std::size_t k = v.size();
  out.assign(k, 1.0);
  double prefix = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = prefix;
    prefix *= v[i];
  }
  double suffix = 1.0;
  for (std::size_t i = k; i-- > 0;) {
    out[i] *= suffix;
    suffix *= v[i];
  }
}

// Per-feature power tables for ESR evaluation.
inline void power_table(std::span<const double> x, std::span<const int> degrees,
                        std::vector<std::vector<double>>& powers) {
  powers.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    powers[i].assign(static_cast<std::size_t>(degrees[i]) + 1, 1.0);
    for (int j = 1; j <= degrees[i]; ++j)
      powers[i][static_cast<std::size_t>(j)] = powers[i][static_cast<std::size_t>(j - 1)] * x[i];
  }
}

}  // namespace detail

inline double macm_forward(const MacmModel& m, std::span<const double> x) {
  detail::check_arity(x.size(), feature_count(m), "macm_forward");
  double prod = 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    prod *= eval(m.mult_shapes[i], x[i]);
    sum += eval(m.add_shapes[i], x[i]);
  }
  return require_finite(m.scale * prod + sum, "macm_forward");
}

inline double cesr_forward(const CesrModel& m, std::span<const double> x) {
  detail::check_arity(x.size(), feature_count(m), "cesr_forward");
  double prod = m.C;
  for (std::size_t i = 0; i < x.size(); ++i) prod *= m.unit_eval(i, x[i]);
  return require_finite(prod, "cesr_forward");
}

inline double esr_forward(const EsrModel& m, std::span<const double> x) {
  detail::check_arity(x.size(), feature_count(m), "esr_forward");
  thread_local std::vector<std::vector<double>> powers;
  thread_local std::vector<int> exps;
  detail::power_table(x, m.degrees, powers);
  exps.assign(x.size(), 0);
  double acc = 0.0;
  for (std::size_t t = 0; t < m.coeffs.size(); ++t) {
    double term = m.coeffs[t];
    for (std::size_t i = 0; i < x.size(); ++i)
      term *= powers[i][static_cast<std::size_t>(exps[i])];
    acc += term;
    for (std::size_t i = 0; i < x.size(); ++i) {  // mixed-radix increment
      if (++exps[i] <= m.degrees[i]) break;
      exps[i] = 0;
    }
  }
  return require_finite(acc, "esr_forward");
}

inline double ablation_forward(const AblationModel& m, std::span<const double> x) {
  detail::check_arity(x.size(), feature_count(m), "ablation_forward");
  if (m.kind == AblationModel::Kind::multiplicative_only) {
    double prod = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) prod *= eval(m.shapes[i], x[i]);
    return require_finite(m.scale * prod, "ablation_forward");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += eval(m.shapes[i], x[i]);
  return require_finite(sum, "ablation_forward");
}

inline double forward(const Model& m, std::span<const double> x) {
  if (const auto* p = std::get_if<MacmModel>(&m)) return macm_forward(*p, x);
  if (const auto* p = std::get_if<CesrModel>(&m)) return cesr_forward(*p, x);
  if (const auto* p = std::get_if<EsrModel>(&m)) return esr_forward(*p, x);
  return ablation_forward(std::get<AblationModel>(m), x);
}

// ---------------------------------------------------------------------------
// Flat parameter vector plumbing. Canonical orderings:
//   MACM:     all multiplicative shapes by feature, then all additive shapes.
//   CESR:     C, then per feature w_1..w_n.
//   ESR:      coefficients in ergodic order.
//   Ablation: shapes by feature.
// The scale factor is never part of the trainable vector.
// ---------------------------------------------------------------------------

inline std::size_t param_count(const MacmModel& m) {
  std::size_t n = 0;
  for (const auto& s : m.mult_shapes) n += param_count(s);
  for (const auto& s : m.add_shapes) n += param_count(s);
  return n;
}
inline std::size_t param_count(const CesrModel& m) {
  std::size_t n = 1;
  for (const auto& w : m.unit_coeffs) n += w.size();
  return n;
}
inline std::size_t param_count(const EsrModel& m) { return m.coeffs.size(); }
inline std::size_t param_count(const AblationModel& m) {
  std::size_t n = 0;
  for (const auto& s : m.shapes) n += param_count(s);
  return n;
}
inline std::size_t param_count(const Model& m) {
  return std::visit([](const auto& v) { return param_count(v); }, m);
}

inline std::vector<double> get_params(const Model& m) {
  std::vector<double> out(param_count(m));
  std::size_t off = 0;
  if (const auto* p = std::get_if<MacmModel>(&m)) {
    for (const auto& s : p->mult_shapes) {
      get_params(s, std::span<double>(out).subspan(off, param_count(s)));
      off += param_count(s);
    }
    for (const auto& s : p->add_shapes) {
      get_params(s, std::span<double>(out).subspan(off, param_count(s)));
      off += param_count(s);
    }
  } else if (const auto* p = std::get_if<CesrModel>(&m)) {
    out[off++] = p->C;
    for (const auto& w : p->unit_coeffs)
      for (double v : w) out[off++] = v;
  } else if (const auto* p = std::get_if<EsrModel>(&m)) {
    for (double v : p->coeffs) out[off++] = v;
  } else {
    const auto& a = std::get<AblationModel>(m);
    for (const auto& s : a.shapes) {
      get_params(s, std::span<double>(out).subspan(off, param_count(s)));
      off += param_count(s);
    }
  }
  return out;
}

inline void set_params(Model& m, std::span<const double> in) {
  if (in.size() != param_count(m)) throw std::invalid_argument("set_params: length mismatch");
  std::size_t off = 0;
  if (auto* p = std::get_if<MacmModel>(&m)) {
    for (auto& s : p->mult_shapes) {
      set_params(s, in.subspan(off, param_count(s)));
      off += param_count(s);
    }
    for (auto& s : p->add_shapes) {
      set_params(s, in.subspan(off, param_count(s)));
      off += param_count(s);
    }
  } else if (auto* p = std::get_if<CesrModel>(&m)) {
    p->C = in[off++];
    for (auto& w : p->unit_coeffs)
      for (double& v : w) v = in[off++];
  } else if (auto* p = std::get_if<EsrModel>(&m)) {
    for (double& v : p->coeffs) v = in[off++];
  } else {
    auto& a = std::get<AblationModel>(m);
    for (auto& s : a.shapes) {
      set_params(s, in.subspan(off, param_count(s)));
      off += param_count(s);
    }
  }
}

// Accumulates upstream * d forward(x) / d theta into grad (flat, canonical
// order). Product terms use exclusive prefix/suffix products, so a zero
// factor zeroes exactly the right gradient entries.
inline void accumulate_param_grad(const Model& m, std::span<const double> x, double upstream,
                                  std::span<double> grad) {
  if (const auto* p = std::get_if<MacmModel>(&m)) {
    detail::check_arity(x.size(), feature_count(*p), "accumulate_param_grad");
    const std::size_t k = x.size();
    thread_local std::vector<double> mult_vals, excl;
    mult_vals.resize(k);
    for (std::size_t i = 0; i < k; ++i) mult_vals[i] = eval(p->mult_shapes[i], x[i]);
    detail::exclusive_products(mult_vals, excl);
    std::size_t off = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t n = param_count(p->mult_shapes[i]);
      grad_params(p->mult_shapes[i], x[i], upstream * p->scale * excl[i], grad.subspan(off, n));
      off += n;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t n = param_count(p->add_shapes[i]);
      grad_params(p->add_shapes[i], x[i], upstream, grad.subspan(off, n));
      off += n;
    }
  } else if (const auto* p = std::get_if<CesrModel>(&m)) {
    detail::check_arity(x.size(), feature_count(*p), "accumulate_param_grad");
    const std::size_t k = x.size();
    thread_local std::vector<double> unit_vals, excl;
    unit_vals.resize(k);
    for (std::size_t i = 0; i < k; ++i) unit_vals[i] = p->unit_eval(i, x[i]);
    detail::exclusive_products(unit_vals, excl);
    double prod_all = 1.0;
    for (double v : unit_vals) prod_all *= v;
    std::size_t off = 0;
    grad[off++] += upstream * prod_all;  // dC
    for (std::size_t i = 0; i < k; ++i) {
      const double factor = upstream * p->C * excl[i];
      double power = x[i];
      for (std::size_t j = 0; j < p->unit_coeffs[i].size(); ++j) {
        grad[off + j] += factor * power;  // d/dw_ij of U_i = x^j (j >= 1)
        power *= x[i];
      }
      off += p->unit_coeffs[i].size();
    }
  } else if (const auto* p = std::get_if<EsrModel>(&m)) {
    detail::check_arity(x.size(), feature_count(*p), "accumulate_param_grad");
    thread_local std::vector<std::vector<double>> powers;
    thread_local std::vector<int> exps;
    detail::power_table(x, p->degrees, powers);
    exps.assign(x.size(), 0);
    for (std::size_t t = 0; t < p->coeffs.size(); ++t) {
      double basis = 1.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        basis *= powers[i][static_cast<std::size_t>(exps[i])];
      grad[t] += upstream * basis;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (++exps[i] <= p->degrees[i]) break;
        exps[i] = 0;
      }
    }
  } else {
    const auto& a = std::get<AblationModel>(m);
    detail::check_arity(x.size(), feature_count(a), "accumulate_param_grad");
    const std::size_t k = x.size();
    std::size_t off = 0;
    if (a.kind == AblationModel::Kind::multiplicative_only) {
      thread_local std::vector<double> vals, excl;
      vals.resize(k);
      for (std::size_t i = 0; i < k; ++i) vals[i] = eval(a.shapes[i], x[i]);
      detail::exclusive_products(vals, excl);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t n = param_count(a.shapes[i]);
        grad_params(a.shapes[i], x[i], upstream * a.scale * excl[i], grad.subspan(off, n));
        off += n;
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t n = param_count(a.shapes[i]);
        grad_params(a.shapes[i], x[i], upstream, grad.subspan(off, n));
        off += n;
      }
    }
  }
}

// Eq-style coefficient mapping: a CESR instance is the ESR whose coefficient
// for exponent tuple e is C * prod_i w_{i, e_i} (with w_{i,0} := 1).
inline EsrModel cesr_to_esr(const CesrModel& m) {
  EsrModel esr;
  esr.task = m.task;
  esr.degrees.reserve(m.unit_coeffs.size());
  for (const auto& w : m.unit_coeffs) esr.degrees.push_back(static_cast<int>(w.size()));
  const auto terms = ergodic_terms(esr.degrees);
  esr.coeffs.reserve(terms.size());
  for (const auto& e : terms) {
    double c = m.C;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > 0) c *= m.unit_coeffs[i][static_cast<std::size_t>(e[i]) - 1];
    esr.coeffs.push_back(c);
  }
  return esr;
}

inline bool all_polynomial(const std::vector<ShapeFunction>& shapes) {
  for (const auto& s : shapes)
    if (!std::holds_alternative<PolynomialShape>(s)) return false;
  return true;
}

}  // namespace macm
