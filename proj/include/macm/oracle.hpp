#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "macm/model.hpp"
#include "macm/shapes.hpp"
#include "macm/util.hpp"

// Independent reference implementations used by tests and the acceptance
// suite. Deliberately naive (sparse exponent maps, O(n^2) pair counting,
// dense normal equations) so they share no code path with the library
// routines they check.

namespace macm::oracle {

// Sparse multivariate polynomial keyed by exponent tuple. std::map keeps the
// terms in lexicographic order, which the expand command relies on.
struct SymbolicPoly {
  std::size_t arity = 0;
  std::map<std::vector<int>, double> terms;

  static SymbolicPoly constant(std::size_t arity, double c) {
    SymbolicPoly p;
    p.arity = arity;
    if (c != 0.0) p.terms[std::vector<int>(arity, 0)] = c;
    return p;
  }

  void add_term(std::vector<int> exponents, double coeff) {
    auto it = terms.find(exponents);
    if (it == terms.end()) {
      if (coeff != 0.0) terms.emplace(std::move(exponents), coeff);
      return;
    }
    it->second += coeff;
    if (it->second == 0.0) terms.erase(it);
  }

  SymbolicPoly operator+(const SymbolicPoly& other) const {
    SymbolicPoly out = *this;
    for (const auto& [e, c] : other.terms) out.add_term(e, c);
    return out;
  }

  SymbolicPoly operator*(const SymbolicPoly& other) const {
    SymbolicPoly out;
    out.arity = arity;
    for (const auto& [ea, ca] : terms)
      for (const auto& [eb, cb] : other.terms) {
        std::vector<int> e(arity);
        for (std::size_t i = 0; i < arity; ++i) e[i] = ea[i] + eb[i];
        out.add_term(std::move(e), ca * cb);
      }
    return out;
  }

  SymbolicPoly scaled(double s) const {
    SymbolicPoly out;
    out.arity = arity;
    if (s == 0.0) return out;
    for (const auto& [e, c] : terms) out.terms[e] = c * s;
    return out;
  }

  double eval(std::span<const double> x) const {
    double acc = 0.0;
    for (const auto& [e, c] : terms) {
      double term = c;
      for (std::size_t i = 0; i < arity; ++i)
        for (int j = 0; j < e[i]; ++j) term *= x[i];
      acc += term;
    }
    return acc;
  }
};

// Lifts a univariate polynomial in variable `var` into arity-k term space.
inline SymbolicPoly lift_univariate(const PolynomialShape& shape, std::size_t arity, std::size_t var) {
  SymbolicPoly p;
  p.arity = arity;
  for (std::size_t j = 0; j < shape.coeffs.size(); ++j) {
    if (shape.coeffs[j] == 0.0) continue;
    std::vector<int> e(arity, 0);
    e[var] = static_cast<int>(j);
    p.terms[std::move(e)] = shape.coeffs[j];
  }
  return p;
}

// Distributes prod_i shapes[i](x_i) into the full term expansion.
inline SymbolicPoly expand_product(std::span<const PolynomialShape> shapes) {
  const std::size_t k = shapes.size();
  SymbolicPoly acc = SymbolicPoly::constant(k, 1.0);
  for (std::size_t i = 0; i < k; ++i) acc = acc * lift_univariate(shapes[i], k, i);
  return acc;
}

inline PolynomialShape as_polynomial(const ShapeFunction& s, const char* what) {
  if (const auto* p = std::get_if<PolynomialShape>(&s)) return *p;
  throw std::invalid_argument(std::string(what) + ": shape is not polynomial");
}

inline SymbolicPoly expand_macm(const MacmModel& m) {
  const std::size_t k = feature_count(m);
  std::vector<PolynomialShape> mult;
  mult.reserve(k);
  for (const auto& s : m.mult_shapes) mult.push_back(as_polynomial(s, "expand_macm"));
  SymbolicPoly out = expand_product(mult).scaled(m.scale);
  for (std::size_t i = 0; i < k; ++i)
    out = out + lift_univariate(as_polynomial(m.add_shapes[i], "expand_macm"), k, i);
  return out;
}

inline SymbolicPoly expand_cesr(const CesrModel& m) {
  const std::size_t k = feature_count(m);
  std::vector<PolynomialShape> units;
  units.reserve(k);
  for (const auto& w : m.unit_coeffs) {
    PolynomialShape u;
    u.coeffs.assign(w.size() + 1, 0.0);
    u.coeffs[0] = 1.0;
    for (std::size_t j = 0; j < w.size(); ++j) u.coeffs[j + 1] = w[j];
    units.push_back(std::move(u));
  }
  return expand_product(units).scaled(m.C);
}

inline SymbolicPoly expand_ablation(const AblationModel& m) {
  const std::size_t k = feature_count(m);
  std::vector<PolynomialShape> polys;
  polys.reserve(k);
  for (const auto& s : m.shapes) polys.push_back(as_polynomial(s, "expand_ablation"));
  if (m.kind == AblationModel::Kind::multiplicative_only)
    return expand_product(polys).scaled(m.scale);
  SymbolicPoly out = SymbolicPoly::constant(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) out = out + lift_univariate(polys[i], k, i);
  return out;
}

// Ridge least squares via dense normal equations and a Cholesky solve.
// design is row-major n x m. Throws on a singular system.
inline std::vector<double> ols_fit(const std::vector<double>& design, std::size_t n, std::size_t m,
                                   std::span<const double> y, double ridge = 0.0) {
  if (y.size() != n) throw std::invalid_argument("ols_fit: target length mismatch");
  if (n < m && ridge <= 0.0)
    throw std::invalid_argument("ols_fit: underdetermined system needs ridge > 0");
  std::vector<double> gram(m * m, 0.0);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = design.data() + r * m;
    for (std::size_t i = 0; i < m; ++i) {
      rhs[i] += row[i] * y[r];
      for (std::size_t j = i; j < m; ++j) gram[i * m + j] += row[i] * row[j];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    gram[i * m + i] += ridge;
    for (std::size_t j = 0; j < i; ++j) gram[i * m + j] = gram[j * m + i];
  }

  // Cholesky: gram = L L^T
  std::vector<double> chol(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = gram[i * m + j];
      for (std::size_t t = 0; t < j; ++t) s -= chol[i * m + t] * chol[j * m + t];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("ols_fit: singular normal equations (add ridge)");
        chol[i * m + i] = std::sqrt(s);
      } else {
        chol[i * m + j] = s / chol[j * m + j];
      }
    }
  }
  std::vector<double> w(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {  // forward: L z = rhs
    double s = rhs[i];
    for (std::size_t t = 0; t < i; ++t) s -= chol[i * m + t] * w[t];
    w[i] = s / chol[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {  // back: L^T w = z
    double s = w[i];
    for (std::size_t t = i + 1; t < m; ++t) s -= chol[t * m + i] * w[t];
    w[i] = s / chol[i * m + i];
  }
  return w;
}

inline std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& fn,
                                            std::span<const double> params, double step) {
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + step;
    const double up = fn(theta);
    theta[i] = saved - step;
    const double down = fn(theta);
    theta[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericOverflow("finite_diff_grad: non-finite evaluation");
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

// (#concordant + 1/2 #tied) / (#pos * #neg) over every positive-negative pair.
inline double auc_bruteforce(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc_bruteforce: length mismatch");
  double num = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0.5 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc_bruteforce: both classes must be present");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] <= 0.5) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0.5) continue;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  return num / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace macm::oracle
