#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "macm/util.hpp"

namespace macm {

// Univariate polynomial f(x) = sum_j coeffs[j] * x^j, evaluated by Horner.
// Canonical parameter order: coefficients ascending by power.
struct PolynomialShape {
  std::vector<double> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  std::size_t param_count() const { return coeffs.size(); }

  double eval(double x) const {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * x + coeffs[j];
    return require_finite(acc, "PolynomialShape::eval");
  }

  // Accumulates upstream * d f(x) / d coeffs[j] = upstream * x^j into out.
  void grad_params(double x, double upstream, std::span<double> out) const {
    double p = 1.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      out[j] += upstream * p;
      p *= x;
    }
  }

  void get_params(std::span<double> out) const {
    for (std::size_t j = 0; j < coeffs.size(); ++j) out[j] = coeffs[j];
  }
  void set_params(std::span<const double> in) {
    for (std::size_t j = 0; j < coeffs.size(); ++j) coeffs[j] = in[j];
  }
};

// Scalar-in scalar-out fully connected network, ReLU on hidden layers,
// identity output. Canonical parameter order: per transition, weights
// (row-major, fan_out x fan_in) then biases, transitions input to output.
struct MlpShape {
  std::vector<int> widths;                    // {1, h_1, ..., h_L, 1}
  std::vector<std::vector<double>> weights;   // one matrix per transition
  std::vector<std::vector<double>> biases;

  std::size_t transition_count() const { return weights.size(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  double eval(double x) const {
    thread_local std::vector<double> act, next;
    act.assign(1, x);
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const int fan_in = widths[l];
      const int fan_out = widths[l + 1];
      next.assign(static_cast<std::size_t>(fan_out), 0.0);
      const bool hidden = l + 1 < weights.size();  // last transition feeds the identity output
      for (int o = 0; o < fan_out; ++o) {
        double s = biases[l][static_cast<std::size_t>(o)];
        const double* w = weights[l].data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(fan_in);
        for (int i = 0; i < fan_in; ++i) s += w[i] * act[static_cast<std::size_t>(i)];
        next[static_cast<std::size_t>(o)] = hidden ? (s > 0.0 ? s : 0.0) : s;
      }
      act.swap(next);
    }
    return require_finite(act[0], "MlpShape::eval");
  }

  // Reverse accumulation of upstream * d f(x) / d theta into out (flat,
  // canonical order). Recomputes the forward pass internally.
  void grad_params(double x, double upstream, std::span<double> out) const {
    thread_local std::vector<std::vector<double>> acts;   // post-activation per layer
    thread_local std::vector<std::vector<double>> pre;    // pre-activation per transition
    const std::size_t L = weights.size();
    acts.resize(L + 1);
    pre.resize(L);
    acts[0].assign(1, x);
    for (std::size_t l = 0; l < L; ++l) {
      const int fan_in = widths[l];
      const int fan_out = widths[l + 1];
      pre[l].assign(static_cast<std::size_t>(fan_out), 0.0);
      acts[l + 1].assign(static_cast<std::size_t>(fan_out), 0.0);
      const bool hidden = l + 1 < L;  // last transition feeds the identity output
      for (int o = 0; o < fan_out; ++o) {
        double s = biases[l][static_cast<std::size_t>(o)];
        const double* w = weights[l].data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(fan_in);
        for (int i = 0; i < fan_in; ++i) s += w[i] * acts[l][static_cast<std::size_t>(i)];
        pre[l][static_cast<std::size_t>(o)] = s;
        acts[l + 1][static_cast<std::size_t>(o)] = hidden ? (s > 0.0 ? s : 0.0) : s;
      }
    }

    thread_local std::vector<double> delta, delta_prev;
    delta.assign(1, upstream);
    std::size_t offset = out.size();
    for (std::size_t l = L; l-- > 0;) {
      const int fan_in = widths[l];
      const int fan_out = widths[l + 1];
      offset -= weights[l].size() + biases[l].size();
      double* grad_w = out.data() + offset;
      double* grad_b = grad_w + weights[l].size();
      delta_prev.assign(static_cast<std::size_t>(fan_in), 0.0);
      for (int o = 0; o < fan_out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        grad_b[o] += d;
        const double* w = weights[l].data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(fan_in);
        double* gw = grad_w + static_cast<std::size_t>(o) * static_cast<std::size_t>(fan_in);
        for (int i = 0; i < fan_in; ++i) {
          gw[i] += d * acts[l][static_cast<std::size_t>(i)];
          delta_prev[static_cast<std::size_t>(i)] += d * w[i];
        }
      }
      if (l > 0) {  // apply ReLU mask of the layer below
        for (int i = 0; i < fan_in; ++i)
          if (pre[l - 1][static_cast<std::size_t>(i)] <= 0.0) delta_prev[static_cast<std::size_t>(i)] = 0.0;
      }
      delta.swap(delta_prev);
    }
  }

  void get_params(std::span<double> out) const {
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (double w : weights[l]) out[k++] = w;
      for (double b : biases[l]) out[k++] = b;
    }
  }
  void set_params(std::span<const double> in) {
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (double& w : weights[l]) w = in[k++];
      for (double& b : biases[l]) b = in[k++];
    }
  }
};

using ShapeFunction = std::variant<PolynomialShape, MlpShape>;

inline double eval(const ShapeFunction& shape, double x) {
  return std::visit([x](const auto& s) { return s.eval(x); }, shape);
}

inline std::vector<double> eval_batch(const ShapeFunction& shape, std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(eval(shape, x));
  return out;
}

inline std::size_t param_count(const ShapeFunction& shape) {
  return std::visit([](const auto& s) { return s.param_count(); }, shape);
}

inline void grad_params(const ShapeFunction& shape, double x, double upstream, std::span<double> out) {
  std::visit([&](const auto& s) { s.grad_params(x, upstream, out); }, shape);
}

inline std::vector<double> grad_params(const ShapeFunction& shape, double x, double upstream) {
  std::vector<double> out(param_count(shape), 0.0);
  grad_params(shape, x, upstream, out);
  return out;
}

inline void get_params(const ShapeFunction& shape, std::span<double> out) {
  std::visit([&](const auto& s) { s.get_params(out); }, shape);
}

inline void set_params(ShapeFunction& shape, std::span<const double> in) {
  std::visit([&](auto& s) { s.set_params(in); }, shape);
}

enum class PolyInit {
  multiplicative,  // coeffs (1, eps, ...): initial product stays near 1
  additive         // all-eps start
};

// eps drawn uniform in [-0.01, 0.01]; deterministic for a given seed.
inline PolynomialShape init_polynomial(int degree, std::uint64_t seed, PolyInit mode) {
  if (degree < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  Rng rng(seed);
  PolynomialShape shape;
  shape.coeffs.resize(static_cast<std::size_t>(degree) + 1);
  for (auto& c : shape.coeffs) c = rng.uniform(-0.01, 0.01);
  if (mode == PolyInit::multiplicative) shape.coeffs[0] = 1.0;
  return shape;
}

// Uniform fan-in scaling (+-sqrt(1/fan_in)) for weights, zero biases.
inline MlpShape init_mlp(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("MLP needs at least input and output layers");
  if (widths.front() != 1 || widths.back() != 1)
    throw std::invalid_argument("shape functions are scalar to scalar; widths must start and end at 1");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("zero-width layer");
  Rng rng(seed);
  MlpShape shape;
  shape.widths = widths;
  shape.weights.resize(widths.size() - 1);
  shape.biases.resize(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    shape.weights[l].resize(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
    shape.biases[l].assign(static_cast<std::size_t>(fan_out), 0.0);
    for (auto& w : shape.weights[l]) w = rng.uniform(-bound, bound);
  }
  return shape;
}

// Hidden layout used by the NN presets: `hidden_layers` layers of
// `hidden_width` neurons between the scalar endpoints.
inline std::vector<int> mlp_widths(int hidden_layers, int hidden_width) {
  if (hidden_layers < 1 || hidden_width < 1)
    throw std::invalid_argument("hidden_layers and hidden_width must be >= 1");
  std::vector<int> widths;
  widths.push_back(1);
  for (int i = 0; i < hidden_layers; ++i) widths.push_back(hidden_width);
  widths.push_back(1);
  return widths;
}

}  // namespace macm
