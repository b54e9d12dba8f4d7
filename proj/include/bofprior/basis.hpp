#pragma once

#include <bofprior/dataset.hpp>
#include <bofprior/error.hpp>

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bofprior {

enum class Family {
  sine,
  cosine,
  sinc,
  constant,
  linear,
  quadratic,
  cubic,
  saturating_exp,
  power,
  log,
  step,
  gaussian,
  tanh_event,
  sigmoid_event,
};

enum class Category { seasonality, trend, event };

struct FamilyInfo {
  Family id;
  std::string_view name;
  std::size_t param_count;
  Category category;
};

inline constexpr std::array<FamilyInfo, 14> kFamilies{{
    {Family::sine, "sine", 3, Category::seasonality},
    {Family::cosine, "cosine", 3, Category::seasonality},
    {Family::sinc, "sinc", 3, Category::seasonality},
    {Family::constant, "const", 1, Category::trend},
    {Family::linear, "linear", 1, Category::trend},
    {Family::quadratic, "quadratic", 2, Category::trend},
    {Family::cubic, "cubic", 3, Category::trend},
    {Family::saturating_exp, "saturating_exp", 2, Category::trend},
    {Family::power, "power", 3, Category::trend},
    {Family::log, "log", 2, Category::trend},
    {Family::step, "step", 2, Category::event},
    {Family::gaussian, "gaussian", 3, Category::event},
    {Family::tanh_event, "tanh_event", 3, Category::event},
    {Family::sigmoid_event, "sigmoid_event", 3, Category::event},
}};

inline const FamilyInfo& info(Family f) { return kFamilies[static_cast<std::size_t>(f)]; }
inline std::size_t param_count(Family f) { return info(f).param_count; }
inline std::string_view name(Family f) { return info(f).name; }

inline Family family_from_string(std::string_view s) {
  for (const auto& fi : kFamilies)
    if (fi.name == s) return fi.id;
  throw ArgumentError("unknown basis family '" + std::string(s) + "'");
}

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::seasonality: return "seasonality";
    case Category::trend: return "trend";
    case Category::event: return "event";
  }
  return "";
}

inline constexpr double kTrainingStepSharpness = 50.0;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

/// Inverse of softplus for y > 0.
inline double softplus_inverse(double y) {
  if (!(y > 0.0)) throw ArgumentError("softplus_inverse needs y > 0");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

struct SmoothStep {
  double value;
  double d_center;  // derivative with respect to a2
};

/// sigmoid(sharpness (t - a2)): differentiable stand-in for step(t, a2).
inline SmoothStep smooth_step(double t, double a2, double sharpness) {
  if (!(sharpness > 0.0)) throw ArgumentError("smooth_step needs sharpness > 0");
  const double s = sigmoid(sharpness * (t - a2));
  return {s, -sharpness * s * (1.0 - s)};
}

/// sin(x)/x and its derivative, with the removable singularity patched.
inline void sinc_and_derivative(double x, double& v, double& dv) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    v = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    dv = -x / 3.0 + x * x2 / 30.0;
    return;
  }
  const double s = std::sin(x), c = std::cos(x);
  v = s / x;
  dv = (c * x - s) / (x * x);
}

struct EvalOptions {
  bool smooth_step = false;  // training uses the sigmoid surrogate
  double sharpness = kTrainingStepSharpness;
};

namespace detail {

inline bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline void check_domain(Family f, const double* a, double t) {
  if (f == Family::log && !(t + a[1] > 0.0))
    throw DomainError("log basis needs t + a2 > 0 (t=" + std::to_string(t) + ", a2=" + std::to_string(a[1]) + ")");
  if (f == Family::power) {
    const double x = t + a[1];
    if (!is_integer(a[2]) && x < 0.0) throw DomainError("power basis with non-integer exponent needs t + a2 >= 0");
    if (x == 0.0 && a[2] < 1.0 && a[2] != 0.0) throw DomainError("power basis is singular at t + a2 = 0");
  }
}

} // namespace detail

/// Value of the family at t; writes the parameter gradient to grad
/// (param_count entries) when grad is non-null.
inline double value_and_grad(Family f, const double* a, double t, double* grad, const EvalOptions& opt = {}) {
  switch (f) {
    case Family::sine: {
      const double arg = a[1] * t + a[2];
      const double s = std::sin(arg), c = std::cos(arg);
      if (grad) {
        grad[0] = s;
        grad[1] = a[0] * c * t;
        grad[2] = a[0] * c;
      }
      return a[0] * s;
    }
    case Family::cosine: {
      const double arg = a[1] * t + a[2];
      const double s = std::sin(arg), c = std::cos(arg);
      if (grad) {
        grad[0] = c;
        grad[1] = -a[0] * s * t;
        grad[2] = -a[0] * s;
      }
      return a[0] * c;
    }
    case Family::sinc: {
      double v, dv;
      sinc_and_derivative(a[1] * t + a[2], v, dv);
      if (grad) {
        grad[0] = v;
        grad[1] = a[0] * dv * t;
        grad[2] = a[0] * dv;
      }
      return a[0] * v;
    }
    case Family::constant:
      if (grad) grad[0] = 1.0;
      return a[0];
    case Family::linear:
      if (grad) grad[0] = t;
      return a[0] * t;
    case Family::quadratic:
      if (grad) {
        grad[0] = t * t;
        grad[1] = t;
      }
      return a[0] * t * t + a[1] * t;
    case Family::cubic:
      if (grad) {
        grad[0] = t * t * t;
        grad[1] = t * t;
        grad[2] = t;
      }
      return a[0] * t * t * t + a[1] * t * t + a[2] * t;
    case Family::saturating_exp: {
      const double e = std::exp(t * a[1]);
      if (grad) {
        grad[0] = 1.0 - e;
        grad[1] = -a[0] * t * e;
      }
      return a[0] * (1.0 - e);
    }
    case Family::power: {
      detail::check_domain(f, a, t);
      const double x = t + a[1];
      const double p = std::pow(x, a[2]);
      if (grad) {
        grad[0] = p;
        grad[1] = a[2] == 0.0 ? 0.0 : a[0] * a[2] * std::pow(x, a[2] - 1.0);
        // real part of the complex derivative for negative bases
        grad[2] = x == 0.0 ? 0.0 : a[0] * p * std::log(std::abs(x));
      }
      return a[0] * p;
    }
    case Family::log: {
      detail::check_domain(f, a, t);
      const double x = t + a[1];
      if (grad) {
        grad[0] = std::log(x);
        grad[1] = a[0] / x;
      }
      return a[0] * std::log(x);
    }
    case Family::step: {
      if (opt.smooth_step) {
        const auto s = smooth_step(t, a[1], opt.sharpness);
        if (grad) {
          grad[0] = s.value;
          grad[1] = a[0] * s.d_center;
        }
        return a[0] * s.value;
      }
      const double h = t >= a[1] ? 1.0 : 0.0;
      if (grad) {
        grad[0] = h;
        grad[1] = 0.0;
      }
      return a[0] * h;
    }
    case Family::gaussian: {
      const double d = t - a[2];
      const double e = std::exp(-a[1] * d * d);
      if (grad) {
        grad[0] = e;
        grad[1] = -a[0] * d * d * e;
        grad[2] = 2.0 * a[0] * a[1] * d * e;
      }
      return a[0] * e;
    }
    case Family::tanh_event: {
      const double d = t - a[2];
      const double h = std::tanh(a[1] * d);
      const double sech2 = 1.0 - h * h;
      if (grad) {
        grad[0] = h;
        grad[1] = a[0] * sech2 * d;
        grad[2] = -a[0] * sech2 * a[1];
      }
      return a[0] * h;
    }
    case Family::sigmoid_event: {
      const double d = t - a[2];
      const double s = sigmoid(a[1] * d);
      const double ds = s * (1.0 - s);
      if (grad) {
        grad[0] = s;
        grad[1] = a[0] * ds * d;
        grad[2] = -a[0] * ds * a[1];
      }
      return a[0] * s;
    }
  }
  return 0.0;
}

/// Values over a grid and the parameter jacobian, jacobian[p][i] =
/// d value_i / d a_p.
struct BasisEval {
  std::vector<double> values;
  std::vector<std::vector<double>> jacobian;
};

inline BasisEval eval(Family f, std::span<const double> params, std::span<const double> t,
                      const EvalOptions& opt = {}) {
  const std::size_t P = param_count(f);
  if (params.size() != P)
    throw ArgumentError(std::string(name(f)) + " takes " + std::to_string(P) + " parameters, got " +
                        std::to_string(params.size()));
  for (double v : params)
    if (!std::isfinite(v)) throw DomainError(std::string(name(f)) + " parameters must be finite");
  for (double ti : t) detail::check_domain(f, params.data(), ti);
  BasisEval out;
  out.values.resize(t.size());
  out.jacobian.assign(P, std::vector<double>(t.size()));
  std::array<double, 3> g{};
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.values[i] = value_and_grad(f, params.data(), t[i], g.data(), opt);
    for (std::size_t p = 0; p < P; ++p) out.jacobian[p][i] = g[p];
  }
  return out;
}

inline BasisEval eval(Family f, std::span<const double> params, const TimeGrid& grid, const EvalOptions& opt = {}) {
  return eval(f, params, grid.positions(), opt);
}

} // namespace bofprior
