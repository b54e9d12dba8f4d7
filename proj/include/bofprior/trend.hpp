#pragma once

#include <bofprior/dataset.hpp>
#include <bofprior/error.hpp>
#include <bofprior/parallel.hpp>
#include <bofprior/rng.hpp>
#include <bofprior/spectral.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bofprior {

inline constexpr double kDefaultDelta = 0.1;
inline constexpr double kDefaultAlpha = 0.05;

/// Centered sum of squares of the positions 0..n-1 (or any unit-spaced run).
inline double sxx(std::size_t n) {
  if (n < 2) throw ArgumentError("sxx needs n >= 2");
  const auto d = static_cast<double>(n);
  return d * (d * d - 1.0) / 12.0;
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double sxx = 0.0;
  double residual_std = 0.0;  // divisor n - 2
  std::size_t n = 0;
  double mean_position = 0.0;
};

inline OlsFit ols_fit(std::span<const double> values, std::span<const double> positions) {
  const std::size_t n = values.size();
  if (positions.size() != n) throw ArgumentError("values and positions differ in length");
  if (n < 2) throw ArgumentError("OLS needs at least 2 points");
  double tbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tbar += positions[i];
    ybar += values[i];
  }
  tbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx_v = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = positions[i] - tbar;
    sxx_v += dt * dt;
    sxy += dt * values[i];
  }
  double mag = 0.0;
  for (auto t : positions) mag = std::max(mag, std::abs(t));
  // rounding in tbar leaves tiny nonzero spread for identical positions
  if (!(sxx_v > 1e-24 * mag * mag * static_cast<double>(n)))
    throw SingularDesignError("regression positions are all equal");

  OlsFit f;
  f.n = n;
  f.sxx = sxx_v;
  f.mean_position = tbar;
  f.slope = sxy / sxx_v;
  f.intercept = ybar - f.slope * tbar;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = values[i] - (f.intercept + f.slope * positions[i]);
      rss += e * e;
    }
    f.residual_std = std::sqrt(rss / static_cast<double>(n - 2));
  }
  return f;
}

/// OLS against positions 0..n-1.
inline OlsFit ols_fit(std::span<const double> values) {
  std::vector<double> pos(values.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<double>(i);
  return ols_fit(values, pos);
}

inline double slope_variance(double sigma2, double sxx_v) {
  if (sigma2 < 0.0 || !(sxx_v > 0.0)) throw ArgumentError("slope_variance needs sigma2 >= 0 and sxx > 0");
  return sigma2 / sxx_v;
}

inline double bias_variance(double sigma2, std::size_t n, double tbar, double sxx_v) {
  if (sigma2 < 0.0 || n < 1 || !(sxx_v > 0.0)) throw ArgumentError("bias_variance: invalid arguments");
  return sigma2 * (1.0 / static_cast<double>(n) + tbar * tbar / sxx_v);
}

/// Upper bound on P(|b_hat - b| > delta) for sub-Gaussian noise.
inline double concentration_bound(double delta, double sxx_v, double sigma2) {
  if (!(delta > 0.0) || !(sxx_v > 0.0) || !(sigma2 > 0.0))
    throw ArgumentError("concentration_bound needs delta, sxx, sigma2 > 0");
  return std::min(1.0, 2.0 * std::exp(-delta * delta * sxx_v / (2.0 * sigma2)));
}

/// Smallest equidistant window whose slope error stays within delta with
/// probability 1 - alpha.
inline std::size_t min_window(double sigma, double delta, double alpha) {
  if (!(sigma > 0.0)) throw ArgumentError("min_window needs sigma > 0");
  if (!(delta > 0.0)) throw ArgumentError("min_window needs delta > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("min_window needs alpha in (0, 1)");
  const double n = std::cbrt(24.0 * sigma * sigma * std::log(2.0 / alpha) / (delta * delta));
  if (!std::isfinite(n)) throw ArgumentError("min_window overflow");
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(n)));
}

/// round(j (T-1) / (n-1)) for j = 0..n-1, rounding halves up in exact
/// integer arithmetic.
inline std::vector<std::size_t> select_equidistant_indices(std::size_t T, std::size_t n_opt) {
  if (n_opt < 2) throw ArgumentError("need at least 2 indices");
  if (n_opt > T) throw ArgumentError("window " + std::to_string(n_opt) + " exceeds series length " + std::to_string(T));
  std::vector<std::size_t> idx;
  idx.reserve(n_opt);
  const std::size_t den = n_opt - 1;
  for (std::size_t j = 0; j < n_opt; ++j) {
    const std::size_t i = (2 * j * (T - 1) + den) / (2 * den);
    if (idx.empty() || idx.back() != i) idx.push_back(i);
  }
  return idx;
}

struct TrendReport {
  double sigma_eps = 0.0;
  double delta = kDefaultDelta;
  double alpha = kDefaultAlpha;
  std::size_t n_opt = 2;
  std::vector<std::size_t> indices;
  // Per-series fits on index positions; slope is per sample step.
  std::vector<double> slopes;
  std::vector<double> intercepts;
};

/// Deseasonalizes every series with the report's per-series parameters,
/// fits a line to each full residual and sizes the trend window from the
/// mean residual std.
inline TrendReport trend_report(const TimeSeriesDataset& ds, const SpectralReport& spectral,
                                double delta = kDefaultDelta, double alpha = kDefaultAlpha) {
  if (ds.empty()) throw ArgumentError("empty dataset");
  if (!(delta > 0.0)) throw ArgumentError("delta must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  const bool seasonal = !spectral.modes.empty();
  if (seasonal && spectral.per_series_params.size() != ds.n_series())
    throw ArgumentError("spectral report does not match the dataset");

  const std::size_t T = ds.n_samples();
  std::vector<double> pos(T);
  for (std::size_t i = 0; i < T; ++i) pos[i] = static_cast<double>(i);

  TrendReport r;
  r.delta = delta;
  r.alpha = alpha;
  r.slopes.resize(ds.n_series());
  r.intercepts.resize(ds.n_series());
  std::vector<double> stds(ds.n_series());
  for (std::size_t i = 0; i < ds.n_series(); ++i) {
    const auto& y = ds[i].values;
    const auto resid = seasonal ? deseasonalize(std::span<const double>(y), spectral.per_series_params[i]) : y;
    const auto fit = ols_fit(resid, pos);
    r.slopes[i] = fit.slope;
    r.intercepts[i] = fit.intercept;
    stds[i] = fit.residual_std;
  }
  r.sigma_eps = pairwise_sum(0, stds.size(), [&](std::size_t i) { return stds[i]; }) /
                static_cast<double>(stds.size());

  double scale = 0.0;
  for (std::size_t i = 0; i < ds.n_series(); ++i)
    for (double v : ds[i].values) scale = std::max(scale, std::abs(v));
  if (r.sigma_eps <= 1e-12 * std::max(1.0, scale))
    r.n_opt = 2;
  else
    r.n_opt = std::clamp<std::size_t>(min_window(r.sigma_eps, delta, alpha), 2, T);
  r.indices = select_equidistant_indices(T, r.n_opt);
  return r;
}

inline nlohmann::json to_json(const TrendReport& r) {
  return {{"sigma_eps", r.sigma_eps}, {"delta", r.delta}, {"alpha", r.alpha},
          {"n_opt", r.n_opt},         {"indices", r.indices}};
}

/// One cell of the Monte Carlo check of the concentration bound.
struct BoundCell {
  std::size_t n = 0;
  double sigma = 0.0;
  double delta = 0.0;
  std::size_t trials = 0;
  double exceedance = 0.0;     // empirical P(|b_hat - b| > delta)
  double bound = 0.0;
  double slack = 0.0;          // 3 binomial standard errors
  double variance_ratio = 0.0; // empirical Var(b_hat) / (sigma^2 / Sxx)
  bool bound_ok = false;
  bool variance_ok = false;

  bool passed() const { return bound_ok && variance_ok; }
};

struct BoundMatrix {
  std::vector<std::size_t> n{5, 11, 21, 50};
  std::vector<double> sigma{0.5, 1.0};
  std::vector<double> delta{0.1, 0.2};
};

inline constexpr double kVarianceTolerance = 0.03;

/// Simulates y_i = a + b i + eps_i with Gaussian eps at every (n, sigma,
/// delta) cell. Cell c draws from rng.split("mc", c), so results do not
/// depend on `jobs`.
inline std::vector<BoundCell> verify_concentration(const BoundMatrix& m, std::size_t trials, std::uint64_t seed,
                                                   std::size_t jobs = 1) {
  if (trials < 2) throw ArgumentError("Monte Carlo needs at least 2 trials");
  struct Spec {
    std::size_t n;
    double sigma, delta;
  };
  std::vector<Spec> specs;
  for (auto n : m.n)
    for (auto s : m.sigma)
      for (auto d : m.delta) {
        if (n < 3) throw ArgumentError("Monte Carlo cells need n >= 3");
        if (!(s > 0.0) || !(d > 0.0)) throw ArgumentError("Monte Carlo cells need sigma, delta > 0");
        specs.push_back({n, s, d});
      }
  std::vector<BoundCell> cells(specs.size());
  const Rng root(seed);
  parallel_for(specs.size(), jobs, [&](std::size_t c) {
    const auto [n, sigma, delta] = specs[c];
    Rng rng = root.split("mc", c);
    constexpr double a = 0.5, b = 0.25;
    std::vector<double> pos(n), y(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<double>(i);
    std::size_t exceed = 0;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      for (std::size_t i = 0; i < n; ++i) y[i] = a + b * pos[i] + rng.normal(0.0, sigma);
      const double err = ols_fit(y, pos).slope - b;
      if (std::abs(err) > delta) ++exceed;
      const double d1 = err - mean;
      mean += d1 / static_cast<double>(k + 1);
      m2 += d1 * (err - mean);
    }
    BoundCell& cell = cells[c];
    cell.n = n;
    cell.sigma = sigma;
    cell.delta = delta;
    cell.trials = trials;
    const double s = sxx(n);
    cell.bound = concentration_bound(delta, s, sigma * sigma);
    cell.exceedance = static_cast<double>(exceed) / static_cast<double>(trials);
    const double p = std::min(cell.bound, 1.0);
    cell.slack = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    cell.bound_ok = cell.exceedance <= cell.bound + cell.slack;
    cell.variance_ratio = (m2 / static_cast<double>(trials - 1)) / slope_variance(sigma * sigma, s);
    cell.variance_ok = std::abs(cell.variance_ratio - 1.0) <= kVarianceTolerance;
  });
  return cells;
}

} // namespace bofprior
