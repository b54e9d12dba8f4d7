#pragma once

#include <bofprior/dataset.hpp>
#include <bofprior/error.hpp>
#include <bofprior/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace bofprior {

/// Pairwise (cascade) summation of f(lo..hi-1); result does not depend on
/// how a caller splits work, only on the count.
template <typename F>
double pairwise_sum(std::size_t lo, std::size_t hi, const F& f) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

/// Spectrum of a length-n sequence.
///
/// `power` and `coeffs` span all n bins (two-sided) so energy sums are
/// available; `freqs` lists only the one-sided bins 0..floor(n/2), in cycles
/// per n-sample window.
struct Periodogram {
  std::size_t n = 0;
  std::vector<double> freqs;
  std::vector<double> power;                 // I(k) = |Y_k|^2 / n
  std::vector<std::complex<double>> coeffs;  // C_k = Y_k / n

  std::size_t half() const { return n / 2; }
};

/// Exact DFT with a precomputed twiddle table; any length, no padding.
/// Uses Y_k = sum_{t=0}^{n-1} y_t exp(-2 pi i k t / n), so arg(C_k) is the
/// cosine phase at the first sample.
class DftPlan {
public:
  explicit DftPlan(std::size_t n) : n_(n), tw_(n) {
    if (n < 2) throw ArgumentError("DFT needs at least 2 samples");
    for (std::size_t m = 0; m < n; ++m) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
      tw_[m] = {std::cos(a), std::sin(a)};
    }
  }

  std::size_t size() const { return n_; }

  std::vector<std::complex<double>> transform(std::span<const double> y) const {
    if (y.size() != n_) throw ArgumentError("DFT length mismatch");
    std::vector<std::complex<double>> out(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      double re = 0.0, im = 0.0;
      std::size_t m = 0;
      for (std::size_t t = 0; t < n_; ++t) {
        re += y[t] * tw_[m].real();
        im += y[t] * tw_[m].imag();
        m += k;
        if (m >= n_) m -= n_;
      }
      out[k] = {re, im};
    }
    return out;
  }

  Periodogram periodogram(std::span<const double> y) const {
    Periodogram p;
    p.n = n_;
    const auto Y = transform(y);
    const auto n = static_cast<double>(n_);
    p.power.resize(n_);
    p.coeffs.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      p.power[k] = std::norm(Y[k]) / n;
      p.coeffs[k] = Y[k] / n;
    }
    p.freqs.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k <= n_ / 2; ++k) p.freqs[k] = static_cast<double>(k);
    return p;
  }

private:
  std::size_t n_;
  std::vector<std::complex<double>> tw_;
};

inline Periodogram dft(std::span<const double> values) { return DftPlan(values.size()).periodogram(values); }
inline Periodogram dft(const TimeSeries& s) { return dft(s.values); }

/// Bin-wise mean of the per-series periodograms; coefficients are the
/// bin-wise mean of C_k.
inline Periodogram average_periodogram(const TimeSeriesDataset& ds) {
  if (ds.empty()) throw ArgumentError("empty dataset");
  const DftPlan plan(ds.n_samples());
  const std::size_t n = plan.size();
  const std::size_t N = ds.n_series();
  std::vector<Periodogram> per(N);
  for (std::size_t i = 0; i < N; ++i) per[i] = plan.periodogram(ds[i].values);

  Periodogram avg;
  avg.n = n;
  avg.freqs = per.front().freqs;
  avg.power.resize(n);
  avg.coeffs.resize(n);
  const auto inv = 1.0 / static_cast<double>(N);
  for (std::size_t k = 0; k < n; ++k) {
    avg.power[k] = inv * pairwise_sum(0, N, [&](std::size_t i) { return per[i].power[k]; });
    const double re = pairwise_sum(0, N, [&](std::size_t i) { return per[i].coeffs[k].real(); });
    const double im = pairwise_sum(0, N, [&](std::size_t i) { return per[i].coeffs[k].imag(); });
    avg.coeffs[k] = {inv * re, inv * im};
  }
  return avg;
}

/// One dominant spectral peak, i.e. a merged run of supra-threshold bins.
struct SpectralMode {
  std::size_t bin = 0;        // run argmax
  std::size_t first_bin = 0;  // run extent, inclusive
  std::size_t last_bin = 0;
  double freq = 0.0;          // power-weighted centroid over the run, cycles/window
  double amplitude = 0.0;
  double phase = 0.0;         // (-pi, pi]
  double power = 0.0;
  double power_share = 0.0;   // power / P_max
};

/// Per-series measurement of one mode.
struct ModeParams {
  std::size_t bin = 0;
  double amplitude = 0.0;  // 2 |C_bin|
  double freq = 0.0;       // centroid of this series' power over the mode's run, cycles/window
  double phase = 0.0;      // arg C_bin
};

struct SpectralReport {
  double tau = 0.2;
  double p_max = 0.0;
  double rho_spec = 0.0;
  std::vector<SpectralMode> modes;       // descending power
  std::vector<std::size_t> supra_bins;   // every bin with I >= tau * P_max
  std::vector<std::vector<ModeParams>> per_series_params;  // [series][mode]
};

inline constexpr double kDefaultTau = 0.2;

/// Thresholds the periodogram at tau * P_max (P_max over bins 1..n/2),
/// merges contiguous supra-threshold bins into one mode at the run's
/// maximal bin, and computes the retained energy ratio
///   rho = sum_{k in K} w_k I_k / sum_{k=1}^{n-1} I_k,
/// with w_k = 2 for bins that have a distinct conjugate partner. DC never
/// counts as a mode and is left out of the denominator.
inline SpectralReport select_modes(const Periodogram& p, double tau = kDefaultTau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("tau must lie in (0, 1), got " + std::to_string(tau));
  if (p.n < 2 || p.power.size() != p.n) throw ArgumentError("malformed periodogram");
  SpectralReport r;
  r.tau = tau;
  const std::size_t half = p.half();

  const double total_all = pairwise_sum(0, p.n, [&](std::size_t k) { return p.power[k]; });
  const double total_ac = pairwise_sum(1, p.n, [&](std::size_t k) { return p.power[k]; });
  double p_max = 0.0;
  for (std::size_t k = 1; k <= half; ++k) p_max = std::max(p_max, p.power[k]);
  r.p_max = p_max;
  // Anything this far below the total is rounding residue of an AC-free signal.
  if (!(p_max > 1e-24 * total_all) || total_ac <= 0.0) return r;

  const double thr = tau * p_max;
  for (std::size_t k = 1; k <= half; ++k)
    if (p.power[k] >= thr) r.supra_bins.push_back(k);

  auto weight = [&](std::size_t k) { return (p.n % 2 == 0 && k == half) ? 1.0 : 2.0; };
  double retained = 0.0;
  for (auto k : r.supra_bins) retained += weight(k) * p.power[k];
  r.rho_spec = std::clamp(retained / total_ac, 0.0, 1.0);

  for (std::size_t i = 0; i < r.supra_bins.size();) {
    std::size_t j = i;
    while (j + 1 < r.supra_bins.size() && r.supra_bins[j + 1] == r.supra_bins[j] + 1) ++j;
    SpectralMode m;
    m.first_bin = r.supra_bins[i];
    m.last_bin = r.supra_bins[j];
    m.bin = m.first_bin;
    double wsum = 0.0, fsum = 0.0;
    for (std::size_t k = m.first_bin; k <= m.last_bin; ++k) {
      if (p.power[k] > p.power[m.bin]) m.bin = k;
      wsum += p.power[k];
      fsum += p.power[k] * static_cast<double>(k);
    }
    m.freq = fsum / wsum;
    m.power = p.power[m.bin];
    m.power_share = m.power / p_max;
    m.amplitude = 2.0 * std::sqrt(m.power / static_cast<double>(p.n));
    m.phase = std::arg(p.coeffs[m.bin]);
    r.modes.push_back(m);
    i = j + 1;
  }
  std::stable_sort(r.modes.begin(), r.modes.end(),
                   [](const SpectralMode& a, const SpectralMode& b) { return a.power > b.power; });
  return r;
}

/// Measures each mode in every series' own DFT.
inline std::vector<std::vector<ModeParams>> per_series_mode_params(const TimeSeriesDataset& ds,
                                                                   std::span<const SpectralMode> modes) {
  if (modes.empty()) throw ArgumentError("per-series mode parameters need at least one mode");
  const DftPlan plan(ds.n_samples());
  const std::size_t n = plan.size();
  std::vector<std::vector<ModeParams>> out(ds.n_series());
  for (std::size_t i = 0; i < ds.n_series(); ++i) {
    const auto p = plan.periodogram(ds[i].values);
    auto& row = out[i];
    row.reserve(modes.size());
    for (const auto& m : modes) {
      if (m.last_bin > n / 2) throw ArgumentError("mode bin beyond Nyquist");
      ModeParams mp;
      mp.bin = m.bin;
      mp.amplitude = 2.0 * std::abs(p.coeffs[m.bin]);
      mp.phase = std::arg(p.coeffs[m.bin]);
      double wsum = 0.0, fsum = 0.0;
      for (std::size_t k = m.first_bin; k <= m.last_bin; ++k) {
        wsum += p.power[k];
        fsum += p.power[k] * static_cast<double>(k);
      }
      mp.freq = wsum > 0.0 ? fsum / wsum : static_cast<double>(m.bin);
      row.push_back(mp);
    }
  }
  return out;
}

/// Seasonal estimate sum_k A_k cos(2 pi bin_k j / n + phi_k) at window
/// positions j = 0..n-1.
inline std::vector<double> seasonal_component(std::size_t n, std::span<const ModeParams> params) {
  std::vector<double> s(n, 0.0);
  const auto dn = static_cast<double>(n);
  for (const auto& mp : params) {
    const auto bin = static_cast<double>(mp.bin);
    for (std::size_t j = 0; j < n; ++j)
      s[j] += mp.amplitude * std::cos(2.0 * std::numbers::pi * bin * static_cast<double>(j) / dn + mp.phase);
  }
  return s;
}

inline std::vector<double> deseasonalize(std::span<const double> values, std::span<const ModeParams> params) {
  auto s = seasonal_component(values.size(), params);
  for (std::size_t j = 0; j < values.size(); ++j) s[j] = values[j] - s[j];
  return s;
}

inline TimeSeries deseasonalize(const TimeSeries& series, std::span<const ModeParams> params) {
  return {series.id, deseasonalize(std::span<const double>(series.values), params)};
}

/// Full spectral pass over a dataset: average periodogram, mode selection,
/// and per-series measurements (left empty when no mode survives).
inline SpectralReport analyze_spectrum(const TimeSeriesDataset& ds, double tau = kDefaultTau) {
  auto r = select_modes(average_periodogram(ds), tau);
  if (!r.modes.empty()) r.per_series_params = per_series_mode_params(ds, r.modes);
  return r;
}

inline nlohmann::json to_json(const SpectralMode& m) {
  return {{"bin", m.bin},           {"first_bin", m.first_bin}, {"last_bin", m.last_bin},
          {"freq", m.freq},         {"amplitude", m.amplitude}, {"phase", m.phase},
          {"power", m.power},       {"power_share", m.power_share}};
}

inline nlohmann::json to_json(const SpectralReport& r) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : r.modes) modes.push_back(to_json(m));
  return {{"tau", r.tau}, {"rho_spec", r.rho_spec}, {"p_max", r.p_max}, {"modes", modes},
          {"supra_bins", r.supra_bins}};
}

/// `freq,power` rows over the one-sided bins, frequency in cycles/window.
inline std::string periodogram_csv(const Periodogram& p) {
  std::string out = "freq,power\n";
  for (std::size_t k = 0; k < p.freqs.size(); ++k)
    out += io::format_double(p.freqs[k]) + "," + io::format_double(p.power[k]) + "\n";
  return out;
}

} // namespace bofprior
