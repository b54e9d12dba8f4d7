#pragma once

#include <bofprior/dataset.hpp>
#include <bofprior/error.hpp>
#include <bofprior/spectral.hpp>
#include <bofprior/trend.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace bofprior {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr double kWeakSeasonalityRho = 0.5;
inline constexpr double kFrequencyVarianceFloor = 1e-6;  // (cycles/window)^2

/// Empirical mean and variance of one parameter role over the dataset.
struct ParamStats {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;

  double stddev() const { return std::sqrt(variance); }
  bool operator==(const ParamStats&) const = default;
};

struct SeasonalStats {
  ParamStats amplitude;
  ParamStats frequency;  // Hz
  ParamStats phase;      // radians, circular

  bool operator==(const SeasonalStats&) const = default;
};

struct TrendStats {
  ParamStats slope;  // signal units per unit normalized time
  ParamStats bias;

  bool operator==(const TrendStats&) const = default;
};

struct Provenance {
  std::uint64_t dataset_hash = 0;
  std::size_t n_series = 0;
  std::size_t n_samples = 0;
  double duration = 1.0;

  bool operator==(const Provenance&) const = default;
};

/// Architecture configuration and initialization statistics derived from a
/// dataset; the contract between analysis and training.
struct PriorConfig {
  std::size_t S = 0;
  std::vector<SpectralMode> modes;
  std::size_t n_in = 2;
  std::vector<std::size_t> trend_indices;
  std::vector<SeasonalStats> seasonal_stats;
  TrendStats trend_stats;
  double rho_spec = 0.0;
  double sigma_eps = 0.0;
  double tau = kDefaultTau;
  double delta = kDefaultDelta;
  double alpha = kDefaultAlpha;
  bool weak_seasonality = false;
  std::vector<std::string> warnings;
  Provenance provenance;

  std::size_t n_samples() const { return provenance.n_samples; }
  double duration() const { return provenance.duration; }

  /// Throws ConfigError when the structural invariants do not hold.
  void validate() const {
    if (S != modes.size()) throw ConfigError("S does not match the number of modes");
    if (seasonal_stats.size() != S) throw ConfigError("seasonal_stats must have one entry per mode");
    if (n_in < 2 || trend_indices.size() != n_in) throw ConfigError("n_in must equal the number of trend indices (>= 2)");
    for (std::size_t j = 0; j < trend_indices.size(); ++j) {
      if (j > 0 && trend_indices[j] <= trend_indices[j - 1]) throw ConfigError("trend_indices must be strictly increasing");
      if (provenance.n_samples > 0 && trend_indices[j] >= provenance.n_samples)
        throw ConfigError("trend index beyond series length");
    }
  }

  bool operator==(const PriorConfig& o) const {
    auto same_mode = [](const SpectralMode& a, const SpectralMode& b) {
      return a.bin == b.bin && a.first_bin == b.first_bin && a.last_bin == b.last_bin && a.freq == b.freq &&
             a.amplitude == b.amplitude && a.phase == b.phase && a.power == b.power && a.power_share == b.power_share;
    };
    return S == o.S && std::equal(modes.begin(), modes.end(), o.modes.begin(), o.modes.end(), same_mode) &&
           n_in == o.n_in && trend_indices == o.trend_indices && seasonal_stats == o.seasonal_stats &&
           trend_stats == o.trend_stats && rho_spec == o.rho_spec && sigma_eps == o.sigma_eps && tau == o.tau &&
           delta == o.delta && alpha == o.alpha && weak_seasonality == o.weak_seasonality && warnings == o.warnings &&
           provenance == o.provenance;
  }
};

inline ParamStats linear_stats(std::string name, std::span<const double> xs) {
  ParamStats s;
  s.name = std::move(name);
  s.count = xs.size();
  if (xs.empty()) return s;
  const auto n = static_cast<double>(xs.size());
  s.mean = pairwise_sum(0, xs.size(), [&](std::size_t i) { return xs[i]; }) / n;
  if (xs.size() > 1)
    s.variance = pairwise_sum(0, xs.size(), [&](std::size_t i) { return (xs[i] - s.mean) * (xs[i] - s.mean); }) /
                 (n - 1.0);
  return s;
}

/// Mean direction and wrapped-normal variance -2 ln R of a set of angles,
/// capped at the variance of a uniform angle.
inline ParamStats circular_stats(std::string name, std::span<const double> angles) {
  ParamStats s;
  s.name = std::move(name);
  s.count = angles.size();
  constexpr double cap = std::numbers::pi * std::numbers::pi / 3.0;
  if (angles.empty()) return s;
  const auto n = static_cast<double>(angles.size());
  const double c = pairwise_sum(0, angles.size(), [&](std::size_t i) { return std::cos(angles[i]); }) / n;
  const double si = pairwise_sum(0, angles.size(), [&](std::size_t i) { return std::sin(angles[i]); }) / n;
  const double R = std::hypot(c, si);
  s.mean = std::atan2(si, c);
  s.variance = R > 0.0 ? std::min(-2.0 * std::log(std::min(R, 1.0)), cap) : cap;
  if (s.variance < 0.0) s.variance = 0.0;
  return s;
}

/// Everything the analysis pass produces, for reports beyond the config.
struct Analysis {
  Periodogram periodogram;
  SpectralReport spectral;
  TrendReport trend;
  PriorConfig config;
};

inline Analysis analyze(const TimeSeriesDataset& ds, double tau = kDefaultTau, double delta = kDefaultDelta,
                        double alpha = kDefaultAlpha) {
  if (ds.empty()) throw ArgumentError("empty dataset");
  Analysis a;
  a.periodogram = average_periodogram(ds);
  a.spectral = select_modes(a.periodogram, tau);
  if (!a.spectral.modes.empty()) a.spectral.per_series_params = per_series_mode_params(ds, a.spectral.modes);
  a.trend = trend_report(ds, a.spectral, delta, alpha);

  const auto& grid = ds.grid();
  PriorConfig& c = a.config;
  c.S = a.spectral.modes.size();
  c.modes = a.spectral.modes;
  c.n_in = a.trend.indices.size();
  c.trend_indices = a.trend.indices;
  c.rho_spec = a.spectral.rho_spec;
  c.sigma_eps = a.trend.sigma_eps;
  c.tau = tau;
  c.delta = delta;
  c.alpha = alpha;
  c.provenance = {ds.content_hash(), ds.n_series(), ds.n_samples(), grid.duration()};

  const std::size_t N = ds.n_series();
  const double hz = grid.cycles_to_hz(1.0);
  std::vector<double> amp(N), freq(N), phase(N);
  for (std::size_t m = 0; m < c.S; ++m) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto& p = a.spectral.per_series_params[i][m];
      amp[i] = p.amplitude;
      freq[i] = p.freq;
      phase[i] = p.phase;
    }
    SeasonalStats st;
    st.amplitude = linear_stats("amplitude", amp);
    st.frequency = linear_stats("frequency", freq);
    st.frequency.variance = std::max(st.frequency.variance, kFrequencyVarianceFloor);
    st.frequency.mean *= hz;
    st.frequency.variance *= hz * hz;
    st.phase = circular_stats("phase", phase);
    c.seasonal_stats.push_back(st);
  }

  const auto steps = static_cast<double>(ds.n_samples() - 1);
  std::vector<double> slopes(a.trend.slopes);
  for (auto& s : slopes) s *= steps;
  c.trend_stats.slope = linear_stats("slope", slopes);
  c.trend_stats.bias = linear_stats("bias", a.trend.intercepts);

  c.weak_seasonality = c.rho_spec < kWeakSeasonalityRho;
  if (c.S == 0) c.warnings.push_back("no dominant spectral mode; the model falls back to trend and event stages");
  if (c.weak_seasonality) c.warnings.push_back("weak seasonality: rho_spec below 0.5");
  return a;
}

inline PriorConfig derive_config(const TimeSeriesDataset& ds, double tau = kDefaultTau, double delta = kDefaultDelta,
                                 double alpha = kDefaultAlpha) {
  return analyze(ds, tau, delta, alpha).config;
}

// ---- JSON ----

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw FormatError("expected an object at '" + where + "'");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError("missing field '" + where + (where.empty() ? "" : ".") + key + "'");
  return *it;
}

template <typename T>
T get(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError("field '" + where + (where.empty() ? "" : ".") + key + "' has the wrong type");
  }
}

inline void unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where,
                         std::vector<std::string>* warnings) {
  if (!warnings || !j.is_object()) return;
  const std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!k.contains(key)) warnings->push_back("ignoring unknown field '" + where + (where.empty() ? "" : ".") + key + "'");
}

} // namespace detail

inline nlohmann::json to_json(const ParamStats& s) {
  return {{"name", s.name}, {"mean", s.mean}, {"variance", s.variance}, {"count", s.count}};
}

inline ParamStats param_stats_from_json(const nlohmann::json& j, const std::string& where,
                                        std::vector<std::string>* warnings = nullptr) {
  detail::unknown_keys(j, {"name", "mean", "variance", "count"}, where, warnings);
  ParamStats s;
  s.name = detail::get<std::string>(j, "name", where);
  s.mean = detail::get<double>(j, "mean", where);
  s.variance = detail::get<double>(j, "variance", where);
  s.count = detail::get<std::size_t>(j, "count", where);
  if (s.variance < 0.0) throw FormatError("field '" + where + ".variance' is negative");
  return s;
}

inline nlohmann::json config_to_json(const PriorConfig& c) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : c.modes) modes.push_back(to_json(m));
  nlohmann::json seasonal = nlohmann::json::array();
  for (const auto& s : c.seasonal_stats)
    seasonal.push_back({{"amplitude", to_json(s.amplitude)},
                        {"frequency", to_json(s.frequency)},
                        {"phase", to_json(s.phase)}});
  return {
      {"schema_version", kConfigSchemaVersion},
      {"S", c.S},
      {"modes", modes},
      {"n_in", c.n_in},
      {"trend_indices", c.trend_indices},
      {"seasonal_stats", seasonal},
      {"trend_stats", {{"slope", to_json(c.trend_stats.slope)}, {"bias", to_json(c.trend_stats.bias)}}},
      {"rho_spec", c.rho_spec},
      {"sigma_eps", c.sigma_eps},
      {"tau", c.tau},
      {"delta", c.delta},
      {"alpha", c.alpha},
      {"weak_seasonality", c.weak_seasonality},
      {"warnings", c.warnings},
      {"provenance",
       {{"dataset_hash", c.provenance.dataset_hash},
        {"n_series", c.provenance.n_series},
        {"n_samples", c.provenance.n_samples},
        {"duration_seconds", c.provenance.duration}}},
  };
}

/// Parses a config document. Missing or mistyped fields raise FormatError
/// naming the field; unknown fields are reported through `warnings`.
inline PriorConfig config_from_json(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr) {
  using detail::get;
  const int version = get<int>(j, "schema_version", "");
  if (version != kConfigSchemaVersion)
    throw FormatError("unsupported schema_version " + std::to_string(version));
  detail::unknown_keys(j,
                       {"schema_version", "S", "modes", "n_in", "trend_indices", "seasonal_stats", "trend_stats",
                        "rho_spec", "sigma_eps", "tau", "delta", "alpha", "weak_seasonality", "warnings",
                        "provenance"},
                       "", warnings);
  PriorConfig c;
  c.S = get<std::size_t>(j, "S", "");
  const auto& modes = detail::field(j, "modes", "");
  if (!modes.is_array()) throw FormatError("field 'modes' must be an array");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& m = modes[i];
    const std::string w = "modes[" + std::to_string(i) + "]";
    detail::unknown_keys(m, {"bin", "first_bin", "last_bin", "freq", "amplitude", "phase", "power", "power_share"}, w,
                         warnings);
    SpectralMode sm;
    sm.bin = get<std::size_t>(m, "bin", w);
    sm.first_bin = get<std::size_t>(m, "first_bin", w);
    sm.last_bin = get<std::size_t>(m, "last_bin", w);
    sm.freq = get<double>(m, "freq", w);
    sm.amplitude = get<double>(m, "amplitude", w);
    sm.phase = get<double>(m, "phase", w);
    sm.power = get<double>(m, "power", w);
    sm.power_share = get<double>(m, "power_share", w);
    c.modes.push_back(sm);
  }
  c.n_in = get<std::size_t>(j, "n_in", "");
  c.trend_indices = get<std::vector<std::size_t>>(j, "trend_indices", "");
  const auto& seasonal = detail::field(j, "seasonal_stats", "");
  if (!seasonal.is_array()) throw FormatError("field 'seasonal_stats' must be an array");
  for (std::size_t i = 0; i < seasonal.size(); ++i) {
    const std::string w = "seasonal_stats[" + std::to_string(i) + "]";
    detail::unknown_keys(seasonal[i], {"amplitude", "frequency", "phase"}, w, warnings);
    SeasonalStats s;
    s.amplitude = param_stats_from_json(detail::field(seasonal[i], "amplitude", w), w + ".amplitude", warnings);
    s.frequency = param_stats_from_json(detail::field(seasonal[i], "frequency", w), w + ".frequency", warnings);
    s.phase = param_stats_from_json(detail::field(seasonal[i], "phase", w), w + ".phase", warnings);
    c.seasonal_stats.push_back(s);
  }
  const auto& ts = detail::field(j, "trend_stats", "");
  detail::unknown_keys(ts, {"slope", "bias"}, "trend_stats", warnings);
  c.trend_stats.slope = param_stats_from_json(detail::field(ts, "slope", "trend_stats"), "trend_stats.slope", warnings);
  c.trend_stats.bias = param_stats_from_json(detail::field(ts, "bias", "trend_stats"), "trend_stats.bias", warnings);
  c.rho_spec = get<double>(j, "rho_spec", "");
  c.sigma_eps = get<double>(j, "sigma_eps", "");
  c.tau = get<double>(j, "tau", "");
  c.delta = get<double>(j, "delta", "");
  c.alpha = get<double>(j, "alpha", "");
  c.weak_seasonality = get<bool>(j, "weak_seasonality", "");
  c.warnings = get<std::vector<std::string>>(j, "warnings", "");
  const auto& pv = detail::field(j, "provenance", "");
  detail::unknown_keys(pv, {"dataset_hash", "n_series", "n_samples", "duration_seconds"}, "provenance", warnings);
  c.provenance.dataset_hash = get<std::uint64_t>(pv, "dataset_hash", "provenance");
  c.provenance.n_series = get<std::size_t>(pv, "n_series", "provenance");
  c.provenance.n_samples = get<std::size_t>(pv, "n_samples", "provenance");
  c.provenance.duration = get<double>(pv, "duration_seconds", "provenance");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("inconsistent config: ") + e.what());
  }
  return c;
}

inline PriorConfig config_from_string(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j, warnings);
}

} // namespace bofprior
