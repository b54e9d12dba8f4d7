#pragma once

#include <bofprior/error.hpp>
#include <bofprior/io.hpp>
#include <bofprior/rng.hpp>

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bofprior {

/// Equidistant sample positions on [0, 1] plus the physical window length.
class TimeGrid {
public:
  TimeGrid() = default;

  explicit TimeGrid(std::size_t n_samples, double duration_seconds = 1.0)
      : t_(n_samples), duration_(duration_seconds) {
    if (n_samples < 2) throw ArgumentError("time grid needs at least 2 samples");
    if (!(duration_seconds > 0.0) || !std::isfinite(duration_seconds))
      throw ArgumentError("grid duration must be positive");
    const double step = 1.0 / static_cast<double>(n_samples - 1);
    for (std::size_t i = 0; i < n_samples; ++i) t_[i] = static_cast<double>(i) * step;
    t_.back() = 1.0;
  }

  std::size_t size() const { return t_.size(); }
  std::span<const double> positions() const { return t_; }
  double operator[](std::size_t i) const { return t_[i]; }
  double duration() const { return duration_; }

  /// Converts cycles per T-sample analysis window to Hz.
  double cycles_to_hz(double cycles_per_window) const {
    const auto n = static_cast<double>(size());
    return cycles_per_window * (n - 1.0) / (n * duration_);
  }
  double hz_to_cycles(double hz) const {
    const auto n = static_cast<double>(size());
    return hz * n * duration_ / (n - 1.0);
  }
  /// Angular multiplier on normalized time for a tone of `hz`.
  double hz_to_angular(double hz) const { return 2.0 * std::numbers::pi * hz * duration_; }

  bool operator==(const TimeGrid&) const = default;

private:
  std::vector<double> t_;
  double duration_ = 1.0;
};

struct TimeSeries {
  std::string id;
  std::vector<double> values;
};

/// Parameters of one synthetic signal (sine form):
///   y(t) = sum_k A_k sin(2 pi f_k t + phi_k) + a0 + a1 t
///        + beta exp(-(t - mu)^2 / (2 sigma_e^2)) + eps(t)
struct SyntheticGroundTruth {
  struct Tone {
    double amplitude = 0.0;
    double frequency_hz = 0.0;
    double phase = 0.0;
  };
  std::vector<Tone> tones;
  double trend_intercept = 0.0;
  double trend_slope = 0.0;
  double event_height = 0.0;
  double event_center = 0.5;
  double event_width = 0.05;
  double noise_std = 0.0;

  /// Noise-free value at normalized time t (t in [0,1], duration-scaled Hz).
  double clean_value(double t, double duration = 1.0) const {
    double y = trend_intercept + trend_slope * t;
    for (const auto& tone : tones)
      y += tone.amplitude *
           std::sin(2.0 * std::numbers::pi * tone.frequency_hz * duration * t + tone.phase);
    const double d = t - event_center;
    y += event_height * std::exp(-d * d / (2.0 * event_width * event_width));
    return y;
  }
};

/// N equal-length series on a shared grid. Values are immutable after
/// construction.
class TimeSeriesDataset {
public:
  TimeSeriesDataset() = default;

  TimeSeriesDataset(TimeGrid grid, std::vector<TimeSeries> series,
                    std::optional<std::vector<SyntheticGroundTruth>> truth = std::nullopt)
      : grid_(std::move(grid)), series_(std::move(series)), truth_(std::move(truth)) {
    if (series_.empty()) throw ArgumentError("dataset needs at least one series");
    for (std::size_t i = 0; i < series_.size(); ++i) {
      if (series_[i].values.size() != grid_.size())
        throw ArgumentError("series " + std::to_string(i) + " has " +
                            std::to_string(series_[i].values.size()) + " samples, grid has " +
                            std::to_string(grid_.size()));
      for (double v : series_[i].values)
        if (!std::isfinite(v)) throw ArgumentError("series " + std::to_string(i) + " has a non-finite value");
    }
    if (truth_ && truth_->size() != series_.size())
      throw ArgumentError("ground truth length does not match series count");
  }

  bool empty() const { return series_.empty(); }
  std::size_t n_series() const { return series_.size(); }
  std::size_t n_samples() const { return grid_.size(); }
  const TimeGrid& grid() const { return grid_; }
  const std::vector<TimeSeries>& series() const { return series_; }
  const TimeSeries& operator[](std::size_t i) const { return series_[i]; }
  const std::optional<std::vector<SyntheticGroundTruth>>& ground_truth() const { return truth_; }

  std::optional<std::uint64_t> seed() const { return seed_; }
  void set_seed(std::optional<std::uint64_t> s) { seed_ = s; }

  /// Every value multiplied by c (ground truth is dropped).
  TimeSeriesDataset scaled(double c) const {
    auto s = series_;
    for (auto& ts : s)
      for (auto& v : ts.values) v *= c;
    return TimeSeriesDataset(grid_, std::move(s));
  }

  /// Subset by index, keeping order; ground truth follows when present.
  TimeSeriesDataset subset(std::span<const std::size_t> idx) const {
    std::vector<TimeSeries> s;
    std::optional<std::vector<SyntheticGroundTruth>> gt;
    if (truth_) gt.emplace();
    for (auto i : idx) {
      s.push_back(series_.at(i));
      if (truth_) gt->push_back((*truth_)[i]);
    }
    return TimeSeriesDataset(grid_, std::move(s), std::move(gt));
  }

  /// 64-bit FNV-1a over shape and value bits; identifies a dataset in
  /// provenance records.
  std::uint64_t content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t x) {
      for (int b = 0; b < 8; ++b) {
        h ^= (x >> (8 * b)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    mix(series_.size());
    mix(grid_.size());
    for (const auto& ts : series_)
      for (double v : ts.values) mix(std::bit_cast<std::uint64_t>(v));
    return h;
  }

private:
  TimeGrid grid_;
  std::vector<TimeSeries> series_;
  std::optional<std::vector<SyntheticGroundTruth>> truth_;
  std::optional<std::uint64_t> seed_;
};

/// Distributions for the synthetic benchmark. Defaults reproduce the
/// three-tone + trend + event benchmark; lo == hi ranges fix a value.
struct GeneratorOptions {
  struct Range {
    double lo, hi;
  };
  std::vector<double> frequency_centers_hz{3.5, 7.5, 12.0};
  double frequency_jitter_hz = 0.05;
  double amplitude_mean = 1.15;
  double amplitude_std = 0.3;
  double amplitude_floor = 0.1;
  Range trend_intercept{-0.5, 0.5};
  Range trend_slope{-1.0, 1.0};
  Range event_height{-0.5, 0.5};
  Range event_center{0.2, 0.8};
  double event_width = 0.05;
  double duration_seconds = 1.0;
};

/// Synthetic benchmark: each series draws its own tones, trend and event
/// from a per-series substream of `seed`, so values do not depend on N.
inline TimeSeriesDataset generate_synthetic(std::size_t n_series, std::size_t n_samples,
                                            std::uint64_t seed, double noise_std,
                                            const GeneratorOptions& opt = {}) {
  if (n_series < 1) throw ArgumentError("n_series must be >= 1");
  if (n_samples < 2) throw ArgumentError("n_samples must be >= 2");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ArgumentError("noise_std must be >= 0");
  if (!(opt.event_width > 0.0)) throw ArgumentError("event width must be positive");

  TimeGrid grid(n_samples, opt.duration_seconds);
  const Rng root = Rng(seed).split("dataset");
  auto draw = [](Rng& r, GeneratorOptions::Range range) {
    return range.lo == range.hi ? range.lo : r.uniform(range.lo, range.hi);
  };

  std::vector<TimeSeries> series(n_series);
  std::vector<SyntheticGroundTruth> truth(n_series);
  for (std::size_t i = 0; i < n_series; ++i) {
    Rng rng = root.split(i);
    auto& gt = truth[i];
    for (double center : opt.frequency_centers_hz) {
      SyntheticGroundTruth::Tone tone;
      tone.frequency_hz = center + opt.frequency_jitter_hz * rng.normal();
      tone.amplitude = rng.truncated_normal(opt.amplitude_mean, opt.amplitude_std, opt.amplitude_floor);
      tone.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      gt.tones.push_back(tone);
    }
    gt.trend_intercept = draw(rng, opt.trend_intercept);
    gt.trend_slope = draw(rng, opt.trend_slope);
    gt.event_height = draw(rng, opt.event_height);
    gt.event_center = draw(rng, opt.event_center);
    gt.event_width = opt.event_width;
    gt.noise_std = noise_std;

    auto& ts = series[i];
    ts.id = "s" + std::to_string(i);
    ts.values.resize(n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
      ts.values[j] = gt.clean_value(grid[j], grid.duration());
      if (noise_std > 0.0) ts.values[j] += noise_std * rng.normal();
    }
  }
  TimeSeriesDataset ds(std::move(grid), std::move(series), std::move(truth));
  ds.set_seed(seed);
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

/// Sidecar metadata path for a CSV: data.csv -> data.meta.json
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return io::sibling(csv, ".meta.json");
}

inline nlohmann::json sidecar_json(const TimeSeriesDataset& ds) {
  nlohmann::json j;
  j["duration_seconds"] = ds.grid().duration();
  j["n_series"] = ds.n_series();
  j["n_samples"] = ds.n_samples();
  if (ds.seed())
    j["seed"] = *ds.seed();
  else
    j["seed"] = nullptr;
  return j;
}

inline std::string to_csv(const TimeSeriesDataset& ds) {
  if (ds.empty()) throw ArgumentError("cannot write an empty dataset");
  std::string out;
  for (std::size_t j = 0; j < ds.n_samples(); ++j) {
    if (j) out += ',';
    out += 't' + std::to_string(j);
  }
  out += '\n';
  for (const auto& ts : ds.series()) {
    for (std::size_t j = 0; j < ts.values.size(); ++j) {
      if (j) out += ',';
      out += io::format_double(ts.values[j]);
    }
    out += '\n';
  }
  return out;
}

/// Parses CSV text: optional single header row, one series per row.
inline TimeSeriesDataset parse_csv(std::string_view text, double duration_seconds = 1.0) {
  std::vector<TimeSeries> series;
  std::size_t expected = 0;
  std::size_t line_no = 0;
  bool first_content = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<double> row;
    std::size_t col = 0;
    bool header = false;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      ++col;
      double v = 0.0;
      if (!io::parse_double(cell, v)) {
        if (first_content && col == 1) {
          header = true;
        } else if (!header) {
          throw FormatError("row " + std::to_string(line_no) + ", column " + std::to_string(col) +
                            ": non-numeric cell '" + std::string(cell) + "'");
        }
      } else if (!std::isfinite(v)) {
        throw FormatError("row " + std::to_string(line_no) + ", column " + std::to_string(col) +
                          ": non-finite value");
      }
      if (!header) row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (header) {
      expected = col;
      first_content = false;
      continue;
    }
    first_content = false;
    if (expected == 0) expected = row.size();
    if (row.size() != expected)
      throw FormatError("row " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                        " columns, expected " + std::to_string(expected));
    series.push_back({"s" + std::to_string(series.size()), std::move(row)});
  }
  if (series.empty()) throw FormatError("no data rows");
  if (expected < 2) throw FormatError("series need at least 2 samples, got " + std::to_string(expected));
  return TimeSeriesDataset(TimeGrid(expected, duration_seconds), std::move(series));
}

/// Reads a CSV; a `<stem>.meta.json` sidecar, when present, supplies the
/// window duration and seed.
inline TimeSeriesDataset load_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: '" + path.string() + "'");
  const auto text = io::read_file(path);
  double duration = 1.0;
  std::optional<std::uint64_t> seed;
  const auto meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(meta));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(meta.string() + ": " + e.what());
    }
    if (j.contains("duration_seconds") && j["duration_seconds"].is_number())
      duration = j["duration_seconds"].get<double>();
    if (j.contains("seed") && j["seed"].is_number_integer()) seed = j["seed"].get<std::uint64_t>();
  }
  TimeSeriesDataset ds;
  try {
    ds = parse_csv(text, duration);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  ds.set_seed(seed);
  return ds;
}

/// Writes the CSV and its metadata sidecar.
inline void save_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path) {
  const auto csv = to_csv(ds);
  io::write_file_atomic(path, csv);
  io::write_file_atomic(sidecar_path(path), sidecar_json(ds).dump(2) + "\n");
}

} // namespace bofprior
