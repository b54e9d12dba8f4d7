#include <bofprior/priors.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bofprior;

namespace {

constexpr double kPi = std::numbers::pi;

TimeSeriesDataset tone_dataset(std::size_t N, std::size_t T, double bin, std::uint64_t seed) {
  Rng r(seed);
  TimeGrid g(T);
  std::vector<TimeSeries> s;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = r.uniform(0.5, 2.0), ph = r.uniform(-kPi, kPi);
    std::vector<double> y(T);
    for (std::size_t j = 0; j < T; ++j) y[j] = a * std::sin(2 * kPi * bin * static_cast<double>(j) / T + ph);
    s.push_back({"s" + std::to_string(i), y});
  }
  return TimeSeriesDataset(g, s);
}

const PriorConfig& synthetic_config() {
  static const PriorConfig c = derive_config(generate_synthetic(2000, 100, 7, 0.01), 0.2, 0.2, 0.05);
  return c;
}

} // namespace

TEST(Stats, LinearSampleVariance) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto s = linear_stats("x", x);
  EXPECT_EQ(s.count, 4u);
  EXPECT_NEAR(s.mean, 2.5, 1e-15);
  EXPECT_NEAR(s.variance, 5.0 / 3.0, 1e-15);
  EXPECT_EQ(linear_stats("x", std::vector<double>{7}).variance, 0.0);
}

TEST(Stats, CircularMeanAcrossBranchCut) {
  const std::vector<double> a{kPi - 0.1, -kPi + 0.1};
  const auto s = circular_stats("phase", a);
  EXPECT_NEAR(std::abs(s.mean), kPi, 1e-12);
  // R = cos(0.1)
  EXPECT_NEAR(s.variance, -2.0 * std::log(std::cos(0.1)), 1e-12);
  const auto same = circular_stats("phase", std::vector<double>(5, 0.4));
  EXPECT_NEAR(same.mean, 0.4, 1e-12);
  EXPECT_NEAR(same.variance, 0.0, 1e-12);
}

TEST(Stats, CircularVarianceCappedForUniformPhases) {
  std::vector<double> a;
  for (int k = 0; k < 8; ++k) a.push_back(2 * kPi * k / 8 - kPi);
  EXPECT_NEAR(circular_stats("phase", a).variance, kPi * kPi / 3.0, 1e-12);
}

TEST(DeriveConfig, SyntheticRow) {
  const auto& c = synthetic_config();
  EXPECT_EQ(c.S, 3u);
  ASSERT_EQ(c.modes.size(), 3u);
  ASSERT_EQ(c.seasonal_stats.size(), 3u);
  std::vector<double> f;
  for (const auto& s : c.seasonal_stats) f.push_back(s.frequency.mean);
  std::sort(f.begin(), f.end());
  EXPECT_NEAR(f[0], 3.48, 0.3);
  EXPECT_NEAR(f[1], 7.56, 0.3);
  EXPECT_NEAR(f[2], 12.29, 0.5);
  EXPECT_TRUE(c.n_in == 11 || c.n_in == 12) << c.n_in;
  EXPECT_NEAR(c.rho_spec, 0.873, 0.025);
  EXPECT_FALSE(c.weak_seasonality);
  EXPECT_EQ(c.trend_indices.size(), c.n_in);
  EXPECT_EQ(c.trend_stats.slope.count, 2000u);
  EXPECT_NO_THROW(c.validate());
}

TEST(DeriveConfig, StageCountMatchesSpectralRuns) {
  for (double tau : {0.05, 0.2, 0.6}) {
    const auto ds = generate_synthetic(100, 64, 12, 0.3);
    const auto a = analyze(ds, tau);
    EXPECT_EQ(a.config.S, a.spectral.modes.size());
  }
}

TEST(DeriveConfig, PureToneHasFlooredFrequencyVariance) {
  const auto c = derive_config(tone_dataset(40, 64, 5, 1));
  ASSERT_EQ(c.S, 1u);
  EXPECT_NEAR(c.seasonal_stats[0].frequency.mean, TimeGrid(64).cycles_to_hz(5.0), 1e-9);
  const double hz = TimeGrid(64).cycles_to_hz(1.0);
  EXPECT_NEAR(c.seasonal_stats[0].frequency.variance, kFrequencyVarianceFloor * hz * hz, 1e-15);
  EXPECT_GT(c.seasonal_stats[0].amplitude.variance, 0.0);
}

TEST(DeriveConfig, NoiseFlagsWeakSeasonality) {
  Rng r(77);
  TimeGrid g(128);
  std::vector<TimeSeries> s;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> y(128);
    for (auto& v : y) v = r.normal();
    s.push_back({"n" + std::to_string(i), y});
  }
  const auto c = derive_config(TimeSeriesDataset(g, s), 0.999);
  EXPECT_LE(c.S, 2u);
  EXPECT_LT(c.rho_spec, 0.5);
  EXPECT_TRUE(c.weak_seasonality);
  EXPECT_FALSE(c.warnings.empty());
}

TEST(DeriveConfig, ConstantDataGivesNoStages) {
  TimeGrid g(32);
  const TimeSeriesDataset ds(g, {{"a", std::vector<double>(32, 1.0)}, {"b", std::vector<double>(32, 2.0)}});
  const auto c = derive_config(ds);
  EXPECT_EQ(c.S, 0u);
  EXPECT_TRUE(c.seasonal_stats.empty());
  EXPECT_FALSE(c.warnings.empty());
  EXPECT_NEAR(c.trend_stats.bias.mean, 1.5, 1e-12);
  EXPECT_EQ(c.n_in, 2u);
}

TEST(DeriveConfig, SlopeStatsOnNormalizedTime) {
  const auto ds = generate_synthetic(50, 41, 6, 0.2);
  const auto a = analyze(ds);
  double slope = 0.0, bias = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    slope += a.trend.slopes[i];
    bias += a.trend.intercepts[i];
  }
  EXPECT_NEAR(a.config.trend_stats.slope.mean, 40.0 * slope / 50, 1e-10);
  EXPECT_NEAR(a.config.trend_stats.bias.mean, bias / 50, 1e-12);
}

TEST(DeriveConfig, AmplitudeStatsScale) {
  const auto ds = generate_synthetic(200, 100, 5, 0.3);
  const auto a = derive_config(ds);
  for (double c : {0.5, 3.0}) {
    const auto b = derive_config(ds.scaled(c));
    ASSERT_EQ(a.S, b.S);
    for (std::size_t m = 0; m < a.S; ++m) {
      const auto &sa = a.seasonal_stats[m], &sb = b.seasonal_stats[m];
      EXPECT_NEAR(sb.amplitude.mean, c * sa.amplitude.mean, 1e-10 * c);
      EXPECT_NEAR(sb.amplitude.variance, c * c * sa.amplitude.variance, 1e-10 * c * c);
      EXPECT_NEAR(sb.frequency.mean, sa.frequency.mean, 1e-12);
      EXPECT_NEAR(sb.frequency.variance, sa.frequency.variance, 1e-12);
      EXPECT_NEAR(sb.phase.mean, sa.phase.mean, 1e-10);
      EXPECT_NEAR(sb.phase.variance, sa.phase.variance, 1e-10);
    }
  }
}

TEST(DeriveConfig, Deterministic) {
  const auto ds = generate_synthetic(100, 50, 2, 0.2);
  EXPECT_EQ(derive_config(ds), derive_config(ds));
  EXPECT_EQ(config_to_json(derive_config(ds)).dump(), config_to_json(derive_config(ds)).dump());
}

TEST(DeriveConfig, EmptyDatasetRejected) { EXPECT_THROW(derive_config(TimeSeriesDataset{}), ArgumentError); }

TEST(ConfigJson, RoundTrip) {
  const auto& c = synthetic_config();
  const auto text = config_to_json(c).dump(2);
  std::vector<std::string> warnings;
  const auto back = config_from_string(text, &warnings);
  EXPECT_TRUE(warnings.empty());
  EXPECT_EQ(back, c);
  EXPECT_EQ(config_to_json(back).dump(2), text);
}

TEST(ConfigJson, MissingModesNamed) {
  auto j = config_to_json(synthetic_config());
  j.erase("modes");
  try {
    config_from_json(j);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("modes"), std::string::npos) << e.what();
  }
}

TEST(ConfigJson, NestedMissingFieldNamed) {
  auto j = config_to_json(synthetic_config());
  j["trend_stats"]["slope"].erase("variance");
  try {
    config_from_json(j);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("trend_stats.slope.variance"), std::string::npos) << e.what();
  }
}

TEST(ConfigJson, UnknownKeysWarn) {
  auto j = config_to_json(synthetic_config());
  j["comment"] = "hand edited";
  j["modes"][0]["note"] = 1;
  std::vector<std::string> warnings;
  const auto c = config_from_json(j, &warnings);
  EXPECT_EQ(c, synthetic_config());
  ASSERT_EQ(warnings.size(), 2u);
  EXPECT_NE(warnings[0].find("comment"), std::string::npos);
  EXPECT_NE(warnings[1].find("modes[0].note"), std::string::npos);
}

TEST(ConfigJson, Rejections) {
  EXPECT_THROW(config_from_string("{"), FormatError);
  EXPECT_THROW(config_from_string("[]"), FormatError);
  auto j = config_to_json(synthetic_config());
  j["schema_version"] = 2;
  EXPECT_THROW(config_from_json(j), FormatError);
  j = config_to_json(synthetic_config());
  j["S"] = "three";
  EXPECT_THROW(config_from_json(j), FormatError);
  j = config_to_json(synthetic_config());
  j["S"] = 2;
  EXPECT_THROW(config_from_json(j), FormatError);
}
