#include <bofprior/train.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bofprior;

namespace {

constexpr double kPi = std::numbers::pi;

TimeSeriesDataset tones(std::size_t N, std::size_t T, double bin, std::uint64_t seed) {
  Rng r(seed);
  TimeGrid g(T);
  std::vector<TimeSeries> s;
  for (std::size_t i = 0; i < N; ++i) {
    const double a = r.uniform(0.8, 1.2), ph = r.uniform(0.0, 0.5);
    std::vector<double> y(T);
    for (std::size_t j = 0; j < T; ++j) y[j] = a * std::sin(2 * kPi * bin * static_cast<double>(j) / T + ph);
    s.push_back({"s" + std::to_string(i), y});
  }
  return TimeSeriesDataset(g, s);
}

TrainConfig quick(std::size_t epochs, std::uint64_t seed = 1) {
  TrainConfig c;
  c.max_epochs = epochs;
  c.seed = seed;
  c.trials = 1;
  return c;
}

} // namespace

TEST(Adam, FirstStepIsLearningRateSized) {
  std::vector<double> p{1.0, -2.0, 0.5, 3.0};
  const std::vector<double> g{0.3, -7.0, 1e-3, -0.02};
  AdamState st(4);
  const auto before = p;
  adam_step(p, g, st, {0.01});
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = before[i] - p[i];
    EXPECT_EQ(std::signbit(d), std::signbit(g[i]));
    EXPECT_GE(std::abs(d), 0.9 * 0.01);
    EXPECT_LE(std::abs(d), 0.01);
  }
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, 2.0};
  AdamState st(2);
  for (int k = 0; k < 10; ++k) adam_step(p, std::vector<double>{0.0, 0.0}, st);
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0}));
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> p{1.0};
  AdamState st(2);
  EXPECT_THROW(adam_step(p, std::vector<double>{0.0}, st), ArgumentError);
}

TEST(Mse, Values) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(mse(x, x), 0.0);
  EXPECT_EQ(mse(std::vector<double>{2, 3, 4}, x), 1.0);
  EXPECT_THROW(mse(std::vector<double>{1}, x), ArgumentError);
}

TEST(Mse, GradientMatchesFiniteDifferences) {
  Rng r(3);
  std::vector<double> xh(12), x(12);
  for (std::size_t i = 0; i < 12; ++i) {
    xh[i] = r.normal();
    x[i] = r.normal();
  }
  const std::size_t B = 4;
  const auto g = mse_grad(xh, x, B);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 12; ++i) {
    auto p = xh, m = xh;
    p[i] += h;
    m[i] -= h;
    const double fd = (mse(p, x) - mse(m, x)) / (2 * h) / B;
    EXPECT_NEAR(g[i], fd, 1e-8);
  }
}

TEST(Split, Sizes) {
  Rng r(1);
  const auto s = make_split(200, 0.2, 0.2, r);
  EXPECT_EQ(s.test.size(), 40u);
  EXPECT_EQ(s.validation.size(), 32u);
  EXPECT_EQ(s.train.size(), 128u);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 200; ++i) EXPECT_EQ(all[i], i);
}

TEST(Decimate, KeepsEndpoints) {
  std::vector<TrajectoryPoint> pts;
  for (std::size_t i = 0; i < 5001; ++i) pts.push_back({i, 1.0 / (i + 1), 0.0});
  const auto d = decimate(pts, 2000);
  ASSERT_EQ(d.size(), 2000u);
  EXPECT_EQ(d.front().step, 0u);
  EXPECT_EQ(d.back().step, 5000u);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d[i - 1].step, d[i].step);
  EXPECT_EQ(decimate(std::vector<TrajectoryPoint>(3), 2000).size(), 3u);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(TrainModel, ZeroEpochsKeepsInitialization) {
  const auto ds = tones(20, 32, 3, 1);
  auto m = build_architecture(ds.grid(), Variant::bof, nullptr, {{8}, 1});
  initialize(m, {Variant::bof, nullptr, {}, kInformedOutputGain, 2});
  const auto theta = m.parameters();
  Rng r(4);
  const auto split = make_split(20, 0.2, 0.2, r);
  const auto res = train_model(m, ds, split, quick(0), Rng(5));
  EXPECT_EQ(m.parameters(), theta);
  EXPECT_EQ(res.epochs_run, 0u);
  EXPECT_EQ(res.steps, 0u);
  EXPECT_EQ(res.final_displacement, 0.0);
  EXPECT_NEAR(res.final_test_mse, evaluate(m, ds, split.test), 0.0);
  EXPECT_EQ(res.trajectory.size(), 1u);
}

TEST(TrainModel, PatienceOneStopsOnFlatLoss) {
  TimeGrid g(16);
  std::vector<TimeSeries> s;
  for (int i = 0; i < 10; ++i) s.push_back({"z" + std::to_string(i), std::vector<double>(16, 0.0)});
  const TimeSeriesDataset ds(g, s);
  auto m = build_architecture(g, Variant::bof, nullptr, {{4}, 1});  // all-zero parameters
  auto cfg = quick(10);
  cfg.patience = 1;
  Rng r(1);
  const auto res = train_model(m, ds, make_split(10, 0.2, 0.2, r), cfg, Rng(2));
  EXPECT_EQ(res.epochs_run, 1u);
  EXPECT_EQ(res.best_epoch, 0u);
  EXPECT_EQ(res.final_validation_mse, 0.0);
}

TEST(TrainModel, EmptySplitRejected) {
  const auto ds = tones(5, 16, 2, 1);
  auto m = build_architecture(ds.grid(), Variant::bof, nullptr, {{4}, 1});
  DataSplit split{{0, 1, 2}, {3}, {}};
  EXPECT_THROW(train_model(m, ds, split, quick(1), Rng(1)), ArgumentError);
}

TEST(TrainModel, BestCheckpointNeverWorseThanInit) {
  const auto ds = generate_synthetic(40, 32, 2, 0.1);
  auto m = build_architecture(ds.grid(), Variant::hbof, nullptr, {{16}, 1});
  initialize(m, {Variant::hbof, nullptr, {}, kInformedOutputGain, 3});
  Rng r(2);
  const auto split = make_split(40, 0.2, 0.2, r);
  const double init_val = evaluate(m, ds, split.validation);
  auto cfg = quick(8);
  cfg.lr = 1e-2;
  const auto res = train_model(m, ds, split, cfg, Rng(3));
  EXPECT_LE(res.final_validation_mse, init_val);
  EXPECT_NEAR(evaluate(m, ds, split.validation), res.final_validation_mse, 1e-12);
  EXPECT_GT(res.steps, 0u);
  EXPECT_EQ(res.trajectory.front().step, 0u);
}

TEST(TrainModel, InformedSinusoidConverges) {
  const auto ds = tones(1000, 64, 4, 7);
  const auto cfg = derive_config(ds);
  ASSERT_EQ(cfg.S, 1u);
  BofModel m(ds.grid(), {seasonal_stage()}, {64, 64}, Variant::ibof);
  initialize(m, {Variant::ibof, &cfg, {}, kInformedOutputGain, 1});
  Rng r(8);
  const auto split = make_split(1000, 0.2, 0.2, r);
  auto tc = quick(20);
  tc.patience = 20;
  const auto res = train_model(m, ds, split, tc, Rng(9));
  EXPECT_LE(res.epochs_run, 20u);
  EXPECT_LT(res.final_train_mse, 1e-3);
}

TEST(TrainModel, Deterministic) {
  const auto ds = generate_synthetic(30, 32, 4, 0.2);
  auto run = [&] {
    auto m = build_architecture(ds.grid(), Variant::hbof, nullptr, {{8}, 1});
    initialize(m, {Variant::hbof, nullptr, {}, kInformedOutputGain, 6});
    Rng r(1);
    const auto res = train_model(m, ds, make_split(30, 0.2, 0.2, r), quick(3), Rng(2));
    return std::make_pair(m.parameters(), to_json(res).dump());
  };
  EXPECT_EQ(run(), run());
}

TEST(Comparison, SingleTrialHasZeroStd) {
  const auto ds = generate_synthetic(20, 32, 5, 0.1);
  const std::array<Variant, 1> v{Variant::bof};
  const auto rep = run_comparison(ds, nullptr, quick(2), v, 1, {{8}, 1});
  ASSERT_EQ(rep.variants.size(), 1u);
  EXPECT_EQ(rep.at(Variant::bof).test_mse_std, 0.0);
  EXPECT_EQ(rep.at(Variant::bof).trials.size(), 1u);
  EXPECT_THROW(rep.at(Variant::itbof), ArgumentError);
}

TEST(Comparison, IndependentOfJobs) {
  const auto ds = generate_synthetic(30, 32, 6, 0.1);
  const auto cfg = derive_config(ds);
  auto tc = quick(3, 11);
  tc.trials = 3;
  const ArchitectureOptions arch{{8}, 1};
  const auto a = run_comparison(ds, &cfg, tc, kAllVariants, 1, arch);
  const auto b = run_comparison(ds, &cfg, tc, kAllVariants, 4, arch);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Comparison, VariantsSharePairedSplits) {
  const auto ds = generate_synthetic(30, 32, 6, 0.1);
  const auto cfg = derive_config(ds);
  auto tc = quick(1, 2);
  tc.trials = 2;
  const auto rep = run_comparison(ds, &cfg, tc, kAllVariants, 2, {{8}, 1});
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(rep.at(Variant::bof).trials[k].seed, rep.at(Variant::itbof).trials[k].seed);
  EXPECT_LT(rep.at(Variant::itbof).param_count, rep.at(Variant::ibof).param_count);
}

TEST(Comparison, MissingConfigRejected) {
  const auto ds = generate_synthetic(10, 16, 1, 0.1);
  const std::array<Variant, 2> v{Variant::bof, Variant::ibof};
  EXPECT_THROW(run_comparison(ds, nullptr, quick(1), v), ConfigError);
}

TEST(Reports, TrajectoryCsvAndJson) {
  TrialResult r;
  r.trajectory = {{0, 1.5, 0.0}, {1, 0.25, 0.001}};
  EXPECT_EQ(trajectory_csv(r), "step,loss,displacement\n0,1.5,0\n1,0.25,0.001\n");
  const auto j = to_json(r);
  EXPECT_EQ(j["trajectory"]["loss"].size(), 2u);
  EXPECT_FALSE(j.contains("wall_seconds"));
  EXPECT_FALSE(to_json(r, false).contains("trajectory"));
}

TEST(Reports, MeanStd) {
  EXPECT_EQ(mean_std(std::vector<double>{4.0}), std::make_pair(4.0, 0.0));
  const auto [m, s] = mean_std(std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
}
