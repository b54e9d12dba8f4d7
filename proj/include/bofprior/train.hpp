#pragma once

#include <bofprior/dataset.hpp>
#include <bofprior/error.hpp>
#include <bofprior/io.hpp>
#include <bofprior/model.hpp>
#include <bofprior/parallel.hpp>
#include <bofprior/priors.hpp>
#include <bofprior/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <tuple>
#include <string>
#include <vector>

namespace bofprior {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& st,
                      const AdamOptions& o = {}) {
  if (grads.size() != params.size() || st.m.size() != params.size() || st.v.size() != params.size())
    throw ArgumentError("adam_step: shape mismatch");
  ++st.t;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = o.beta1 * st.m[i] + (1.0 - o.beta1) * grads[i];
    st.v[i] = o.beta2 * st.v[i] + (1.0 - o.beta2) * grads[i] * grads[i];
    params[i] -= o.lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + o.eps);
  }
}

inline double mse(std::span<const double> x_hat, std::span<const double> x) {
  if (x_hat.size() != x.size()) throw ArgumentError("mse: length mismatch");
  if (x.empty()) throw ArgumentError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x_hat[i] - x[i]) * (x_hat[i] - x[i]);
  return acc / static_cast<double>(x.size());
}

/// dL/dx_hat of the batch mean squared error for one series of the batch.
inline std::vector<double> mse_grad(std::span<const double> x_hat, std::span<const double> x, std::size_t batch) {
  if (x_hat.size() != x.size()) throw ArgumentError("mse_grad: length mismatch");
  if (batch == 0) throw ArgumentError("mse_grad: batch must be >= 1");
  std::vector<double> g(x.size());
  const double s = 2.0 / static_cast<double>(batch * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = s * (x_hat[i] - x[i]);
  return g;
}

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double min_delta = 1e-6;
  double test_fraction = 0.2;
  double validation_fraction = 0.2;  // of the non-test part
  std::uint64_t seed = 0;
  std::size_t trials = 10;
  std::size_t max_trajectory_points = 2000;

  void validate() const {
    if (!(lr > 0.0)) throw ArgumentError("learning rate must be positive");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
    if (patience < 1) throw ArgumentError("patience must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
      throw ArgumentError("validation fraction must lie in (0, 0.5]");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ArgumentError("test fraction must lie in (0, 1)");
    if (trials < 1) throw ArgumentError("trials must be >= 1");
    if (max_trajectory_points < 2) throw ArgumentError("trajectory needs room for at least 2 points");
  }
};

struct DataSplit {
  std::vector<std::size_t> train, validation, test;
};

/// Shuffles 0..n-1, takes the test share off the front, then the
/// validation share of what remains.
inline DataSplit make_split(std::size_t n, double test_fraction, double validation_fraction, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  const std::size_t rest = n - std::min(n, n_test);
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(rest) * validation_fraction));
  DataSplit s;
  s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_test)));
  s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(s.test.size()),
                      idx.begin() + static_cast<std::ptrdiff_t>(s.test.size() + std::min(rest, n_val)));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(s.test.size() + s.validation.size()), idx.end());
  if (s.train.empty() || s.validation.empty() || s.test.empty())
    throw ArgumentError("dataset of " + std::to_string(n) + " series is too small for a train/validation/test split");
  return s;
}

struct TrajectoryPoint {
  std::size_t step = 0;
  double loss = 0.0;
  double displacement = 0.0;
};

struct TrialResult {
  Variant variant = Variant::bof;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double initial_batch_loss = 0.0;
  double final_train_mse = 0.0;
  double final_validation_mse = 0.0;
  double final_test_mse = 0.0;
  double final_displacement = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
  std::size_t param_count = 0;
  std::vector<TrajectoryPoint> trajectory;  // decimated
  double wall_seconds = 0.0;
};

/// Mean MSE of the model over a subset of the dataset.
inline double evaluate(const BofModel& model, const TimeSeriesDataset& ds, std::span<const std::size_t> idx) {
  if (idx.empty()) throw ArgumentError("evaluation set is empty");
  double acc = 0.0;
  for (auto i : idx) acc += mse(model.forward(ds[i].values).x_hat, ds[i].values);
  return acc / static_cast<double>(idx.size());
}

/// Evenly spaced subsample keeping the first and last point.
inline std::vector<TrajectoryPoint> decimate(const std::vector<TrajectoryPoint>& pts, std::size_t max_points) {
  if (pts.size() <= max_points) return pts;
  std::vector<TrajectoryPoint> out;
  out.reserve(max_points);
  const std::size_t L = pts.size() - 1, D = max_points - 1;
  for (std::size_t i = 0; i < max_points; ++i) out.push_back(pts[(2 * i * L + D) / (2 * D)]);
  return out;
}

/// Mini-batch Adam on the MSE with early stopping on validation MSE. The
/// model ends holding the best checkpoint; epoch 0 is the initialization.
inline TrialResult train_model(BofModel& model, const TimeSeriesDataset& ds, const DataSplit& split,
                               const TrainConfig& cfg, Rng shuffle_rng, const std::string& trial_name = "trial") {
  cfg.validate();
  if (split.train.empty() || split.validation.empty() || split.test.empty())
    throw ArgumentError("train_model needs non-empty train, validation and test sets");
  if (ds.n_samples() != model.grid().size()) throw ArgumentError("dataset length does not match the model grid");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> theta0 = model.parameters();
  const std::size_t P = model.param_count();

  TrialResult r;
  r.param_count = P;
  r.variant = model.variant();

  auto check = [&](double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(trial_name + ": non-finite " + what);
  };
  double best = evaluate(model, ds, split.validation);
  check(best, "validation loss at initialization");
  std::vector<double> best_theta = theta0;
  std::vector<TrajectoryPoint> traj;
  AdamState adam(P);
  const AdamOptions aopt{cfg.lr};
  std::vector<double> grad(P);
  std::vector<std::size_t> order = split.train;
  ForwardCache cache;
  std::size_t bad = 0;
  bool first = true;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t B = std::min(cfg.batch_size, order.size() - b0);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (std::size_t k = 0; k < B; ++k) {
        const auto& x = ds[order[b0 + k]].values;
        const auto rec = model.forward(x, &cache);
        loss += mse(rec.x_hat, x);
        model.backward(cache, mse_grad(rec.x_hat, x, B), grad);
      }
      loss /= static_cast<double>(B);
      check(loss, "training loss");
      for (double g : grad)
        if (!std::isfinite(g)) throw NumericalError(trial_name + ": non-finite gradient");
      if (first) {
        r.initial_batch_loss = loss;
        first = false;
      }
      adam_step(model.parameters(), grad, adam, aopt);
      traj.push_back({r.steps, loss, param_displacement(model.parameters(), theta0)});
      ++r.steps;
    }
    r.epochs_run = epoch;
    const double val = evaluate(model, ds, split.validation);
    check(val, "validation loss");
    if (val < best - cfg.min_delta) {
      best = val;
      best_theta = model.parameters();
      r.best_epoch = epoch;
      bad = 0;
    } else if (++bad >= cfg.patience) {
      break;
    }
  }

  model.set_parameters(std::move(best_theta));
  r.final_validation_mse = best;
  r.final_train_mse = evaluate(model, ds, split.train);
  r.final_test_mse = evaluate(model, ds, split.test);
  check(r.final_test_mse, "test loss");
  r.final_displacement = param_displacement(model.parameters(), theta0);
  if (traj.empty()) {
    r.initial_batch_loss = r.final_train_mse;
    traj.push_back({0, r.final_train_mse, 0.0});
  }
  r.trajectory = decimate(traj, cfg.max_trajectory_points);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

struct VariantSummary {
  Variant variant = Variant::bof;
  std::size_t param_count = 0;
  std::vector<TrialResult> trials;
  double train_mse_mean = 0.0, train_mse_std = 0.0;
  double test_mse_mean = 0.0, test_mse_std = 0.0;
  double displacement_mean = 0.0;
  double initial_loss_mean = 0.0;
  std::size_t best_trial = 0;  // lowest test MSE
};

struct ComparisonReport {
  std::vector<VariantSummary> variants;
  TrainConfig config;
  std::size_t n_series = 0;
  std::size_t n_samples = 0;

  const VariantSummary& at(Variant v) const {
    for (const auto& s : variants)
      if (s.variant == v) return s;
    throw ArgumentError("variant " + std::string(display_name(v)) + " is not in the report");
  }
};

/// Sample mean and standard deviation (n - 1 divisor; 0 for one value).
inline std::pair<double, double> mean_std(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  const auto n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() == 1) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0))};
}

/// Substreams of the root seed: trial k uses split("split", k) for its data
/// split, split("shuffle", k) for batch order and split("init", k) for
/// weights, all shared by every variant so trials are paired.
inline ComparisonReport run_comparison(const TimeSeriesDataset& ds, const PriorConfig* config,
                                       const TrainConfig& cfg, std::span<const Variant> variants,
                                       std::size_t jobs = 1, const ArchitectureOptions& arch = {},
                                       const RoleTable& table = {}) {
  cfg.validate();
  if (variants.empty()) throw ArgumentError("no variants to compare");
  for (auto v : variants)
    if (needs_config(v) && !config)
      throw ConfigError(std::string(display_name(v)) + " needs a prior configuration");
  const Rng root(cfg.seed);
  const std::size_t n_trials = cfg.trials;
  std::vector<DataSplit> splits(n_trials);
  for (std::size_t k = 0; k < n_trials; ++k) {
    Rng r = root.split("split", k);
    splits[k] = make_split(ds.n_series(), cfg.test_fraction, cfg.validation_fraction, r);
  }
  // Build every model up front so configuration errors surface before work starts.
  std::vector<BofModel> protos;
  for (auto v : variants) protos.push_back(build_architecture(ds.grid(), v, config, arch));

  std::vector<TrialResult> slots(variants.size() * n_trials);
  parallel_for(slots.size(), jobs, [&](std::size_t job) {
    const std::size_t vi = job / n_trials, k = job % n_trials;
    BofModel model = protos[vi];
    InitStrategy init;
    init.variant = variants[vi];
    init.config = config;
    init.table = table;
    init.seed = root.split("init", k).next_u64();
    initialize(model, init);
    const std::string name = std::string(display_name(variants[vi])) + " trial " + std::to_string(k);
    auto r = train_model(model, ds, splits[k], cfg, root.split("shuffle", k), name);
    r.trial = k;
    r.seed = init.seed;
    slots[job] = std::move(r);
  });

  ComparisonReport rep;
  rep.config = cfg;
  rep.n_series = ds.n_series();
  rep.n_samples = ds.n_samples();
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    VariantSummary s;
    s.variant = variants[vi];
    s.param_count = protos[vi].param_count();
    std::vector<double> tr, te, disp, init_loss;
    for (std::size_t k = 0; k < n_trials; ++k) {
      auto& r = slots[vi * n_trials + k];
      tr.push_back(r.final_train_mse);
      te.push_back(r.final_test_mse);
      disp.push_back(r.final_displacement);
      init_loss.push_back(r.initial_batch_loss);
      s.trials.push_back(std::move(r));
    }
    std::tie(s.train_mse_mean, s.train_mse_std) = mean_std(tr);
    std::tie(s.test_mse_mean, s.test_mse_std) = mean_std(te);
    s.displacement_mean = mean_std(disp).first;
    s.initial_loss_mean = mean_std(init_loss).first;
    s.best_trial = static_cast<std::size_t>(std::min_element(te.begin(), te.end()) - te.begin());
    rep.variants.push_back(std::move(s));
  }
  return rep;
}

// ---- reports ----

inline std::string trajectory_csv(const TrialResult& r) {
  std::string out = "step,loss,displacement\n";
  for (const auto& p : r.trajectory)
    out += std::to_string(p.step) + "," + io::format_double(p.loss) + "," + io::format_double(p.displacement) + "\n";
  return out;
}

/// Deterministic fields only; wall time is reported separately.
inline nlohmann::json to_json(const TrialResult& r, bool with_trajectory = true) {
  nlohmann::json j = {{"variant", to_string(r.variant)},
                      {"trial", r.trial},
                      {"seed", r.seed},
                      {"initial_batch_loss", r.initial_batch_loss},
                      {"final_train_mse", r.final_train_mse},
                      {"final_validation_mse", r.final_validation_mse},
                      {"final_test_mse", r.final_test_mse},
                      {"final_displacement", r.final_displacement},
                      {"epochs_run", r.epochs_run},
                      {"best_epoch", r.best_epoch},
                      {"steps", r.steps},
                      {"param_count", r.param_count}};
  if (with_trajectory) {
    nlohmann::json steps = nlohmann::json::array(), loss = nlohmann::json::array(), disp = nlohmann::json::array();
    for (const auto& p : r.trajectory) {
      steps.push_back(p.step);
      loss.push_back(p.loss);
      disp.push_back(p.displacement);
    }
    j["trajectory"] = {{"step", steps}, {"loss", loss}, {"displacement", disp}};
  }
  return j;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.lr},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"min_delta", c.min_delta},
          {"test_fraction", c.test_fraction},
          {"validation_fraction", c.validation_fraction},
          {"seed", c.seed},
          {"trials", c.trials}};
}

inline nlohmann::json to_json(const ComparisonReport& rep) {
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& s : rep.variants) {
    nlohmann::json trials = nlohmann::json::array();
    for (std::size_t k = 0; k < s.trials.size(); ++k) trials.push_back(to_json(s.trials[k], k == s.best_trial));
    vs.push_back({{"variant", to_string(s.variant)},
                  {"param_count", s.param_count},
                  {"train_mse_mean", s.train_mse_mean},
                  {"train_mse_std", s.train_mse_std},
                  {"test_mse_mean", s.test_mse_mean},
                  {"test_mse_std", s.test_mse_std},
                  {"displacement_mean", s.displacement_mean},
                  {"initial_loss_mean", s.initial_loss_mean},
                  {"best_trial", s.best_trial},
                  {"trials", trials}});
  }
  return {{"schema_version", 1},
          {"n_series", rep.n_series},
          {"n_samples", rep.n_samples},
          {"train_config", to_json(rep.config)},
          {"variants", vs}};
}

/// Wall-clock data, kept out of the reproducible part of a report.
inline nlohmann::json run_info(const ComparisonReport& rep, double total_seconds, std::size_t jobs) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& s : rep.variants) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& t : s.trials) w.push_back(t.wall_seconds);
    per[std::string(to_string(s.variant))] = w;
  }
  const auto now = std::chrono::system_clock::now();
  return {{"timestamp_unix", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
          {"wall_seconds_total", total_seconds},
          {"trial_wall_seconds", per},
          {"jobs", jobs}};
}

} // namespace bofprior
