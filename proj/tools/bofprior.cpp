// bofprior: derive Bag-of-Functions priors from time-series data and run the
// initialization experiments.
//
// exit codes: 0 ok, 1 usage or configuration, 2 data/format/io, 3 numerical.

#include <bofprior/dataset.hpp>
#include <bofprior/io.hpp>
#include <bofprior/model.hpp>
#include <bofprior/priors.hpp>
#include <bofprior/spectral.hpp>
#include <bofprior/train.hpp>
#include <bofprior/trend.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bofprior;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct GenerateOpts {
  std::size_t n = 2000;
  std::size_t t = 100;
  std::uint64_t seed = 0;
  double noise = 0.01;
  double duration = 1.0;
  fs::path out;
};

struct AnalyzeOpts {
  fs::path data;
  double tau = kDefaultTau;
  double delta = kDefaultDelta;
  double alpha = kDefaultAlpha;
  fs::path out;
  fs::path spectral_out;
  fs::path trend_out;
};

struct BoundsOpts {
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  double delta = kDefaultDelta;
  double alpha = kDefaultAlpha;
  fs::path out;
  fs::path json_out;
};

struct TrainOpts {
  fs::path data;
  fs::path config;
  fs::path role_table;
  std::string variant = "it-bof";
  std::vector<std::string> variants;
  std::size_t trials = 10;
  std::size_t epochs = 50;
  std::size_t batch = 16;
  std::size_t patience = 5;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  fs::path out;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void check_unit_interval(const char* flag, double v) {
  if (!(v > 0.0 && v < 1.0)) throw ArgumentError(std::string(flag) + " must lie in (0, 1), got " + std::to_string(v));
}

int cmd_generate(const GenerateOpts& o) {
  if (o.n < 1) throw ArgumentError("--n must be >= 1");
  if (o.t < 2) throw ArgumentError("--t must be >= 2");
  if (!(o.noise >= 0.0)) throw ArgumentError("--noise must be >= 0");
  if (!(o.duration > 0.0)) throw ArgumentError("--duration must be positive");
  GeneratorOptions g;
  g.duration_seconds = o.duration;
  const auto ds = generate_synthetic(o.n, o.t, o.seed, o.noise, g);
  io::OutputBatch batch;
  batch.stage(o.out, to_csv(ds));
  batch.stage(sidecar_path(o.out), dump(sidecar_json(ds)));
  batch.commit();
  std::cout << "wrote " << o.out.string() << " (N=" << ds.n_series() << ", T=" << ds.n_samples() << ")\n";
  return kOk;
}

int cmd_analyze(const AnalyzeOpts& o) {
  check_unit_interval("--tau", o.tau);
  check_unit_interval("--alpha", o.alpha);
  if (!(o.delta > 0.0)) throw ArgumentError("--delta must be positive");
  const auto ds = load_csv(o.data);
  const auto a = analyze(ds, o.tau, o.delta, o.alpha);
  const auto& c = a.config;

  io::OutputBatch batch;
  batch.stage(o.out, dump(config_to_json(c)));
  batch.stage(io::sibling(o.out, ".periodogram.csv"), periodogram_csv(a.periodogram));
  if (!o.spectral_out.empty()) batch.stage(o.spectral_out, dump(to_json(a.spectral)));
  if (!o.trend_out.empty()) batch.stage(o.trend_out, dump(to_json(a.trend)));
  batch.commit();

  std::string modes = "[";
  for (std::size_t j = 0; j < c.modes.size(); ++j)
    modes += (j ? ", " : "") + fixed(ds.grid().cycles_to_hz(c.modes[j].freq), 2);
  modes += "]";
  std::printf("%-24s %-9s %-6s %-28s %-10s %s\n", "dataset", "rho_spec", "depth", "modes (Hz)", "sigma_eps", "n_opt");
  std::printf("%-24s %-9s %-6zu %-28s %-10s %zu\n", o.data.filename().string().c_str(), fixed(c.rho_spec, 3).c_str(),
              c.S, modes.c_str(), fixed(c.sigma_eps, 3).c_str(), c.n_in);
  std::printf("depth=%zu rho=%s n_opt=%zu\n", c.S, fixed(c.rho_spec, 2).c_str(), c.n_in);
  for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int cmd_verify_bounds(const BoundsOpts& o, std::size_t jobs) {
  if (o.trials < 2) throw ArgumentError("--trials must be >= 2");
  if (!(o.sigma > 0.0) || !(o.delta > 0.0)) throw ArgumentError("--sigma and --delta must be positive");
  check_unit_interval("--alpha", o.alpha);
  const auto cells = verify_concentration(BoundMatrix{}, o.trials, o.seed, jobs);

  std::string csv = "n,sigma,delta,trials,exceedance,bound,slack,variance_ratio,pass\n";
  json jc = json::array();
  bool ok = true;
  for (const auto& c : cells) {
    ok = ok && c.passed();
    csv += std::to_string(c.n) + "," + io::format_double(c.sigma) + "," + io::format_double(c.delta) + "," +
           std::to_string(c.trials) + "," + io::format_double(c.exceedance) + "," + io::format_double(c.bound) + "," +
           io::format_double(c.slack) + "," + io::format_double(c.variance_ratio) + "," + (c.passed() ? "1" : "0") +
           "\n";
    jc.push_back({{"n", c.n},
                  {"sigma", c.sigma},
                  {"delta", c.delta},
                  {"trials", c.trials},
                  {"exceedance", c.exceedance},
                  {"bound", c.bound},
                  {"slack", c.slack},
                  {"variance_ratio", c.variance_ratio},
                  {"bound_ok", c.bound_ok},
                  {"variance_ok", c.variance_ok}});
  }
  const std::size_t n_req = min_window(o.sigma, o.delta, o.alpha);
  io::OutputBatch batch;
  batch.stage(o.out, csv);
  if (!o.json_out.empty())
    batch.stage(o.json_out, dump({{"schema_version", 1},
                                  {"seed", o.seed},
                                  {"cells", jc},
                                  {"sizing", {{"sigma", o.sigma}, {"delta", o.delta}, {"alpha", o.alpha}, {"n", n_req}}},
                                  {"all_passed", ok}}));
  batch.commit();

  std::printf("%-4s %-6s %-6s %-12s %-12s %-10s %s\n", "n", "sigma", "delta", "exceedance", "bound", "var_ratio", "ok");
  for (const auto& c : cells)
    std::printf("%-4zu %-6s %-6s %-12s %-12s %-10s %s\n", c.n, fixed(c.sigma, 2).c_str(), fixed(c.delta, 2).c_str(),
                fixed(c.exceedance, 5).c_str(), fixed(c.bound, 5).c_str(), fixed(c.variance_ratio, 4).c_str(),
                c.passed() ? "yes" : "NO");
  std::printf("sizing: sigma^2=%s delta=%s alpha=%s -> n=%zu\n", io::format_double(o.sigma * o.sigma).c_str(),
              io::format_double(o.delta).c_str(), io::format_double(o.alpha).c_str(), n_req);
  if (!ok) {
    std::cerr << "error: at least one Monte Carlo cell violates the bound\n";
    return kNumerical;
  }
  return kOk;
}

TrainConfig train_config(const TrainOpts& o) {
  TrainConfig tc;
  tc.lr = o.lr;
  tc.batch_size = o.batch;
  tc.max_epochs = o.epochs;
  tc.patience = o.patience;
  tc.seed = o.seed;
  tc.trials = o.trials;
  tc.validate();
  return tc;
}

std::optional<PriorConfig> load_config(const fs::path& p) {
  if (p.empty()) return std::nullopt;
  std::vector<std::string> warnings;
  auto c = config_from_string(io::read_file(p), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << p.string() << ": " << w << "\n";
  return c;
}

RoleTable load_role_table(const fs::path& p) {
  if (p.empty()) return {};
  json j;
  try {
    j = json::parse(io::read_file(p));
  } catch (const json::parse_error& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
  std::vector<std::string> warnings;
  auto t = role_table_from_json(j, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << p.string() << ": " << w << "\n";
  return t;
}

void print_table(const ComparisonReport& rep) {
  std::printf("%-8s %-8s %-20s %-20s %-13s %s\n", "variant", "params", "train MSE", "test MSE", "displacement",
              "initial loss");
  for (const auto& s : rep.variants)
    std::printf("%-8s %-8zu %-20s %-20s %-13s %s\n", std::string(display_name(s.variant)).c_str(), s.param_count,
                (fixed(s.train_mse_mean, 4) + " +/- " + fixed(s.train_mse_std, 4)).c_str(),
                (fixed(s.test_mse_mean, 4) + " +/- " + fixed(s.test_mse_std, 4)).c_str(),
                fixed(s.displacement_mean, 5).c_str(), fixed(s.initial_loss_mean, 4).c_str());
}

int run_training(const TrainOpts& o, const std::vector<Variant>& variants, std::size_t jobs, bool single) {
  const auto tc = train_config(o);
  for (auto v : variants)
    if (needs_config(v) && o.config.empty())
      throw ConfigError(std::string(display_name(v)) + " needs --config (run `bofprior analyze` first)");
  const auto table = load_role_table(o.role_table);
  const auto config = load_config(o.config);
  const auto ds = load_csv(o.data);
  if (config && config->n_samples() != ds.n_samples())
    throw ConfigError("config was derived for series of length " + std::to_string(config->n_samples()) +
                      ", data has " + std::to_string(ds.n_samples()));

  const auto start = std::chrono::steady_clock::now();
  const auto rep = run_comparison(ds, config ? &*config : nullptr, tc, variants, jobs, {}, table);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json j = to_json(rep);
  j["run_info"] = run_info(rep, secs, jobs);
  io::OutputBatch batch;
  batch.stage(o.out, dump(j));
  for (const auto& s : rep.variants) {
    if (single) {
      for (const auto& t : s.trials)
        batch.stage(io::sibling(o.out, ".trial" + std::to_string(t.trial) + ".trajectory.csv"), trajectory_csv(t));
    } else {
      batch.stage(io::sibling(o.out, "." + std::string(to_string(s.variant)) + ".trajectory.csv"),
                  trajectory_csv(s.trials[s.best_trial]));
    }
  }
  batch.commit();
  print_table(rep);
  return kOk;
}

std::size_t default_jobs() {
  if (const char* e = std::getenv("BOFPRIOR_JOBS")) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoul(e, &pos);
      if (pos == std::string(e).size() && v >= 1) return v;
    } catch (const std::exception&) {
    }
    throw ArgumentError("BOFPRIOR_JOBS must be a positive integer");
  }
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derive Bag-of-Functions priors from time-series data and compare initialization strategies"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::size_t> jobs_flag;
  app.add_option("--jobs", jobs_flag, "Worker threads for trials and Monte Carlo cells (env BOFPRIOR_JOBS)")
      ->check(CLI::PositiveNumber);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Write the synthetic benchmark dataset as CSV plus sidecar JSON");
  g->add_option("--n", gen.n, "Number of series")->capture_default_str();
  g->add_option("--t", gen.t, "Samples per series")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--noise", gen.noise, "Noise standard deviation")->capture_default_str();
  g->add_option("--duration", gen.duration, "Window length in seconds")->capture_default_str();
  g->add_option("--out", gen.out, "Output CSV path")->required();

  AnalyzeOpts an;
  auto* a = app.add_subcommand("analyze", "Spectral and trend analysis; writes the prior configuration");
  a->add_option("--data", an.data, "Input CSV")->required();
  a->add_option("--tau", an.tau, "Relative power threshold")->capture_default_str();
  a->add_option("--delta", an.delta, "Slope tolerance")->capture_default_str();
  a->add_option("--alpha", an.alpha, "Failure probability")->capture_default_str();
  a->add_option("--out", an.out, "Output config JSON")->required();
  a->add_option("--spectral-report", an.spectral_out, "Optional spectral report JSON");
  a->add_option("--trend-report", an.trend_out, "Optional trend report JSON");

  BoundsOpts bo;
  auto* b = app.add_subcommand("verify-bounds", "Monte Carlo check of the slope concentration bound");
  b->add_option("--trials", bo.trials, "Trials per cell")->capture_default_str();
  b->add_option("--seed", bo.seed, "Random seed")->capture_default_str();
  b->add_option("--sigma", bo.sigma, "Noise std for the sizing row")->capture_default_str();
  b->add_option("--delta", bo.delta, "Slope tolerance for the sizing row")->capture_default_str();
  b->add_option("--alpha", bo.alpha, "Failure probability for the sizing row")->capture_default_str();
  b->add_option("--out", bo.out, "Output CSV")->required();
  b->add_option("--json", bo.json_out, "Optional JSON report");

  TrainOpts tr;
  auto add_train_opts = [](CLI::App* s, TrainOpts& o) {
    s->add_option("--data", o.data, "Input CSV")->required();
    s->add_option("--config", o.config, "Prior configuration JSON from `analyze`");
    s->add_option("--role-table", o.role_table, "JSON table of bias distributions for H-BoF and event roles");
    s->add_option("--trials", o.trials, "Independent trials")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
    s->add_option("--batch", o.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    s->add_option("--patience", o.patience, "Early-stopping patience")->capture_default_str();
    s->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    s->add_option("--out", o.out, "Output report JSON")->required();
  };
  auto* t = app.add_subcommand("train", "Train one variant over several seeded trials");
  add_train_opts(t, tr);
  t->add_option("--variant", tr.variant, "bof | h-bof | i-bof | it-bof")->capture_default_str();

  TrainOpts cp;
  auto* c = app.add_subcommand("compare", "Train every variant on paired trials and tabulate the results");
  add_train_opts(c, cp);
  c->add_option("--variants", cp.variants, "Subset of variants (default: all four)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const std::size_t jobs = jobs_flag ? *jobs_flag : default_jobs();
    if (*g) return cmd_generate(gen);
    if (*a) return cmd_analyze(an);
    if (*b) return cmd_verify_bounds(bo, jobs);
    if (*t) return run_training(tr, {variant_from_string(tr.variant)}, jobs, true);
    if (*c) {
      std::vector<Variant> vs;
      for (const auto& s : cp.variants) vs.push_back(variant_from_string(s));
      if (vs.empty()) vs.assign(kAllVariants.begin(), kAllVariants.end());
      return run_training(cp, vs, jobs, false);
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\nrun with --help for usage\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "error: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
