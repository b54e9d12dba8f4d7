#include "support.hpp"

#include <bofprior/dataset.hpp>
#include <bofprior/io.hpp>

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <numbers>
#include <regex>

using namespace bofprior;
using testsupport::cli;
namespace fs = std::filesystem;

namespace {

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string strip_run_info(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("run_info");
  return j.dump();
}

} // namespace

TEST(Cli, HelpAndUnknownCommand) {
  const auto h = cli("--help");
  EXPECT_EQ(h.code, 0);
  for (const char* c : {"generate", "analyze", "verify-bounds", "train", "compare"})
    EXPECT_NE(h.out.find(c), std::string::npos) << c;
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("").code, 1);
}

TEST(Cli, GenerateWritesCsvAndSidecar) {
  const auto dir = testsupport::scratch("cli_generate");
  const auto r = cli("generate --n 2000 --t 100 --seed 7 --noise 0.01 --out " + q(dir / "syn.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto ds = load_csv(dir / "syn.csv");
  EXPECT_EQ(ds.n_series(), 2000u);
  EXPECT_EQ(ds.n_samples(), 100u);
  EXPECT_TRUE(fs::exists(sidecar_path(dir / "syn.csv")));
  EXPECT_NE(r.out.find("N=2000"), std::string::npos);
}

TEST(Cli, GenerateIsReproducible) {
  const auto dir = testsupport::scratch("cli_generate_twice");
  ASSERT_EQ(cli("generate --n 50 --t 40 --seed 3 --out " + q(dir / "a.csv")).code, 0);
  ASSERT_EQ(cli("generate --n 50 --t 40 --seed 3 --out " + q(dir / "b.csv")).code, 0);
  EXPECT_EQ(io::read_file(dir / "a.csv"), io::read_file(dir / "b.csv"));
  EXPECT_EQ(io::read_file(sidecar_path(dir / "a.csv")), io::read_file(sidecar_path(dir / "b.csv")));
}

TEST(Cli, GenerateRejectsZeroSeries) {
  const auto dir = testsupport::scratch("cli_generate_bad");
  const auto r = cli("generate --n 0 --out " + q(dir / "x.csv"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("--help"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir / "x.csv"));
}

TEST(Cli, AnalyzeSyntheticSummary) {
  const auto dir = testsupport::scratch("cli_analyze");
  ASSERT_EQ(cli("generate --n 2000 --t 100 --seed 7 --out " + q(dir / "syn.csv")).code, 0);
  const auto r = cli("analyze --data " + q(dir / "syn.csv") + " --tau 0.2 --delta 0.2 --out " + q(dir / "cfg.json") +
                     " --spectral-report " + q(dir / "spec.json") + " --trend-report " + q(dir / "trend.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::regex_search(r.out, std::regex("depth=3 rho=0\\.87 n_opt=1[12]"))) << r.out;
  for (const char* f : {"cfg.json", "cfg.periodogram.csv", "spec.json", "trend.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto cfg = nlohmann::json::parse(io::read_file(dir / "cfg.json"));
  EXPECT_EQ(cfg["S"], 3);
  EXPECT_EQ(cfg["schema_version"], 1);
}

TEST(Cli, AnalyzePureTone) {
  const auto dir = testsupport::scratch("cli_tone");
  TimeGrid g(64);
  std::vector<TimeSeries> s;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> y(64);
    for (std::size_t j = 0; j < 64; ++j) y[j] = (1 + 0.1 * i) * std::sin(2 * std::numbers::pi * 6 * g[j] + i);
    s.push_back({"s" + std::to_string(i), y});
  }
  save_csv(TimeSeriesDataset(g, s), dir / "tone.csv");
  const auto r = cli("analyze --data " + q(dir / "tone.csv") + " --out " + q(dir / "cfg.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("depth=1 "), std::string::npos) << r.out;
}

TEST(Cli, AnalyzeErrors) {
  const auto dir = testsupport::scratch("cli_analyze_bad");
  ASSERT_EQ(cli("generate --n 20 --t 32 --out " + q(dir / "d.csv")).code, 0);
  EXPECT_EQ(cli("analyze --data " + q(dir / "d.csv") + " --tau 1.5 --out " + q(dir / "c.json")).code, 1);
  io::write_file_atomic(dir / "bad.csv", "1,2,3\n4,five,6\n");
  const auto r = cli("analyze --data " + q(dir / "bad.csv") + " --out " + q(dir / "c.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("row 2"), std::string::npos) << r.out;
  EXPECT_EQ(cli("analyze --data " + q(dir / "missing.csv") + " --out " + q(dir / "c.json")).code, 2);
  EXPECT_FALSE(fs::exists(dir / "c.json"));
  EXPECT_EQ(cli("analyze --out " + q(dir / "c.json")).code, 1);
}

TEST(Cli, VerifyBoundsPassesAndIsJobIndependent) {
  const auto dir = testsupport::scratch("cli_bounds");
  const auto a = cli("verify-bounds --seed 4 --out " + q(dir / "a.csv") + " --json " + q(dir / "a.json"));
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find("-> n=21"), std::string::npos) << a.out;
  const auto csv = io::read_file(dir / "a.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
  const auto j = nlohmann::json::parse(io::read_file(dir / "a.json"));
  EXPECT_TRUE(j["all_passed"].get<bool>());
  for (const auto& c : j["cells"]) {
    EXPECT_GE(c["variance_ratio"].get<double>(), 0.97);
    EXPECT_LE(c["variance_ratio"].get<double>(), 1.03);
  }
  ASSERT_EQ(cli("--jobs 3 verify-bounds --seed 4 --out " + q(dir / "b.csv")).code, 0);
  ASSERT_EQ(cli("verify-bounds --seed 4 --out " + q(dir / "c.csv"), "BOFPRIOR_JOBS=2").code, 0);
  EXPECT_EQ(io::read_file(dir / "b.csv"), csv);
  EXPECT_EQ(io::read_file(dir / "c.csv"), csv);
  EXPECT_EQ(cli("verify-bounds --out " + q(dir / "d.csv"), "BOFPRIOR_JOBS=zero").code, 1);
  EXPECT_EQ(cli("verify-bounds --trials 1 --out " + q(dir / "d.csv")).code, 1);
}

TEST(Cli, TrainNeedsConfigForInformedVariants) {
  const auto dir = testsupport::scratch("cli_train_cfg");
  ASSERT_EQ(cli("generate --n 20 --t 32 --out " + q(dir / "d.csv")).code, 0);
  const auto r = cli("train --data " + q(dir / "d.csv") + " --variant it-bof --out " + q(dir / "r.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("--config"), std::string::npos) << r.out;
  EXPECT_EQ(cli("train --data " + q(dir / "d.csv") + " --variant x-bof --out " + q(dir / "r.json")).code, 1);
  EXPECT_FALSE(fs::exists(dir / "r.json"));
}

TEST(Cli, ConfigLengthMismatchIsUsageError) {
  const auto dir = testsupport::scratch("cli_mismatch");
  ASSERT_EQ(cli("generate --n 20 --t 32 --out " + q(dir / "a.csv")).code, 0);
  ASSERT_EQ(cli("generate --n 20 --t 40 --out " + q(dir / "b.csv")).code, 0);
  ASSERT_EQ(cli("analyze --data " + q(dir / "a.csv") + " --out " + q(dir / "cfg.json")).code, 0);
  const auto r = cli("train --data " + q(dir / "b.csv") + " --variant i-bof --config " + q(dir / "cfg.json") +
                     " --out " + q(dir / "r.json"));
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST(Cli, TrainAndCompareWriteReports) {
  const auto dir = testsupport::scratch("cli_train");
  ASSERT_EQ(cli("generate --n 40 --t 32 --seed 2 --out " + q(dir / "d.csv")).code, 0);
  ASSERT_EQ(cli("analyze --data " + q(dir / "d.csv") + " --out " + q(dir / "cfg.json")).code, 0);
  const std::string common = " --data " + q(dir / "d.csv") + " --config " + q(dir / "cfg.json") +
                             " --trials 2 --epochs 2 --seed 5";
  const auto t = cli("train --variant bof" + common + " --out " + q(dir / "t.json"));
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_TRUE(fs::exists(dir / "t.trial0.trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "t.trial1.trajectory.csv"));

  const auto c = cli("compare" + common + " --out " + q(dir / "c1.json"));
  ASSERT_EQ(c.code, 0) << c.out;
  for (const char* v : {"BoF", "H-BoF", "I-BoF", "IT-BoF"}) EXPECT_NE(c.out.find(v), std::string::npos) << v;
  for (const char* v : {"bof", "h-bof", "i-bof", "it-bof"})
    EXPECT_TRUE(fs::exists(dir / ("c1." + std::string(v) + ".trajectory.csv"))) << v;
  const auto j = nlohmann::json::parse(io::read_file(dir / "c1.json"));
  ASSERT_EQ(j["variants"].size(), 4u);
  EXPECT_LT(j["variants"][3]["param_count"].get<std::size_t>(), j["variants"][2]["param_count"].get<std::size_t>());
  EXPECT_TRUE(j.contains("run_info"));

  ASSERT_EQ(cli("--jobs 3 compare" + common + " --out " + q(dir / "c2.json")).code, 0);
  EXPECT_EQ(strip_run_info(io::read_file(dir / "c1.json")), strip_run_info(io::read_file(dir / "c2.json")));
  EXPECT_EQ(io::read_file(dir / "c1.it-bof.trajectory.csv"), io::read_file(dir / "c2.it-bof.trajectory.csv"));
}

TEST(Cli, CompareSubsetOfVariants) {
  const auto dir = testsupport::scratch("cli_subset");
  ASSERT_EQ(cli("generate --n 20 --t 32 --out " + q(dir / "d.csv")).code, 0);
  const auto r = cli("compare --data " + q(dir / "d.csv") + " --variants bof h-bof --trials 1 --epochs 1 --out " +
                     q(dir / "c.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(io::read_file(dir / "c.json"))["variants"].size(), 2u);
}

TEST(Cli, DivergenceExitsThreeNamingTheTrial) {
  const auto dir = testsupport::scratch("cli_diverge");
  ASSERT_EQ(cli("generate --n 20 --t 32 --out " + q(dir / "d.csv")).code, 0);
  const auto r = cli("train --variant bof --data " + q(dir / "d.csv") + " --trials 1 --epochs 5 --lr 1e300 --out " +
                     q(dir / "r.json"));
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("trial 0"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir / "r.json"));
}
