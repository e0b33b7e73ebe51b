#include "infmcmc/errors.hpp"
#include "infmcmc/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace infmcmc;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

json linear_doc() {
  return json::parse(R"({
    "prior": {"kind": "1d", "alpha": 1.0, "sigma2": 1.0, "s": 1.0, "cap": 10},
    "model": {"kind": "linear-gaussian", "obs": 10, "noise_variance": 0.01,
              "design_seed": 11, "data_seed": 12},
    "iterations": 2000,
    "burn_in": 200,
    "seed": 3,
    "algorithms": [{"method": "pcn", "step": 0.5}]
  })");
}

json groundwater_doc() {
  return json::parse(R"({
    "prior": {"kind": "2d", "alpha": 0.0, "sigma2": 1.0, "s": 1.1, "cap": 10},
    "model": {"kind": "groundwater", "inference_mesh": 20, "data_mesh": 40,
              "noise_variance": 1e-4,
              "stations": {"count": 33, "center": [0.5, 0.5], "radius": 0.25},
              "data_seed": 2024},
    "iterations": 11000,
    "burn_in": 1000,
    "seed": 1,
    "algorithms": [
      {"method": "pcn", "step": 0.01},
      {"method": "mala", "step": 0.01},
      {"method": "hmc", "step": 0.05, "leapfrog_max": 4},
      {"method": "mmala", "step": 0.3, "block": 100},
      {"method": "mhmc", "step": 0.5, "leapfrog_max": 4, "block": 100},
      {"method": "mmala", "name": "split-mmala", "step": 0.3, "block": 25},
      {"method": "mhmc", "name": "split-mhmc", "step": 0.5, "leapfrog_max": 4, "block": 25}
    ]
  })");
}

std::string error_key(const json &doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError &e) {
    return e.key();
  }
  return "";
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name)
      : path(fs::temp_directory_path() / ("infmcmc_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST(Config, MirrorConfigAccepted) {
  const ExperimentConfig cfg = parse_config(groundwater_doc());
  ASSERT_EQ(cfg.algorithms.size(), 7u);
  EXPECT_EQ(cfg.baseline, "pcn");
  EXPECT_EQ(cfg.algorithms[6].label, "split-mhmc");
  EXPECT_EQ(cfg.algorithms[6].block_size, 25);
  EXPECT_EQ(cfg.algorithms[2].seed, 3u);
  const auto &gw = std::get<GroundwaterSpec>(cfg.model);
  EXPECT_EQ(gw.inference_mesh, 20);
  EXPECT_EQ(gw.data_mesh, 40);
}

TEST(Config, RejectionsNameTheKey) {
  json a = groundwater_doc();
  a["prior"]["s"] = 0.9;
  EXPECT_EQ(error_key(a), "prior.s");

  json b = linear_doc();
  b["burn_in"] = 2000;
  EXPECT_EQ(error_key(b), "algorithms[0].iterations");

  json c = linear_doc();
  c["algorithms"][0]["stepsize"] = 0.1;
  EXPECT_EQ(error_key(c), "algorithms[0].stepsize");

  json d = groundwater_doc();
  d["algorithms"][3]["block"] = 24;
  EXPECT_EQ(error_key(d), "algorithms[3].block");

  json e = linear_doc();
  e["algorithms"][0]["method"] = "nuts";
  EXPECT_EQ(error_key(e), "algorithms[0].method");

  json f = linear_doc();
  f["baseline"] = "mala";
  EXPECT_EQ(error_key(f), "baseline");

  json g = groundwater_doc();
  g["model"]["stations"]["radius"] = 0.49;
  EXPECT_EQ(error_key(g).rfind("model.stations", 0), 0u);
}

TEST(Config, ResolvedConfigRoundTrips) {
  const ExperimentConfig cfg = parse_config(groundwater_doc());
  const auto resolved = to_json(cfg);
  const ExperimentConfig again = parse_config(json::parse(resolved.dump()));
  EXPECT_EQ(to_json(again).dump(), resolved.dump());
}

TEST(Config, LoadReportsSyntaxErrors) {
  TempDir dir("cfg_syntax");
  fs::create_directories(dir.path);
  std::ofstream(dir.path / "bad.json") << "{\"prior\": [1, 2,}";
  EXPECT_THROW(load_config(dir.path / "bad.json"), ConfigError);
}

TEST(Run, SinglePcnChain) {
  TempDir dir("run_single");
  ExperimentConfig cfg = parse_config(linear_doc());
  const RunResult res = run_experiment(cfg, {.output_dir = dir.path});
  ASSERT_EQ(res.summary.size(), 1u);
  EXPECT_EQ(res.summary[0].speedup, 1.0);
  EXPECT_EQ(res.summary[0].pde_solves, 2001);
  for (const char *name : {"manifest.json", "summary.csv", "summary.json", "pcn.trace.csv",
                           "pcn.samples.csv", "pcn.chain.json"})
    EXPECT_TRUE(fs::exists(dir.path / name)) << name;

  const auto manifest = json::parse(slurp(dir.path / "manifest.json"));
  EXPECT_TRUE(manifest["manifest"].contains("truth"));
  EXPECT_TRUE(manifest["manifest"].contains("data"));
  EXPECT_EQ(manifest["manifest"]["chain_seeds"]["pcn"], 3);
}

TEST(Run, DeterministicTraces) {
  TempDir a("run_det_a"), b("run_det_b");
  json doc = linear_doc();
  doc["algorithms"].push_back({{"method", "mala"}, {"step", 0.4}});
  const ExperimentConfig cfg = parse_config(doc);
  run_experiment(cfg, {.output_dir = a.path, .jobs = 2});
  run_experiment(cfg, {.output_dir = b.path, .jobs = 1});
  for (const char *name : {"pcn.trace.csv", "pcn.samples.csv", "mala.trace.csv"})
    EXPECT_EQ(slurp(a.path / name), slurp(b.path / name)) << name;
}

TEST(Run, ManifestAloneReproduces) {
  TempDir a("run_manifest_a"), b("run_manifest_b");
  run_experiment(parse_config(linear_doc()), {.output_dir = a.path});
  const ExperimentConfig again = load_config(a.path / "manifest.json");
  run_experiment(again, {.output_dir = b.path});
  EXPECT_EQ(slurp(a.path / "pcn.trace.csv"), slurp(b.path / "pcn.trace.csv"));
  EXPECT_EQ(slurp(a.path / "pcn.samples.csv"), slurp(b.path / "pcn.samples.csv"));
  auto ma = json::parse(slurp(a.path / "manifest.json"));
  auto mb = json::parse(slurp(b.path / "manifest.json"));
  EXPECT_EQ(ma["manifest"], mb["manifest"]);
}

TEST(Run, SummarizeDirectoryMatches) {
  TempDir dir("run_summarize");
  json doc = linear_doc();
  doc["algorithms"].push_back({{"method", "hmc"}, {"step", 0.2}, {"leapfrog_max", 3}});
  const RunResult res = run_experiment(parse_config(doc), {.output_dir = dir.path});
  const auto rows = summarize_directory(dir.path);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].method, res.summary[i].method);
    EXPECT_DOUBLE_EQ(rows[i].ap, res.summary[i].ap);
    EXPECT_NEAR(rows[i].ess_min, res.summary[i].ess_min, 1e-9 * res.summary[i].ess_min);
    EXPECT_EQ(rows[i].pde_solves, res.summary[i].pde_solves);
  }
  const auto other = summarize_directory(dir.path, "hmc");
  EXPECT_EQ(other[1].speedup, 1.0);
}

TEST(Config, SeedsMustBeNonNegativeIntegers) {
  json a = linear_doc();
  a["seed"] = -1;
  EXPECT_EQ(error_key(a), "algorithms[0].seed");
  json b = linear_doc();
  b["model"]["data_seed"] = 1.5;
  EXPECT_EQ(error_key(b), "model.data_seed");
  json c = linear_doc();
  c["seed"] = json(std::int64_t{4});
  EXPECT_EQ(parse_config(c).algorithms[0].seed, 4u);
}
