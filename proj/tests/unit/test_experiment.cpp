#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "ocmsfem/experiment.hpp"

using namespace ocmsfem;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig small_smooth_config(const std::string& outdir) {
  ExperimentConfig cfg;
  cfg.potential = {"smooth", 0.1, 0, 0, 0.0, ""};
  cfg.epsilon = 0.125;
  cfg.T = 0.05;
  cfg.dt = 1e-3;
  cfg.n_coarse_list = {32, 64};
  cfg.refine.mode = "target_fine";
  cfg.refine.target_fine = 1024;
  cfg.methods = {"fem-cn", "msfem-localized"};
  cfg.oversampling.c = 3;
  cfg.reference = {"tssp", 2048, 8, 2.5e-4};
  cfg.output_dir = outdir;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool has_error(const std::vector<Diagnostic>& ds, const std::string& needle) {
  for (const auto& d : ds)
    if (d.is_error && d.message.find(needle) != std::string::npos) return true;
  return false;
}

bool has_warning(const std::vector<Diagnostic>& ds, const std::string& needle) {
  for (const auto& d : ds)
    if (!d.is_error && d.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("config json round trip with defaults") {
  json j = json::parse(R"({
    "potential": {"name": "smooth", "delta": 0.1},
    "epsilon": 0.125,
    "T": 0.5,
    "dt": 1e-4,
    "n_coarse_list": [128, 192],
    "methods": ["fem-cn", "msfem-localized"],
    "reference": {"method": "tssp", "resolution": 32768, "dt": 2.5e-6}
  })");
  auto cfg = config_from_json(j);
  CHECK(cfg.oversampling.c == 3);
  CHECK(cfg.refine.mode == "target_fine");
  auto resolved = config_to_json(cfg);
  CHECK(resolved.at("refine").at("resolved_factors").at("128").get<int>() == 64);
  CHECK(resolved.at("oversampling").at("c").get<int>() == 3);

  // discontinuous potentials default to the c = 2 oversampling rule
  json jd = json::parse(R"({
    "potential": {"name": "discontinuous", "delta1": 0.2, "delta2": 0.1},
    "n_coarse_list": [128], "methods": ["msfem-localized"]
  })");
  CHECK(config_from_json(jd).oversampling.c == 2);
}

TEST_CASE("validate_config diagnostics match the documented cases") {
  // eps = 1/8, n_coarse = 64: H = pi/32 < eps, no resolution-assumption warning
  auto ok = small_smooth_config("unused");
  ok.n_coarse_list = {64};
  CHECK_FALSE(has_warning(validate_config(ok), "exceeds epsilon"));

  // eps = 1/32, n_coarse = 16: H > eps
  auto warn_cfg = small_smooth_config("unused");
  warn_cfg.epsilon = 1.0 / 32.0;
  warn_cfg.n_coarse_list = {16};
  warn_cfg.refine.target_fine = 4096;
  CHECK(has_warning(validate_config(warn_cfg), "exceeds epsilon"));

  // discontinuous potential with an odd fine grid: hard error
  ExperimentConfig disc;
  disc.potential = {"discontinuous", 0.1, 0.5, 0.5, 0.0, ""};
  disc.epsilon = 0.5;
  disc.T = 0.1;
  disc.dt = 1e-3;
  disc.n_coarse_list = {5};
  disc.refine.mode = "factor";
  disc.refine.factor = 21;  // 105 fine elements, pi is not a node
  disc.methods = {"fem-cn"};
  disc.reference = {"fem-cn", 1050, 1, 1e-3};
  CHECK(has_error(validate_config(disc), "pi is not a fine node"));

  // empty method set
  auto empty = small_smooth_config("unused");
  empty.methods = {};
  CHECK(has_error(validate_config(empty), "no methods"));
  CHECK_THROWS_AS(run_experiment(empty, RunOptions{1, 0}), ConfigError);

  // unresolved scales
  auto coarse = small_smooth_config("unused");
  coarse.refine.mode = "factor";
  coarse.refine.factor = 1;
  CHECK(has_error(validate_config(coarse), "does not resolve"));

  // explicit oversampling below the rule
  auto small_m = small_smooth_config("unused");
  small_m.oversampling.use_explicit = true;
  small_m.oversampling.explicit_m = 2;
  CHECK(has_warning(validate_config(small_m), "below the c*ceil"));
}

TEST_CASE("refine rules: factor, target and auto") {
  auto cfg = small_smooth_config("unused");
  cfg.refine.mode = "factor";
  cfg.refine.factor = 40;
  CHECK(cfg.refine_factor_for(32) == 40);

  cfg.refine.mode = "target_fine";
  cfg.refine.target_fine = 1024;
  CHECK(cfg.refine_factor_for(32) == 32);
  CHECK(cfg.refine_factor_for(64) == 16);

  // auto: smallest resolving factor, nesting into a nodal reference if possible
  cfg.refine.mode = "auto";
  cfg.reference = {"fem-cn", 2048, 1, 1e-3};
  const int r = cfg.refine_factor_for(32);
  CHECK(32 * r >= 503);  // h <= min(eps, delta)/8
  CHECK(2048 % (32 * r) == 0);
}

TEST_CASE("run_experiment produces a monotone multiscale column and deterministic output") {
  const auto base = fs::temp_directory_path() / "ocmsfem_exp_test";
  fs::remove_all(base);
  auto cfg = small_smooth_config((base / "run1").string());
  RunOptions opts{2, 0};
  auto report = run_experiment(cfg, opts);

  REQUIRE(report.series.size() == 2);
  const auto& fem = report.series[0];
  const auto& ms = report.series[1];
  CHECK(fem.method == "fem-cn");
  CHECK(ms.method == "msfem-localized");
  CHECK(ms.err_l2[1] < ms.err_l2[0]);
  CHECK(ms.err_l2[0] < fem.err_l2[0]);
  CHECK(ms.err_l2[1] < fem.err_l2[1]);
  CHECK(fs::exists(base / "run1" / "report.json"));
  CHECK(fs::exists(base / "run1" / "report.csv"));
  CHECK(fs::exists(base / "run1" / "series" / "msfem-localized_err_L2.csv"));

  // identical config, second run: byte-identical report
  cfg.output_dir = (base / "run2").string();
  run_experiment(cfg, opts);
  auto a = slurp(base / "run1" / "report.json");
  auto b = slurp(base / "run2" / "report.json");
  // the embedded resolved config stores the output dir; normalise it away
  const std::string n1 = "run1", n2 = "run2";
  for (std::size_t pos = b.find(n2); pos != std::string::npos; pos = b.find(n2, pos))
    b.replace(pos, n2.size(), n1);
  CHECK(a == b);
  CHECK(!a.empty());
  fs::remove_all(base);
}

TEST_CASE("reference caching reproduces identical errors") {
  const auto base = fs::temp_directory_path() / "ocmsfem_cache_test";
  fs::remove_all(base);
  auto cfg = small_smooth_config((base / "cold").string());
  cfg.n_coarse_list = {32};
  cfg.methods = {"fem-cn"};
  cfg.cache_dir = (base / "cache").string();
  RunOptions opts{1, 0};
  auto cold = run_experiment(cfg, opts);

  int cache_files = 0;
  for (auto& entry : fs::directory_iterator(base / "cache")) {
    (void)entry;
    ++cache_files;
  }
  CHECK(cache_files == 2);  // payload + metadata

  cfg.output_dir = (base / "warm").string();
  auto warm = run_experiment(cfg, opts);
  CHECK(cold.series[0].err_l2[0] == warm.series[0].err_l2[0]);
  CHECK(cold.series[0].err_h1[0] == warm.series[0].err_h1[0]);
  fs::remove_all(base);
}

TEST_CASE("dt saturation halves the step until the probe stabilises") {
  const auto base = fs::temp_directory_path() / "ocmsfem_sat_test";
  fs::remove_all(base);
  auto cfg = small_smooth_config((base / "out").string());
  cfg.n_coarse_list = {64};  // H < eps: the spatial error is small
  cfg.refine.target_fine = 2048;
  cfg.methods = {"msfem-localized"};
  cfg.T = 0.04;
  cfg.dt = 2e-2;  // grossly unsaturated on purpose
  cfg.reference = {"tssp", 4096, 8, 1e-4};
  cfg.dt_saturation.enabled = true;
  cfg.dt_saturation.tolerance = 0.10;
  cfg.dt_saturation.max_halvings = 6;
  auto report = run_experiment(cfg, RunOptions{1, 0});
  CHECK(report.dt < cfg.dt);
  CHECK(report.dt_saturated);
  fs::remove_all(base);
}

TEST_CASE("decay study writes profiles and fitted rates") {
  const auto base = fs::temp_directory_path() / "ocmsfem_decay_test";
  fs::remove_all(base);
  auto cfg = small_smooth_config((base / "out").string());
  DecayStudyConfig dcfg;
  dcfg.n_coarse = 32;
  dcfg.refine_factor = 16;
  dcfg.m_max = 14;
  dcfg.nodes = {0, 8};
  auto study = run_decay_study(cfg, dcfg, RunOptions{1, 0});
  REQUIRE(study.profiles.size() == 2);
  for (const auto& p : study.profiles) {
    CHECK(p.beta.has_value());
    CHECK(*p.beta < 1.0);
  }
  write_decay_study(study, (base / "out").string());
  CHECK(fs::exists(base / "out" / "decay" / "node_0.csv"));
  CHECK(fs::exists(base / "out" / "decay" / "summary.json"));
  fs::remove_all(base);
}

TEST_CASE("basis export subcommand payloads") {
  const auto base = fs::temp_directory_path() / "ocmsfem_basis_export";
  fs::remove_all(base);
  auto cfg = small_smooth_config((base / "out").string());
  BasisExportConfig bcfg;
  bcfg.n_coarse = 16;
  bcfg.refine_factor = 32;
  bcfg.kind = "localized";
  bcfg.m = 4;
  bcfg.format = "csv";
  run_basis_export(cfg, bcfg, (base / "out").string());
  CHECK(fs::exists(base / "out" / "basis" / "basis.csv"));
  bcfg.format = "triplets";
  run_basis_export(cfg, bcfg, (base / "out").string());
  CHECK(fs::exists(base / "out" / "basis" / "basis_triplets.txt"));
  fs::remove_all(base);
}
