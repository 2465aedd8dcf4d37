#include "ocmsfem/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

namespace ocmsfem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mutex log_mutex;

void log_line(const RunOptions& opts, int level, const std::string& msg) {
  if (opts.log_level < level) return;
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cout << "[ocmsfem] " << msg << "\n" << std::flush;
}

PotentialField build_potential(const PotentialSpec& spec, const PeriodicGridPair& grid) {
  if (spec.name == "smooth") return smooth_potential(spec.delta, grid, spec.shift);
  if (spec.name == "discontinuous")
    return discontinuous_potential(spec.delta1, spec.delta2, grid, spec.shift);
  if (spec.name == "custom") return potential_from_csv(spec.csv, grid, spec.shift);
  throw std::invalid_argument("unknown potential '" + spec.name + "'");
}

Eigen::VectorXd nodal_potential(const PotentialSpec& spec, int n) {
  Eigen::VectorXd v(n);
  const double h = kDomainLength / n;
  if (spec.name == "smooth") {
    for (int i = 0; i < n; ++i) v[i] = smooth_potential_value(i * h, spec.delta, spec.shift);
  } else if (spec.name == "discontinuous") {
    for (int i = 0; i < n; ++i)
      v[i] = discontinuous_potential_value(i * h, spec.delta1, spec.delta2, spec.shift);
  } else if (spec.name == "custom") {
    // resample the fine-node CSV onto the requested grid
    PeriodicGridPair probe{n, 1};
    PotentialField f = potential_from_csv(spec.csv, probe, spec.shift);
    for (int i = 0; i < n; ++i) v[i] = 0.5 * (f.samples(i, 0) + f.samples(i, 1));
  } else {
    throw std::invalid_argument("unknown potential '" + spec.name + "'");
  }
  return v;
}

/// Smallest fine-element count satisfying the resolution invariants.
int minimal_fine_count(const ExperimentConfig& cfg) {
  const double scale = cfg.potential.min_scale();
  const double min_sd = scale > 0.0 ? std::min(cfg.epsilon, scale) : cfg.epsilon;
  double n_min = kDomainLength / (min_sd / 8.0);  // h <= min(eps, delta)/8
  if (scale > 0.0) n_min = std::max(n_min, 16.0 / scale);  // 16 elements per period
  return static_cast<int>(std::ceil(n_min));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json reference_key(const ExperimentConfig& cfg) {
  json k;
  k["potential"] = {{"name", cfg.potential.name},   {"delta", cfg.potential.delta},
                    {"delta1", cfg.potential.delta1}, {"delta2", cfg.potential.delta2},
                    {"shift", cfg.potential.shift},   {"csv", cfg.potential.csv}};
  k["epsilon"] = cfg.epsilon;
  k["T"] = cfg.T;
  k["method"] = cfg.reference.method;
  k["resolution"] = cfg.reference.resolution;
  k["refine_factor"] = cfg.reference.method == "msfem-global" ? cfg.reference.refine_factor : 1;
  k["dt"] = cfg.reference.dt;
  return k;
}

bool load_cached_reference(const fs::path& dir, const json& key, ReferenceSolution& out) {
  const std::string stem = "ref_" + std::to_string(fnv1a(key.dump()));
  std::ifstream meta(dir / (stem + ".json"));
  if (!meta) return false;
  json stored;
  meta >> stored;
  if (stored.value("key", json::object()).dump() != key.dump()) return false;
  std::ifstream bin(dir / (stem + ".bin"), std::ios::binary);
  if (!bin) return false;
  const int n = stored.at("n").get<int>();
  out.spectral = stored.at("spectral").get<bool>();
  out.descriptor = stored.at("descriptor").get<std::string>();
  out.samples.resize(n);
  bin.read(reinterpret_cast<char*>(out.samples.data()),
           static_cast<std::streamsize>(n) * sizeof(std::complex<double>));
  return bin.good();
}

void store_cached_reference(const fs::path& dir, const json& key, const ReferenceSolution& ref) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string stem = "ref_" + std::to_string(fnv1a(key.dump()));
  json meta;
  meta["key"] = key;
  meta["n"] = static_cast<int>(ref.samples.size());
  meta["spectral"] = ref.spectral;
  meta["descriptor"] = ref.descriptor;
  // write then rename so concurrent runs never see a partial file
  const fs::path tmp_bin = dir / (stem + ".bin.tmp");
  {
    std::ofstream bin(tmp_bin, std::ios::binary);
    bin.write(reinterpret_cast<const char*>(ref.samples.data()),
              static_cast<std::streamsize>(ref.samples.size()) * sizeof(std::complex<double>));
  }
  fs::rename(tmp_bin, dir / (stem + ".bin"), ec);
  const fs::path tmp_meta = dir / (stem + ".json.tmp");
  {
    std::ofstream out(tmp_meta);
    out << meta.dump(2) << "\n";
  }
  fs::rename(tmp_meta, dir / (stem + ".json"), ec);
}

struct CellResult {
  double err_l2 = 0.0;
  double err_h1 = 0.0;
  double seconds = 0.0;
};

CellResult run_cell(const ExperimentConfig& cfg, const std::string& method, int n_coarse,
                    double dt, const ReferenceSolution& ref, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const int r = cfg.refine_factor_for(n_coarse);
  const PeriodicGridPair grid = build_grid_pair(n_coarse, r);
  const int nf = grid.n_fine();
  const InitialData u0 = gaussian_wavepacket(cfg.epsilon);

  WaveFunction u_num;
  u_num.space = SpaceTag::fine_nodal;

  const PotentialField field = build_potential(cfg.potential, grid);
  const FineOperators ops = assemble_fine_operators(grid, field, cfg.epsilon);

  if (method == "tssp") {
    const EvolutionConfig ecfg = make_evolution_config(cfg.T, dt, cfg.epsilon,
                                                       std::max(1, int(cfg.T / dt) / 16));
    TrajectoryResult traj = tssp_evolve(sample_uniform(u0, n_coarse),
                                        nodal_potential(cfg.potential, n_coarse), ecfg);
    u_num.coeffs = trig_resample(traj.final_state, nf);
  } else {
    const EvolutionConfig ecfg = make_evolution_config(cfg.T, dt, cfg.epsilon,
                                                       std::max(1, int(cfg.T / dt) / 16));
    const Eigen::VectorXcd u0_fine = sample_fine(u0, grid);
    GalerkinSpace space = [&]() {
      if (method == "fem-cn") return GalerkinSpace::p1(ops);
      if (method == "msfem-global")
        return GalerkinSpace::multiscale(build_global_basis(ops), ops);
      if (method == "msfem-localized")
        return GalerkinSpace::multiscale(
            build_localized_basis(ops, cfg.oversampling.layers(n_coarse)), ops);
      throw std::invalid_argument("unknown method '" + method + "'");
    }();
    const Eigen::VectorXcd U0 = elliptic_project(u0_fine, space, ops);
    TrajectoryResult traj = cn_evolve(space, U0, ecfg);
    u_num.coeffs = space.prolong(traj.final_state);
  }

  WaveFunction u_ref;
  u_ref.space = SpaceTag::fine_nodal;
  u_ref.coeffs = ref.spectral ? trig_resample(ref.samples, nf) : p1_resample(ref.samples, nf);

  CellResult out;
  std::tie(out.err_l2, out.err_h1) = relative_errors(u_num, u_ref, ops.mass, ops.stiffness);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream msg;
  msg << method << " n_coarse=" << n_coarse << " dt=" << dt << " err_L2=" << out.err_l2
      << " err_H1=" << out.err_h1 << " (" << out.seconds << " s)";
  log_line(opts, 1, msg.str());
  return out;
}

std::vector<CellResult> run_table(const ExperimentConfig& cfg, double dt,
                                  const ReferenceSolution& ref, const RunOptions& opts) {
  struct Cell {
    std::string method;
    int n_coarse;
  };
  std::vector<Cell> cells;
  for (const auto& m : cfg.methods)
    for (int n : cfg.n_coarse_list) cells.push_back({m, n});

  std::vector<CellResult> results(cells.size());
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(cells.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      results[i] = run_cell(cfg, cells[i].method, cells[i].n_coarse, dt, ref, opts);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            results[i] = run_cell(cfg, cells[i].method, cells[i].n_coarse, dt, ref, opts);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  return results;
}

std::string probe_method(const std::vector<std::string>& methods) {
  for (const char* pick : {"msfem-localized", "msfem-global", "fem-cn", "tssp"})
    if (std::find(methods.begin(), methods.end(), pick) != methods.end()) return pick;
  return methods.front();
}

}  // namespace

double PotentialSpec::min_scale() const {
  if (name == "smooth") return delta;
  if (name == "discontinuous") return std::min(delta1, delta2);
  return 0.0;
}

int ExperimentConfig::refine_factor_for(int n_coarse) const {
  const int n_min = minimal_fine_count(*this);
  int r_min = (n_min + n_coarse - 1) / n_coarse;
  if (potential.name == "discontinuous" && (n_coarse * r_min) % 2 != 0) ++r_min;
  r_min = std::max(1, r_min);

  if (refine.mode == "factor") return std::max(refine.factor, 1);
  if (refine.mode == "target_fine") {
    int r = std::max(1, (refine.target_fine + n_coarse / 2) / n_coarse);
    if (potential.name == "discontinuous" && (n_coarse * r) % 2 != 0) ++r;
    return std::max(r, r_min);
  }
  if (refine.mode == "auto") {
    // smallest resolving factor whose fine grid also nests into a nodal reference
    if (reference.method != "tssp") {
      const int ref_fine = reference.method == "msfem-global"
                               ? reference.resolution * reference.refine_factor
                               : reference.resolution;
      for (int r = r_min; r <= 8 * r_min && n_coarse * r <= ref_fine; ++r) {
        if (potential.name == "discontinuous" && (n_coarse * r) % 2 != 0) continue;
        if (ref_fine % (n_coarse * r) == 0) return r;
      }
    }
    return r_min;
  }
  throw std::invalid_argument("unknown refine mode '" + refine.mode + "'");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("potential")) {
    const auto& p = j.at("potential");
    cfg.potential.name = p.value("name", cfg.potential.name);
    cfg.potential.delta = p.value("delta", cfg.potential.delta);
    cfg.potential.delta1 = p.value("delta1", cfg.potential.delta1);
    cfg.potential.delta2 = p.value("delta2", cfg.potential.delta2);
    cfg.potential.shift = p.value("shift", 0.0);
    cfg.potential.csv = p.value("csv", std::string());
  }
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.T = j.value("T", cfg.T);
  cfg.dt = j.value("dt", cfg.dt);
  if (j.contains("dt_saturation")) {
    const auto& s = j.at("dt_saturation");
    cfg.dt_saturation.enabled = s.value("enabled", true);
    cfg.dt_saturation.tolerance = s.value("tolerance", cfg.dt_saturation.tolerance);
    cfg.dt_saturation.max_halvings = s.value("max_halvings", cfg.dt_saturation.max_halvings);
  }
  cfg.n_coarse_list = j.value("n_coarse_list", cfg.n_coarse_list);
  if (j.contains("refine")) {
    const auto& r = j.at("refine");
    cfg.refine.mode = r.value("mode", cfg.refine.mode);
    cfg.refine.factor = r.value("factor", cfg.refine.factor);
    cfg.refine.target_fine = r.value("target_fine", cfg.refine.target_fine);
  }
  cfg.methods = j.value("methods", cfg.methods);
  if (j.contains("oversampling")) {
    const auto& o = j.at("oversampling");
    cfg.oversampling.c = o.value("c", cfg.oversampling.c);
    if (o.contains("m")) {
      cfg.oversampling.use_explicit = true;
      cfg.oversampling.explicit_m = o.at("m").get<int>();
    }
  } else if (cfg.potential.name == "discontinuous") {
    cfg.oversampling.c = 2;
  }
  if (j.contains("reference")) {
    const auto& r = j.at("reference");
    cfg.reference.method = r.value("method", cfg.reference.method);
    cfg.reference.resolution = r.value("resolution", cfg.reference.resolution);
    cfg.reference.refine_factor = r.value("refine_factor", cfg.reference.refine_factor);
    cfg.reference.dt = r.value("dt", cfg.dt);
  } else {
    cfg.reference.dt = cfg.dt;
  }
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("output")) {
    cfg.output_dir = j.at("output").value("dir", cfg.output_dir);
    cfg.cache_dir = j.at("output").value("cache_dir", cfg.cache_dir);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  in >> j;
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["potential"] = {{"name", cfg.potential.name},   {"delta", cfg.potential.delta},
                    {"delta1", cfg.potential.delta1}, {"delta2", cfg.potential.delta2},
                    {"shift", cfg.potential.shift},   {"csv", cfg.potential.csv}};
  j["epsilon"] = cfg.epsilon;
  j["T"] = cfg.T;
  j["dt"] = cfg.dt;
  j["dt_saturation"] = {{"enabled", cfg.dt_saturation.enabled},
                        {"tolerance", cfg.dt_saturation.tolerance},
                        {"max_halvings", cfg.dt_saturation.max_halvings}};
  j["n_coarse_list"] = cfg.n_coarse_list;
  json rf = json::object();
  for (int n : cfg.n_coarse_list) rf[std::to_string(n)] = cfg.refine_factor_for(n);
  j["refine"] = {{"mode", cfg.refine.mode},
                 {"factor", cfg.refine.factor},
                 {"target_fine", cfg.refine.target_fine},
                 {"resolved_factors", rf}};
  j["methods"] = cfg.methods;
  if (cfg.oversampling.use_explicit)
    j["oversampling"] = {{"m", cfg.oversampling.explicit_m}};
  else
    j["oversampling"] = {{"c", cfg.oversampling.c}};
  j["reference"] = {{"method", cfg.reference.method},
                    {"resolution", cfg.reference.resolution},
                    {"refine_factor", cfg.reference.refine_factor},
                    {"dt", cfg.reference.dt}};
  j["seed"] = cfg.seed;
  j["output"] = {{"dir", cfg.output_dir}, {"cache_dir", cfg.cache_dir}};
  return j;
}

std::vector<Diagnostic> validate_config(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> out;
  auto error = [&](const std::string& m) { out.push_back({true, m}); };
  auto warn = [&](const std::string& m) { out.push_back({false, m}); };

  if (cfg.methods.empty()) error("no methods requested");
  for (const auto& m : cfg.methods)
    if (m != "fem-cn" && m != "msfem-global" && m != "msfem-localized" && m != "tssp")
      error("unknown method '" + m + "'");
  if (cfg.n_coarse_list.empty()) error("n_coarse_list is empty");
  for (std::size_t i = 0; i + 1 < cfg.n_coarse_list.size(); ++i)
    if (cfg.n_coarse_list[i] >= cfg.n_coarse_list[i + 1])
      error("n_coarse_list must be strictly increasing (H strictly decreasing)");
  if (cfg.potential.name != "smooth" && cfg.potential.name != "discontinuous" &&
      cfg.potential.name != "custom")
    error("unknown potential '" + cfg.potential.name + "'");
  if (cfg.potential.name == "custom" && cfg.potential.csv.empty())
    error("custom potential needs a csv path");
  if (cfg.epsilon <= 0 || cfg.epsilon > 1) error("epsilon must lie in (0, 1]");
  if (cfg.dt <= 0 || cfg.T <= 0) error("dt and T must be positive");
  if (cfg.reference.method != "tssp" && cfg.reference.method != "msfem-global" &&
      cfg.reference.method != "fem-cn")
    error("unknown reference method '" + cfg.reference.method + "'");

  if (!out.empty() && std::any_of(out.begin(), out.end(), [](auto& d) { return d.is_error; }))
    return out;

  const int n_min = minimal_fine_count(cfg);
  const int ref_fine = cfg.reference.method == "msfem-global"
                           ? cfg.reference.resolution * cfg.reference.refine_factor
                           : cfg.reference.resolution;
  for (int n : cfg.n_coarse_list) {
    if (n < 4) {
      error("n_coarse must be at least 4");
      continue;
    }
    const int r = cfg.refine_factor_for(n);
    const int nf = n * r;
    if (nf < n_min)
      error("fine grid " + std::to_string(nf) + " for n_coarse " + std::to_string(n) +
            " does not resolve the scales (need >= " + std::to_string(n_min) +
            " fine elements: h <= min(eps, delta)/8 and 16 elements per oscillation period)");
    if (cfg.potential.name == "discontinuous" && nf % 2 != 0)
      error("pi is not a fine node for n_coarse " + std::to_string(n) +
            " (fine element count must be even)");
    const double H = kDomainLength / n;
    if (H > cfg.epsilon)
      warn("H = " + std::to_string(H) + " exceeds epsilon for n_coarse " + std::to_string(n) +
           "; the resolution assumption surrogate is violated");
    const int rule_m = default_oversampling(n, cfg.potential.name == "discontinuous" ? 2 : 3);
    if (cfg.oversampling.use_explicit && cfg.oversampling.explicit_m < rule_m)
      warn("oversampling m = " + std::to_string(cfg.oversampling.explicit_m) +
           " is below the c*ceil(log2(2 pi / H)) rule (" + std::to_string(rule_m) +
           ") for n_coarse " + std::to_string(n));
    if (cfg.reference.method != "tssp" && ref_fine % nf != 0)
      warn("fine grid " + std::to_string(nf) + " does not nest into the reference grid " +
           std::to_string(ref_fine) + "; the reference is evaluated at the fine nodes instead");
    if (cfg.reference.method == "tssp" && nf > cfg.reference.resolution)
      warn("fine grid " + std::to_string(nf) + " is finer than the spectral reference");
  }
  if (cfg.potential.name == "discontinuous" && cfg.reference.method == "tssp")
    warn("spectral reference with a discontinuous potential suffers order reduction; "
         "prefer msfem-global");
  return out;
}

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error([&diagnostics]() {
        std::string m = "invalid experiment config:";
        for (const auto& d : diagnostics)
          if (d.is_error) m += "\n  " + d.message;
        return m;
      }()),
      diagnostics_(std::move(diagnostics)) {}

ReferenceSolution compute_reference(const ExperimentConfig& cfg, const RunOptions& opts) {
  const json key = reference_key(cfg);
  ReferenceSolution ref;
  if (!cfg.cache_dir.empty() && load_cached_reference(cfg.cache_dir, key, ref)) {
    log_line(opts, 1, "reference loaded from cache (" + ref.descriptor + ")");
    return ref;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const InitialData u0 = gaussian_wavepacket(cfg.epsilon);
  std::ostringstream desc;
  if (cfg.reference.method == "tssp") {
    const int n = cfg.reference.resolution;
    const EvolutionConfig ecfg =
        make_evolution_config(cfg.T, cfg.reference.dt, cfg.epsilon, 1 << 20);
    TrajectoryResult traj =
        tssp_evolve(sample_uniform(u0, n), nodal_potential(cfg.potential, n), ecfg);
    ref.spectral = true;
    ref.samples = std::move(traj.final_state);
    desc << "tssp n=" << n << " dt=" << cfg.reference.dt;
  } else if (cfg.reference.method == "msfem-global") {
    const PeriodicGridPair grid =
        build_grid_pair(cfg.reference.resolution, cfg.reference.refine_factor);
    const PotentialField field = build_potential(cfg.potential, grid);
    const FineOperators ops = assemble_fine_operators(grid, field, cfg.epsilon);
    GalerkinSpace space = GalerkinSpace::multiscale(build_global_basis(ops), ops);
    const Eigen::VectorXcd U0 = elliptic_project(sample_fine(u0, grid), space, ops);
    const EvolutionConfig ecfg =
        make_evolution_config(cfg.T, cfg.reference.dt, cfg.epsilon, 1 << 20);
    TrajectoryResult traj = cn_evolve(space, U0, ecfg);
    ref.spectral = false;
    ref.samples = space.prolong(traj.final_state);
    desc << "msfem-global n_coarse=" << cfg.reference.resolution
         << " r=" << cfg.reference.refine_factor << " dt=" << cfg.reference.dt;
  } else if (cfg.reference.method == "fem-cn") {
    const PeriodicGridPair grid = build_grid_pair(cfg.reference.resolution, 1);
    const PotentialField field = build_potential(cfg.potential, grid);
    const FineOperators ops = assemble_fine_operators(grid, field, cfg.epsilon);
    const EvolutionConfig ecfg =
        make_evolution_config(cfg.T, cfg.reference.dt, cfg.epsilon, 1 << 20);
    Eigen::VectorXcd final_fine;
    fem_cn_evolve(ops, sample_fine(u0, grid), ecfg, &final_fine);
    ref.spectral = false;
    ref.samples = std::move(final_fine);
    desc << "fem-cn n=" << cfg.reference.resolution << " dt=" << cfg.reference.dt;
  } else {
    throw std::invalid_argument("unknown reference method '" + cfg.reference.method + "'");
  }
  ref.descriptor = desc.str();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log_line(opts, 1, "reference computed: " + ref.descriptor + " (" + std::to_string(secs) + " s)");
  if (!cfg.cache_dir.empty()) store_cached_reference(cfg.cache_dir, key, ref);
  return ref;
}

ConvergenceReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  auto diagnostics = validate_config(cfg);
  for (const auto& d : diagnostics)
    log_line(opts, 1, std::string(d.is_error ? "error: " : "warning: ") + d.message);
  if (std::any_of(diagnostics.begin(), diagnostics.end(),
                  [](const Diagnostic& d) { return d.is_error; }))
    throw ConfigError(std::move(diagnostics));

  const ReferenceSolution ref = compute_reference(cfg, opts);

  double dt = cfg.dt;
  bool saturated = !cfg.dt_saturation.enabled;
  std::vector<CellResult> results;
  for (int attempt = 0; attempt <= cfg.dt_saturation.max_halvings; ++attempt) {
    results = run_table(cfg, dt, ref, opts);
    if (!cfg.dt_saturation.enabled) break;

    // probe: most accurate method at the smallest H
    const std::string probe = probe_method(cfg.methods);
    const int n_probe = cfg.n_coarse_list.back();
    const std::size_t idx =
        (std::find(cfg.methods.begin(), cfg.methods.end(), probe) - cfg.methods.begin()) *
            cfg.n_coarse_list.size() +
        (cfg.n_coarse_list.size() - 1);
    const CellResult half = run_cell(cfg, probe, n_probe, dt / 2, ref, opts);
    const double change = std::abs(results[idx].err_l2 - half.err_l2) /
                          std::max(half.err_l2, 1e-300);
    std::ostringstream msg;
    msg << "dt saturation probe: err(" << dt << ") = " << results[idx].err_l2 << ", err("
        << dt / 2 << ") = " << half.err_l2 << ", relative change " << change;
    log_line(opts, 1, msg.str());
    if (change <= cfg.dt_saturation.tolerance) {
      saturated = true;
      break;
    }
    if (attempt == cfg.dt_saturation.max_halvings) break;
    dt /= 2;
    log_line(opts, 1, "halving dt to " + std::to_string(dt));
  }

  ConvergenceReport report;
  report.potential = cfg.potential.name;
  report.delta_tags = cfg.potential.name == "smooth"
                          ? std::vector<double>{cfg.potential.delta}
                          : (cfg.potential.name == "discontinuous"
                                 ? std::vector<double>{cfg.potential.delta1, cfg.potential.delta2}
                                 : std::vector<double>{});
  report.epsilon = cfg.epsilon;
  report.T = cfg.T;
  report.dt = dt;
  report.dt_saturated = saturated;
  report.oversampling_rule =
      cfg.oversampling.use_explicit
          ? "m = " + std::to_string(cfg.oversampling.explicit_m)
          : "m = " + std::to_string(cfg.oversampling.c) + " * ceil(log2(2 pi / H))";
  report.reference = ref.descriptor;
  report.resolved_config = config_to_json(cfg).dump();

  std::vector<double> h_values;
  for (int n : cfg.n_coarse_list) h_values.push_back(kDomainLength / n);
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MethodSeries s;
    s.method = cfg.methods[mi];
    s.h_values = h_values;
    for (std::size_t hi = 0; hi < cfg.n_coarse_list.size(); ++hi) {
      const CellResult& c = results[mi * cfg.n_coarse_list.size() + hi];
      s.err_l2.push_back(c.err_l2);
      s.err_h1.push_back(c.err_h1);
    }
    s.orders_l2 = fit_orders(s.h_values, s.err_l2);
    s.orders_h1 = fit_orders(s.h_values, s.err_h1);
    if (s.h_values.size() >= 2) {
      s.slope_l2 = lsq_slope(s.h_values, s.err_l2);
      s.slope_h1 = lsq_slope(s.h_values, s.err_h1);
    }
    report.series.push_back(std::move(s));
  }

  emit_report(report, cfg.output_dir);
  return report;
}

DecayStudyConfig decay_config_from_json(const json& j, const ExperimentConfig& cfg) {
  DecayStudyConfig d;
  if (!cfg.n_coarse_list.empty()) {
    d.n_coarse = cfg.n_coarse_list.front();
    d.refine_factor = cfg.refine_factor_for(d.n_coarse);
  }
  if (j.contains("decay")) {
    const auto& dj = j.at("decay");
    d.n_coarse = dj.value("n_coarse", d.n_coarse);
    d.refine_factor = dj.value("refine_factor", d.refine_factor);
    d.m_max = dj.value("m_max", 0);
    d.nodes = dj.value("nodes", std::vector<int>{});
  }
  return d;
}

DecayStudy run_decay_study(const ExperimentConfig& cfg, const DecayStudyConfig& dcfg,
                           const RunOptions& opts) {
  DecayStudy study;
  study.setup = dcfg;
  if (study.setup.m_max <= 0) study.setup.m_max = dcfg.n_coarse / 2;
  if (study.setup.nodes.empty())
    for (int k = 0; k < 5; ++k) study.setup.nodes.push_back(k * dcfg.n_coarse / 5);

  const PeriodicGridPair grid = build_grid_pair(dcfg.n_coarse, dcfg.refine_factor);
  const PotentialField field = build_potential(cfg.potential, grid);
  const MultiscaleBasis basis = build_global_basis(grid, cfg.epsilon, field);
  for (int j : study.setup.nodes) {
    study.profiles.push_back(measure_decay(basis, j, study.setup.m_max));
    std::ostringstream msg;
    msg << "decay node " << j << ": beta = "
        << (study.profiles.back().beta ? std::to_string(*study.profiles.back().beta) : "n/a");
    log_line(opts, 1, msg.str());
  }
  return study;
}

void write_decay_study(const DecayStudy& study, const std::string& directory) {
  const fs::path dir = fs::path(directory) / "decay";
  std::error_code ec;
  fs::create_directories(dir, ec);
  json summary;
  summary["n_coarse"] = study.setup.n_coarse;
  summary["refine_factor"] = study.setup.refine_factor;
  summary["m_max"] = study.setup.m_max;
  summary["nodes"] = json::array();
  for (const auto& p : study.profiles) {
    std::ofstream out(dir / ("node_" + std::to_string(p.node) + ".csv"));
    out.precision(12);
    out << "m,ratio\n";
    for (std::size_t m = 0; m < p.ratios.size(); ++m) out << m << "," << p.ratios[m] << "\n";
    json nj;
    nj["node"] = p.node;
    if (p.beta) nj["beta"] = *p.beta;
    summary["nodes"].push_back(nj);
  }
  std::ofstream out(dir / "summary.json");
  out << summary.dump(2) << "\n";
}

BasisExportConfig basis_export_from_json(const json& j, const ExperimentConfig& cfg) {
  BasisExportConfig b;
  if (!cfg.n_coarse_list.empty()) {
    b.n_coarse = cfg.n_coarse_list.front();
    b.refine_factor = cfg.refine_factor_for(b.n_coarse);
  }
  if (j.contains("basis_export")) {
    const auto& bj = j.at("basis_export");
    b.n_coarse = bj.value("n_coarse", b.n_coarse);
    b.refine_factor = bj.value("refine_factor", b.refine_factor);
    b.kind = bj.value("kind", b.kind);
    b.format = bj.value("format", b.format);
    b.m = bj.value("m", 0);
  }
  return b;
}

void run_basis_export(const ExperimentConfig& cfg, const BasisExportConfig& bcfg,
                      const std::string& directory) {
  const fs::path dir = fs::path(directory) / "basis";
  std::error_code ec;
  fs::create_directories(dir, ec);
  const PeriodicGridPair grid = build_grid_pair(bcfg.n_coarse, bcfg.refine_factor);
  const PotentialField field = build_potential(cfg.potential, grid);
  const int m = bcfg.m > 0 ? bcfg.m : cfg.oversampling.layers(bcfg.n_coarse);
  const MultiscaleBasis basis =
      bcfg.kind == "global" ? build_global_basis(grid, cfg.epsilon, field)
                            : build_localized_basis(grid, cfg.epsilon, field, m);
  if (bcfg.format == "triplets")
    write_basis_triplets(basis, (dir / "basis_triplets.txt").string());
  else
    write_basis_csv(basis, (dir / "basis.csv").string());
}

}  // namespace ocmsfem
