#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "ocmsfem/analysis.hpp"
#include "ocmsfem/basis.hpp"
#include "ocmsfem/evolve.hpp"

namespace ocmsfem {

struct PotentialSpec {
  std::string name = "smooth";  // smooth | discontinuous | custom
  double delta = 0.1;
  double delta1 = 0.2;
  double delta2 = 0.1;
  double shift = 0.0;
  std::string csv;  // nodal samples for "custom"

  double min_scale() const;  // smallest delta, or 0 for custom
};

struct RefineRule {
  std::string mode = "target_fine";  // target_fine | factor | auto
  int factor = 16;
  int target_fine = 8192;
};

struct OversamplingRule {
  int c = 3;
  bool use_explicit = false;
  int explicit_m = 0;

  int layers(int n_coarse) const {
    return use_explicit ? explicit_m : default_oversampling(n_coarse, c);
  }
};

struct ReferenceSpec {
  std::string method = "tssp";  // tssp | msfem-global | fem-cn
  int resolution = 32768;       // sample count (tssp/fem-cn) or coarse count (msfem-global)
  int refine_factor = 8;        // msfem-global only
  double dt = 2.5e-6;
};

struct SaturationRule {
  bool enabled = false;
  double tolerance = 0.25;
  int max_halvings = 3;
};

struct ExperimentConfig {
  PotentialSpec potential;
  double epsilon = 0.125;
  double T = 0.5;
  double dt = 1e-4;
  SaturationRule dt_saturation;
  std::vector<int> n_coarse_list;
  RefineRule refine;
  std::vector<std::string> methods;  // fem-cn | msfem-global | msfem-localized | tssp
  OversamplingRule oversampling;
  ReferenceSpec reference;
  std::uint64_t seed = 0;  // reserved for randomized diagnostics
  std::string output_dir = "out";
  std::string cache_dir;

  int refine_factor_for(int n_coarse) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct Diagnostic {
  bool is_error = false;
  std::string message;
};

/// Checks the resolution invariants, the discontinuity placement, the
/// Assumption-1 surrogate H <= epsilon and the oversampling rule. Errors
/// make run_experiment refuse to start; warnings are informational.
std::vector<Diagnostic> validate_config(const ExperimentConfig& cfg);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct RunOptions {
  int threads = 1;
  int log_level = 1;  // 0 quiet, 1 info, 2 debug
};

/// Reference trajectory endpoint used for error evaluation.
struct ReferenceSolution {
  bool spectral = false;  // trig interpolant (TSSP) vs fine-nodal P1 function
  Eigen::VectorXcd samples;
  std::string descriptor;
};

ReferenceSolution compute_reference(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Runs the full (method, H) sweep against the reference, optionally halving
/// dt until the probe cell is temporally saturated, and writes report.json,
/// report.csv and the series files into cfg.output_dir.
ConvergenceReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct DecayStudyConfig {
  int n_coarse = 64;
  int refine_factor = 32;
  int m_max = 0;  // 0: up to saturation
  std::vector<int> nodes;  // empty: five equispaced nodes
};

struct DecayStudy {
  DecayStudyConfig setup;
  std::vector<DecayProfile> profiles;
};

DecayStudyConfig decay_config_from_json(const nlohmann::json& j, const ExperimentConfig& cfg);
DecayStudy run_decay_study(const ExperimentConfig& cfg, const DecayStudyConfig& dcfg,
                           const RunOptions& opts = {});
void write_decay_study(const DecayStudy& study, const std::string& directory);

struct BasisExportConfig {
  int n_coarse = 16;
  int refine_factor = 8;
  std::string kind = "localized";  // localized | global
  std::string format = "csv";      // csv | triplets
  int m = 0;                       // 0: oversampling rule
};

BasisExportConfig basis_export_from_json(const nlohmann::json& j, const ExperimentConfig& cfg);
void run_basis_export(const ExperimentConfig& cfg, const BasisExportConfig& bcfg,
                      const std::string& directory);

}  // namespace ocmsfem
