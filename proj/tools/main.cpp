#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "ocmsfem/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::string cache_dir;
  std::string log_level = "info";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--output-dir", args.output_dir, "directory for reports and series files");
  cmd->add_option("--cache-dir", args.cache_dir, "reference-solution cache directory");
  cmd->add_option("--threads", args.threads, "parallel (method, H) cells")->check(CLI::PositiveNumber);
  cmd->add_option("--log-level", args.log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
}

ocmsfem::ExperimentConfig resolve(const CommonArgs& args, nlohmann::json& raw) {
  std::ifstream in(args.config_path);
  if (!in) throw ocmsfem::ConfigError({{true, "cannot open config file " + args.config_path}});
  try {
    in >> raw;
  } catch (const std::exception& e) {
    throw ocmsfem::ConfigError({{true, std::string("config is not valid JSON: ") + e.what()}});
  }
  ocmsfem::ExperimentConfig cfg = ocmsfem::config_from_json(raw);
  if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
  if (!args.cache_dir.empty()) cfg.cache_dir = args.cache_dir;
  return cfg;
}

ocmsfem::RunOptions options(const CommonArgs& args) {
  ocmsfem::RunOptions opts;
  opts.threads = args.threads;
  opts.log_level = args.log_level == "quiet" ? 0 : (args.log_level == "debug" ? 2 : 1);
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-compressed multiscale FEM laboratory for the 1D periodic "
               "semiclassical Schrodinger equation"};
  app.require_subcommand(1);

  CommonArgs run_args, validate_args, decay_args, basis_args;
  CLI::App* cmd_run = app.add_subcommand("run", "run the configured convergence experiment");
  add_common(cmd_run, run_args);
  CLI::App* cmd_validate = app.add_subcommand("validate", "check a config and print diagnostics");
  add_common(cmd_validate, validate_args);
  CLI::App* cmd_decay = app.add_subcommand("decay", "basis-decay study (DecayProfiles)");
  add_common(cmd_decay, decay_args);
  CLI::App* cmd_basis = app.add_subcommand("basis", "export basis functions");
  add_common(cmd_basis, basis_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      nlohmann::json raw;
      const auto cfg = resolve(run_args, raw);
      const auto report = ocmsfem::run_experiment(cfg, options(run_args));
      std::cout << "report written to " << cfg.output_dir << "/report.json\n";
    } else if (cmd_validate->parsed()) {
      nlohmann::json raw;
      const auto cfg = resolve(validate_args, raw);
      const auto diagnostics = ocmsfem::validate_config(cfg);
      bool has_error = false;
      for (const auto& d : diagnostics) {
        std::cout << (d.is_error ? "error: " : "warning: ") << d.message << "\n";
        has_error |= d.is_error;
      }
      if (diagnostics.empty()) std::cout << "config ok\n";
      return has_error ? 2 : 0;
    } else if (cmd_decay->parsed()) {
      nlohmann::json raw;
      const auto cfg = resolve(decay_args, raw);
      const auto dcfg = ocmsfem::decay_config_from_json(raw, cfg);
      const auto study = ocmsfem::run_decay_study(cfg, dcfg, options(decay_args));
      ocmsfem::write_decay_study(study, cfg.output_dir);
      std::cout << "decay profiles written to " << cfg.output_dir << "/decay\n";
    } else if (cmd_basis->parsed()) {
      nlohmann::json raw;
      const auto cfg = resolve(basis_args, raw);
      const auto bcfg = ocmsfem::basis_export_from_json(raw, cfg);
      ocmsfem::run_basis_export(cfg, bcfg, cfg.output_dir);
      std::cout << "basis written to " << cfg.output_dir << "/basis\n";
    }
  } catch (const ocmsfem::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
