#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "ocmsfem/assembly.hpp"

namespace ocmsfem {

/// Relative L2 and H1 errors between two fine-nodal functions on the same
/// grid, via the mass and stiffness quadratic forms.
std::pair<double, double> relative_errors(const WaveFunction& u_num, const WaveFunction& u_ref,
                                          const SparseMat& mass, const SparseMat& stiffness);

/// Pairwise consecutive orders log(err_i / err_{i+1}) / log(H_i / H_{i+1}).
/// H must be strictly decreasing and the errors positive.
std::vector<double> fit_orders(const std::vector<double>& h_values,
                               const std::vector<double>& errors);

/// Least-squares slope of log(err) against log(H).
double lsq_slope(const std::vector<double>& h_values, const std::vector<double>& errors);

struct MethodSeries {
  std::string method;
  std::vector<double> h_values;
  std::vector<double> err_l2, err_h1;
  std::vector<double> orders_l2, orders_h1;  // consecutive
  double slope_l2 = 0.0, slope_h1 = 0.0;     // global least-squares
};

struct ConvergenceReport {
  std::string potential;
  std::vector<double> delta_tags;
  double epsilon = 0.0;
  double T = 0.0;
  double dt = 0.0;  // the dt the table was accepted at
  std::string oversampling_rule;
  std::string reference;
  bool dt_saturated = true;
  std::vector<MethodSeries> series;
  std::string resolved_config;  // JSON text, sufficient to rerun
};

/// Writes report.json, report.csv and one series/<method>_<metric>.csv per
/// column into the directory.
void emit_report(const ConvergenceReport& report, const std::string& directory);

nlohmann::json report_to_json(const ConvergenceReport& report);
ConvergenceReport report_from_json(const nlohmann::json& j);
ConvergenceReport read_report(const std::string& json_path);

}  // namespace ocmsfem
