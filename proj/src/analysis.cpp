#include "ocmsfem/analysis.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace ocmsfem {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<double, double> relative_errors(const WaveFunction& u_num, const WaveFunction& u_ref,
                                          const SparseMat& mass, const SparseMat& stiffness) {
  if (u_num.coeffs.size() != u_ref.coeffs.size())
    throw std::invalid_argument("relative_errors: functions live on different grids");
  const Eigen::VectorXcd d = u_num.coeffs - u_ref.coeffs;
  const double ref_l2 = l2_norm(u_ref.coeffs, mass);
  const double ref_h1 = h1_norm(u_ref.coeffs, mass, stiffness);
  if (ref_l2 == 0.0 || ref_h1 == 0.0)
    throw std::invalid_argument("relative_errors: reference has zero norm");
  return {l2_norm(d, mass) / ref_l2, h1_norm(d, mass, stiffness) / ref_h1};
}

std::vector<double> fit_orders(const std::vector<double>& h_values,
                               const std::vector<double>& errors) {
  if (h_values.size() != errors.size())
    throw std::invalid_argument("fit_orders: size mismatch");
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < h_values.size(); ++i) {
    if (h_values[i] <= h_values[i + 1])
      throw std::invalid_argument("fit_orders: H values must be strictly decreasing");
    if (errors[i] <= 0.0 || errors[i + 1] <= 0.0)
      throw std::invalid_argument("fit_orders: errors must be positive");
    orders.push_back(std::log(errors[i] / errors[i + 1]) /
                     std::log(h_values[i] / h_values[i + 1]));
  }
  return orders;
}

double lsq_slope(const std::vector<double>& h_values, const std::vector<double>& errors) {
  if (h_values.size() < 2) throw std::invalid_argument("lsq_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h_values.size());
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    if (h_values[i] <= 0.0 || errors[i] <= 0.0)
      throw std::invalid_argument("lsq_slope: values must be positive");
    const double x = std::log(h_values[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

json report_to_json(const ConvergenceReport& r) {
  json j;
  j["potential"] = r.potential;
  j["delta_tags"] = r.delta_tags;
  j["epsilon"] = r.epsilon;
  j["T"] = r.T;
  j["dt"] = r.dt;
  j["oversampling_rule"] = r.oversampling_rule;
  j["reference"] = r.reference;
  j["dt_saturated"] = r.dt_saturated;
  j["resolved_config"] = r.resolved_config.empty() ? json::object()
                                                   : json::parse(r.resolved_config);
  j["series"] = json::array();
  for (const auto& s : r.series) {
    json sj;
    sj["method"] = s.method;
    sj["H"] = s.h_values;
    sj["err_L2"] = s.err_l2;
    sj["err_H1"] = s.err_h1;
    sj["orders_L2"] = s.orders_l2;
    sj["orders_H1"] = s.orders_h1;
    sj["slope_L2"] = s.slope_l2;
    sj["slope_H1"] = s.slope_h1;
    j["series"].push_back(std::move(sj));
  }
  return j;
}

ConvergenceReport report_from_json(const json& j) {
  ConvergenceReport r;
  r.potential = j.at("potential").get<std::string>();
  r.delta_tags = j.at("delta_tags").get<std::vector<double>>();
  r.epsilon = j.at("epsilon").get<double>();
  r.T = j.at("T").get<double>();
  r.dt = j.at("dt").get<double>();
  r.oversampling_rule = j.at("oversampling_rule").get<std::string>();
  r.reference = j.at("reference").get<std::string>();
  r.dt_saturated = j.at("dt_saturated").get<bool>();
  r.resolved_config = j.at("resolved_config").dump();
  for (const auto& sj : j.at("series")) {
    MethodSeries s;
    s.method = sj.at("method").get<std::string>();
    s.h_values = sj.at("H").get<std::vector<double>>();
    s.err_l2 = sj.at("err_L2").get<std::vector<double>>();
    s.err_h1 = sj.at("err_H1").get<std::vector<double>>();
    s.orders_l2 = sj.at("orders_L2").get<std::vector<double>>();
    s.orders_h1 = sj.at("orders_H1").get<std::vector<double>>();
    s.slope_l2 = sj.at("slope_L2").get<double>();
    s.slope_h1 = sj.at("slope_H1").get<double>();
    r.series.push_back(std::move(s));
  }
  return r;
}

ConvergenceReport read_report(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("read_report: cannot open " + json_path);
  json j;
  in >> j;
  return report_from_json(j);
}

void emit_report(const ConvergenceReport& report, const std::string& directory) {
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::create_directories(dir / "series", ec);

  {
    std::ofstream out(dir / "report.json");
    if (!out) throw std::runtime_error("emit_report: cannot write to " + directory);
    out << report_to_json(report).dump(2) << "\n";
  }

  // report.csv: one data row per H, then the pairwise order rows,
  // mirroring the err-then-order interleaving of the reference tables
  {
    std::ofstream out(dir / "report.csv");
    out.precision(12);
    out << "H";
    for (const auto& s : report.series)
      out << "," << s.method << ":err_L2," << s.method << ":err_H1";
    out << "\n";
    const std::size_t n_h = report.series.empty() ? 0 : report.series.front().h_values.size();
    for (std::size_t i = 0; i < n_h; ++i) {
      out << report.series.front().h_values[i];
      for (const auto& s : report.series) out << "," << s.err_l2[i] << "," << s.err_h1[i];
      out << "\n";
    }
    for (std::size_t i = 0; i + 1 < n_h; ++i) {
      out << "order:" << i;
      for (const auto& s : report.series) out << "," << s.orders_l2[i] << "," << s.orders_h1[i];
      out << "\n";
    }
  }

  for (const auto& s : report.series) {
    for (const char* metric : {"L2", "H1"}) {
      std::ofstream out(dir / "series" / (s.method + std::string("_err_") + metric + ".csv"));
      out.precision(12);
      out << "H,err\n";
      const auto& errs = metric[0] == 'L' ? s.err_l2 : s.err_h1;
      for (std::size_t i = 0; i < s.h_values.size(); ++i)
        out << s.h_values[i] << "," << errs[i] << "\n";
    }
  }
}

}  // namespace ocmsfem
