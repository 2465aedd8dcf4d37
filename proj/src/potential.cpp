#include "ocmsfem/potential.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ocmsfem {

namespace {
constexpr double kGaussOffset = 0.28867513459481288225;  // 1/(2*sqrt(3))

void finalize_bounds(PotentialField& field) {
  field.v_min = field.samples.minCoeff();
  field.v_max = field.samples.maxCoeff();
  if (field.v_min <= 0.0)
    throw std::invalid_argument("potential is not positive on all samples; "
                                "apply a constant shift first");
}
}  // namespace

Eigen::ArrayXXd gauss_points(const PeriodicGridPair& grid) {
  const int n = grid.n_fine();
  const double h = grid.fine_h();
  Eigen::ArrayXXd pts(n, 2);
  for (int e = 0; e < n; ++e) {
    const double mid = (e + 0.5) * h;
    pts(e, 0) = mid - kGaussOffset * h;
    pts(e, 1) = mid + kGaussOffset * h;
  }
  return pts;
}

double smooth_potential_value(double x, double delta, double shift) {
  return std::cos(x / delta) + 2.0 + shift;
}

PotentialField smooth_potential(double delta, const PeriodicGridPair& grid, double shift) {
  if (delta <= 0.0) throw std::invalid_argument("smooth_potential: delta must be positive");
  PotentialField field;
  field.n_fine = grid.n_fine();
  field.samples = gauss_points(grid).unaryExpr(
      [&](double x) { return smooth_potential_value(x, delta, shift); });
  field.delta_tags = {delta};
  finalize_bounds(field);
  // the function range is [1, 3] (+ shift); samples can only be inside it
  field.v_min = std::min(field.v_min, 1.0 + shift);
  field.v_max = std::max(field.v_max, 3.0 + shift);
  return field;
}

double discontinuous_potential_value(double x, double delta1, double delta2, double shift) {
  const double base = (x - std::numbers::pi) * (x - std::numbers::pi) + 2.0 + shift;
  return base + (x <= std::numbers::pi ? std::cos(x / delta1) : std::cos(x / delta2));
}

PotentialField discontinuous_potential(double delta1, double delta2,
                                       const PeriodicGridPair& grid, double shift) {
  if (delta1 <= 0.0 || delta2 <= 0.0)
    throw std::invalid_argument("discontinuous_potential: deltas must be positive");
  if (grid.n_fine() % 2 != 0)
    throw std::invalid_argument("discontinuous_potential: x = pi must be a fine node "
                                "(fine element count must be even)");
  PotentialField field;
  field.n_fine = grid.n_fine();
  field.samples = gauss_points(grid).unaryExpr(
      [&](double x) { return discontinuous_potential_value(x, delta1, delta2, shift); });
  field.delta_tags = {delta1, delta2};
  field.discontinuities = {std::numbers::pi};
  finalize_bounds(field);
  return field;
}

PotentialField potential_from_nodal_samples(const Eigen::VectorXd& nodal,
                                            const PeriodicGridPair& grid, double shift) {
  const int n = grid.n_fine();
  if (nodal.size() != n)
    throw std::invalid_argument("potential_from_nodal_samples: expected one value per fine node");
  PotentialField field;
  field.n_fine = n;
  field.samples.resize(n, 2);
  const double lo = 0.5 - kGaussOffset;
  const double hi = 0.5 + kGaussOffset;
  for (int e = 0; e < n; ++e) {
    const double a = nodal[e];
    const double b = nodal[(e + 1) % n];
    field.samples(e, 0) = a + (b - a) * lo + shift;
    field.samples(e, 1) = a + (b - a) * hi + shift;
  }
  finalize_bounds(field);
  return field;
}

PotentialField potential_from_csv(const std::string& path, const PeriodicGridPair& grid,
                                  double shift) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("potential_from_csv: cannot open " + path);
  const int n = grid.n_fine();
  const double h = grid.fine_h();
  Eigen::VectorXd nodal(n);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || (row == 0 && line.find_first_of("0123456789") == std::string::npos))
      continue;  // header or comment
    std::istringstream ls(line);
    double x, v;
    char comma;
    if (!(ls >> x >> comma >> v))
      throw std::runtime_error("potential_from_csv: malformed row '" + line + "'");
    if (row >= n) throw std::runtime_error("potential_from_csv: more rows than fine nodes");
    if (std::abs(x - row * h) > 1e-9 * kDomainLength)
      throw std::runtime_error("potential_from_csv: x column does not match the fine nodes");
    nodal[row++] = v;
  }
  if (row != n) throw std::runtime_error("potential_from_csv: expected " + std::to_string(n) +
                                         " rows, got " + std::to_string(row));
  return potential_from_nodal_samples(nodal, grid, shift);
}

InitialData gaussian_wavepacket(double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("gaussian_wavepacket: epsilon must be positive");
  const double amp = std::pow(10.0 / std::numbers::pi, 0.25);
  InitialData u0;
  u0.epsilon = epsilon;
  u0.evaluate = [amp, epsilon](double x) {
    const double s = x - std::numbers::pi;
    return amp * std::exp(-5.0 * s * s) *
           std::exp(std::complex<double>(0.0, -s * s / epsilon));
  };
  return u0;
}

Eigen::VectorXcd sample_fine(const InitialData& u0, const PeriodicGridPair& grid) {
  return sample_uniform(u0, grid.n_fine());
}

Eigen::VectorXcd sample_uniform(const InitialData& u0, int n) {
  Eigen::VectorXcd out(n);
  const double h = kDomainLength / n;
  for (int i = 0; i < n; ++i) out[i] = u0.evaluate(i * h);
  return out;
}

}  // namespace ocmsfem
