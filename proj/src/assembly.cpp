#include "ocmsfem/assembly.hpp"

#include <stdexcept>
#include <vector>

namespace ocmsfem {

namespace {
constexpr double kGaussOffset = 0.28867513459481288225;  // 1/(2*sqrt(3))

int level_size(const PeriodicGridPair& grid, GridLevel level) {
  return level == GridLevel::fine ? grid.n_fine() : grid.n_coarse;
}

SparseMat cyclic_tridiagonal(int n, double diag, double off) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1) % n;
    trip.emplace_back(i, i, diag);
    trip.emplace_back(i, ip, off);
    trip.emplace_back(ip, i, off);
  }
  SparseMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}
}  // namespace

SparseMat assemble_mass(const PeriodicGridPair& grid, GridLevel level) {
  const int n = level_size(grid, level);
  const double l = kDomainLength / n;
  return cyclic_tridiagonal(n, 2.0 * l / 3.0, l / 6.0);
}

SparseMat assemble_stiffness(const PeriodicGridPair& grid, GridLevel level) {
  const int n = level_size(grid, level);
  const double l = kDomainLength / n;
  return cyclic_tridiagonal(n, 2.0 / l, -1.0 / l);
}

SparseMat assemble_weighted_mass(const PeriodicGridPair& grid, GridLevel level,
                                 const PotentialField& potential) {
  if (level != GridLevel::fine)
    throw std::invalid_argument("assemble_weighted_mass: only the fine level is assembled "
                                "directly; form coarse operators through the prolongation");
  const int n = grid.n_fine();
  if (potential.n_fine != n)
    throw std::invalid_argument("assemble_weighted_mass: potential was sampled on a "
                                "different grid");
  const double h = grid.fine_h();
  const double w = h / 2.0;  // Gauss weight per point
  const double xi[2] = {0.5 - kGaussOffset, 0.5 + kGaussOffset};

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * n);
  for (int e = 0; e < n; ++e) {
    const int a = e;
    const int b = (e + 1) % n;
    double maa = 0.0, mbb = 0.0, mab = 0.0;
    for (int q = 0; q < 2; ++q) {
      const double v = w * potential.samples(e, q);
      maa += v * (1.0 - xi[q]) * (1.0 - xi[q]);
      mbb += v * xi[q] * xi[q];
      mab += v * xi[q] * (1.0 - xi[q]);
    }
    trip.emplace_back(a, a, maa);
    trip.emplace_back(b, b, mbb);
    trip.emplace_back(a, b, mab);
    trip.emplace_back(b, a, mab);
  }
  SparseMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMat prolongation_matrix(const PeriodicGridPair& grid) {
  const int r = grid.refine_factor;
  const int nc = grid.n_coarse;
  const int nf = grid.n_fine();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nc) * (2 * r - 1));
  for (int j = 0; j < nc; ++j) {
    const int center = j * r;
    for (int o = -r + 1; o <= r - 1; ++o) {
      const int i = ((center + o) % nf + nf) % nf;
      trip.emplace_back(i, j, 1.0 - std::abs(o) / static_cast<double>(r));
    }
  }
  SparseMat p(nf, nc);
  p.setFromTriplets(trip.begin(), trip.end());
  return p;
}

FineOperators assemble_fine_operators(const PeriodicGridPair& grid,
                                      const PotentialField& potential, double epsilon) {
  FineOperators ops;
  ops.grid = grid;
  ops.epsilon = epsilon;
  ops.mass = assemble_mass(grid, GridLevel::fine);
  ops.stiffness = assemble_stiffness(grid, GridLevel::fine);
  ops.weighted_mass = assemble_weighted_mass(grid, GridLevel::fine, potential);
  ops.hamiltonian = (0.5 * epsilon * epsilon) * ops.stiffness + ops.weighted_mass;
  ops.prolongation = prolongation_matrix(grid);
  ops.constraint = SparseMat(ops.prolongation.transpose() * ops.mass);
  return ops;
}

std::complex<double> bilinear_form(const WaveFunction& v, const WaveFunction& w, double epsilon,
                                   const FineOperators& ops) {
  if (v.space != SpaceTag::fine_nodal || w.space != SpaceTag::fine_nodal)
    throw std::invalid_argument("bilinear_form: both arguments must be fine-nodal");
  const std::complex<double> grad = w.coeffs.dot(ops.stiffness * v.coeffs);
  const std::complex<double> pot = w.coeffs.dot(ops.weighted_mass * v.coeffs);
  return 0.5 * epsilon * epsilon * grad + pot;
}

double l2_norm(const Eigen::VectorXcd& v, const SparseMat& mass) {
  return std::sqrt(std::abs(std::real(v.dot(mass * v))));
}

double h1_norm(const Eigen::VectorXcd& v, const SparseMat& mass, const SparseMat& stiffness) {
  const double l2 = std::real(v.dot(mass * v));
  const double semi = std::real(v.dot(stiffness * v));
  return std::sqrt(std::abs(l2 + semi));
}

double energy_norm(const Eigen::VectorXcd& v, double epsilon, const FineOperators& ops) {
  const double grad = std::real(v.dot(ops.stiffness * v));
  const double pot = std::real(v.dot(ops.weighted_mass * v));
  return std::sqrt(std::abs(0.5 * epsilon * epsilon * grad + pot));
}

WaveFunction clement_interpolate(const WaveFunction& v, const PeriodicGridPair& grid,
                                 const SparseMat& mass_fine, const SparseMat& prolongation) {
  if (v.space != SpaceTag::fine_nodal)
    throw std::invalid_argument("clement_interpolate: expected a fine-nodal function");
  const double H = grid.coarse_h();  // (1, phi_j) on a uniform periodic mesh
  WaveFunction out;
  out.space = SpaceTag::coarse_p1;
  out.coeffs = (prolongation.transpose() * (mass_fine * v.coeffs)) / H;
  return out;
}

}  // namespace ocmsfem
