#include "ocmsfem/basis.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace ocmsfem {

namespace {

int ceil_log2(int n) {
  int p = 0;
  while ((1 << p) < n) ++p;
  return p;
}

/// KKT matrix [[A, C^T], [C, 0]] of the constrained minimisation.
SparseMat kkt_matrix(const SparseMat& a, const SparseMat& c) {
  const int nf = static_cast<int>(a.rows());
  const int nc = static_cast<int>(c.rows());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.nonZeros() + 2 * c.nonZeros());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMat::InnerIterator it(a, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < c.outerSize(); ++k)
    for (SparseMat::InnerIterator it(c, k); it; ++it) {
      const int row = static_cast<int>(it.row());
      const int col = static_cast<int>(it.col());
      trip.emplace_back(nf + row, col, it.value());
      trip.emplace_back(col, nf + row, it.value());
    }
  SparseMat kkt(nf + nc, nf + nc);
  kkt.setFromTriplets(trip.begin(), trip.end());
  return kkt;
}

}  // namespace

MultiscaleBasis::MultiscaleBasis(PeriodicGridPair grid, double epsilon, Eigen::MatrixXd dense)
    : kind_(BasisKind::global), grid_(grid), epsilon_(epsilon), dense_(std::move(dense)) {}

MultiscaleBasis::MultiscaleBasis(PeriodicGridPair grid, double epsilon, SparseMat sparse,
                                 int layers)
    : kind_(BasisKind::localized),
      layers_(layers),
      grid_(grid),
      epsilon_(epsilon),
      sparse_(std::move(sparse)) {}

Eigen::VectorXd MultiscaleBasis::column(int j) const {
  if (kind_ == BasisKind::global) return dense_.col(j);
  return Eigen::VectorXd(sparse_.col(j));
}

Eigen::VectorXcd MultiscaleBasis::prolong(const Eigen::VectorXcd& coeffs) const {
  if (kind_ == BasisKind::global) return dense_ * coeffs;
  return sparse_ * coeffs;
}

Eigen::VectorXcd MultiscaleBasis::restrict_to_space(const Eigen::VectorXcd& fine) const {
  if (kind_ == BasisKind::global) return dense_.transpose() * fine;
  return sparse_.transpose() * fine;
}

Eigen::MatrixXd MultiscaleBasis::gram(const SparseMat& fine_op) const {
  const int nc = n_basis();
  if (kind_ == BasisKind::localized) {
    SparseMat t = fine_op * sparse_;
    return Eigen::MatrixXd(SparseMat(sparse_.transpose() * t));
  }
  Eigen::MatrixXd out(nc, nc);
  const int block = 512;
  for (int c0 = 0; c0 < nc; c0 += block) {
    const int b = std::min(block, nc - c0);
    Eigen::MatrixXd t = fine_op * dense_.middleCols(c0, b);
    out.middleCols(c0, b).noalias() = dense_.transpose() * t;
  }
  return out;
}

MultiscaleBasis build_global_basis(const PeriodicGridPair& grid, double epsilon,
                                   const PotentialField& potential) {
  return build_global_basis(assemble_fine_operators(grid, potential, epsilon));
}

MultiscaleBasis build_global_basis(const FineOperators& ops) {
  const auto& grid = ops.grid;
  if (grid.coarse_h() > ops.epsilon)
    std::cerr << "[ocmsfem] warning: H = " << grid.coarse_h() << " exceeds epsilon = "
              << ops.epsilon << "; the multiscale space may lose accuracy\n";

  const int nf = grid.n_fine();
  const int nc = grid.n_coarse;
  SparseMat kkt = kkt_matrix(ops.hamiltonian, ops.constraint);

  Eigen::SparseLU<SparseMat> lu;
  lu.compute(kkt);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("build_global_basis: KKT factorisation failed "
                             "(degenerate constraint matrix)");

  Eigen::MatrixXd psi(nf, nc);
  const int block = 256;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nf + nc, std::min(block, nc));
  for (int c0 = 0; c0 < nc; c0 += block) {
    const int b = std::min(block, nc - c0);
    rhs.setZero();
    for (int j = 0; j < b; ++j) rhs(nf + c0 + j, j) = 1.0;
    Eigen::MatrixXd sol = lu.solve(rhs.leftCols(b));
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("build_global_basis: KKT solve failed");
    psi.middleCols(c0, b) = sol.topRows(nf);
  }
  return MultiscaleBasis(grid, ops.epsilon, std::move(psi));
}

MultiscaleBasis build_localized_basis(const PeriodicGridPair& grid, double epsilon,
                                      const PotentialField& potential, int m) {
  return build_localized_basis(assemble_fine_operators(grid, potential, epsilon), m);
}

MultiscaleBasis build_localized_basis(const FineOperators& ops, int m) {
  if (m < 1) throw std::invalid_argument("build_localized_basis: m must be >= 1");
  const auto& grid = ops.grid;
  const int nf = grid.n_fine();
  const int nc = grid.n_coarse;
  const int r = grid.refine_factor;

  if (2 * m + 2 >= nc) {
    // every patch covers the ring; the problems coincide with the global one
    MultiscaleBasis global = build_global_basis(ops);
    return MultiscaleBasis(grid, ops.epsilon, global.dense().sparseView(), m);
  }

  const SparseMat& a = ops.hamiltonian;
  const SparseMat& c = ops.constraint;
  const int n_el = 2 * m + 2;          // patch elements
  const int na = n_el * r - 1;         // interior fine nodes
  const int nk = n_el + 1;             // coarse hats meeting the patch

  std::vector<Eigen::Triplet<double>> basis_trip;
  basis_trip.reserve(static_cast<std::size_t>(nc) * na);

  for (int j = 0; j < nc; ++j) {
    const Patch p = patch(grid, j, m);
    const int s = p.first_fine_node;  // patch boundary node, held at zero

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(na) * 3 + static_cast<std::size_t>(nk) * (2 * r + 1) * 2);
    // interior block of the hamiltonian: tridiagonal along the patch
    for (int k = 0; k < na; ++k) {
      const int gi = grid.wrap_fine(s + 1 + k);
      trip.emplace_back(k, k, a.coeff(gi, gi));
      if (k + 1 < na) {
        const int gj = grid.wrap_fine(s + 2 + k);
        const double v = a.coeff(gi, gj);
        trip.emplace_back(k, k + 1, v);
        trip.emplace_back(k + 1, k, v);
      }
    }
    // constraint rows of the coarse hats whose support meets the patch
    const int k0 = j - 1 - m;  // first such coarse node
    for (int kc = 0; kc < nk; ++kc) {
      const int gk = grid.wrap_coarse(k0 + kc);
      // row gk of C has entries within one coarse support of node gk
      for (int o = -r; o <= r; ++o) {
        const int gi = grid.wrap_fine(gk * r + o);
        const int local = static_cast<int>((static_cast<long long>(gi) - s - 1 + 2LL * nf) % nf);
        if (local < 0 || local >= na) continue;
        const double v = c.coeff(gk, gi);
        if (v == 0.0) continue;
        trip.emplace_back(na + kc, local, v);
        trip.emplace_back(local, na + kc, v);
      }
    }
    SparseMat kkt(na + nk, na + nk);
    kkt.setFromTriplets(trip.begin(), trip.end());

    Eigen::SparseLU<SparseMat> lu;
    lu.compute(kkt);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("build_localized_basis: patch KKT is singular at node j = " +
                               std::to_string(j) + ", m = " + std::to_string(m));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(na + nk);
    rhs[na + (m + 1)] = 1.0;  // constraint of node j sits at offset m + 1
    Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("build_localized_basis: patch KKT solve failed at node j = " +
                               std::to_string(j) + ", m = " + std::to_string(m));
    for (int k = 0; k < na; ++k)
      basis_trip.emplace_back(grid.wrap_fine(s + 1 + k), j, sol[k]);
  }

  SparseMat psi(nf, nc);
  psi.setFromTriplets(basis_trip.begin(), basis_trip.end());
  return MultiscaleBasis(grid, ops.epsilon, std::move(psi), m);
}

MsOperators assemble_ms_operators(const MultiscaleBasis& basis, const FineOperators& ops) {
  if (basis.n_fine() != ops.grid.n_fine() || basis.n_basis() != ops.grid.n_coarse)
    throw std::invalid_argument("assemble_ms_operators: basis and operators use different grids");
  MsOperators out;
  out.a = basis.gram(ops.hamiltonian);
  out.mass = basis.gram(ops.mass);
  // congruence keeps symmetry; remove the roundoff skew
  out.a = 0.5 * (out.a + out.a.transpose()).eval();
  out.mass = 0.5 * (out.mass + out.mass.transpose()).eval();
  return out;
}

DecayProfile measure_decay(const MultiscaleBasis& basis, int j, int m_max) {
  if (basis.kind() != BasisKind::global)
    throw std::invalid_argument("measure_decay: expected a global basis");
  const auto& grid = basis.grid();
  const int nf = grid.n_fine();
  const int nc = grid.n_coarse;
  const int r = grid.refine_factor;
  const double h = grid.fine_h();

  const Eigen::VectorXd psi = basis.column(j);
  // gradient energy per fine element, accumulated per coarse element
  Eigen::VectorXd coarse_energy = Eigen::VectorXd::Zero(nc);
  double total = 0.0;
  for (int i = 0; i < nf; ++i) {
    const double d = psi[(i + 1) % nf] - psi[i];
    const double g = d * d / h;
    coarse_energy[i / r] += g;
    total += g;
  }

  DecayProfile profile;
  profile.node = j;
  profile.ratios.reserve(m_max + 1);
  for (int m = 0; m <= m_max; ++m) {
    const Patch p = patch(grid, j, m);
    if (p.saturated) {
      profile.ratios.push_back(0.0);
      continue;
    }
    double inside = 0.0;
    for (int e = 0; e < p.n_elements; ++e)
      inside += coarse_energy[grid.wrap_coarse(p.first_element + e)];
    const double outside = std::max(total - inside, 0.0);
    profile.ratios.push_back(std::sqrt(outside / total));
  }

  // least-squares rate over the usable pre-saturation range
  std::vector<double> xs, ys;
  for (int m = 1; m <= m_max; ++m) {
    if (2 * m + 2 >= nc) break;
    const double ratio = profile.ratios[m];
    if (ratio < 1e-12) break;
    xs.push_back(m);
    ys.push_back(std::log(ratio));
  }
  if (xs.size() >= 3) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    profile.beta = std::exp(slope);
  }
  return profile;
}

int default_oversampling(int n_coarse, int c) { return c * ceil_log2(n_coarse); }

void write_basis_csv(const MultiscaleBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_basis_csv: cannot open " + path);
  out.precision(17);
  const int nf = basis.n_fine();
  const int nc = basis.n_basis();
  out << "x";
  for (int j = 0; j < nc; ++j) out << ",psi_" << j;
  out << "\n";
  for (int i = 0; i < nf; ++i) {
    out << basis.grid().fine_node(i);
    if (basis.kind() == BasisKind::global) {
      for (int j = 0; j < nc; ++j) out << "," << basis.dense()(i, j);
    } else {
      for (int j = 0; j < nc; ++j) out << "," << basis.sparse().coeff(i, j);
    }
    out << "\n";
  }
}

void write_basis_triplets(const MultiscaleBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_basis_triplets: cannot open " + path);
  out.precision(17);
  out << basis.n_fine() << " " << basis.n_basis() << "\n";
  if (basis.kind() == BasisKind::localized) {
    const auto& s = basis.sparse();
    for (int k = 0; k < s.outerSize(); ++k)
      for (SparseMat::InnerIterator it(s, k); it; ++it)
        out << it.row() << " " << it.col() << " " << it.value() << "\n";
  } else {
    const auto& d = basis.dense();
    for (int j = 0; j < d.cols(); ++j)
      for (int i = 0; i < d.rows(); ++i)
        if (d(i, j) != 0.0) out << i << " " << j << " " << d(i, j) << "\n";
  }
}

}  // namespace ocmsfem
