#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "ocmsfem/assembly.hpp"

using namespace ocmsfem;

namespace {

Eigen::VectorXcd random_complex(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::complex<double>(dist(rng), dist(rng));
  return v;
}

// projector onto ker(C) for small problems
Eigen::VectorXd project_to_kernel(const Eigen::VectorXd& v, const SparseMat& constraint) {
  const Eigen::MatrixXd c = Eigen::MatrixXd(constraint);
  const Eigen::MatrixXd cct = c * c.transpose();
  return v - c.transpose() * cct.ldlt().solve(c * v);
}

}  // namespace

TEST_CASE("mass matrix entries, row sums and total measure") {
  auto g = build_grid_pair(4, 1);
  auto m = assemble_mass(g, GridLevel::coarse);
  CHECK(m.coeff(0, 0) == doctest::Approx(std::numbers::pi / 3).epsilon(1e-14));
  CHECK(m.coeff(0, 1) == doctest::Approx(std::numbers::pi / 12).epsilon(1e-14));
  CHECK(m.coeff(1, 0) == doctest::Approx(std::numbers::pi / 12).epsilon(1e-14));

  for (auto level : {GridLevel::coarse, GridLevel::fine}) {
    auto g2 = build_grid_pair(8, 4);
    auto mm = assemble_mass(g2, level);
    const int n = static_cast<int>(mm.rows());
    const double l = kDomainLength / n;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd rowsum = mm * ones;
    for (int i = 0; i < n; ++i) CHECK(rowsum[i] == doctest::Approx(l).epsilon(1e-13));
    CHECK(ones.dot(mm * ones) == doctest::Approx(kDomainLength).epsilon(1e-13));
  }
}

TEST_CASE("stiffness matrix entries and kernel") {
  auto g = build_grid_pair(4, 1);
  auto s = assemble_stiffness(g, GridLevel::fine);
  CHECK(s.coeff(0, 0) == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(s.coeff(0, 1) == doctest::Approx(-2.0 / std::numbers::pi).epsilon(1e-14));

  auto g2 = build_grid_pair(16, 8);
  auto s2 = assemble_stiffness(g2, GridLevel::fine);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s2.rows());
  CHECK((s2 * ones).lpNorm<Eigen::Infinity>() <= 1e-12 / g2.fine_h());
}

TEST_CASE("stiffness form of nodal sin converges to pi") {
  // int (d/dx sin x)^2 dx over [0, 2 pi] = pi
  double prev_gap = 1e9;
  for (int n : {64, 128, 256}) {
    auto g = build_grid_pair(n, 1);
    auto s = assemble_stiffness(g, GridLevel::fine);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = std::sin(g.fine_node(i));
    const double q = v.dot(s * v);
    const double gap = std::abs(q - std::numbers::pi);
    CHECK(gap < prev_gap);
    prev_gap = gap;
    if (n == 256) CHECK(gap <= 1e-3);
  }
}

TEST_CASE("weighted mass with constant V equals V0 times the mass matrix") {
  auto g = build_grid_pair(8, 4);
  const double v0 = 2.0;
  PotentialField field;
  field.n_fine = g.n_fine();
  field.samples = Eigen::ArrayXXd::Constant(g.n_fine(), 2, v0);
  field.v_min = field.v_max = v0;
  auto mv = assemble_weighted_mass(g, GridLevel::fine, field);
  auto m = assemble_mass(g, GridLevel::fine);
  CHECK((Eigen::MatrixXd(mv) - v0 * Eigen::MatrixXd(m)).lpNorm<Eigen::Infinity>() <=
        1e-13 * v0 * m.coeff(0, 0));
}

TEST_CASE("weighted mass quadrature integrates the oscillatory potential") {
  // ones-form equals int V = 4 pi when 1/delta = 10 divides no grid harmonic
  auto g = build_grid_pair(16, 8);
  auto field = smooth_potential(0.1, g);
  auto mv = assemble_weighted_mass(g, GridLevel::fine, field);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.n_fine());
  CHECK(ones.dot(mv * ones) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-10));
}

TEST_CASE("weighted mass smallest eigenvalue dominated by v_min") {
  auto g = build_grid_pair(8, 4);
  auto field = smooth_potential(0.1, g);
  auto mv = assemble_weighted_mass(g, GridLevel::fine, field);
  auto m = assemble_mass(g, GridLevel::fine);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ev{Eigen::MatrixXd(mv)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em{Eigen::MatrixXd(m)};
  CHECK(ev.eigenvalues().minCoeff() >= field.v_min * em.eigenvalues().minCoeff() - 1e-14);
}

TEST_CASE("weighted mass rejects level and grid mismatches") {
  auto g = build_grid_pair(8, 4);
  auto field = smooth_potential(0.1, g);
  CHECK_THROWS_AS(assemble_weighted_mass(g, GridLevel::coarse, field), std::invalid_argument);
  auto g2 = build_grid_pair(8, 2);
  CHECK_THROWS_AS(assemble_weighted_mass(g2, GridLevel::fine, field), std::invalid_argument);
}

TEST_CASE("assembled operators are symmetric") {
  auto g = build_grid_pair(16, 4);
  auto field = smooth_potential(0.1, g);
  auto ops = assemble_fine_operators(g, field, 0.125);
  for (const SparseMat* op : {&ops.mass, &ops.stiffness, &ops.weighted_mass, &ops.hamiltonian}) {
    CHECK((Eigen::MatrixXd(*op) - Eigen::MatrixXd(op->transpose())).lpNorm<Eigen::Infinity>() ==
          0.0);
  }
}

TEST_CASE("bilinear form values and conjugate symmetry") {
  auto g = build_grid_pair(16, 8);
  const double eps = 0.125;
  const int nf = g.n_fine();

  PotentialField constant;
  constant.n_fine = nf;
  constant.samples = Eigen::ArrayXXd::Constant(nf, 2, 2.0);
  constant.v_min = constant.v_max = 2.0;
  auto ops_const = assemble_fine_operators(g, constant, eps);
  WaveFunction one{Eigen::VectorXcd::Ones(nf), SpaceTag::fine_nodal};
  auto a_const = bilinear_form(one, one, eps, ops_const);
  CHECK(a_const.real() == doctest::Approx(2.0 * kDomainLength).epsilon(1e-13));
  CHECK(a_const.imag() == doctest::Approx(0.0).epsilon(1e-13));

  auto ops = assemble_fine_operators(g, smooth_potential(0.1, g), eps);
  auto a_osc = bilinear_form(one, one, eps, ops);
  CHECK(a_osc.real() == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-10));

  // a(v, w) = conj(a(w, v)) and a(v, v) >= eps^2/2 ||grad v||^2
  for (unsigned seed : {1u, 2u, 3u}) {
    WaveFunction v{random_complex(nf, seed), SpaceTag::fine_nodal};
    WaveFunction w{random_complex(nf, seed + 100), SpaceTag::fine_nodal};
    auto avw = bilinear_form(v, w, eps, ops);
    auto awv = bilinear_form(w, v, eps, ops);
    CHECK(avw.real() == doctest::Approx(awv.real()).epsilon(1e-12));
    CHECK(avw.imag() == doctest::Approx(-awv.imag()).epsilon(1e-12));

    const double grad = std::real(v.coeffs.dot(ops.stiffness * v.coeffs));
    CHECK(std::real(bilinear_form(v, v, eps, ops)) >= 0.5 * eps * eps * grad - 1e-12);
  }

  WaveFunction tagged{Eigen::VectorXcd::Ones(g.n_coarse), SpaceTag::coarse_p1};
  CHECK_THROWS_AS(bilinear_form(one, tagged, eps, ops), std::invalid_argument);
}

TEST_CASE("prolongation structure and Galerkin product identity") {
  auto g1 = build_grid_pair(8, 1);
  CHECK(Eigen::MatrixXd(prolongation_matrix(g1)).isIdentity(1e-15));

  auto g2 = build_grid_pair(8, 2);
  auto p2 = prolongation_matrix(g2);
  CHECK(p2.coeff(1, 0) == doctest::Approx(0.5));
  CHECK(p2.coeff(1, 1) == doctest::Approx(0.5));

  auto g = build_grid_pair(8, 4);
  auto p = prolongation_matrix(g);
  const Eigen::VectorXd rowsum = p * Eigen::VectorXd::Ones(8);
  CHECK((rowsum.array() - 1.0).abs().maxCoeff() <= 1e-14);

  auto mf = assemble_mass(g, GridLevel::fine);
  auto mc = assemble_mass(g, GridLevel::coarse);
  Eigen::MatrixXd galerkin = Eigen::MatrixXd(SparseMat(p.transpose() * mf * p));
  CHECK((galerkin - Eigen::MatrixXd(mc)).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("clement interpolation of constants, hats and kernel vectors") {
  auto g = build_grid_pair(8, 4);
  auto mf = assemble_mass(g, GridLevel::fine);
  auto p = prolongation_matrix(g);
  const int nf = g.n_fine();

  WaveFunction c{Eigen::VectorXcd::Constant(nf, std::complex<double>(2.5, -1.0)),
                 SpaceTag::fine_nodal};
  auto ic = clement_interpolate(c, g, mf, p);
  CHECK(ic.space == SpaceTag::coarse_p1);
  CHECK((ic.coeffs.array() - std::complex<double>(2.5, -1.0)).abs().maxCoeff() <= 1e-13);

  // prolonged coarse hat: coefficients (phi_j, phi_k)/H = 2/3 at j, 1/6 at j+-1
  const int j = 3;
  WaveFunction hat{Eigen::VectorXcd(p.col(j)), SpaceTag::fine_nodal};
  auto ih = clement_interpolate(hat, g, mf, p);
  for (int k = 0; k < 8; ++k) {
    const double expected = k == j ? 2.0 / 3.0 : (std::abs(k - j) == 1 ? 1.0 / 6.0 : 0.0);
    CHECK(ih.coeffs[k].real() == doctest::Approx(expected).epsilon(1e-13));
  }

  auto ops = assemble_fine_operators(g, smooth_potential(0.1, g), 0.125);
  std::mt19937 rng(7);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(nf);
  for (int i = 0; i < nf; ++i) v[i] = dist(rng);
  const Eigen::VectorXd w = project_to_kernel(v, ops.constraint);
  WaveFunction wf{w.cast<std::complex<double>>(), SpaceTag::fine_nodal};
  CHECK(clement_interpolate(wf, g, mf, p).coeffs.cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("clement kernel bounds hold uniformly in H") {
  // |(f, v)| <= C H ||f|| ||grad v|| and, for f in H1,
  // |(f, v)| <= C H^2 ||grad f|| ||grad v|| for v in the interpolation kernel
  const int nf = 512;
  std::mt19937 rng(1234);
  std::normal_distribution<double> dist;

  for (int nc : {8, 16, 32, 64}) {
    auto g = build_grid_pair(nc, nf / nc);
    auto ops = assemble_fine_operators(g, smooth_potential(0.1, g), 0.125);
    const double h_coarse = g.coarse_h();

    Eigen::VectorXd f(nf), fgrad(nf);
    for (int i = 0; i < nf; ++i) {
      f[i] = std::sin(g.fine_node(i));
      fgrad[i] = std::cos(g.fine_node(i));
    }
    const double f_l2 = std::sqrt(f.dot(ops.mass * f));
    const double fgrad_l2 = std::sqrt(fgrad.dot(ops.mass * fgrad));

    for (int trial = 0; trial < 10; ++trial) {
      // random low-pass field with structure at the coarse scale
      Eigen::VectorXd v = Eigen::VectorXd::Zero(nf);
      for (int k = 1; k <= 2 * nc; ++k) {
        const double a = dist(rng) / k, b = dist(rng) / k;
        for (int i = 0; i < nf; ++i)
          v[i] += a * std::cos(k * g.fine_node(i)) + b * std::sin(k * g.fine_node(i));
      }
      v = project_to_kernel(v, ops.constraint);
      const double grad = std::sqrt(v.dot(ops.stiffness * v));
      if (grad < 1e-12) continue;
      v /= grad;
      const double val = std::abs(f.dot(ops.mass * v));
      CHECK(val / (h_coarse * f_l2) <= 0.5);
      CHECK(val / (h_coarse * h_coarse * fgrad_l2) <= 0.5);
    }
  }
}
