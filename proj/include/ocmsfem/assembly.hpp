#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>

#include "ocmsfem/grid.hpp"
#include "ocmsfem/potential.hpp"

namespace ocmsfem {

using SparseMat = Eigen::SparseMatrix<double>;

enum class GridLevel { coarse, fine };

enum class SpaceTag { fine_nodal, coarse_p1, multiscale, fourier };

/// Complex coefficient vector tagged with the space it lives in.
struct WaveFunction {
  Eigen::VectorXcd coeffs;
  SpaceTag space = SpaceTag::fine_nodal;
};

/// Periodic P1 mass matrix: cyclic tridiagonal, diagonal 2l/3, off-diagonal l/6.
SparseMat assemble_mass(const PeriodicGridPair& grid, GridLevel level);

/// Periodic P1 stiffness matrix: diagonal 2/l, off-diagonal -1/l.
/// Singular with the constants as kernel.
SparseMat assemble_stiffness(const PeriodicGridPair& grid, GridLevel level);

/// Potential-weighted mass matrix by composite 2-point Gauss quadrature on
/// the fine mesh. Exact for constant V; SPD for V >= v_min > 0.
SparseMat assemble_weighted_mass(const PeriodicGridPair& grid, GridLevel level,
                                 const PotentialField& potential);

/// Fine-by-coarse matrix whose column j holds the fine-nodal values of the
/// coarse hat function j. Exact because the meshes are nested; rows sum to 1.
SparseMat prolongation_matrix(const PeriodicGridPair& grid);

/// Everything the solvers need on the fine mesh, assembled once per
/// (grid, potential, epsilon) triple.
struct FineOperators {
  PeriodicGridPair grid;
  double epsilon = 0.0;
  SparseMat mass;           // fine mass
  SparseMat stiffness;      // fine stiffness
  SparseMat weighted_mass;  // (V ., .) on the fine mesh
  SparseMat hamiltonian;    // eps^2/2 * stiffness + weighted_mass
  SparseMat prolongation;   // fine x coarse embedding of the P1 space
  SparseMat constraint;     // prolongation^T * mass; row j evaluates (., phi_j)
};

FineOperators assemble_fine_operators(const PeriodicGridPair& grid,
                                      const PotentialField& potential, double epsilon);

/// a(v, w) = eps^2/2 (grad v, grad w) + (V v, w), conjugating w.
std::complex<double> bilinear_form(const WaveFunction& v, const WaveFunction& w, double epsilon,
                                   const FineOperators& ops);

double l2_norm(const Eigen::VectorXcd& v, const SparseMat& mass);
double h1_norm(const Eigen::VectorXcd& v, const SparseMat& mass, const SparseMat& stiffness);
double energy_norm(const Eigen::VectorXcd& v, double epsilon, const FineOperators& ops);

/// Clement-type quasi-interpolation onto the coarse P1 space:
/// coefficient j = (v, phi_j) / (1, phi_j), with (1, phi_j) = H on uniform
/// periodic meshes.
WaveFunction clement_interpolate(const WaveFunction& v, const PeriodicGridPair& grid,
                                 const SparseMat& mass_fine, const SparseMat& prolongation);

}  // namespace ocmsfem
