#pragma once

#include <Eigen/Dense>

#include "ocmsfem/assembly.hpp"
#include "ocmsfem/basis.hpp"

namespace ocmsfem {

struct EvolutionConfig {
  double dt = 0.0;
  int n_steps = 0;
  double T = 0.0;
  double epsilon = 0.0;
  int log_stride = 1;
};

/// Validates dt > 0 and n_steps * dt == T up to rounding.
EvolutionConfig make_evolution_config(double T, double dt, double epsilon, int log_stride = 1);

struct TrajectoryResult {
  Eigen::VectorXcd final_state;    // coefficients in the evolved space
  std::vector<int> step_log;       // logged step indices (0, stride, ..., n_steps)
  std::vector<double> mass_log;    // discrete mass ||U^n||_M at logged steps
  std::vector<double> energy_log;  // a(U^n, U^n) at logged steps (empty for TSSP)
  int log_stride = 1;
  double wall_seconds = 0.0;
};

/// Writes the conserved-quantity log as "step,time,mass,energy" rows.
void write_trajectory_csv(const TrajectoryResult& traj, double dt, const std::string& path);

/// A Galerkin trial space with dense space operators and the (real)
/// restriction R mapping space coefficients to fine-nodal ones.
/// P1 and multiscale spaces differ only in R and the assembled (M, A).
class GalerkinSpace {
 public:
  static GalerkinSpace p1(const FineOperators& ops);
  static GalerkinSpace multiscale(MultiscaleBasis basis, const FineOperators& ops);

  SpaceTag tag() const { return tag_; }
  int dim() const { return static_cast<int>(mass_.rows()); }
  const Eigen::MatrixXd& mass() const { return mass_; }
  const Eigen::MatrixXd& a() const { return a_; }

  Eigen::VectorXcd prolong(const Eigen::VectorXcd& coeffs) const;       // R c
  Eigen::VectorXcd restrict_transpose(const Eigen::VectorXcd& v) const; // R^T v

 private:
  SpaceTag tag_ = SpaceTag::coarse_p1;
  Eigen::MatrixXd mass_, a_;
  bool sparse_r_ = true;
  SparseMat r_sparse_;
  Eigen::MatrixXd r_dense_;
};

struct StationarySolution {
  Eigen::VectorXcd space_coeffs;
  WaveFunction fine;  // prolonged to the fine mesh
};

/// Galerkin solve a(u, w) = (f, w) over the space; f is fine-nodal.
StationarySolution stationary_solve(const GalerkinSpace& space, const WaveFunction& f,
                                    const FineOperators& ops);

/// a-projection onto the space: a(v - v_hat, w) = 0 for all w in the space.
Eigen::VectorXcd elliptic_project(const Eigen::VectorXcd& v_fine, const GalerkinSpace& space,
                                  const FineOperators& ops);

/// Crank-Nicolson scheme (i eps M - dt/2 A) U^n = (i eps M + dt/2 A) U^{n-1}
/// with the system matrix factored once. Space-agnostic: P1 and multiscale
/// runs differ only in (M, A, U0).
TrajectoryResult cn_evolve(const Eigen::MatrixXd& mass, const Eigen::MatrixXd& a,
                           const Eigen::VectorXcd& u0, const EvolutionConfig& cfg);
TrajectoryResult cn_evolve(const GalerkinSpace& space, const Eigen::VectorXcd& u0,
                           const EvolutionConfig& cfg);

/// Crank-Nicolson in the coarse P1 space, initialised with the elliptic
/// projection of the fine-nodal initial data.
TrajectoryResult fem_cn_evolve(const FineOperators& ops, const Eigen::VectorXcd& u0_fine,
                               const EvolutionConfig& cfg,
                               Eigen::VectorXcd* final_fine = nullptr);

/// Strang-split spectral propagator: half potential phase, Fourier kinetic
/// step with integer wavenumbers k in [-n/2, n/2), half potential phase.
/// Requires an even sample count; logs the grid l2 mass.
TrajectoryResult tssp_evolve(const Eigen::VectorXcd& u0, const Eigen::VectorXd& v_nodes,
                             const EvolutionConfig& cfg);

/// Values of the trigonometric interpolant of n uniform samples at the nodes
/// of another uniform grid. Exact subsampling / zero-padding when the sizes
/// divide; direct evaluation with all n modes otherwise.
Eigen::VectorXcd trig_resample(const Eigen::VectorXcd& samples, int n_out);

/// Piecewise-linear evaluation of fine-nodal values at the nodes of another
/// uniform grid (exact evaluation of the P1 function).
Eigen::VectorXcd p1_resample(const Eigen::VectorXcd& nodal, int n_out);

}  // namespace ocmsfem
