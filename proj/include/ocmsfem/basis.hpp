#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "ocmsfem/assembly.hpp"

namespace ocmsfem {

enum class BasisKind { global, localized };

/// Multiscale basis: column j holds psi_j in fine-nodal coordinates.
/// Global bases are dense; localized columns vanish outside the
/// oversampling patch of node j and are kept sparse.
class MultiscaleBasis {
 public:
  MultiscaleBasis(PeriodicGridPair grid, double epsilon, Eigen::MatrixXd dense);
  MultiscaleBasis(PeriodicGridPair grid, double epsilon, SparseMat sparse, int layers);

  BasisKind kind() const { return kind_; }
  int layers() const { return layers_; }
  const PeriodicGridPair& grid() const { return grid_; }
  double epsilon() const { return epsilon_; }
  int n_basis() const { return grid_.n_coarse; }
  int n_fine() const { return grid_.n_fine(); }

  Eigen::VectorXd column(int j) const;

  /// Psi * c: prolong space coefficients to the fine mesh.
  Eigen::VectorXcd prolong(const Eigen::VectorXcd& coeffs) const;
  /// Psi^T * v (the basis is real, so this is also the adjoint).
  Eigen::VectorXcd restrict_to_space(const Eigen::VectorXcd& fine) const;
  /// Psi^T * Op * Psi for a fine-space operator.
  Eigen::MatrixXd gram(const SparseMat& fine_op) const;

  const Eigen::MatrixXd& dense() const { return dense_; }
  const SparseMat& sparse() const { return sparse_; }
  Eigen::MatrixXd take_dense() { return std::move(dense_); }
  SparseMat take_sparse() { return std::move(sparse_); }

 private:
  BasisKind kind_;
  int layers_ = -1;
  PeriodicGridPair grid_;
  double epsilon_ = 0.0;
  Eigen::MatrixXd dense_;
  SparseMat sparse_;
};

/// Constrained energy minimisation over the whole fine space:
/// psi_j = argmin a(psi, psi) subject to (psi, phi_k) = delta_jk.
/// One KKT factorisation is shared by all right-hand sides. Warns (does not
/// fail) when H > epsilon.
MultiscaleBasis build_global_basis(const PeriodicGridPair& grid, double epsilon,
                                   const PotentialField& potential);
MultiscaleBasis build_global_basis(const FineOperators& ops);

/// Same minimisation restricted to the fine nodes inside the oversampling
/// patch of node j, with the constraints of all coarse hats that intersect
/// the patch. Patches that cover the ring reproduce the global problem.
MultiscaleBasis build_localized_basis(const PeriodicGridPair& grid, double epsilon,
                                      const PotentialField& potential, int m);
MultiscaleBasis build_localized_basis(const FineOperators& ops, int m);

struct MsOperators {
  Eigen::MatrixXd a;     // Psi^T A Psi
  Eigen::MatrixXd mass;  // Psi^T M Psi
};

MsOperators assemble_ms_operators(const MultiscaleBasis& basis, const FineOperators& ops);

/// Restricted-gradient decay of one global basis function:
/// ratios[m] = ||grad psi_j||_{outside N^m(S_j)} / ||grad psi_j||.
struct DecayProfile {
  int node = 0;
  std::vector<double> ratios;   // m = 0 .. m_max
  std::optional<double> beta;   // least-squares rate over the usable range
};

DecayProfile measure_decay(const MultiscaleBasis& basis, int j, int m_max);

/// Paper-style oversampling rule m = c * ceil(log2(2*pi / H)).
int default_oversampling(int n_coarse, int c);

void write_basis_csv(const MultiscaleBasis& basis, const std::string& path);
void write_basis_triplets(const MultiscaleBasis& basis, const std::string& path);

}  // namespace ocmsfem
