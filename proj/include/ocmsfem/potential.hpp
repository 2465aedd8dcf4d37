#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "ocmsfem/grid.hpp"

namespace ocmsfem {

/// Multiscale potential sampled at the two Gauss points of every fine
/// element (the quadrature used by the assembly routines). Storing
/// quadrature values rather than nodal ones keeps the weighted-mass
/// quadrature order independent of the oscillation phase of V.
struct PotentialField {
  Eigen::ArrayXXd samples;  // n_fine x 2, one row per fine element
  double v_min = 0.0;
  double v_max = 0.0;
  std::vector<double> delta_tags;
  std::vector<double> discontinuities;
  int n_fine = 0;  // grid the samples belong to
};

/// Gauss points of the composite 2-point rule, n_fine x 2.
Eigen::ArrayXXd gauss_points(const PeriodicGridPair& grid);

/// V(x) = cos(x / delta) + 2 + shift.
PotentialField smooth_potential(double delta, const PeriodicGridPair& grid, double shift = 0.0);
double smooth_potential_value(double x, double delta, double shift = 0.0);

/// V(x) = |x - pi|^2 + 2 + cos(x / delta1) on [0, pi],
///        |x - pi|^2 + 2 + cos(x / delta2) on (pi, 2*pi], + shift.
/// Requires pi to be a fine mesh node so that no element straddles the jump.
PotentialField discontinuous_potential(double delta1, double delta2,
                                       const PeriodicGridPair& grid, double shift = 0.0);
double discontinuous_potential_value(double x, double delta1, double delta2, double shift = 0.0);

/// Potential from nodal samples (one value per fine node, periodic);
/// quadrature values are obtained by linear interpolation within elements.
PotentialField potential_from_nodal_samples(const Eigen::VectorXd& nodal,
                                            const PeriodicGridPair& grid, double shift = 0.0);

/// Reads a CSV of "x,V" rows holding one sample per fine node.
PotentialField potential_from_csv(const std::string& path, const PeriodicGridPair& grid,
                                  double shift = 0.0);

struct InitialData {
  double epsilon = 0.0;
  std::function<std::complex<double>(double)> evaluate;
};

/// u0(x) = (10/pi)^{1/4} exp(-5 (x-pi)^2) exp(-i (x-pi)^2 / epsilon).
InitialData gaussian_wavepacket(double epsilon);

/// Samples initial data at the fine nodes of a grid.
Eigen::VectorXcd sample_fine(const InitialData& u0, const PeriodicGridPair& grid);

/// Samples initial data at n equispaced nodes of [0, 2*pi).
Eigen::VectorXcd sample_uniform(const InitialData& u0, int n);

}  // namespace ocmsfem
