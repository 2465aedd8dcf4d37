#pragma once

#include <numbers>

namespace ocmsfem {

inline constexpr double kDomainLength = 2.0 * std::numbers::pi;

/// Nested pair of uniform periodic meshes on [0, 2*pi).
///
/// The coarse mesh has n_coarse elements with one node per element start;
/// every coarse element is split into refine_factor fine elements, so coarse
/// node j coincides with fine node j * refine_factor. All node and element
/// indices wrap modulo the respective counts.
struct PeriodicGridPair {
  int n_coarse = 0;
  int refine_factor = 1;

  int n_fine() const { return n_coarse * refine_factor; }
  double coarse_h() const { return kDomainLength / n_coarse; }
  double fine_h() const { return kDomainLength / n_fine(); }

  double coarse_node(int j) const { return wrap_coarse(j) * coarse_h(); }
  double fine_node(int i) const { return wrap_fine(i) * fine_h(); }

  int wrap_coarse(int j) const { return ((j % n_coarse) + n_coarse) % n_coarse; }
  int wrap_fine(int i) const {
    const int n = n_fine();
    return ((i % n) + n) % n;
  }
};

PeriodicGridPair build_grid_pair(int n_coarse, int refine_factor);

/// Oversampling patch N^m(S_j): the support of coarse hat j (two elements)
/// grown by m element layers on each side. A patch that would cover the ring
/// (2m + 2 >= n_coarse) saturates to the whole domain.
struct Patch {
  int center_node = 0;
  int layers = 0;
  int first_element = 0;  // contiguous mod n_coarse
  int n_elements = 0;
  int first_fine_node = 0;
  int n_fine_nodes = 0;  // closed node range; whole ring when saturated
  bool saturated = false;

  bool contains_element(int e, int n_coarse) const;
};

Patch patch(const PeriodicGridPair& grid, int j, int m);

}  // namespace ocmsfem
