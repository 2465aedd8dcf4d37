#include "ocmsfem/grid.hpp"

#include <stdexcept>
#include <string>

namespace ocmsfem {

PeriodicGridPair build_grid_pair(int n_coarse, int refine_factor) {
  if (n_coarse < 4)
    throw std::invalid_argument("build_grid_pair: n_coarse must be >= 4, got " +
                                std::to_string(n_coarse));
  if (refine_factor < 1)
    throw std::invalid_argument("build_grid_pair: refine_factor must be >= 1, got " +
                                std::to_string(refine_factor));
  return PeriodicGridPair{n_coarse, refine_factor};
}

bool Patch::contains_element(int e, int n_coarse) const {
  if (saturated) return true;
  int d = ((e - first_element) % n_coarse + n_coarse) % n_coarse;
  return d < n_elements;
}

Patch patch(const PeriodicGridPair& grid, int j, int m) {
  if (j < 0 || j >= grid.n_coarse)
    throw std::invalid_argument("patch: coarse node index out of range");
  if (m < 0) throw std::invalid_argument("patch: layers must be nonnegative");

  Patch p;
  p.center_node = j;
  p.layers = m;
  const int span = 2 * m + 2;
  if (span >= grid.n_coarse) {
    p.saturated = true;
    p.first_element = 0;
    p.n_elements = grid.n_coarse;
    p.first_fine_node = 0;
    p.n_fine_nodes = grid.n_fine();
  } else {
    p.first_element = grid.wrap_coarse(j - 1 - m);
    p.n_elements = span;
    p.first_fine_node = p.first_element * grid.refine_factor;
    p.n_fine_nodes = span * grid.refine_factor + 1;
  }
  return p;
}

}  // namespace ocmsfem
