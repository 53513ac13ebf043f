#pragma once

#include "meanfield/density.hpp"
#include "meanfield/transient.hpp"

namespace opdyn::meanfield {

struct ResidualResult {
  double sup_residual = 0.0;
  double sup_density = 0.0;
  std::size_t points = 0;
};

/// Plugs the Gaussian-mixture solution into the Fokker-Planck equation of each
/// personality with central differences: spacing h in space and dt in time,
/// over the tensor grid with the given per-axis ranges and spacing h.
ResidualResult fp_residual(const Transient& tr, double t, const std::vector<std::pair<double, double>>& box, double h,
                           double dt);

}  // namespace opdyn::meanfield
