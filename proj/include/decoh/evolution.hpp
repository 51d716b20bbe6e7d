#pragma once
// Master-equation evolution on a discretized position-pair grid. The equation
// is diagonal in position pairs, so the solution is an elementwise
// exponential: rho(Ri, Rj; t) = rho(Ri, Rj; 0) exp(-F(Ri - Rj) t).

#include <complex>
#include <functional>
#include <vector>

#include "decoh/core.hpp"

namespace decoh {

struct DensityMatrixGrid {
  Vec3 axis{0, 0, 1};             // unit vector the 1-D grid runs along
  std::vector<double> positions;  // uniform grid of N coordinates
  std::vector<std::complex<double>> values;  // N x N, row-major
  double time = 0.0;

  std::size_t size() const { return positions.size(); }
  std::complex<double>& at(std::size_t i, std::size_t j) { return values[i * size() + j]; }
  const std::complex<double>& at(std::size_t i, std::size_t j) const {
    return values[i * size() + j];
  }
  double spacing() const { return size() > 1 ? positions[1] - positions[0] : 0.0; }
  // Riemann-sum trace, spacing * sum of the diagonal.
  double trace() const;
};

// Validates uniform spacing, hermiticity to 1e-12 and a real nonnegative
// diagonal, then returns the grid.
DensityMatrixGrid make_density_grid(const Vec3& axis, std::vector<double> positions,
                                    std::vector<std::complex<double>> values, double time = 0.0);

using RateFn = std::function<double(const Vec3&)>;

// rate_fn is evaluated on the N distinct separations once and cached.
// Requires t >= 0 and rate_fn(0) = 0 (contract of the master equation).
DensityMatrixGrid evolve(const DensityMatrixGrid& grid, const RateFn& rate_fn, double t);

struct CoherenceLength {
  double length = 0.0;
  bool saturated = false;  // envelope never fell below the threshold
};

// Smallest separation d where max_{|Ri-Rj|=d} |rho_ij| / sqrt(rho_ii rho_jj)
// falls below threshold (default 1/e).
CoherenceLength coherence_length(const DensityMatrixGrid& grid, double threshold = 0.36787944117144233);

}  // namespace decoh
