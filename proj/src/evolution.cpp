#include "decoh/evolution.hpp"

#include <algorithm>
#include <cmath>

namespace decoh {

double DensityMatrixGrid::trace() const {
  double tr = 0.0;
  for (std::size_t i = 0; i < size(); ++i) tr += at(i, i).real();
  return tr * spacing();
}

DensityMatrixGrid make_density_grid(const Vec3& axis, std::vector<double> positions,
                                    std::vector<std::complex<double>> values, double time) {
  const std::size_t n = positions.size();
  if (n < 2) throw ValidationError("DensityMatrixGrid: need at least 2 grid points");
  if (values.size() != n * n) throw ValidationError("DensityMatrixGrid: values must be N x N");

  DensityMatrixGrid g;
  g.axis = axis.normalized();
  g.positions = std::move(positions);
  g.values = std::move(values);
  g.time = time;

  const double dx = g.positions[1] - g.positions[0];
  if (!(dx > 0.0)) throw ValidationError("DensityMatrixGrid: positions must increase");
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (std::abs((g.positions[i + 1] - g.positions[i]) - dx) > 1e-9 * dx)
      throw ValidationError("DensityMatrixGrid: positions must be uniformly spaced");

  double scale = 0.0;
  for (const auto& v : g.values) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return g;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(g.at(i, i).imag()) > 1e-12 * scale || g.at(i, i).real() < -1e-12 * scale)
      throw ValidationError("DensityMatrixGrid: diagonal must be real and nonnegative");
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(g.at(i, j) - std::conj(g.at(j, i))) > 1e-12 * scale)
        throw ValidationError("DensityMatrixGrid: matrix is not hermitian");
  }
  return g;
}

DensityMatrixGrid evolve(const DensityMatrixGrid& grid, const RateFn& rate_fn, double t) {
  if (!(t >= 0.0)) throw ValidationError("evolve: t >= 0 required");
  const std::size_t n = grid.size();
  const double dx = grid.spacing();

  // F on the distinct separations k dx; F evaluation dominates the cost.
  std::vector<double> F(n, 0.0);
  double fmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    F[k] = rate_fn(grid.axis * (static_cast<double>(k) * dx));
    fmax = std::max(fmax, std::abs(F[k]));
  }
  if (std::abs(F[0]) > 1e-12 * std::max(fmax, 1e-300))
    throw ContractError("evolve: rate_fn(0) must vanish");

  DensityMatrixGrid out = grid;
  out.time = grid.time + t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i > j ? i - j : j - i;
      out.at(i, j) = grid.at(i, j) * std::exp(-F[k] * t);
    }
  return out;
}

CoherenceLength coherence_length(const DensityMatrixGrid& grid, double threshold) {
  if (threshold >= 1.0) return {0.0, false};
  const std::size_t n = grid.size();
  const double dx = grid.spacing();

  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, grid.at(i, i).real());
  const double floor2 = 1e-28 * dmax * dmax;

  for (std::size_t k = 1; k < n; ++k) {
    double env = 0.0;
    bool any = false;
    for (std::size_t i = 0; i + k < n; ++i) {
      const double dd = grid.at(i, i).real() * grid.at(i + k, i + k).real();
      if (dd <= floor2) continue;
      any = true;
      env = std::max(env, std::abs(grid.at(i, i + k)) / std::sqrt(dd));
    }
    if (any && env < threshold) return {static_cast<double>(k) * dx, false};
  }
  return {static_cast<double>(n - 1) * dx, true};
}

}  // namespace decoh
