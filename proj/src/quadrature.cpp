#include "decoh/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace decoh {

namespace {

// Newton iteration on P_n with the three-term recurrence. Nodes are symmetric;
// we solve for the upper half and mirror.
QuadRule compute_gauss_legendre(int n) {
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess for the i-th root (descending order).
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

// Newton iteration on H_n (physicists' convention, weight exp(-x^2)).
// Initial guesses follow the usual descending-root asymptotics.
QuadRule compute_gauss_hermite(int n) {
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int m = (n + 1) / 2;
  double x = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
    } else if (i == 2) {
      x = 1.86 * x - 0.86 * r.nodes[n - 1];
    } else if (i == 3) {
      x = 1.91 * x - 0.91 * r.nodes[n - 2];
    } else {
      x = 2.0 * x - r.nodes[n - i + 1];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      // Orthonormal Hermite recurrence keeps magnitudes tame at large n.
      double p0 = pim4, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = x * std::sqrt(2.0 / (j + 1.0)) * p1 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p2;
      }
      pp = std::sqrt(2.0 * n) * p1;
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    r.nodes[n - 1 - i] = x;
    r.nodes[i] = -x;
    const double w = 2.0 / (pp * pp);
    r.weights[n - 1 - i] = w;
    r.weights[i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;  // exact symmetry for the center node
  return r;
}

std::mutex cache_mutex;
std::map<int, QuadRule> gl_cache;
std::map<int, QuadRule> gh_cache;

}  // namespace

const QuadRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = gl_cache.find(n);
  if (it == gl_cache.end()) it = gl_cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

const QuadRule& gauss_hermite(int n) {
  if (n < 1 || n > 192)
    throw std::invalid_argument("gauss_hermite: 1 <= n <= 192 required");
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = gh_cache.find(n);
  if (it == gh_cache.end()) it = gh_cache.emplace(n, compute_gauss_hermite(n)).first;
  return it->second;
}

QuadRule mapped(const QuadRule& base, double a, double b) {
  QuadRule r;
  const std::size_t n = base.size();
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * base.nodes[i];
    r.weights[i] = half * base.weights[i];
  }
  return r;
}

void legendre_all(int lmax, double x, std::span<double> out) {
  out[0] = 1.0;
  if (lmax == 0) return;
  out[1] = x;
  for (int l = 2; l <= lmax; ++l)
    out[l] = ((2.0 * l - 1.0) * x * out[l - 1] - (l - 1.0) * out[l - 2]) / l;
}

double legendre(int l, double x) {
  double p0 = 1.0;
  if (l == 0) return p0;
  double p1 = x;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace decoh
