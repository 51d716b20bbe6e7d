#pragma once
// Quadrature rules used throughout: Gauss-Legendre on [-1,1], Gauss-Hermite
// with weight exp(-x^2), periodic trapezoid, and Legendre polynomial
// evaluation. Node tables are cached per order.

#include <cstddef>
#include <span>
#include <vector>

namespace decoh {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre nodes/weights on [-1, 1]. Cached; thread-safe.
const QuadRule& gauss_legendre(int n);

// Gauss-Hermite nodes/weights for integral of f(x) exp(-x^2) over the real
// line. Cached; thread-safe. Supported up to n = 192.
const QuadRule& gauss_hermite(int n);

// Maps a [-1,1] rule onto [a,b]; weight scale (b-a)/2 is applied.
QuadRule mapped(const QuadRule& base, double a, double b);

// P_0..P_lmax at x, written into out (size lmax+1).
void legendre_all(int lmax, double x, std::span<double> out);

double legendre(int l, double x);

}  // namespace decoh
