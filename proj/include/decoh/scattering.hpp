#pragma once
// Elastic scattering amplitudes f(q2, q1) and total cross sections.
//
// Convention carried throughout:
//   <q2|S0|q1> = delta(q2 - q1) + (i / 2 pi hbar m) delta(E2 - E1) f(q2, q1)
// with all arguments momenta (not wavenumbers), so f has dimension length.
// Every implemented model is elastic and rotationally invariant: f depends
// only on |q| and the angle between q2 and q1.

#include <complex>
#include <span>
#include <variant>
#include <vector>

#include "decoh/core.hpp"

namespace decoh {

inline constexpr int kAutoLmax = -1;

// Real constant amplitude. A toy model: it violates unitarity (Im f = 0),
// which is fine wherever only |f|^2 enters; operations needing the forward
// imaginary part get zero from it.
struct ConstantSWave {
  double f0 = 1.0;
};

// Impenetrable sphere via partial waves, tan(delta_l) = j_l(kR)/y_l(kR).
struct HardSphere {
  double radius = 1.0;
  int l_max = kAutoLmax;
};

struct GaussianPotential {
  double v0 = 1.0;    // well depth V(r) = v0 exp(-r^2 / 2 w^2)
  double width = 1.0;
};

// V(r) = strength * exp(-screening r) / r
struct YukawaPotential {
  double strength = 1.0;
  double screening = 1.0;
};

using PotentialModel = std::variant<GaussianPotential, YukawaPotential>;

// First Born approximation, f_B(q2, q1) = -(2 pi)^2 m hbar Vbar(q2 - q1).
struct BornPotential {
  PotentialModel potential;
};

using AmplitudeModel = std::variant<ConstantSWave, HardSphere, BornPotential>;

// Kinematic context an amplitude needs beyond its own parameters.
struct AmplitudeContext {
  double hbar = 1.0;
  double mass = 1.0;
};

inline AmplitudeContext amplitude_context(const BathSpec& b) {
  return {b.units.hbar, b.mass};
}

void validate(const PotentialModel& p);
void validate(const AmplitudeModel& m);

// j_0..j_lmax and y_0..y_lmax at x > 0. Upward recurrence for y always;
// j switches to downward (Miller) normalization when lmax >= x.
void sph_bessel_jy(int lmax, double x, std::span<double> j, std::span<double> y);

// Smallest partial-wave cutoff whose tail estimate falls below 1e-10,
// never less than ceil(q R / hbar) + 10.
int auto_lmax(double radius, double q, double hbar = 1.0);

// f as a function of momentum magnitude and scattering angle cosine.
std::complex<double> amplitude_angle(const AmplitudeModel& m, const AmplitudeContext& ctx,
                                     double q, double cos_theta);

// f(q n_out, q_in) with q = |q_in|; n_out must be unit length.
std::complex<double> amplitude(const AmplitudeModel& m, const AmplitudeContext& ctx,
                               const Vec3& q_in, const Vec3& n_out);

// sigma(q) = integral over directions of |f|^2. Gauss-Legendre in cos(theta),
// nodes doubled until the relative change drops below 1e-10. Closed form for
// the constant model.
double total_cross_section(const AmplitudeModel& m, const AmplitudeContext& ctx, double q);

// | Im f(q,q) - q sigma / (4 pi hbar) | normalized by q sigma / (4 pi hbar).
// Zero (to quadrature accuracy) only for unitary models.
double optical_theorem_residual(const AmplitudeModel& m, const AmplitudeContext& ctx, double q);

// Coefficients a_L of |f(q, mu)|^2 = sum_L a_L P_L(mu), adaptively truncated.
std::vector<double> amplitude_sq_legendre(const AmplitudeModel& m, const AmplitudeContext& ctx,
                                          double q);

}  // namespace decoh
