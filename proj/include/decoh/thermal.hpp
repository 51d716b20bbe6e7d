#pragma once
// Thermal bath distributions and the convex decomposition of the bath state
// into Gaussian wave packets. The bath temperature splits as T = Tbar + That:
// Tbar sets the packet width (b = sqrt(2 m k_B Tbar), a = hbar / b) and That
// drives the packet-center momentum distribution mu_hat.

#include <complex>

#include "decoh/core.hpp"

namespace decoh {

struct PacketSplit {
  double t_bar = 0.0;       // pseudo-temperature carried by packet width
  double t_hat = 0.0;       // pseudo-temperature carried by center motion
  double b = 0.0;           // momentum width, sqrt(2 m k_B Tbar)
  double a = 0.0;           // position width, hbar / b
  double lambda_bar = 0.0;  // sqrt(2 pi hbar^2 beta_bar / m)
  double v_wp = 0.0;        // typical packet speed sqrt(3 k_B That / m)
  double mass = 1.0;
  UnitSystem units;
};

struct WavePacket {
  Vec3 center;
  Vec3 mean_momentum;
  PacketSplit split;
};

// mu(q) = (beta / 2 pi m)^{3/2} exp(-beta q^2 / 2m), normalized in d^3q.
double mb_density(const BathSpec& bath, const Vec3& q);

// nu(q) = 4 pi (beta / 2 pi m)^{3/2} exp(-beta q^2 / 2m) q^2, normalized in dq.
double speed_distribution(const BathSpec& bath, double q);

// Center-momentum distribution of the split, mu_hat with beta_hat.
double mu_hat_density(const PacketSplit& split, const Vec3& p);

double thermal_wavelength(const BathSpec& bath);

// Tbar = bar_fraction * T, That = T - Tbar; bar_fraction in (0, 1).
PacketSplit split_bath(const BathSpec& bath, double bar_fraction);

// <r' | psi_rp> = (2 sqrt2 / lambda_bar^{3/2}) e^{i p.(r'-r)/hbar}
//                 e^{-2 pi |r'-r|^2 / lambda_bar^2}
std::complex<double> packet_wavefunction(const WavePacket& packet, const Vec3& r_prime);

// Gamma_q(R) = exp(-[R^2 - (qhat.R)^2] / a^2) / (pi a^2); depends only on the
// component of R transverse to q.
double gamma_profile(const PacketSplit& split, const Vec3& q_hat, const Vec3& r);

// Relative difference between the numerically evaluated transverse Fourier
// integral  int dDelta e^{-i Delta.u/hbar} e^{-Delta^2/4b^2}  and its closed
// form (2 pi hbar)^2 Gamma_q(u). Tensor Gauss-Hermite with >= 64^2 nodes.
double gamma_fourier_residual(const PacketSplit& split, const Vec3& q_hat, const Vec3& u,
                              int nodes_per_axis = 64);

}  // namespace decoh
