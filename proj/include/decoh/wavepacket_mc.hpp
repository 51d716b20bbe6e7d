#pragma once
// Monte Carlo verification of the master equation by direct simulation of
// single wave-packet collisions: sample packets from the convex decomposition
// of the thermal state, evaluate the single-collision kernel <psi|A|psi>, and
// accumulate the coarse-grained rate.

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "decoh/core.hpp"
#include "decoh/scattering.hpp"
#include "decoh/thermal.hpp"

namespace decoh {

struct McConfig {
  std::uint64_t seed = 12345;
  int samples = 100000;
  double delta_t = 0.0;            // 0 = auto (40 max(a, |R1-R2|) / v_wp)
  double transverse_window = 0.0;  // 0 = auto (6 a + |R1-R2|)
  double bar_fraction = 0.01;
};

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int samples_used = 0;
  std::vector<std::string> warnings;
  double excluded_fraction = 0.0;  // slab fraction skipped as "already colliding"
  double worst_neglect = 0.0;      // max of b^2 |R1-R2| / (hbar q) encountered
  double slow_fraction = 0.0;      // packets with |p| < 5 b
};

struct MKernels {
  std::complex<double> m1;  // 1 / (momentum . length)
  std::complex<double> m2;  // 1 / momentum^2
};

// M1 = (1/2 pi hbar q) [ f(q+D/2, q-D/2) + f*(q-D/2, q+D/2) ]
// M2 = (1/4 pi^2 hbar^2) (Q/q) f*(Q n, q+D/2) f(Q n, q-D/2),  Q = sqrt(q^2+D^2/4)
// delta must be perpendicular to q.
MKernels m_kernels(const AmplitudeModel& model, const AmplitudeContext& ctx, const Vec3& q,
                   const Vec3& delta, const Vec3& n_hat);

// <psi_rp|A|psi_rp> for a Gaussian packet at r_o with mean momentum p_o:
// Gauss-Hermite average over the packet's momentum content of
//   A(q) = Gamma_q(r_o - Rbar) W(q, R1-R2)
//        - (1/2)(Gamma_q(r_o - R1) + Gamma_q(r_o - R2)) sigma(q)
//        + (2 pi i hbar / q)(Gamma_q(r_o - R1) - Gamma_q(r_o - R2)) Re f(q,q)
// with W and sigma evaluated on one shared angular grid so the kernel cancels
// to rounding at R1 = R2.
std::complex<double> single_packet_kernel(const PacketSplit& split, const AmplitudeModel& model,
                                          const AmplitudeContext& ctx, const Vec3& r_o,
                                          const Vec3& p_o, const Vec3& R1, const Vec3& R2,
                                          std::vector<std::string>* warnings = nullptr);

// Closed-form limit for |R1-R2| << a:
//   delta rho / rho_0 = -Gamma_{p_o}(r_o - Rbar) sigma(p_o) (1 - eta_{p_o}(R1-R2))
// Rejects |R1-R2| > 0.1 a.
std::complex<double> strong_condition_delta_rho(const PacketSplit& split,
                                                const AmplitudeModel& model,
                                                const AmplitudeContext& ctx, const Vec3& r_o,
                                                const Vec3& p_o, const Vec3& R1, const Vec3& R2);

// F estimate: p ~ mu_hat, packet center uniform in the incoming slab of length
// (p/m) dt along -p and transverse window W^2;
// F ~ -n E[ Vol(p) Re<psi|A|psi> ] / dt, with the transverse truncation
// corrected by the analytic window mass of Gamma. Identical seed and config
// give bit-identical estimates independent of thread count.
McEstimate mc_rate(const BathSpec& bath, const PacketSplit& split, const AmplitudeModel& model,
                   const Vec3& R1, const Vec3& R2, const McConfig& mc);

using MomentumBilinear = std::function<std::complex<double>(const Vec3&, const Vec3&)>;

struct I2Spec {
  Vec3 q_center;          // where u is concentrated in the mean momentum
  double q_width = 1.0;   // Gaussian scale of u in q
  double delta_width = 1.0;  // Gaussian scale of u in Delta ( = 2b for packets)
  int gh_q = 8;
  int gh_delta = 8;
  int n_cos = 16;
  int n_phi = 32;
};

// I2(R) = int dn dq int_{q-perp} dDelta u(q-D/2, q+D/2) e^{i Q.R/hbar} M2(q,n,D)
// as a composed 5-D quadrature (Gauss-Hermite in q and Delta against the
// stated Gaussian scales; the n integral folded in).
std::complex<double> reduced_integral_i2(const MomentumBilinear& u, const AmplitudeModel& model,
                                         const AmplitudeContext& ctx, const Vec3& R,
                                         const I2Spec& spec);

// Same machinery with M1 and no direction integral.
std::complex<double> reduced_integral_i1(const MomentumBilinear& u, const AmplitudeModel& model,
                                         const AmplitudeContext& ctx, const I2Spec& spec);

}  // namespace decoh
