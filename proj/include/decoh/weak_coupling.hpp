#pragma once
// Weak-coupling route: potential form factors, the bath correlation spectrum
// Gbar_q(omega) in closed and integral form, and F(R) from its zero-frequency
// limit.

#include "decoh/core.hpp"
#include "decoh/rate.hpp"
#include "decoh/scattering.hpp"

namespace decoh {

struct GbarSpec {
  BathSpec bath;
  PotentialModel potential;
};

// Vbar(q) = int dr / (2 pi hbar)^3 V(r) e^{-i q . r / hbar}; real and even for
// the implemented potentials.
//   Gaussian: Vbar = v0 w^3 / ((2 pi)^{3/2} hbar^3) exp(-q^2 w^2 / 2 hbar^2)
//   Yukawa:   Vbar = g / (2 pi^2 hbar (q^2 + hbar^2 kappa^2)); this fixes the
//             Born amplitude to the screened-Coulomb form -2mg/(q^2+hbar^2 kappa^2).
double potential_fourier_radial(const PotentialModel& p, const UnitSystem& u, double q);
double potential_fourier(const PotentialModel& p, const UnitSystem& u, const Vec3& q);

// Gbar_q(omega) = (2 pi n m hbar / q) |Vbar|^2 (beta/2 pi m)^{1/2}
//                 exp[-(beta m hbar^2 / 2 q^2)(omega - q^2/2 m hbar)^2]
double gbar_closed(const GbarSpec& spec, double q, double omega);

// Same quantity from the Maxwell-Boltzmann tail integral
// (pi m hbar / q) |Vbar|^2 n int_{p_cut}^inf nu(p)/p dp with
// p_cut = |2 m hbar omega - q^2| / (2 q). The exponential bulk of the tail is
// factored out analytically so the relative accuracy survives tiny values.
double gbar_integral(const GbarSpec& spec, double q, double omega);

// F(R) = 8 pi^3 hbar int dq (1 - e^{-i q . R / hbar}) Gbar_q(0), reduced to a
// 2-D (q, cos) Gauss-Legendre rule by azimuthal symmetry about R.
double rate_weak_coupling(const BathSpec& bath, const PotentialModel& potential, const Vec3& R,
                          const QuadratureSpec& quad);

// Minimal coarse-graining time beta hbar for the golden-rule regime.
double golden_rule_window(const BathSpec& bath);

// Dimensionless Born strength; route-equivalence checks are only meaningful
// when this is small (the CLI warns above 0.3).
double born_strength(const PotentialModel& p, const BathSpec& bath);

}  // namespace decoh
