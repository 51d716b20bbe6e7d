#include "decoh/weak_coupling.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "decoh/quadrature.hpp"

namespace decoh {

namespace {
constexpr double kPi = std::numbers::pi;
}

double potential_fourier_radial(const PotentialModel& p, const UnitSystem& u, double q) {
  validate(p);
  const double hbar = u.hbar;
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianPotential>) {
          const double w = v.width;
          const double pref = v.v0 * w * w * w / (std::pow(2.0 * kPi, 1.5) * hbar * hbar * hbar);
          return pref * std::exp(-q * q * w * w / (2.0 * hbar * hbar));
        } else {
          const double k = hbar * v.screening;
          return v.strength / (2.0 * kPi * kPi * hbar * (q * q + k * k));
        }
      },
      p);
}

double potential_fourier(const PotentialModel& p, const UnitSystem& u, const Vec3& q) {
  return potential_fourier_radial(p, u, q.norm());
}

double gbar_closed(const GbarSpec& spec, double q, double omega) {
  if (!(q > 0.0)) throw DomainError("gbar: q > 0 required (1/q prefactor)");
  const auto& b = spec.bath;
  const double hbar = b.units.hbar;
  const double vb = potential_fourier_radial(spec.potential, b.units, q);
  const double pref = 2.0 * kPi * b.density * b.mass * hbar / q * vb * vb *
                      std::sqrt(b.beta / (2.0 * kPi * b.mass));
  const double d = omega - q * q / (2.0 * b.mass * hbar);
  return pref * std::exp(-b.beta * b.mass * hbar * hbar / (2.0 * q * q) * d * d);
}

double gbar_integral(const GbarSpec& spec, double q, double omega) {
  if (!(q > 0.0)) throw DomainError("gbar: q > 0 required (1/q prefactor)");
  const auto& b = spec.bath;
  const double hbar = b.units.hbar;
  const double vb = potential_fourier_radial(spec.potential, b.units, q);
  const double pc = std::abs(2.0 * b.mass * hbar * omega - q * q) / (2.0 * q);

  // int_{pc}^inf p e^{-beta p^2/2m} dp, with exp(-beta pc^2/2m) pulled out so
  // the numeric part stays O(m/beta) no matter how deep in the tail we are.
  const double bm = b.beta / (2.0 * b.mass);
  const double bulk = std::exp(-bm * pc * pc);
  // remaining decay: exp(-bm t (2 pc + t)); pick T with exponent >= 45
  const double T = -pc + std::sqrt(pc * pc + 45.0 / bm);
  double tail = 0.0, prev = 0.0;
  for (int n = 64; n <= 4096; n *= 2) {
    const auto rule = mapped(gauss_legendre(n), 0.0, T);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double t = rule.nodes[i];
      s += rule.weights[i] * (pc + t) * std::exp(-bm * t * (2.0 * pc + t));
    }
    tail = s;
    if (n > 64 && std::abs(tail - prev) <= 1e-13 * std::abs(tail)) break;
    prev = tail;
  }

  const double nu_pref = 4.0 * kPi * std::pow(b.beta / (2.0 * kPi * b.mass), 1.5);
  const double pref = kPi * b.mass * hbar / q * vb * vb * b.density * nu_pref;
  return pref * tail * bulk;
}

double rate_weak_coupling(const BathSpec& bath, const PotentialModel& potential, const Vec3& R,
                          const QuadratureSpec& quad) {
  validate(quad);
  if (!R.finite()) throw ValidationError("rate_weak_coupling: R must be finite");
  if (bath.density == 0.0) return 0.0;
  const double hbar = bath.units.hbar;
  const double qmax = quad.radial_qmax_thermal_units * bath.q_thermal();
  const double Rn = R.norm();
  const double xmax = qmax * Rn / hbar;

  const GbarSpec spec{bath, potential};
  auto evaluate = [&](int nq, int nc) -> std::complex<double> {
    const auto qrule = mapped(gauss_legendre(nq), 0.0, qmax);
    const auto& crule = gauss_legendre(nc);
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < qrule.size(); ++i) {
      const double q = qrule.nodes[i];
      const double g0 = gbar_closed(spec, q, 0.0);
      std::complex<double> ang = 0.0;
      for (std::size_t j = 0; j < crule.size(); ++j) {
        const double phase = -q * Rn * crule.nodes[j] / hbar;
        ang += crule.weights[j] * (1.0 - std::complex<double>(std::cos(phase), std::sin(phase)));
      }
      acc += qrule.weights[i] * q * q * g0 * ang;
    }
    return 8.0 * kPi * kPi * kPi * hbar * 2.0 * kPi * acc;
  };

  int nq = std::max(quad.radial_nodes, static_cast<int>(0.6 * xmax) + 16);
  int nc = std::max(quad.angular_theta_nodes, static_cast<int>(0.6 * xmax) + 16);
  std::complex<double> val = evaluate(nq, nc);
  double achieved = 1.0;
  for (int level = 0; level < 3; ++level) {
    nq *= 2;
    nc *= 2;
    if (nq > 16384)
      throw ConvergenceError("rate_weak_coupling: node cap exceeded", achieved);
    const std::complex<double> ref = evaluate(nq, nc);
    const double scale = std::max({std::abs(ref.real()), std::abs(val.real()), 1e-300});
    achieved = std::abs(ref - val) / scale;
    val = ref;
    if (achieved <= quad.refine_tol) {
      if (std::abs(val.imag()) > quad.refine_tol * scale)
        throw ConvergenceError("rate_weak_coupling: imaginary residue above tolerance",
                               std::abs(val.imag()) / scale);
      double out = val.real();
      if (out < 0.0) {
        if (out < -quad.refine_tol * scale)
          throw ConvergenceError("rate_weak_coupling: negative beyond tolerance", -out / scale);
        out = 0.0;
      }
      return out;
    }
  }
  throw ConvergenceError("rate_weak_coupling: refinement did not converge", achieved);
}

double golden_rule_window(const BathSpec& bath) { return bath.beta * bath.units.hbar; }

double born_strength(const PotentialModel& p, const BathSpec& bath) {
  const double hbar = bath.units.hbar;
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianPotential>) {
          return 2.0 * bath.mass * std::abs(v.v0) * v.width * v.width / (hbar * hbar);
        } else {
          return 2.0 * bath.mass * std::abs(v.strength) / (hbar * hbar * v.screening);
        }
      },
      p);
}

}  // namespace decoh
