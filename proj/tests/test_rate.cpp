#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "decoh/quadrature.hpp"
#include "decoh/rate.hpp"
#include "decoh/thermal.hpp"

using namespace decoh;

namespace {
constexpr double kPi = std::numbers::pi;
const BathSpec bath = make_bath(1.0, 1.0, 0.01);
const AmplitudeContext ctx = amplitude_context(bath);
const AmplitudeModel constant = ConstantSWave{1.0};
const QuadratureSpec quad;  // defaults
const double Rscale = bath.units.hbar / bath.q_thermal();

// Independent oracle: F(R) = eps 4 pi n f0^2 int nu(q)(q/m)(1 - sinc^2(qR)) dq
double oracle_constant(double f0, double Rn, EpsilonMode eps) {
  const double qmax = 10.0 * bath.q_thermal();
  double prev = 0.0;
  for (int n = std::max(256, int(0.7 * qmax * Rn) + 16); n <= 65536; n *= 2) {
    const auto rule = mapped(gauss_legendre(n), 0.0, qmax);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double q = rule.nodes[i];
      const double x = q * Rn;
      const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
      s += rule.weights[i] * speed_distribution(bath, q) * q * (1.0 - sinc * sinc);
    }
    s *= epsilon_multiplier(eps) * 4.0 * kPi * bath.density * f0 * f0;
    if (std::abs(s - prev) <= 1e-11 * std::abs(s)) return s;
    prev = s;
  }
  return prev;
}

// Literal composed quadrature over (cos1, cos2, dphi), as a cross-check of
// the production angular engine.
double brute_force_rate(const AmplitudeModel& m, double Rn, int n_c, int n_phi, int n_r) {
  const double qmax = 8.0 * bath.q_thermal();
  const auto qrule = mapped(gauss_legendre(n_r), 0.0, qmax);
  const auto& crule = gauss_legendre(n_c);
  double total = 0.0;
  for (std::size_t iq = 0; iq < qrule.size(); ++iq) {
    const double q = qrule.nodes[iq];
    const double x = q * Rn;
    double ang = 0.0;
    for (std::size_t i = 0; i < crule.size(); ++i)
      for (std::size_t j = 0; j < crule.size(); ++j) {
        const double c1 = crule.nodes[i], c2 = crule.nodes[j];
        const double s1 = std::sqrt(1.0 - c1 * c1), s2 = std::sqrt(1.0 - c2 * c2);
        double phi_acc = 0.0;
        for (int k = 0; k < n_phi; ++k) {
          const double mu = c1 * c2 + s1 * s2 * std::cos(2.0 * kPi * k / n_phi);
          phi_acc += std::norm(amplitude_angle(m, ctx, q, std::clamp(mu, -1.0, 1.0)));
        }
        phi_acc *= 2.0 * kPi / n_phi;
        ang += crule.weights[i] * crule.weights[j] * (1.0 - std::cos(x * (c1 - c2))) * phi_acc;
      }
    // 2 pi from the free azimuth, 1/(4 pi) from the direction average
    total += qrule.weights[iq] * speed_distribution(bath, q) * q * ang * 2.0 * kPi / (4.0 * kPi);
  }
  return bath.density * total;
}

}  // namespace

TEST_CASE("F(0) vanishes identically") {
  CHECK(rate_general(bath, constant, {0, 0, 0}, quad, EpsilonMode::Corrected) == 0.0);
  CHECK(rate_via_replacement(bath, constant, {0, 0, 0}, quad) == 0.0);
}

TEST_CASE("general rate matches the 1-D reduction for the constant model") {
  for (double t : {0.3, 1.0, 2.7, 6.0, 15.0}) {
    const Vec3 R{0, 0, t * Rscale};
    const double f = rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
    const double ref = oracle_constant(1.0, R.norm(), EpsilonMode::Corrected);
    CHECK(f == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("epsilon modes differ by exactly 2 pi") {
  const Vec3 R{0, 0, 1.7 * Rscale};
  const double fc = rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
  const double fg = rate_general(bath, constant, R, quad, EpsilonMode::GallisFleming);
  CHECK(fg / fc == doctest::Approx(2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("angular engine agrees with the literal composed quadrature") {
  // Born-Gaussian has a non-polynomial |f|^2, so the Legendre truncation is
  // genuinely exercised against a direct (cos1, cos2, dphi) rule.
  const AmplitudeModel born = BornPotential{GaussianPotential{0.05, 1.0}};
  const Vec3 R{0, 0, 1.1 * Rscale};
  QuadratureSpec tight = quad;
  tight.refine_tol = 1e-9;
  const double engine = rate_general(bath, born, R, tight, EpsilonMode::Corrected);
  const double brute = brute_force_rate(born, R.norm(), 48, 48, 160);
  CHECK(engine == doctest::Approx(brute).epsilon(1e-8));

  const double engine_c = rate_general(bath, constant, R, tight, EpsilonMode::Corrected);
  const double brute_c = brute_force_rate(constant, R.norm(), 32, 16, 128);
  CHECK(engine_c == doctest::Approx(brute_c).epsilon(1e-8));
}

TEST_CASE("eta: identity at zero separation and the sinc oracle") {
  const Vec3 p{0, 0, 1.3};
  CHECK(per_collision_decoherence(constant, ctx, p, {0, 0, 0}) ==
        std::complex<double>(1.0, 0.0));

  // R perpendicular to p: eta = sinc(pR) for the constant model
  for (double t : {0.4, 1.0, 2.2}) {
    const Vec3 R{t * kPi / p.norm(), 0, 0};
    const auto eta = per_collision_decoherence(constant, ctx, p, R);
    const double x = p.norm() * R.norm();
    CHECK(eta.real() == doctest::Approx(std::sin(x) / x).epsilon(1e-9));
    CHECK(std::abs(eta.imag()) <= 1e-10);
  }
  // |R| = pi hbar / p lands on the first sinc zero
  const Vec3 Rz{kPi / p.norm(), 0, 0};
  CHECK(std::abs(per_collision_decoherence(constant, ctx, p, Rz)) <= 1e-9);

  // R parallel to p keeps the e^{i p.R} phase
  const Vec3 Rpar{0, 0, 0.9 / p.norm()};
  const auto eta_par = per_collision_decoherence(constant, ctx, p, Rpar);
  const double x = p.norm() * Rpar.norm();
  const std::complex<double> expect =
      std::complex<double>(std::cos(x), std::sin(x)) * (std::sin(x) / x);
  CHECK(std::abs(eta_par - expect) <= 1e-9);

  CHECK_THROWS_AS(per_collision_decoherence(AmplitudeModel{ConstantSWave{0.0}}, ctx, p, Rz),
                  DomainError);
  CHECK_THROWS_AS(per_collision_decoherence(constant, ctx, {0, 0, 0}, Rz), ValidationError);
}

TEST_CASE("replacement route agrees with the general route") {
  const BathSpec b2 = make_bath(1.0, 0.5, 0.01);
  const AmplitudeModel hs = HardSphere{1.0, kAutoLmax};
  QuadratureSpec tight = quad;
  tight.refine_tol = 1e-8;
  const double fsat = saturation_rate(b2, hs, tight);
  for (double t : {0.4, 2.0, 9.0}) {
    const Vec3 R{0, 0, t * b2.units.hbar / b2.q_thermal()};
    const double fg = rate_general(b2, hs, R, tight, EpsilonMode::Corrected);
    const double fr = rate_via_replacement(b2, hs, R, tight);
    CHECK(std::abs(fg - fr) / fsat <= 1e-6);
  }
  const BathSpec empty = make_bath(1.0, 1.0, 0.0);
  CHECK(rate_via_replacement(empty, hs, {0, 0, 1.0}, quad) == 0.0);
}

TEST_CASE("conservation condition across models") {
  CHECK(conservation_check(constant, ctx, 0.9) <= 1e-12);
  for (double q : {0.5, 2.0}) CHECK(conservation_check(HardSphere{1.0, kAutoLmax}, ctx, q) <= 1e-10);
  CHECK(conservation_check(BornPotential{GaussianPotential{0.05, 1.0}}, ctx, 1.3) <= 1e-10);
}

TEST_CASE("saturation rate closed form for constant amplitude") {
  const double fsat = saturation_rate(bath, constant, quad);
  // n sigma <q/m> with <q/m> = sqrt(8 k_B T / pi m)
  const double expect = 0.01 * 4.0 * kPi * std::sqrt(8.0 / kPi);
  CHECK(fsat == doctest::Approx(expect).epsilon(1e-10));
  const BathSpec empty = make_bath(1.0, 1.0, 0.0);
  CHECK(saturation_rate(empty, constant, quad) == 0.0);
}

TEST_CASE("rate bounds, density linearity, evenness") {
  const double fsat = saturation_rate(bath, constant, quad);
  for (double t : {0.5, 2.0, 5.5, 11.0, 24.0}) {
    const Vec3 R{0, 0, t * Rscale};
    const double f = rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
    CHECK(f >= 0.0);
    CHECK(f <= (1.0 + 1e-6) * fsat);
    CHECK(rate_general(bath, constant, -R, quad, EpsilonMode::Corrected) == f);
  }
  const BathSpec dense = make_bath(1.0, 1.0, 0.02);
  const Vec3 R{0, 0, 2.0 * Rscale};
  const double ratio = rate_general(dense, constant, R, quad, EpsilonMode::Corrected) /
                       rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
  CHECK(ratio == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("localization coefficient: fit vs finite differences") {
  DecoherenceCurve curve;
  curve.metadata.qth_over_hbar = bath.q_thermal() / bath.units.hbar;
  for (double t : {0.05, 0.10, 0.15, 0.20, 0.25, 0.30}) {
    const Vec3 R{0, 0, t * Rscale};
    curve.separations.push_back(R);
    curve.values.push_back(rate_general(bath, constant, R, quad, EpsilonMode::Corrected));
  }
  const auto fit = localization_coefficient(curve);
  const double h = 0.04 * Rscale;
  // F even with F(0) = 0: d2F/dR2 / 2 = (16 F(h) - F(2h)) / (12 h^2)
  const double lam_ref = (16.0 * oracle_constant(1.0, h, EpsilonMode::Corrected) -
                          oracle_constant(1.0, 2.0 * h, EpsilonMode::Corrected)) /
                         (12.0 * h * h);
  CHECK(fit.lambda == doctest::Approx(lam_ref).epsilon(0.01));
  CHECK(fit.points_used == 6);

  // linearity: scaling all values scales lambda
  DecoherenceCurve scaled = curve;
  for (double& v : scaled.values) v *= 3.0;
  CHECK(localization_coefficient(scaled).lambda ==
        doctest::Approx(3.0 * fit.lambda).epsilon(1e-14));

  DecoherenceCurve far;
  far.metadata.qth_over_hbar = curve.metadata.qth_over_hbar;
  for (double t : {2.0, 3.0, 4.0, 5.0}) {
    far.separations.push_back({0, 0, t * Rscale});
    far.values.push_back(1.0);
  }
  CHECK_THROWS_AS(localization_coefficient(far), ValidationError);
}

TEST_CASE("curve validation clamps tiny negatives and rejects bad values") {
  DecoherenceCurve c;
  c.separations = {{0, 0, 0}, {0, 0, 1}, {0, 0, 2}};
  c.values = {0.0, -1e-10, 1.0};
  validate_curve(c, 1e-7);
  CHECK(c.values[1] == 0.0);

  DecoherenceCurve bad = c;
  bad.values = {0.0, -0.5, 1.0};
  CHECK_THROWS_AS(validate_curve(bad, 1e-7), ValidationError);

  DecoherenceCurve bad0 = c;
  bad0.values = {0.1, 0.2, 1.0};
  CHECK_THROWS_AS(validate_curve(bad0, 1e-7), ValidationError);
}

TEST_CASE("quadrature spec validation") {
  QuadratureSpec bad;
  bad.radial_nodes = 4;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  QuadratureSpec bad2;
  bad2.refine_tol = 0.0;
  CHECK_THROWS_AS(validate(bad2), ValidationError);
}
