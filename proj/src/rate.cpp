#include "decoh/rate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "decoh/parallel.hpp"
#include "decoh/quadrature.hpp"
#include "decoh/thermal.hpp"

namespace decoh {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kNodeCap = 8192;

int escalated(int base, double phase, double per_rad) {
  const int need = static_cast<int>(per_rad * phase) + 16;
  return std::max(base, need);
}
}  // namespace

void validate(const QuadratureSpec& q) {
  if (q.radial_nodes < 8 || q.angular_theta_nodes < 8 || q.angular_phi_nodes < 8)
    throw ValidationError("QuadratureSpec: all node counts must be >= 8");
  if (!(q.refine_tol > 0.0)) throw ValidationError("QuadratureSpec: refine_tol must be > 0");
  if (!(q.radial_qmax_thermal_units > 0.0))
    throw ValidationError("QuadratureSpec: radial_qmax_thermal_units must be > 0");
}

const char* route_name(Route r) {
  switch (r) {
    case Route::General: return "general";
    case Route::Replacement: return "replacement";
    case Route::WeakCoupling: return "weak-coupling";
    case Route::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

void validate_curve(DecoherenceCurve& c, double tol) {
  double scale = 0.0;
  for (double v : c.values) {
    if (!std::isfinite(v)) throw ValidationError("DecoherenceCurve: non-finite value");
    scale = std::max(scale, std::abs(v));
  }
  if (scale == 0.0) return;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    double& v = c.values[i];
    if (v < 0.0) {
      if (v < -tol * scale)
        throw ValidationError("DecoherenceCurve: negative value beyond tolerance");
      v = 0.0;
    }
    if (c.separations[i].norm2() == 0.0 && std::abs(v) > 1e-12 * scale)
      throw ValidationError("DecoherenceCurve: F(0) must vanish");
  }
}

// ---------------------------------------------------------------------------
// General route.
//
// With z along R the double-sphere angular integral reduces to
//   A(q) = sigma(q) - pi sum_L a_L(q) |B_L(x)|^2 ,  x = q R / hbar,
// where |f(q,mu)|^2 = sum_L a_L P_L(mu) and B_L(x) is the Gauss-Legendre sum
// over e^{i x c} P_L(c); the azimuthal integral is exact by the addition
// theorem. B_L -> 2 i^L j_L(x), so A(0) = 0 identically.
// ---------------------------------------------------------------------------

namespace {

double angular_kernel(const std::vector<double>& aL, double x, const QuadRule& crule,
                      std::vector<double>& pl_scratch) {
  const int lmax = static_cast<int>(aL.size()) - 1;
  std::vector<std::complex<double>> B(lmax + 1, 0.0);
  for (std::size_t j = 0; j < crule.size(); ++j) {
    const double c = crule.nodes[j];
    legendre_all(lmax, c, pl_scratch);
    const double ph = x * c;
    const std::complex<double> e = crule.weights[j] * std::complex<double>(std::cos(ph), std::sin(ph));
    for (int L = 0; L <= lmax; ++L) B[L] += e * pl_scratch[L];
  }
  const double sigma = 4.0 * kPi * aL[0];
  double cross = 0.0;
  for (int L = 0; L <= lmax; ++L) cross += aL[L] * std::norm(B[L]);
  return sigma - kPi * cross;
}

struct GeneralEval {
  double value;
};

GeneralEval eval_rate_general(const BathSpec& bath, const AmplitudeModel& model, double Rn,
                              const QuadratureSpec& quad, int n_r, int n_c) {
  const double hbar = bath.units.hbar;
  const double qmax = quad.radial_qmax_thermal_units * bath.q_thermal();
  const auto qrule = mapped(gauss_legendre(n_r), 0.0, qmax);
  const auto& crule = gauss_legendre(n_c);
  const AmplitudeContext ctx = amplitude_context(bath);

  auto node_term = [&](std::size_t i) -> double {
    const double q = qrule.nodes[i];
    const auto aL = amplitude_sq_legendre(model, ctx, q);
    std::vector<double> pl(aL.size());
    const double A = angular_kernel(aL, q * Rn / hbar, crule, pl);
    return qrule.weights[i] * speed_distribution(bath, q) * (q / bath.mass) * A;
  };
  const auto terms = parallel_map<double>(qrule.size(), node_term);
  double acc = 0.0;
  for (double t : terms) acc += t;
  return {bath.density * acc};
}

}  // namespace

double rate_general(const BathSpec& bath, const AmplitudeModel& model, const Vec3& R,
                    const QuadratureSpec& quad, EpsilonMode epsilon) {
  validate(quad);
  validate(model);
  if (!R.finite()) throw ValidationError("rate_general: R must be finite");
  if (bath.density == 0.0) return 0.0;

  const double Rn = R.norm();
  // the angular bracket vanishes identically at coincident points; skipping
  // the quadrature avoids comparing pure rounding residue against itself
  if (Rn == 0.0) return 0.0;
  const double xmax = quad.radial_qmax_thermal_units * bath.q_thermal() * Rn / bath.units.hbar;
  int n_r = escalated(quad.radial_nodes, xmax, 0.60);
  int n_c = escalated(quad.angular_theta_nodes, xmax, 0.60);

  double val = eval_rate_general(bath, model, Rn, quad, n_r, n_c).value;
  double achieved = 1.0;
  for (int level = 0; level < 3; ++level) {
    n_r *= 2;
    n_c *= 2;
    if (n_r > kNodeCap || n_c > kNodeCap)
      throw ConvergenceError("rate_general: node cap exceeded during escalation", achieved);
    const double ref = eval_rate_general(bath, model, Rn, quad, n_r, n_c).value;
    const double scale = std::max({std::abs(ref), std::abs(val), 1e-300});
    achieved = std::abs(ref - val) / scale;
    val = ref;
    if (achieved <= quad.refine_tol) {
      if (val < 0.0) {
        if (val < -quad.refine_tol * scale)
          throw ConvergenceError("rate_general: negative beyond tolerance", -val / scale);
        val = 0.0;
      }
      return epsilon_multiplier(epsilon) * val;
    }
  }
  throw ConvergenceError("rate_general: radial/angular refinement did not converge", achieved);
}

// ---------------------------------------------------------------------------
// Per-collision decoherence factor and the replacement route. Both integrate
// over the outgoing direction with z along p: Gauss-Legendre in cos(theta)
// and the azimuth done exactly, int_0^{2pi} e^{-i z cos phi} dphi = 2 pi J0(z).
// This keeps the code path independent of the general route's Legendre
// expansion.
// ---------------------------------------------------------------------------

namespace {

struct EtaEngine {
  const AmplitudeModel* model;
  AmplitudeContext ctx;
  double p;
  double sigma;
  mutable std::map<int, std::vector<double>> fsq_cache;  // |f(p,c)|^2 per rule size

  const std::vector<double>& fsq(const QuadRule& crule) const {
    auto it = fsq_cache.find(static_cast<int>(crule.size()));
    if (it != fsq_cache.end()) return it->second;
    std::vector<double> v(crule.size());
    for (std::size_t i = 0; i < crule.size(); ++i)
      v[i] = std::norm(amplitude_angle(*model, ctx, p, crule.nodes[i]));
    return fsq_cache.emplace(static_cast<int>(crule.size()), std::move(v)).first->second;
  }

  // u: cosine between p-hat and R; Rn = |R|.
  std::complex<double> one_minus_eta(double u, double Rn, int n_c) const {
    const auto& crule = gauss_legendre(n_c);
    const auto& f2 = fsq(crule);
    const double x = p * Rn / ctx.hbar;
    const double xpar = x * u;
    const double xperp = x * std::sqrt(std::max(0.0, 1.0 - u * u));

    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < crule.size(); ++i) {
      const double c = crule.nodes[i];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double base = xpar * (1.0 - c);
      const double bess = ::j0(xperp * s);
      const std::complex<double> term =
          1.0 - std::complex<double>(std::cos(base), std::sin(base)) * bess;
      acc += crule.weights[i] * f2[i] * term;
    }
    return 2.0 * kPi * acc / sigma;
  }
};

}  // namespace

std::complex<double> per_collision_decoherence(const AmplitudeModel& model,
                                               const AmplitudeContext& ctx, const Vec3& p,
                                               const Vec3& R) {
  validate(model);
  if (!p.finite() || !R.finite())
    throw ValidationError("per_collision_decoherence: arguments must be finite");
  const double pn = p.norm();
  if (!(pn > 0.0)) throw ValidationError("per_collision_decoherence: |p| > 0 required");
  const double sigma = total_cross_section(model, ctx, pn);
  if (!(sigma > 0.0))
    throw DomainError("per_collision_decoherence: sigma(p) = 0, degenerate model");

  const double Rn = R.norm();
  if (Rn == 0.0) return {1.0, 0.0};
  const double u = p.dot(R) / (pn * Rn);
  const double x = pn * Rn / ctx.hbar;

  EtaEngine eng{&model, ctx, pn, sigma};
  int n_c = escalated(32, x, 0.60);
  std::complex<double> v = eng.one_minus_eta(u, Rn, n_c);
  for (int level = 0; level < 3; ++level) {
    n_c *= 2;
    const std::complex<double> ref = eng.one_minus_eta(u, Rn, n_c);
    const double diff = std::abs(ref - v);
    v = ref;
    if (diff <= 1e-11 * std::max(1.0, std::abs(v))) return 1.0 - v;
  }
  throw ConvergenceError("per_collision_decoherence: angular refinement did not converge", 0.0);
}

double rate_via_replacement(const BathSpec& bath, const AmplitudeModel& model, const Vec3& R,
                            const QuadratureSpec& quad) {
  validate(quad);
  validate(model);
  if (!R.finite()) throw ValidationError("rate_via_replacement: R must be finite");
  if (bath.density == 0.0) return 0.0;

  const AmplitudeContext ctx = amplitude_context(bath);
  const double hbar = bath.units.hbar;
  const double qmax = quad.radial_qmax_thermal_units * bath.q_thermal();
  const double Rn = R.norm();
  const double xmax = qmax * Rn / hbar;

  // doubler = 1, 2, 4, ... scales every quadrature axis together.
  auto evaluate = [&](int doubler) -> std::complex<double> {
    const int n_p = doubler * escalated(quad.radial_nodes, xmax, 0.60);
    const int n_u = doubler * escalated(quad.angular_theta_nodes, xmax, 0.60);
    if (n_p > kNodeCap || n_u > kNodeCap)
      throw ConvergenceError("rate_via_replacement: node cap exceeded", 1.0);
    const auto prule = mapped(gauss_legendre(n_p), 0.0, qmax);
    const auto& urule = gauss_legendre(n_u);
    auto node_term = [&](std::size_t i) -> std::complex<double> {
      const double p = prule.nodes[i];
      const double sigma = total_cross_section(model, ctx, p);
      if (!(sigma > 0.0)) return 0.0;
      EtaEngine eng{&model, ctx, p, sigma};
      const double x = p * Rn / hbar;
      // J0(x sqrt(1-u^2) s) oscillates in c as fast as the parallel phase, so
      // the cos rule is sized by the full phase x.
      const int n_c = doubler * escalated(quad.angular_theta_nodes, x, 0.60);
      std::complex<double> dir_avg = 0.0;
      for (std::size_t j = 0; j < urule.size(); ++j)
        dir_avg += urule.weights[j] * eng.one_minus_eta(urule.nodes[j], Rn, n_c);
      dir_avg *= 0.5;
      return prule.weights[i] * speed_distribution(bath, p) * (p / bath.mass) * sigma * dir_avg;
    };
    const auto terms = parallel_map<std::complex<double>>(prule.size(), node_term);
    std::complex<double> acc = 0.0;
    for (const auto& t : terms) acc += t;
    return bath.density * acc;
  };

  std::complex<double> val = evaluate(1);
  double achieved = 1.0;
  for (int doubler = 2; doubler <= 8; doubler *= 2) {
    const std::complex<double> ref = evaluate(doubler);
    const double scale = std::max({std::abs(ref.real()), std::abs(val.real()), 1e-300});
    achieved = std::abs(ref - val) / scale;
    val = ref;
    if (achieved <= quad.refine_tol) {
      if (std::abs(val.imag()) > quad.refine_tol * scale)
        throw ConvergenceError("rate_via_replacement: imaginary residue above tolerance",
                               std::abs(val.imag()) / scale);
      double out = val.real();
      if (out < 0.0) {
        if (out < -quad.refine_tol * scale)
          throw ConvergenceError("rate_via_replacement: negative beyond tolerance", -out / scale);
        out = 0.0;
      }
      return out;
    }
  }
  throw ConvergenceError("rate_via_replacement: refinement did not converge", achieved);
}

double conservation_check(const AmplitudeModel& model, const AmplitudeContext& ctx, double p) {
  const double sigma = total_cross_section(model, ctx, p);
  if (!(sigma > 0.0)) throw DomainError("conservation_check: sigma(p) = 0");
  // Numerator from the rate engine's Legendre projection, denominator from the
  // direct angular quadrature; the ratio checks both integrators at once.
  const auto aL = amplitude_sq_legendre(model, ctx, p);
  return std::abs(4.0 * kPi * aL[0] / sigma - 1.0);
}

double saturation_rate(const BathSpec& bath, const AmplitudeModel& model,
                       const QuadratureSpec& quad) {
  validate(quad);
  validate(model);
  if (bath.density == 0.0) return 0.0;
  const AmplitudeContext ctx = amplitude_context(bath);
  const double qmax = quad.radial_qmax_thermal_units * bath.q_thermal();
  double prev = 0.0;
  for (int n = std::max(quad.radial_nodes, 64); n <= 4096; n *= 2) {
    const auto rule = mapped(gauss_legendre(n), 0.0, qmax);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double q = rule.nodes[i];
      s += rule.weights[i] * speed_distribution(bath, q) * (q / bath.mass) *
           total_cross_section(model, ctx, q);
    }
    s *= bath.density;
    if (n > 64 && std::abs(s - prev) <= 1e-10 * std::abs(s)) return s;
    prev = s;
  }
  throw ConvergenceError("saturation_rate: radial quadrature did not settle", 0.0);
}

LocalizationFit localization_coefficient(const DecoherenceCurve& curve) {
  std::vector<double> r2, f;
  for (std::size_t i = 0; i < curve.separations.size(); ++i) {
    const double rn = curve.separations[i].norm();
    if (rn > 0.0 && rn * curve.metadata.qth_over_hbar <= 0.3) {
      r2.push_back(rn * rn);
      f.push_back(curve.values[i]);
    }
  }
  if (r2.size() < 4)
    throw ValidationError("localization_coefficient: need >= 4 points in the quadratic regime");

  // F ~ lambda R^2 + B R^4; the quartic term soaks up the leading deviation
  // from the quadratic regime so lambda itself stays unbiased.
  double s44 = 0.0, s46 = 0.0, s66 = 0.0, sf4 = 0.0, sf6 = 0.0;
  for (std::size_t i = 0; i < r2.size(); ++i) {
    const double x = r2[i];
    s44 += x * x;
    s46 += x * x * x;
    s66 += x * x * x * x;
    sf4 += f[i] * x;
    sf6 += f[i] * x * x;
  }
  const double det = s44 * s66 - s46 * s46;
  LocalizationFit fit;
  fit.lambda = (s66 * sf4 - s46 * sf6) / det;
  const double quartic = (s44 * sf6 - s46 * sf4) / det;
  fit.points_used = static_cast<int>(r2.size());
  double ss = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < r2.size(); ++i) {
    const double d = f[i] - fit.lambda * r2[i] - quartic * r2[i] * r2[i];
    ss += d * d;
    sf += f[i] * f[i];
  }
  fit.residual = sf > 0.0 ? std::sqrt(ss / sf) : 0.0;
  return fit;
}

}  // namespace decoh
