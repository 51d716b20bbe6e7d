#pragma once
// Localization rate F(R) by the general double-sphere formula and by the
// replacement-rule route, plus the per-collision decoherence factor eta and
// rate diagnostics (saturation, small-separation quadratic coefficient).

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "decoh/core.hpp"
#include "decoh/scattering.hpp"

namespace decoh {

struct QuadratureSpec {
  int radial_nodes = 64;
  double radial_qmax_thermal_units = 8.0;
  int angular_theta_nodes = 64;
  int angular_phi_nodes = 32;
  double refine_tol = 1e-7;
};

void validate(const QuadratureSpec& q);

enum class Route { General, Replacement, WeakCoupling, MonteCarlo };
const char* route_name(Route r);

struct CurveMetadata {
  std::string model;
  std::string bath;
  std::string quad;
  double qth_over_hbar = 1.0;  // thermal momentum / hbar, fixes the R scale
};

struct DecoherenceCurve {
  std::vector<Vec3> separations;
  std::vector<double> values;
  Route route = Route::General;
  EpsilonMode epsilon = EpsilonMode::Corrected;
  std::optional<std::vector<double>> stderrs;  // Monte Carlo only
  CurveMetadata metadata;
};

// Checks finiteness, clamps negatives within -tol to zero, rejects worse.
void validate_curve(DecoherenceCurve& c, double tol);

// F(R) = eps n int dq nu(q) (q/m) int dn1 dn2 / 4pi
//          (1 - e^{i q (n1 - n2) . R / hbar}) |f(q n2, q n1)|^2
// Angular part: Gauss-Legendre x Gauss-Legendre in (cos t1, cos t2) with the
// azimuthal integral carried exactly through the Legendre expansion of |f|^2.
// Node counts escalate with q R / hbar and double until refine_tol is met.
double rate_general(const BathSpec& bath, const AmplitudeModel& model, const Vec3& R,
                    const QuadratureSpec& quad, EpsilonMode epsilon);

// eta_p(R) = 1 - (1/sigma(p)) int dn (1 - e^{i (p - p n) . R / hbar}) |f(p n, p)|^2
std::complex<double> per_collision_decoherence(const AmplitudeModel& model,
                                               const AmplitudeContext& ctx, const Vec3& p,
                                               const Vec3& R);

// F = n int dp mu(p) (p/m) sigma(p) (1 - eta_p(R)); algebraically identical to
// rate_general with eps = 1, evaluated through an independent code path.
double rate_via_replacement(const BathSpec& bath, const AmplitudeModel& model, const Vec3& R,
                            const QuadratureSpec& quad);

// | int dn |f(p n, p)|^2 / sigma(p) - 1 |, numerator and denominator from
// independent angular integrators.
double conservation_check(const AmplitudeModel& model, const AmplitudeContext& ctx, double p);

// Large-separation limit n < (q/m) sigma(q) > of the rate.
double saturation_rate(const BathSpec& bath, const AmplitudeModel& model,
                       const QuadratureSpec& quad);

struct LocalizationFit {
  double lambda = 0.0;    // F(R) ~ lambda R^2
  double residual = 0.0;  // rms relative misfit over the points used
  int points_used = 0;
};

// Least-squares quadratic coefficient from curve points with
// |R| q_th / hbar <= 0.3; needs at least 4 such points.
LocalizationFit localization_coefficient(const DecoherenceCurve& curve);

}  // namespace decoh
