#include "decoh/thermal.hpp"

#include <cmath>
#include <numbers>

#include "decoh/quadrature.hpp"

namespace decoh {

namespace {
constexpr double kPi = std::numbers::pi;

// Deterministic orthonormal pair spanning the plane perpendicular to n.
void transverse_frame(const Vec3& n, Vec3& e1, Vec3& e2) {
  const Vec3 seed = std::abs(n.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  e1 = n.cross(seed).normalized();
  e2 = n.cross(e1);
}
}  // namespace

double mb_density(const BathSpec& bath, const Vec3& q) {
  const double c = bath.beta / (2.0 * kPi * bath.mass);
  return std::pow(c, 1.5) * std::exp(-bath.beta * q.norm2() / (2.0 * bath.mass));
}

double speed_distribution(const BathSpec& bath, double q) {
  if (q < 0.0) throw ValidationError("speed_distribution: q >= 0 required");
  const double c = bath.beta / (2.0 * kPi * bath.mass);
  return 4.0 * kPi * std::pow(c, 1.5) * std::exp(-bath.beta * q * q / (2.0 * bath.mass)) * q * q;
}

double mu_hat_density(const PacketSplit& split, const Vec3& p) {
  const double beta_hat = 1.0 / (split.units.boltzmann * split.t_hat);
  const double c = beta_hat / (2.0 * kPi * split.mass);
  return std::pow(c, 1.5) * std::exp(-beta_hat * p.norm2() / (2.0 * split.mass));
}

double thermal_wavelength(const BathSpec& bath) {
  return thermal_wavelength_of(bath.units.hbar, bath.beta, bath.mass);
}

PacketSplit split_bath(const BathSpec& bath, double bar_fraction) {
  if (!(bar_fraction > 0.0) || !(bar_fraction < 1.0))
    throw ValidationError("split_bath: bar_fraction must lie in (0, 1)");
  PacketSplit s;
  s.mass = bath.mass;
  s.units = bath.units;
  s.t_bar = bar_fraction * bath.temperature;
  s.t_hat = bath.temperature - s.t_bar;
  const double kB = bath.units.boltzmann;
  s.b = std::sqrt(2.0 * bath.mass * kB * s.t_bar);
  s.a = bath.units.hbar / s.b;
  const double beta_bar = 1.0 / (kB * s.t_bar);
  s.lambda_bar = thermal_wavelength_of(bath.units.hbar, beta_bar, bath.mass);
  s.v_wp = std::sqrt(3.0 * kB * s.t_hat / bath.mass);
  return s;
}

std::complex<double> packet_wavefunction(const WavePacket& packet, const Vec3& r_prime) {
  const auto& s = packet.split;
  const Vec3 d = r_prime - packet.center;
  const double lb = s.lambda_bar;
  const double amp = 2.0 * std::sqrt(2.0) / std::pow(lb, 1.5) *
                     std::exp(-2.0 * kPi * d.norm2() / (lb * lb));
  const double phase = packet.mean_momentum.dot(d) / s.units.hbar;
  return amp * std::complex<double>(std::cos(phase), std::sin(phase));
}

double gamma_profile(const PacketSplit& split, const Vec3& q_hat, const Vec3& r) {
  if (std::abs(q_hat.norm() - 1.0) > 1e-9)
    throw ValidationError("gamma_profile: q_hat must be a unit vector");
  const double par = q_hat.dot(r);
  const double perp2 = r.norm2() - par * par;
  const double a2 = split.a * split.a;
  return std::exp(-std::max(0.0, perp2) / a2) / (kPi * a2);
}

double gamma_fourier_residual(const PacketSplit& split, const Vec3& q_hat, const Vec3& u,
                              int nodes_per_axis) {
  if (std::abs(q_hat.norm() - 1.0) > 1e-9)
    throw ValidationError("gamma_fourier_residual: q_hat must be a unit vector");
  Vec3 e1, e2;
  transverse_frame(q_hat, e1, e2);
  const double u1 = e1.dot(u), u2 = e2.dot(u);
  const double b = split.b, hbar = split.units.hbar;

  // Delta = 2 b (t1 e1 + t2 e2) turns the weight into exp(-t1^2 - t2^2).
  // Kahan accumulation: at |u_perp| ~ 5a the sum cancels down to ~e^{-25} of
  // its term size and plain summation noise would swamp the result.
  const auto& gh = gauss_hermite(nodes_per_axis);
  double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
  auto kahan = [](double& sum, double& comp, double term) {
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  for (std::size_t i = 0; i < gh.size(); ++i) {
    for (std::size_t j = 0; j < gh.size(); ++j) {
      const double ph = -2.0 * b * (gh.nodes[i] * u1 + gh.nodes[j] * u2) / hbar;
      const double w = gh.weights[i] * gh.weights[j];
      kahan(sr, cr, w * std::cos(ph));
      kahan(si, ci, w * std::sin(ph));
    }
  }
  const std::complex<double> numeric = 4.0 * b * b * std::complex<double>(sr, si);

  const double closed =
      std::pow(2.0 * kPi * hbar, 2) * gamma_profile(split, q_hat, u);
  return std::abs(numeric - closed) / closed;
}

}  // namespace decoh
