#include "decoh/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "decoh/evolution.hpp"
#include "decoh/quadrature.hpp"
#include "decoh/rate.hpp"
#include "decoh/rng.hpp"
#include "decoh/thermal.hpp"
#include "decoh/wavepacket_mc.hpp"
#include "decoh/weak_coupling.hpp"

namespace decoh {

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct Checker {
  std::vector<CheckResult>& out;

  void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = name;
    try {
      auto [ok, detail] = fn();
      r.pass = ok;
      r.detail = detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(r);
  }
};

// 1-D oracle for the constant model:
// F(R) = eps 4 pi n f0^2 int nu(q) (q/m) (1 - sinc^2(qR/hbar)) dq
double constant_rate_oracle(const BathSpec& bath, double f0, double Rn, EpsilonMode eps) {
  const double qmax = 10.0 * bath.q_thermal();
  double prev = 0.0;
  const double x_nodes = qmax * Rn / bath.units.hbar;
  for (int n = std::max(256, static_cast<int>(0.7 * x_nodes) + 16); n <= 65536; n *= 2) {
    const auto rule = mapped(gauss_legendre(n), 0.0, qmax);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double q = rule.nodes[i];
      const double x = q * Rn / bath.units.hbar;
      const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
      s += rule.weights[i] * speed_distribution(bath, q) * (q / bath.mass) * (1.0 - sinc * sinc);
    }
    s *= epsilon_multiplier(eps) * 4.0 * kPi * bath.density * f0 * f0;
    if (std::abs(s - prev) <= 1e-11 * std::max(std::abs(s), 1e-300)) return s;
    prev = s;
  }
  return prev;
}

// Rotation by angle about a unit axis (Rodrigues), for invariance checks.
Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

// Radial oscillatory oracle for the potential form factor:
// Vbar(q) = (1 / 2 pi^2 hbar^2 q) int_0^inf r V(r) sin(q r / hbar) dr, q > 0.
double potential_fourier_quadrature(const PotentialModel& p, const UnitSystem& u, double q) {
  const double hbar = u.hbar;
  auto V = [&](double r) {
    if (const auto* g = std::get_if<GaussianPotential>(&p))
      return g->v0 * std::exp(-r * r / (2.0 * g->width * g->width));
    const auto& y = std::get<YukawaPotential>(p);
    return y.strength * std::exp(-y.screening * r) / r;
  };
  double rmax = 0.0;
  if (const auto* g = std::get_if<GaussianPotential>(&p)) rmax = 14.0 * g->width;
  else rmax = 70.0 / std::get<YukawaPotential>(p).screening;

  double prev = 0.0;
  const int base = std::max(256, static_cast<int>(0.7 * q * rmax / hbar) + 16);
  for (int n = base; n <= 131072; n *= 2) {
    const auto rule = mapped(gauss_legendre(n), 0.0, rmax);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double r = rule.nodes[i];
      s += rule.weights[i] * r * V(r) * std::sin(q * r / hbar);
    }
    s /= 2.0 * kPi * kPi * hbar * hbar * q;
    if (std::abs(s - prev) <= 1e-12 * std::max(std::abs(s), 1e-300)) return s;
    prev = s;
  }
  return prev;
}

double min_eigenvalue(const DensityMatrixGrid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = g.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() * g.spacing();
}

// Pure two-Gaussian superposition state on a symmetric grid.
DensityMatrixGrid superposition_grid(int n, double extent, double sep, double width) {
  std::vector<double> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = -extent + 2.0 * extent * i / (n - 1);
  std::vector<std::complex<double>> phi(n);
  double norm = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = pos[i];
    phi[i] = std::exp(-(x - 0.5 * sep) * (x - 0.5 * sep) / (2.0 * width * width)) +
             std::exp(-(x + 0.5 * sep) * (x + 0.5 * sep) / (2.0 * width * width));
    norm += std::norm(phi[i]);
  }
  const double dx = pos[1] - pos[0];
  norm = std::sqrt(norm * dx);
  std::vector<std::complex<double>> rho(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rho[static_cast<std::size_t>(i) * n + j] = phi[i] * std::conj(phi[j]) / (norm * norm);
  return make_density_grid({0, 0, 1}, pos, rho);
}

}  // namespace

SmearedDeltaPoint i2_smeared_oracle(const AmplitudeModel& model, const AmplitudeContext& ctx,
                                    const Vec3& r_o, const Vec3& p_o, double b, const Vec3& R,
                                    double s, int samples, std::uint64_t seed) {
  const double hbar = ctx.hbar;
  // q-mean ~ N(p_o, b^2/2 per axis), difference ~ N(0, 2 b^2 per axis); the
  // Gaussian factors of the packet bilinear cancel against the sampling pdf
  // leaving the constant (4 pi b^2)^{3/2}.
  const double wconst = std::pow(4.0 * kPi * b * b, 1.5);
  const double gnorm = 1.0 / (s * std::sqrt(2.0 * kPi));

  std::complex<double> sum = 0.0;
  double sum_re2 = 0.0, sum_im2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const Vec3 qbar = p_o + rng.next_gauss3(b / std::sqrt(2.0));
    const Vec3 d = rng.next_gauss3(b * std::sqrt(2.0));
    const Vec3 q1 = qbar - d * 0.5;
    const Vec3 q2 = qbar + d * 0.5;
    const double q1n = q1.norm(), q2n = q2.norm();
    if (!(q1n > 0.0) || !(q2n > 0.0)) continue;

    const double dm = q2n - q1n;
    const double g = gnorm * std::exp(-dm * dm / (2.0 * s * s));
    std::complex<double> val = 0.0;
    if (g > 0.0) {
      // direction integral of e^{i q1 n . R} f*(q1 n, q2) f(q1 n, q1); closed
      // form for the constant model, quadrature otherwise.
      std::complex<double> ang;
      if (const auto* c = std::get_if<ConstantSWave>(&model)) {
        const double x = q1n * R.norm() / hbar;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        ang = 4.0 * kPi * c->f0 * c->f0 * sinc;
      } else {
        const auto& crule = gauss_legendre(24);
        const Vec3 zh = q1 / q1n;
        Vec3 e1{0, 0, 1};
        e1 = std::abs(zh.z) < 0.9 ? zh.cross(Vec3{0, 0, 1}).normalized()
                                  : zh.cross(Vec3{1, 0, 0}).normalized();
        const Vec3 e2 = zh.cross(e1);
        const int nphi = 48;
        ang = 0.0;
        for (std::size_t ci = 0; ci < crule.size(); ++ci) {
          const double cc = crule.nodes[ci];
          const double sn = std::sqrt(std::max(0.0, 1.0 - cc * cc));
          for (int m = 0; m < nphi; ++m) {
            const double ph_ang = 2.0 * kPi * m / nphi;
            const Vec3 nh = cc * zh + sn * (std::cos(ph_ang) * e1 + std::sin(ph_ang) * e2);
            const double phase = q1n * nh.dot(R) / hbar;
            const double c2 = std::clamp(nh.dot(q2) / q2n, -1.0, 1.0);
            const double c1 = std::clamp(nh.dot(q1) / q1n, -1.0, 1.0);
            ang += crule.weights[ci] * (2.0 * kPi / nphi) *
                   std::complex<double>(std::cos(phase), std::sin(phase)) *
                   std::conj(amplitude_angle(model, ctx, q1n, c2)) *
                   amplitude_angle(model, ctx, q1n, c1);
          }
        }
      }
      // the (pi b^2)^{-3/2} of the bilinear cancels against the sampling pdf;
      // wconst carries the remaining (4 pi b^2)^{3/2}.
      const double phase_r = d.dot(r_o) / hbar;
      const std::complex<double> u_phase(std::cos(phase_r), std::sin(phase_r));
      val = wconst * u_phase * g * (q1n / (4.0 * kPi * kPi * hbar * hbar * q2n)) * ang;
    }
    sum += val;
    sum_re2 += val.real() * val.real();
    sum_im2 += val.imag() * val.imag();
  }
  const double N = samples;
  SmearedDeltaPoint out;
  out.s = s;
  out.value = sum / N;
  const double var_re = std::max(0.0, (sum_re2 - N * out.value.real() * out.value.real()) / (N - 1.0));
  const double var_im = std::max(0.0, (sum_im2 - N * out.value.imag() * out.value.imag()) / (N - 1.0));
  out.stderr_ = std::sqrt((var_re + var_im) / N);
  return out;
}

std::vector<CheckResult> run_selfcheck(CheckTier tier) {
  std::vector<CheckResult> results;
  Checker ck{results};

  const UnitSystem units;
  const BathSpec bath = make_bath(1.0, 1.0, 0.01, units);
  const AmplitudeContext ctx = amplitude_context(bath);
  const AmplitudeModel constant = ConstantSWave{1.0};
  const double qth = bath.q_thermal();
  const double Rscale = units.hbar / qth;
  QuadratureSpec quad;

  ck.run("epsilon-ratio-2pi", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (double t : {0.7, 2.3, 7.7}) {
      const Vec3 R{0, 0, t * Rscale};
      const double fc = rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
      const double fg = rate_general(bath, constant, R, quad, EpsilonMode::GallisFleming);
      worst = std::max(worst, std::abs(fg / fc - 2.0 * kPi) / (2.0 * kPi));
    }
    return {worst <= 1e-12, "max ratio deviation " + fmt(worst)};
  });

  ck.run("scale-covariance", [&]() -> std::pair<bool, std::string> {
    const double sL = 2.0, sP = 3.0;  // length and momentum scale factors
    auto dimensionless = [&](double hbar, double T, double n, double f0, double Rmag) {
      const BathSpec b2 = make_bath(1.0, T, n, UnitSystem{hbar, 1.0});
      const AmplitudeModel m = ConstantSWave{f0};
      const double F = rate_general(b2, m, {0, 0, Rmag}, quad, EpsilonMode::Corrected);
      const double sigma = 4.0 * kPi * f0 * f0;
      return F * b2.mass / (b2.density * b2.q_thermal() * sigma);
    };
    const double d1 = dimensionless(1.0, 1.0, 0.01, 0.8, 1.3 * Rscale);
    const double d2 = dimensionless(sL * sP, sP * sP, 0.01 / (sL * sL * sL), sL * 0.8,
                                    sL * 1.3 * Rscale);
    const double dev = rel(d1, d2);
    return {dev <= 1e-12, "relative deviation " + fmt(dev)};
  });

  ck.run("thermal-distributions", [&]() -> std::pair<bool, std::string> {
    const auto rule = mapped(gauss_legendre(512), 0.0, 12.0 * std::sqrt(bath.mass / bath.beta));
    double norm = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
      norm += rule.weights[i] * speed_distribution(bath, rule.nodes[i]);
    double cons = 0.0;
    for (double q : {0.3, 0.9, 1.7, 2.8}) {
      cons = std::max(cons, rel(4.0 * kPi * q * q * mb_density(bath, {0, 0, q}),
                                speed_distribution(bath, q)));
    }
    // golden-section maximum of nu against the closed-form mode sqrt(2m/beta)
    double lo = 0.5, hi = 3.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    while (hi - lo > 1e-12) {
      const double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
      if (speed_distribution(bath, c1) < speed_distribution(bath, c2)) lo = c1;
      else hi = c2;
    }
    const double mode_dev = std::abs(0.5 * (lo + hi) - std::sqrt(2.0 * bath.mass / bath.beta));
    const bool ok = std::abs(norm - 1.0) <= 1e-10 && cons <= 1e-12 && mode_dev <= 1e-6;
    return {ok, "norm-1 " + fmt(norm - 1.0) + ", mu/nu dev " + fmt(cons) + ", mode dev " +
                    fmt(mode_dev)};
  });

  ck.run("packet-variance-sum", [&]() -> std::pair<bool, std::string> {
    CounterRng rng(2026, 0);
    double worst = 0.0, worst_sum = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double frac = 0.001 + 0.998 * rng.next_unit();
      const auto s = split_bath(bath, frac);
      const double kB = units.boltzmann;
      const double dp2 = 0.5 * s.b * s.b;            // packet (Delta p_x)^2
      const double cp2 = bath.mass * kB * s.t_hat;   // center (delta p_x)^2
      worst = std::max(worst, rel((dp2 + cp2) / (2.0 * bath.mass), 0.5 * kB * bath.temperature));
      worst_sum = std::max(worst_sum, rel(s.t_bar + s.t_hat, bath.temperature));
      worst = std::max(worst, rel(s.a * s.b, units.hbar));
    }
    const bool ok = worst <= 1e-12 && worst_sum <= 1e-14;
    return {ok, "variance dev " + fmt(worst) + ", T sum dev " + fmt(worst_sum)};
  });

  ck.run("packet-normalization", [&]() -> std::pair<bool, std::string> {
    const auto split = split_bath(bath, 0.01);
    const double a = split.a;
    WavePacket pk{{0.3, -0.4, 0.2}, {0, 0, 0.5 * split.b}, split};

    // 1-D line through the center along z carries the momentum; the packet
    // factorizes, so the line restriction only costs the transverse peak
    // factor (pi a^2)^{-1}.
    const auto rule = mapped(gauss_legendre(400), -9.0 * a, 9.0 * a);
    double norm1 = 0.0, xm = 0.0, x2 = 0.0;
    std::complex<double> pm = 0.0;
    double p2 = 0.0;
    const double h = 1e-3 * a;
    auto psi_z = [&](double dz) {
      return packet_wavefunction(pk, {pk.center.x, pk.center.y, pk.center.z + dz});
    };
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double dz = rule.nodes[i];
      const double w = rule.weights[i];
      const auto p = psi_z(dz);
      norm1 += w * std::norm(p);
      xm += w * std::norm(p) * dz;
      x2 += w * std::norm(p) * dz * dz;
      // five-point derivative feeds the momentum moments
      const std::complex<double> d1 =
          (psi_z(dz - 2 * h) - 8.0 * psi_z(dz - h) + 8.0 * psi_z(dz + h) - psi_z(dz + 2 * h)) /
          (12.0 * h);
      pm += w * std::conj(p) * std::complex<double>(0, -units.hbar) * d1;
      p2 += w * units.hbar * units.hbar * std::norm(d1);
    }
    const double marg = norm1 * kPi * a * a;  // should be 1
    const double dx = std::sqrt(x2 / norm1 - (xm / norm1) * (xm / norm1));
    const double pmean = pm.real() / norm1;
    const double dp = std::sqrt(std::max(0.0, p2 / norm1 - pmean * pmean));
    const bool ok = std::abs(marg - 1.0) <= 1e-12 && rel(dx, a / std::sqrt(2.0)) <= 1e-10 &&
                    rel(pmean, 0.5 * split.b) <= 1e-11 &&
                    rel(dp, split.b / std::sqrt(2.0)) <= 1e-10;
    return {ok, "norm-1 " + fmt(marg - 1.0) + ", dx dev " + fmt(rel(dx, a / std::sqrt(2.0))) +
                    ", <p> dev " + fmt(rel(pmean, 0.5 * split.b)) + ", dp dev " +
                    fmt(rel(dp, split.b / std::sqrt(2.0)))};
  });

  ck.run("gamma-profile", [&]() -> std::pair<bool, std::string> {
    const auto split = split_bath(bath, 0.01);
    const double a = split.a;
    const Vec3 qh{0, 0, 1};
    const double par = gamma_profile(split, qh, {0, 0, 3.7 * a});
    const double peak_dev = rel(par, 1.0 / (kPi * a * a));
    const double at_a = gamma_profile(split, qh, {a, 0, 1.1 * a});
    const double ea_dev = rel(at_a, std::exp(-1.0) / (kPi * a * a));

    // transverse normalization by 2-D Gauss-Legendre over [-8a, 8a]^2
    const auto rule = mapped(gauss_legendre(160), -8.0 * a, 8.0 * a);
    double mass = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
      for (std::size_t j = 0; j < rule.size(); ++j)
        mass += rule.weights[i] * rule.weights[j] *
                gamma_profile(split, qh, {rule.nodes[i], rule.nodes[j], 0.4 * a});
    double worst_res = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double u = 0.5 * k * a;
      worst_res = std::max(worst_res, gamma_fourier_residual(split, qh, {u, 0, 0.3 * a}, 64));
    }
    const bool ok = peak_dev <= 1e-13 && ea_dev <= 1e-13 && std::abs(mass - 1.0) <= 1e-10 &&
                    worst_res <= 1e-6;
    return {ok, "norm-1 " + fmt(mass - 1.0) + ", max fourier residual " + fmt(worst_res)};
  });

  ck.run("optical-theorem", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (double x : {0.1, 1.0, 5.0}) {
      const AmplitudeModel hs = HardSphere{1.0, kAutoLmax};
      worst = std::max(worst, optical_theorem_residual(hs, {1.0, 1.0}, x));
    }
    // truncation keeps wave-by-wave unitarity; it shows in sigma instead
    const double sig_trunc = total_cross_section(HardSphere{1.0, 0}, {1.0, 1.0}, 5.0);
    const double sig_full = total_cross_section(HardSphere{1.0, kAutoLmax}, {1.0, 1.0}, 5.0);
    const double trunc_dev = std::abs(sig_trunc - sig_full) / sig_full;
    const bool ok = worst <= 1e-8 && trunc_dev > 1e-2;
    return {ok, "max residual " + fmt(worst) + ", l_max=0 sigma deviation " + fmt(trunc_dev)};
  });

  ck.run("amplitude-symmetries", [&]() -> std::pair<bool, std::string> {
    CounterRng rng(11, 0);
    const std::vector<AmplitudeModel> models = {
        ConstantSWave{0.7}, HardSphere{1.0, kAutoLmax},
        BornPotential{GaussianPotential{0.05, 1.0}}};
    double worst = 0.0;
    for (const auto& m : models) {
      for (int trial = 0; trial < 6; ++trial) {
        const Vec3 qv = rng.next_gauss3(1.0);
        Vec3 nv = rng.next_gauss3(1.0).normalized();
        const Vec3 axis = rng.next_gauss3(1.0).normalized();
        const double ang = 2.0 * kPi * rng.next_unit();
        if (!(qv.norm() > 0.1)) continue;
        const auto f0v = amplitude(m, ctx, qv, nv);
        const auto f1v = amplitude(m, ctx, rotate(qv, axis, ang), rotate(nv, axis, ang));
        worst = std::max(worst, std::abs(f0v - f1v) / std::max(1.0, std::abs(f0v)));
      }
    }
    // Born closed form against the module's own Fourier transform
    const PotentialModel pot = GaussianPotential{0.05, 1.0};
    const AmplitudeModel born = BornPotential{pot};
    const Vec3 q1{0, 0, 1.3}, n2 = Vec3{0.6, 0, 0.8}.normalized();
    const auto fb = amplitude(born, ctx, q1, n2);
    const Vec3 dq = n2 * q1.norm() - q1;
    const double vb = potential_fourier(pot, units, dq);
    const double born_dev =
        std::abs(fb - std::complex<double>(-4.0 * kPi * kPi * ctx.mass * ctx.hbar * vb, 0.0)) /
        std::abs(fb);
    const bool ok = worst <= 1e-12 && born_dev <= 1e-12;
    return {ok, "rotation dev " + fmt(worst) + ", Born identity dev " + fmt(born_dev)};
  });

  ck.run("potential-fourier-quadrature", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    const PotentialModel gauss = GaussianPotential{0.1, 1.0};
    const PotentialModel yuk = YukawaPotential{0.1, 1.0};
    for (double q : {0.4, 1.0, 2.5}) {
      worst = std::max(worst, rel(potential_fourier_radial(gauss, units, q),
                                  potential_fourier_quadrature(gauss, units, q)));
      worst = std::max(worst, rel(potential_fourier_radial(yuk, units, q),
                                  potential_fourier_quadrature(yuk, units, q)));
    }
    return {worst <= 1e-8, "max closed-vs-quadrature dev " + fmt(worst)};
  });

  ck.run("conservation-condition", [&]() -> std::pair<bool, std::string> {
    const double c_const = conservation_check(constant, ctx, 1.1);
    double c_hs = 0.0;
    for (double q : {0.5, 2.0, 5.0})
      c_hs = std::max(c_hs, conservation_check(HardSphere{1.0, kAutoLmax}, ctx, q));
    const double c_born =
        conservation_check(BornPotential{GaussianPotential{0.05, 1.0}}, ctx, 1.4);
    const bool ok = c_const <= 1e-12 && c_hs <= 1e-10 && c_born <= 1e-10;
    return {ok, "constant " + fmt(c_const) + ", hard-sphere " + fmt(c_hs) + ", born " +
                    fmt(c_born)};
  });

  // Hard-sphere geometry with q_th R_s / hbar = 1.
  const BathSpec bath_hs = make_bath(1.0, 0.5, 0.01, units);
  const AmplitudeModel hs_model = HardSphere{1.0, kAutoLmax};

  ck.run("route-equivalence-replacement", [&]() -> std::pair<bool, std::string> {
    QuadratureSpec q8 = quad;
    q8.refine_tol = 1e-8;
    const double fsat = saturation_rate(bath_hs, hs_model, q8);
    double worst = 0.0;
    for (double t : {0.5, 2.0, 8.0, 20.0}) {
      const Vec3 R{0, 0, t * units.hbar / bath_hs.q_thermal()};
      const double fg = rate_general(bath_hs, hs_model, R, q8, EpsilonMode::Corrected);
      const double fr = rate_via_replacement(bath_hs, hs_model, R, q8);
      worst = std::max(worst, std::abs(fg - fr) / fsat);
    }
    return {worst <= 1e-6, "max |general-replacement|/F_sat " + fmt(worst)};
  });

  ck.run("route-equivalence-weak-coupling", [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (const PotentialModel pot :
         {PotentialModel{GaussianPotential{0.05, 1.0}}, PotentialModel{YukawaPotential{0.05, 1.0}}}) {
      const AmplitudeModel born = BornPotential{pot};
      for (double t : {0.8, 2.5, 6.0}) {
        const Vec3 R{0, 0, t * Rscale};
        const double fg = rate_general(bath, born, R, quad, EpsilonMode::Corrected);
        const double fw = rate_weak_coupling(bath, pot, R, quad);
        worst = std::max(worst, rel(fg, fw));
      }
    }
    return {worst <= 1e-3, "max relative route difference " + fmt(worst)};
  });

  ck.run("gbar-closed-vs-integral", [&]() -> std::pair<bool, std::string> {
    const GbarSpec spec{bath, GaussianPotential{0.05, 1.0}};
    const double w0 = qth * qth / (2.0 * bath.mass * units.hbar);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double q = (0.2 + (4.0 - 0.2) * i / 4.0) * qth;
        const double w = 3.0 * w0 * j / 4.0;
        worst = std::max(worst, rel(gbar_closed(spec, q, w), gbar_integral(spec, q, w)));
      }
    // detailed-balance shape: maximum over omega sits at q^2 / (2 m hbar)
    const double qprobe = 1.3 * qth;
    const double wpeak = qprobe * qprobe / (2.0 * bath.mass * units.hbar);
    double best_w = 0.0, best_v = -1.0;
    for (int k = 0; k <= 400; ++k) {
      const double w = 3.0 * wpeak * k / 400.0;
      const double v = gbar_closed(spec, qprobe, w);
      if (v > best_v) {
        best_v = v;
        best_w = w;
      }
    }
    const double argmax_dev = std::abs(best_w - wpeak) / wpeak;
    const bool ok = worst <= 1e-9 && argmax_dev <= 0.01;
    return {ok, "max grid dev " + fmt(worst) + ", argmax dev " + fmt(argmax_dev)};
  });

  ck.run("rate-limits", [&]() -> std::pair<bool, std::string> {
    const double f0 = rate_general(bath, constant, {0, 0, 0}, quad, EpsilonMode::Corrected);
    const double fsat = saturation_rate(bath, constant, quad);
    const double ffar =
        rate_general(bath, constant, {0, 0, 100.0 * Rscale}, quad, EpsilonMode::Corrected);
    const double sat_dev = std::abs(ffar / fsat - 1.0);

    const auto eta0 = per_collision_decoherence(constant, ctx, {0, 0, 1.2}, {0, 0, 0});
    const bool eta0_ok = eta0 == std::complex<double>(1.0, 0.0);

    // hard sphere at q R_s / hbar = 5, perpendicular separation |R| = 50 hbar/q
    const AmplitudeContext unit_ctx{1.0, 1.0};
    const Vec3 p{0, 0, 5.0};
    const Vec3 Rp{50.0 / 5.0, 0, 0};
    const auto eta_far = per_collision_decoherence(hs_model, unit_ctx, p, Rp);
    const bool ok =
        f0 == 0.0 && sat_dev <= 5e-3 && eta0_ok && std::abs(eta_far) <= 0.05;
    return {ok, "F(0) " + fmt(f0) + ", saturation dev " + fmt(sat_dev) + ", |eta| far " +
                    fmt(std::abs(eta_far))};
  });

  ck.run("rate-bounds-linearity-evenness", [&]() -> std::pair<bool, std::string> {
    const double fsat = saturation_rate(bath, constant, quad);
    bool bounds = true;
    double worst_even = 0.0;
    for (double t : {0.5, 1.5, 3.0, 7.0, 14.0, 30.0}) {
      const Vec3 R{0, 0, t * Rscale};
      const double f = rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
      bounds = bounds && f >= 0.0 && f <= (1.0 + 1e-6) * fsat;
      const double fneg = rate_general(bath, constant, -R, quad, EpsilonMode::Corrected);
      worst_even = std::max(worst_even, rel(f, fneg));
    }
    const BathSpec bath2 = make_bath(1.0, 1.0, 0.02, units);
    const Vec3 R{0, 0, 2.0 * Rscale};
    const double ratio = rate_general(bath2, constant, R, quad, EpsilonMode::Corrected) /
                         rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
    const double lin_dev = std::abs(ratio - 2.0) / 2.0;
    const bool ok = bounds && worst_even <= 1e-10 && lin_dev <= 1e-12;
    return {ok, "evenness dev " + fmt(worst_even) + ", linearity dev " + fmt(lin_dev)};
  });

  ck.run("localization-coefficient", [&]() -> std::pair<bool, std::string> {
    DecoherenceCurve curve;
    curve.metadata.qth_over_hbar = qth / units.hbar;
    for (double t : {0.05, 0.10, 0.15, 0.20, 0.25, 0.30}) {
      const Vec3 R{0, 0, t * Rscale};
      curve.separations.push_back(R);
      curve.values.push_back(rate_general(bath, constant, R, quad, EpsilonMode::Corrected));
    }
    const auto fit = localization_coefficient(curve);
    // central-difference curvature of the 1-D oracle at the origin;
    // F even with F(0)=0 gives d2F/dR2 / 2 = (16 F(h) - F(2h)) / (12 h^2)
    const double h = 0.04 * Rscale;
    const double f1 = constant_rate_oracle(bath, 1.0, h, EpsilonMode::Corrected);
    const double f2 = constant_rate_oracle(bath, 1.0, 2.0 * h, EpsilonMode::Corrected);
    const double lam_ref = (16.0 * f1 - f2) / (12.0 * h * h);
    const double dev = rel(fit.lambda, lam_ref);
    return {dev <= 0.01, "lambda dev " + fmt(dev) + " over " + std::to_string(fit.points_used) +
                             " points"};
  });

  ck.run("evolution-invariants", [&]() -> std::pair<bool, std::string> {
    const double fsat = saturation_rate(bath, constant, quad);
    auto rate_fn = [&](const Vec3& R) {
      return rate_general(bath, constant, R, quad, EpsilonMode::Corrected);
    };
    const double sep = 4.0 * Rscale, width = 0.8 * Rscale;
    const auto g0 = superposition_grid(64, 10.0 * Rscale, sep, width);
    const double t1 = 0.4 / fsat, t2 = 0.9 / fsat;

    const auto g1 = evolve(g0, rate_fn, t1);
    const auto g12 = evolve(g1, rate_fn, t2);
    const auto g2 = evolve(g0, rate_fn, t1 + t2);
    double semi = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < g0.values.size(); ++k) {
      semi = std::max(semi, std::abs(g12.values[k] - g2.values[k]));
      scale = std::max(scale, std::abs(g0.values[k]));
    }
    semi /= scale;

    double herm = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < g2.size(); ++i) {
      diag = std::max(diag, std::abs(g2.at(i, i) - g0.at(i, i)));
      for (std::size_t j = 0; j < g2.size(); ++j)
        herm = std::max(herm, std::abs(g2.at(i, j) - std::conj(g2.at(j, i))));
    }
    const double trace_dev = rel(g2.trace(), g0.trace());

    // off-diagonal lobe decay against exp(-F(d) t)
    const std::size_t n = g0.size();
    std::size_t bi = 0, bj = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double d = std::abs(g0.positions[i] - g0.positions[j]);
        if (std::abs(d - sep) < 0.3 * Rscale && std::abs(g0.at(i, j)) > best) {
          best = std::abs(g0.at(i, j));
          bi = i;
          bj = j;
        }
      }
    const double d = std::abs(g0.positions[bi] - g0.positions[bj]);
    const double expected = std::exp(-rate_fn({0, 0, d}) * (t1 + t2));
    const double decay_dev =
        rel(std::abs(g2.at(bi, bj)) / std::abs(g0.at(bi, bj)), expected);

    const double mineig = min_eigenvalue(g2);
    const bool pos_ok = mineig >= -1e-10 * g2.trace();

    const auto cl = coherence_length(g2, std::exp(-1.0));
    // invert F(d) t = 1 by bisection on the oracle
    double lo = 0.0, hi = 30.0 * Rscale;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (constant_rate_oracle(bath, 1.0, mid, EpsilonMode::Corrected) * (t1 + t2) < 1.0) lo = mid;
      else hi = mid;
    }
    const double cl_dev = std::abs(cl.length - 0.5 * (lo + hi));
    const bool cl_ok = !cl.saturated && cl_dev <= 1.2 * g0.spacing();

    const bool ok = semi <= 1e-12 && herm <= 1e-12 * scale && diag <= 1e-14 &&
                    trace_dev <= 1e-12 && decay_dev <= 1e-10 && pos_ok && cl_ok;
    return {ok, "semigroup " + fmt(semi) + ", decay dev " + fmt(decay_dev) + ", min eig/trace " +
                    fmt(mineig / g2.trace()) + ", coherence length dev/dx " +
                    fmt(cl_dev / g0.spacing())};
  });

  ck.run("kernel-coincidence-and-bound", [&]() -> std::pair<bool, std::string> {
    const auto split = split_bath(bath, 0.01);
    CounterRng rng(77, 0);
    double worst0 = 0.0, worst_bound = 0.0;
    const std::vector<AmplitudeModel> models = {constant, hs_model,
                                                BornPotential{GaussianPotential{0.05, 1.0}}};
    for (int i = 0; i < 20; ++i) {
      const auto& m = models[i % models.size()];
      const Vec3 p = rng.next_gauss3(std::sqrt(bath.mass / bath.beta)) +
                     Vec3{0, 0, 2.0 * std::sqrt(bath.mass / bath.beta)};
      const Vec3 r_o = rng.next_gauss3(2.0 * split.a);
      const Vec3 R{0.3 * Rscale * rng.next_gauss(), 0, 0.4 * Rscale * rng.next_gauss()};
      const double sigma = total_cross_section(m, ctx, std::max(p.norm(), 0.1));
      const double scale = sigma / (kPi * split.a * split.a);

      const auto k0 = single_packet_kernel(split, m, ctx, r_o, p, R, R);
      worst0 = std::max(worst0, std::abs(k0) / scale);
      const auto k = single_packet_kernel(split, m, ctx, r_o, p, {0, 0, 0}, R);
      worst_bound = std::max(worst_bound, k.real() / scale);
    }
    const bool ok = worst0 <= 1e-12 && worst_bound <= 1e-10;
    return {ok, "coincidence residue " + fmt(worst0) + ", max Re kernel " + fmt(worst_bound)};
  });

  ck.run("impact-parameter-law", [&]() -> std::pair<bool, std::string> {
    const auto split = split_bath(bath, 0.01);
    const double a = split.a;
    const Vec3 p{0, 0, 3.0 * split.b * 10.0};
    const Vec3 R1{0, 0, 0.02 * a}, R2{0, 0, -0.02 * a};
    const double v0 =
        std::abs(strong_condition_delta_rho(split, constant, ctx, {0, 0, -5 * a}, p, R1, R2));
    double worst = 0.0;
    for (double ell : {0.5 * a, a, 1.5 * a, 2.0 * a}) {
      const double v =
          std::abs(strong_condition_delta_rho(split, constant, ctx, {ell, 0, -5 * a}, p, R1, R2));
      const double slope = std::log(v / v0) / (ell * ell);
      worst = std::max(worst, rel(slope, -1.0 / (a * a)));
    }
    return {worst <= 1e-6, "max slope deviation " + fmt(worst)};
  });

  ck.run("m-kernels", [&]() -> std::pair<bool, std::string> {
    const Vec3 q{0, 0, 1.7};
    const Vec3 n = Vec3{0.3, 0.4, 0.5}.normalized();
    double worst = 0.0;
    for (const AmplitudeModel& m :
         {constant, hs_model, AmplitudeModel{BornPotential{GaussianPotential{0.05, 1.0}}}}) {
      const auto k0 = m_kernels(m, ctx, q, {0, 0, 0}, n);
      const auto fqq = amplitude_angle(m, ctx, q.norm(), 1.0);
      worst = std::max(worst, std::abs(k0.m1 - fqq.real() / (kPi * ctx.hbar * q.norm()) *
                                                    std::complex<double>(1, 0)) /
                                  std::max(1e-300, std::abs(k0.m1)));
      const double cn = std::clamp(n.dot(q) / q.norm(), -1.0, 1.0);
      const auto fn = amplitude_angle(m, ctx, q.norm(), cn);
      worst = std::max(worst, std::abs(k0.m2 - std::norm(fn) / (4.0 * kPi * kPi * ctx.hbar *
                                                                ctx.hbar)) /
                                  std::abs(k0.m2));
    }
    // constant model: M2 = f0^2 (Q/q) / (4 pi^2 hbar^2) for any delta
    const Vec3 delta{0.21, 0, 0};
    const auto kc = m_kernels(constant, ctx, q, delta, n);
    const double Q = std::sqrt(q.norm2() + 0.25 * delta.norm2());
    const double expect = (Q / q.norm()) / (4.0 * kPi * kPi);
    worst = std::max(worst, std::abs(kc.m2 - expect) / expect);
    // hermiticity under delta -> -delta
    const Vec3 d2{0.1 * q.norm(), 0, 0};
    const auto kp = m_kernels(hs_model, ctx, q, d2, n);
    const auto km = m_kernels(hs_model, ctx, q, -d2, n);
    worst = std::max(worst, std::abs(kp.m2 - std::conj(km.m2)) / std::abs(kp.m2));
    return {worst <= 1e-12, "max kernel identity dev " + fmt(worst)};
  });

  ck.run("strong-condition-route", [&]() -> std::pair<bool, std::string> {
    const auto split = split_bath(bath, 0.0005);  // very narrow momentum spread
    const double a = split.a;
    const Vec3 p{0, 0, 300.0 * split.b};
    // head-on geometry: the Gamma-difference term vanishes and the formulas
    // agree to O((|R1-R2|/2a)^2) + O((b/p)^2)
    const Vec3 R1{0.005 * a, 0, 0}, R2{-0.005 * a, 0, 0};
    const Vec3 r_o{0, 0, -4.0 * a};
    const auto exact = single_packet_kernel(split, constant, ctx, r_o, p, R1, R2);
    const auto strong = strong_condition_delta_rho(split, constant, ctx, r_o, p, R1, R2);
    const double dev = std::abs(exact - strong) / std::abs(strong);
    // Gamma factor at one packet-width impact parameter
    const auto at0 = strong_condition_delta_rho(split, constant, ctx, {0, 0, -4 * a}, p, R1, R2);
    const auto ata = strong_condition_delta_rho(split, constant, ctx, {a, 0, -4 * a}, p, R1, R2);
    const double gam_dev = rel(std::abs(ata / at0), std::exp(-1.0));
    const bool ok = dev <= 1e-4 && gam_dev <= 1e-12;
    return {ok, "kernel-vs-strong dev " + fmt(dev) + ", Gamma ratio dev " + fmt(gam_dev)};
  });

  if (tier == CheckTier::Extended) {
    ck.run("mc-agreement", [&]() -> std::pair<bool, std::string> {
      const auto split = split_bath(bath, 0.01);
      McConfig mc;
      mc.samples = 20000;
      double worst_z = 0.0, worst_rel_err = 0.0;
      for (double t : {0.5, 1.0, 2.0}) {
        const Vec3 R1{0, 0, 0.5 * t * Rscale}, R2{0, 0, -0.5 * t * Rscale};
        const auto est = mc_rate(bath, split, constant, R1, R2, mc);
        const double fg = rate_general(bath, constant, R1 - R2, quad, EpsilonMode::Corrected);
        worst_z = std::max(worst_z, std::abs(est.value - fg) / est.stderr_);
        worst_rel_err = std::max(worst_rel_err, est.stderr_ / est.value);
      }
      const bool ok = worst_z <= 3.0 && worst_rel_err <= 0.10;
      return {ok, "max |z| " + fmt(worst_z) + ", max stderr/value " + fmt(worst_rel_err)};
    });

    ck.run("mc-seed-coverage", [&]() -> std::pair<bool, std::string> {
      const auto split = split_bath(bath, 0.01);
      const Vec3 R1{0, 0, 0.5 * Rscale}, R2{0, 0, -0.5 * Rscale};
      const double fg = rate_general(bath, constant, R1 - R2, quad, EpsilonMode::Corrected);
      int hits = 0;
      for (int s = 0; s < 20; ++s) {
        McConfig mc;
        mc.samples = 5000;
        mc.seed = 1000 + static_cast<std::uint64_t>(s);
        const auto est = mc_rate(bath, split, constant, R1, R2, mc);
        if (std::abs(est.value - fg) <= 3.0 * est.stderr_) ++hits;
      }
      return {hits >= 19, std::to_string(hits) + "/20 seeds within 3 stderr"};
    });

    ck.run("mc-determinism", [&]() -> std::pair<bool, std::string> {
      const auto split = split_bath(bath, 0.01);
      McConfig mc;
      mc.samples = 4000;
      const Vec3 R1{0, 0, 0.5 * Rscale}, R2{0, 0, -0.5 * Rscale};
      const auto e1 = mc_rate(bath, split, constant, R1, R2, mc);
      const auto e2 = mc_rate(bath, split, constant, R1, R2, mc);
      const bool ok = e1.value == e2.value && e1.stderr_ == e2.stderr_;
      return {ok, ok ? "bit-identical estimates" : "estimates differ"};
    });

    ck.run("i2-fguse-consistency", [&]() -> std::pair<bool, std::string> {
      const auto split = split_bath(bath, 0.01);
      const double b = split.b;
      const Vec3 p_o{0, 0, 200.0 * b};
      const Vec3 r_o{0.4 * split.a, 0, 0};
      const double hbar = units.hbar;
      auto u = [&](const Vec3& qa, const Vec3& qb) -> std::complex<double> {
        const Vec3 qm = (qa + qb) * 0.5;
        const Vec3 dl = qb - qa;
        const double ph = dl.dot(r_o) / hbar;
        return std::pow(kPi * b * b, -1.5) * std::complex<double>(std::cos(ph), std::sin(ph)) *
               std::exp(-dl.norm2() / (4.0 * b * b)) * std::exp(-(qm - p_o).norm2() / (b * b));
      };
      // Gauss-Hermite scales matched to the bilinear's Gaussians
      I2Spec spec;
      spec.q_center = p_o;
      spec.q_width = b;
      spec.delta_width = 2.0 * b;
      spec.gh_q = 8;
      spec.gh_delta = 10;
      spec.n_cos = 16;
      spec.n_phi = 8;
      const auto i2 = reduced_integral_i2(u, constant, ctx, {0, 0, 0}, spec);

      // sigma-type building block: Gauss-Hermite average of Gamma_q(r_o) sigma(q)
      const auto& gh = gauss_hermite(12);
      std::complex<double> ref = 0.0;
      Vec3 e1{1, 0, 0}, e2{0, 1, 0};
      for (std::size_t i = 0; i < gh.size(); ++i)
        for (std::size_t j = 0; j < gh.size(); ++j)
          for (std::size_t k = 0; k < gh.size(); ++k) {
            const Vec3 q = p_o + b * (gh.nodes[i] * Vec3{0, 0, 1} + gh.nodes[j] * e1 +
                                      gh.nodes[k] * e2);
            ref += gh.weights[i] * gh.weights[j] * gh.weights[k] *
                   gamma_profile(split, q.normalized(), r_o) *
                   total_cross_section(constant, ctx, q.norm());
          }
      ref /= std::pow(kPi, 1.5);
      const double dev = std::abs(i2 - ref) / std::abs(ref);
      return {dev <= 1e-4, "I2 vs sigma-term dev " + fmt(dev)};
    });

    ck.run("i2-smeared-delta", [&]() -> std::pair<bool, std::string> {
      const auto split = split_bath(bath, 0.01);
      const double b = split.b;
      const Vec3 p_o{0, 0, 6.0 * b};
      const Vec3 r_o{0.5 * split.a, 0, 0};
      const Vec3 R{0, 0, 0.4 * units.hbar / p_o.norm()};
      const double hbar = units.hbar;
      auto u = [&](const Vec3& qa, const Vec3& qb) -> std::complex<double> {
        const Vec3 qm = (qa + qb) * 0.5;
        const Vec3 dl = qb - qa;
        const double ph = dl.dot(r_o) / hbar;
        return std::pow(kPi * b * b, -1.5) * std::complex<double>(std::cos(ph), std::sin(ph)) *
               std::exp(-dl.norm2() / (4.0 * b * b)) * std::exp(-(qm - p_o).norm2() / (b * b));
      };
      I2Spec spec;
      spec.q_center = p_o;
      spec.q_width = b;
      spec.delta_width = 2.0 * b;
      spec.gh_q = 10;
      spec.gh_delta = 10;
      spec.n_cos = 16;
      spec.n_phi = 8;
      const auto i2 = reduced_integral_i2(u, constant, ctx, R, spec);

      std::vector<SmearedDeltaPoint> pts;
      for (double s : {0.50 * b, 0.35 * b, 0.25 * b})
        pts.push_back(i2_smeared_oracle(constant, ctx, r_o, p_o, b, R, s, 400000, 31));

      // weighted fit value(s) = I0 + c s^2, real and imaginary parts separately
      auto fit0 = [&](auto part) {
        double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
        for (const auto& p : pts) {
          const double w = 1.0 / (p.stderr_ * p.stderr_);
          const double x = p.s * p.s, y = part(p.value);
          sw += w;
          swx += w * x;
          swy += w * y;
          swxx += w * x * x;
          swxy += w * x * y;
        }
        const double det = sw * swxx - swx * swx;
        const double i0 = (swxx * swy - swx * swxy) / det;
        const double var_i0 = swxx / det;
        return std::pair<double, double>(i0, std::sqrt(var_i0));
      };
      const auto [re0, rerr] = fit0([](std::complex<double> v) { return v.real(); });
      const auto [im0, ierr] = fit0([](std::complex<double> v) { return v.imag(); });
      const double zre = std::abs(re0 - i2.real()) / rerr;
      const double zim = std::abs(im0 - i2.imag()) / ierr;
      const bool ok = zre <= 3.0 && zim <= 3.0;
      return {ok, "Richardson z-scores re " + fmt(zre) + ", im " + fmt(zim)};
    });
  }

  return results;
}

}  // namespace decoh
