#include "decoh/wavepacket_mc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "decoh/parallel.hpp"
#include "decoh/quadrature.hpp"
#include "decoh/rate.hpp"
#include "decoh/rng.hpp"

namespace decoh {

namespace {

constexpr double kPi = std::numbers::pi;

void transverse_frame(const Vec3& n, Vec3& e1, Vec3& e2) {
  const Vec3 seed = std::abs(n.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  e1 = n.cross(seed).normalized();
  e2 = n.cross(e1);
}

int escalated(int base, double phase, double per_rad) {
  return std::max(base, static_cast<int>(per_rad * phase) + 12);
}

}  // namespace

MKernels m_kernels(const AmplitudeModel& model, const AmplitudeContext& ctx, const Vec3& q,
                   const Vec3& delta, const Vec3& n_hat) {
  validate(model);
  const double qn = q.norm();
  if (!(qn > 0.0)) throw ValidationError("m_kernels: |q| > 0 required");
  const double dn = delta.norm();
  if (dn > 0.0 && std::abs(delta.dot(q)) > 1e-12 * dn * qn)
    throw ValidationError("m_kernels: delta must be perpendicular to q");
  if (std::abs(n_hat.norm() - 1.0) > 1e-9)
    throw ValidationError("m_kernels: n_hat must be a unit vector");

  const Vec3 qp = q + delta * 0.5;  // both have magnitude Q
  const Vec3 qm = q - delta * 0.5;
  const double Q = std::sqrt(qn * qn + 0.25 * dn * dn);
  const double hbar = ctx.hbar;

  const double c12 = std::clamp(qp.dot(qm) / (Q * Q), -1.0, 1.0);
  const std::complex<double> f_pm = amplitude_angle(model, ctx, Q, c12);
  const std::complex<double> f_mp = amplitude_angle(model, ctx, Q, c12);

  MKernels k;
  k.m1 = (f_pm + std::conj(f_mp)) / (2.0 * kPi * hbar * qn);

  const double cp = std::clamp(n_hat.dot(qp) / Q, -1.0, 1.0);
  const double cm = std::clamp(n_hat.dot(qm) / Q, -1.0, 1.0);
  k.m2 = (Q / qn) / (4.0 * kPi * kPi * hbar * hbar) *
         std::conj(amplitude_angle(model, ctx, Q, cp)) * amplitude_angle(model, ctx, Q, cm);
  return k;
}

// ---------------------------------------------------------------------------
// Packet kernel. One engine serves both the exact evaluation (direct angular
// quadrature at every Gauss-Hermite momentum node) and a tabulated mode used
// by the Monte Carlo driver, where the direction integral
//   K(q, u) = int dn e^{-i q n . dR / hbar} |f(q, n.qhat)|^2
// and sigma(q), Re f(q,q) are precomputed on a (q, u) grid and interpolated.
// ---------------------------------------------------------------------------

namespace {

struct AngularPair {
  std::complex<double> K;  // direction integral with the e^{-i q n.dR} phase
  double sigma;            // same grid without the phase
};

AngularPair angular_integrals(const AmplitudeModel& model, const AmplitudeContext& ctx, double q,
                              double u, double D, int n_c, int n_phi) {
  const auto& crule = gauss_legendre(n_c);
  const double dphi = 2.0 * kPi / n_phi;
  const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
  const double hbar = ctx.hbar;

  AngularPair out{0.0, 0.0};
  for (std::size_t i = 0; i < crule.size(); ++i) {
    const double c = crule.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double fsq = std::norm(amplitude_angle(model, ctx, q, c));
    // n.dRhat = c u + s su cos(phi) in the frame where z = qhat and dR lies
    // in the x-z plane.
    std::complex<double> phi_acc = 0.0;
    for (int m = 0; m < n_phi; ++m) {
      const double ph = -q * D * (c * u + s * su * std::cos(m * dphi)) / hbar;
      phi_acc += std::complex<double>(std::cos(ph), std::sin(ph));
    }
    out.K += crule.weights[i] * fsq * phi_acc * dphi;
    out.sigma += crule.weights[i] * fsq * 2.0 * kPi;
  }
  return out;
}

struct KernelTables {
  double q_lo, q_hi, du;
  int nq, nu;
  std::vector<std::complex<double>> K;  // nq x nu
  std::vector<double> sigma, ref;       // nq

  static double catmull(double f0, double f1, double f2, double f3, double t) {
    const double a = -0.5 * f0 + 1.5 * f1 - 1.5 * f2 + 0.5 * f3;
    const double b = f0 - 2.5 * f1 + 2.0 * f2 - 0.5 * f3;
    const double c = -0.5 * f0 + 0.5 * f2;
    return ((a * t + b) * t + c) * t + f1;
  }
};

class PacketKernelEngine {
 public:
  PacketKernelEngine(const PacketSplit& split, const AmplitudeModel& model,
                     const AmplitudeContext& ctx, const Vec3& R1, const Vec3& R2, bool tabulate,
                     double q_hi = 0.0)
      : split_(split), model_(model), ctx_(ctx), R1_(R1), R2_(R2) {
    Rbar_ = (R1 + R2) * 0.5;
    dR_ = R1 - R2;
    D_ = dR_.norm();
    dR_hat_ = D_ > 0.0 ? dR_ / D_ : Vec3{0, 0, 1};
    if (tabulate) build_tables(q_hi);
  }

  std::complex<double> eval(const Vec3& r_o, const Vec3& p_o, int gh_nodes = 8) const {
    const auto& gh = gauss_hermite(gh_nodes);
    const double b = split_.b;
    Vec3 e1, e2;
    const Vec3 p_hat = p_o.normalized();
    transverse_frame(p_hat, e1, e2);

    // q = p_o + b t; the pi^{-3/2} prefactor absorbs the GH weight norm.
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i)
      for (std::size_t j = 0; j < gh.size(); ++j)
        for (std::size_t k = 0; k < gh.size(); ++k) {
          const Vec3 q = p_o + b * (gh.nodes[i] * p_hat + gh.nodes[j] * e1 + gh.nodes[k] * e2);
          acc += gh.weights[i] * gh.weights[j] * gh.weights[k] * a_kernel(r_o, q);
        }
    return acc / std::pow(kPi, 1.5);
  }

 private:
  std::complex<double> a_kernel(const Vec3& r_o, const Vec3& q_vec) const {
    double qn = q_vec.norm();
    if (!(qn > 0.0)) return 0.0;
    const Vec3 q_hat = q_vec / qn;
    const double g_bar = gamma_profile(split_, q_hat, r_o - Rbar_);
    const double g1 = gamma_profile(split_, q_hat, r_o - R1_);
    const double g2 = gamma_profile(split_, q_hat, r_o - R2_);

    const double u = D_ > 0.0 ? std::clamp(q_hat.dot(dR_hat_), -1.0, 1.0) : 1.0;
    std::complex<double> K;
    double sigma, refq;
    if (!tables_) {
      const double x = qn * D_ / ctx_.hbar;
      const auto ap = angular_integrals(model_, ctx_, qn, u, D_, escalated(24, x, 0.60),
                                        escalated(24, x, 1.30));
      K = ap.K;
      sigma = ap.sigma;
      refq = amplitude_angle(model_, ctx_, qn, 1.0).real();
    } else {
      lookup(qn, u, K, sigma, refq);
    }

    const double ph = q_vec.dot(dR_) / ctx_.hbar;
    const std::complex<double> W = std::complex<double>(std::cos(ph), std::sin(ph)) * K;
    std::complex<double> A = g_bar * W - 0.5 * (g1 + g2) * sigma;
    A += std::complex<double>(0.0, 2.0 * kPi * ctx_.hbar / qn) * (g1 - g2) * refq;
    return A;
  }

  void build_tables(double q_hi) {
    tab_.q_lo = 1e-6 * q_hi;
    tab_.q_hi = q_hi;
    tab_.nq = 160;
    tab_.nu = 96;
    tab_.du = 2.0 / (tab_.nu - 1);
    tab_.K.resize(static_cast<std::size_t>(tab_.nq) * tab_.nu);
    tab_.sigma.resize(tab_.nq);
    tab_.ref.resize(tab_.nq);
    const double dq = (tab_.q_hi - tab_.q_lo) / (tab_.nq - 1);
    const double xmax = q_hi * D_ / ctx_.hbar;
    const int n_c = escalated(32, xmax, 0.60);
    const int n_phi = escalated(32, xmax, 1.30);
    for (int i = 0; i < tab_.nq; ++i) {
      const double q = tab_.q_lo + i * dq;
      tab_.sigma[i] = total_cross_section(model_, ctx_, q);
      tab_.ref[i] = amplitude_angle(model_, ctx_, q, 1.0).real();
      for (int j = 0; j < tab_.nu; ++j) {
        const double u = -1.0 + j * tab_.du;
        tab_.K[static_cast<std::size_t>(i) * tab_.nu + j] =
            angular_integrals(model_, ctx_, q, u, D_, n_c, n_phi).K;
      }
    }
    tables_ = true;
  }

  void lookup(double q, double u, std::complex<double>& K, double& sigma, double& refq) const {
    const double dq = (tab_.q_hi - tab_.q_lo) / (tab_.nq - 1);
    double tq = (std::clamp(q, tab_.q_lo, tab_.q_hi) - tab_.q_lo) / dq;
    double tu = (std::clamp(u, -1.0, 1.0) + 1.0) / tab_.du;
    int iq = std::clamp(static_cast<int>(tq), 1, tab_.nq - 3);
    int iu = std::clamp(static_cast<int>(tu), 1, tab_.nu - 3);
    const double fq = tq - iq, fu = tu - iu;

    auto interp_row = [&](int row, auto&& get) {
      const double c0 = KernelTables::catmull(get(row, iu - 1), get(row, iu), get(row, iu + 1),
                                              get(row, iu + 2), fu);
      return c0;
    };
    auto kre = [&](int i, int j) { return tab_.K[static_cast<std::size_t>(i) * tab_.nu + j].real(); };
    auto kim = [&](int i, int j) { return tab_.K[static_cast<std::size_t>(i) * tab_.nu + j].imag(); };
    double re[4], im[4];
    for (int d = -1; d <= 2; ++d) {
      re[d + 1] = interp_row(iq + d, kre);
      im[d + 1] = interp_row(iq + d, kim);
    }
    K = {KernelTables::catmull(re[0], re[1], re[2], re[3], fq),
         KernelTables::catmull(im[0], im[1], im[2], im[3], fq)};
    sigma = KernelTables::catmull(tab_.sigma[iq - 1], tab_.sigma[iq], tab_.sigma[iq + 1],
                                  tab_.sigma[iq + 2], fq);
    refq = KernelTables::catmull(tab_.ref[iq - 1], tab_.ref[iq], tab_.ref[iq + 1],
                                 tab_.ref[iq + 2], fq);
  }

  const PacketSplit& split_;
  const AmplitudeModel& model_;
  AmplitudeContext ctx_;
  Vec3 R1_, R2_, Rbar_, dR_, dR_hat_;
  double D_;
  bool tables_ = false;
  KernelTables tab_;
};

}  // namespace

std::complex<double> single_packet_kernel(const PacketSplit& split, const AmplitudeModel& model,
                                          const AmplitudeContext& ctx, const Vec3& r_o,
                                          const Vec3& p_o, const Vec3& R1, const Vec3& R2,
                                          std::vector<std::string>* warnings) {
  validate(model);
  if (!r_o.finite() || !p_o.finite() || !R1.finite() || !R2.finite())
    throw ValidationError("single_packet_kernel: arguments must be finite");
  if (!(p_o.norm() > 0.0)) throw ValidationError("single_packet_kernel: |p_o| > 0 required");
  if (warnings && p_o.norm() < 5.0 * split.b)
    warnings->push_back("single_packet_kernel: |p_o| < 5 b, packet momentum spread is not small");
  const PacketKernelEngine engine(split, model, ctx, R1, R2, /*tabulate=*/false);
  return engine.eval(r_o, p_o);
}

std::complex<double> strong_condition_delta_rho(const PacketSplit& split,
                                                const AmplitudeModel& model,
                                                const AmplitudeContext& ctx, const Vec3& r_o,
                                                const Vec3& p_o, const Vec3& R1, const Vec3& R2) {
  validate(model);
  const Vec3 dR = R1 - R2;
  if (dR.norm() > 0.1 * split.a)
    throw DomainError("strong_condition_delta_rho: |R1-R2| must be <= 0.1 a");
  const double p = p_o.norm();
  if (!(p > 0.0)) throw ValidationError("strong_condition_delta_rho: |p_o| > 0 required");
  const Vec3 rbar = (R1 + R2) * 0.5;
  const double gamma = gamma_profile(split, p_o / p, r_o - rbar);
  const double sigma = total_cross_section(model, ctx, p);
  const std::complex<double> one_minus_eta =
      1.0 - per_collision_decoherence(model, ctx, p_o, dR);
  return -gamma * sigma * one_minus_eta;
}

McEstimate mc_rate(const BathSpec& bath, const PacketSplit& split, const AmplitudeModel& model,
                   const Vec3& R1, const Vec3& R2, const McConfig& mc) {
  validate(model);
  if (mc.samples < 1000) throw ValidationError("mc_rate: samples must be >= 1000");
  const double D = (R1 - R2).norm();
  const double a = split.a, b = split.b;
  const double v_wp = split.v_wp;

  McEstimate est;
  est.samples_used = mc.samples;
  if (bath.density == 0.0) return est;

  const double dt = mc.delta_t > 0.0 ? mc.delta_t : 40.0 * std::max(a, D) / v_wp;
  const double W = mc.transverse_window > 0.0 ? mc.transverse_window : 6.0 * a + D;
  if (dt * v_wp < 10.0 * a || (D > 0.0 && dt * v_wp < 10.0 * D))
    throw ValidationError("mc_rate: delta_t too small for the coarse-graining conditions");
  if (W < 6.0 * a + D)
    throw ValidationError("mc_rate: transverse window must cover 6 a + |R1-R2|");

  // Assumption check: Tbar should stay well below (|R1-R2|/lambda) T.
  const double lambda = thermal_wavelength_of(bath.units.hbar, bath.beta, bath.mass);
  if (D > 0.0 && split.t_bar > 0.1 * (D / lambda) * bath.temperature)
    est.warnings.push_back("mc_rate: Tbar exceeds 0.1 (|R1-R2|/lambda) T; packet-width "
                           "corrections may not be negligible");

  const AmplitudeContext ctx = amplitude_context(bath);
  const double p_sigma = std::sqrt(bath.mass * bath.units.boltzmann * split.t_hat);
  const double q_hi = 8.0 * std::sqrt(3.0) * p_sigma + 6.0 * b;
  const PacketKernelEngine engine(split, model, ctx, R1, R2, /*tabulate=*/true, q_hi);

  // Transverse truncation correction: analytic window mass of Gamma.
  const double win_mass = std::pow(std::erf(W / (2.0 * a)), 2);

  const Vec3 rbar = (R1 + R2) * 0.5;
  const double hbar = bath.units.hbar;
  const double n = bath.density;

  struct ChunkStat {
    double sum = 0.0, sumsq = 0.0, excl = 0.0, worst = 0.0;
    long slow = 0;
  };
  const int chunk = 4096;
  const int nchunks = (mc.samples + chunk - 1) / chunk;

  auto run_chunk = [&](std::size_t ci) -> ChunkStat {
    ChunkStat st;
    const int lo = static_cast<int>(ci) * chunk;
    const int hi = std::min(mc.samples, lo + chunk);
    for (int s = lo; s < hi; ++s) {
      CounterRng rng(mc.seed, static_cast<std::uint64_t>(s));
      const Vec3 p = rng.next_gauss3(p_sigma);
      const double pn = p.norm();
      if (!(pn > 0.0)) continue;
      if (pn < 5.0 * b) ++st.slow;
      st.worst = std::max(st.worst, b * b * D / (hbar * pn));

      const double L = (pn / bath.mass) * dt;
      // Packets starting within 5a of the sites are already interacting; the
      // kernel does not depend on the coordinate along the slab, so their
      // volume share is reassigned to the sampled segment. Capped at half the
      // slab so slow packets keep a sampling region.
      const double s_min = std::min(5.0 * a, 0.5 * L);
      st.excl += s_min / L;

      const Vec3 p_hat = p / pn;
      Vec3 e1, e2;
      transverse_frame(p_hat, e1, e2);
      const double along = rng.next_uniform(s_min, L);
      const double xi = rng.next_uniform(-0.5 * W, 0.5 * W);
      const double zeta = rng.next_uniform(-0.5 * W, 0.5 * W);
      const Vec3 r_o = rbar - along * p_hat + xi * e1 + zeta * e2;

      const double vol = (pn / bath.mass) * dt * W * W;
      const double kern = engine.eval(r_o, p).real();
      const double v = -n * vol * kern / (dt * win_mass);
      st.sum += v;
      st.sumsq += v * v;
    }
    return st;
  };

  const auto stats = parallel_map<ChunkStat>(nchunks, run_chunk);
  double sum = 0.0, sumsq = 0.0, excl = 0.0, worst = 0.0;
  long slow = 0;
  for (const auto& st : stats) {
    sum += st.sum;
    sumsq += st.sumsq;
    excl += st.excl;
    worst = std::max(worst, st.worst);
    slow += st.slow;
  }

  const double N = mc.samples;
  est.value = sum / N;
  const double var = std::max(0.0, (sumsq - N * est.value * est.value) / (N - 1.0));
  est.stderr_ = std::sqrt(var / N);
  est.excluded_fraction = excl / N;
  est.worst_neglect = worst;
  est.slow_fraction = static_cast<double>(slow) / N;
  if (est.stderr_ > 0.5 * std::abs(est.value) && est.value != 0.0)
    est.warnings.push_back("mc_rate: standard error exceeds 50% of the estimate");
  return est;
}

// ---------------------------------------------------------------------------
// Reduced integrals of Appendix-style form, for arbitrary Gaussian-class u.
// ---------------------------------------------------------------------------

std::complex<double> reduced_integral_i2(const MomentumBilinear& u, const AmplitudeModel& model,
                                         const AmplitudeContext& ctx, const Vec3& R,
                                         const I2Spec& spec) {
  validate(model);
  const auto& ghq = gauss_hermite(spec.gh_q);
  const auto& ghd = gauss_hermite(spec.gh_delta);
  const auto& crule = gauss_legendre(spec.n_cos);
  const double dphi = 2.0 * kPi / spec.n_phi;
  const double hbar = ctx.hbar;

  // q = q_center + q_width t (3-D), Delta = delta_width (t1 f1 + t2 f2) in the
  // plane perpendicular to qhat; Gauss-Hermite weights are divided back out,
  // so u only needs to decay on the stated scales.
  const double wq = spec.q_width, wd = spec.delta_width;
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < ghq.size(); ++i)
    for (std::size_t j = 0; j < ghq.size(); ++j)
      for (std::size_t k = 0; k < ghq.size(); ++k) {
        const Vec3 t{ghq.nodes[i], ghq.nodes[j], ghq.nodes[k]};
        const Vec3 q = spec.q_center + wq * t;
        const double qn = q.norm();
        if (!(qn > 0.0)) continue;
        const Vec3 q_hat = q / qn;
        Vec3 f1, f2;
        transverse_frame(q_hat, f1, f2);
        const double wtq = ghq.weights[i] * ghq.weights[j] * ghq.weights[k] *
                           std::exp(t.norm2()) * wq * wq * wq;

        for (std::size_t di = 0; di < ghd.size(); ++di)
          for (std::size_t dj = 0; dj < ghd.size(); ++dj) {
            const double t1 = ghd.nodes[di], t2 = ghd.nodes[dj];
            const Vec3 delta = wd * (t1 * f1 + t2 * f2);
            const double wtd =
                ghd.weights[di] * ghd.weights[dj] * std::exp(t1 * t1 + t2 * t2) * wd * wd;
            const std::complex<double> uval = u(q - delta * 0.5, q + delta * 0.5);
            if (uval == std::complex<double>(0.0, 0.0)) continue;

            const double Q = std::sqrt(qn * qn + 0.25 * delta.norm2());
            const Vec3 qp = q + delta * 0.5;
            const Vec3 qm = q - delta * 0.5;
            // direction integral of e^{i Q n . R / hbar} M2(q, n, Delta)
            std::complex<double> dir = 0.0;
            for (std::size_t ci = 0; ci < crule.size(); ++ci) {
              const double c = crule.nodes[ci];
              const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
              for (int m = 0; m < spec.n_phi; ++m) {
                const Vec3 n_hat = c * q_hat + sn * (std::cos(m * dphi) * f1 +
                                                     std::sin(m * dphi) * f2);
                const double ph = Q * n_hat.dot(R) / hbar;
                const double cp = std::clamp(n_hat.dot(qp) / Q, -1.0, 1.0);
                const double cm = std::clamp(n_hat.dot(qm) / Q, -1.0, 1.0);
                const std::complex<double> m2 =
                    std::conj(amplitude_angle(model, ctx, Q, cp)) *
                    amplitude_angle(model, ctx, Q, cm);
                dir += crule.weights[ci] * dphi *
                       std::complex<double>(std::cos(ph), std::sin(ph)) * m2;
              }
            }
            dir *= (Q / qn) / (4.0 * kPi * kPi * hbar * hbar);
            acc += wtq * wtd * uval * dir;
          }
      }
  return acc;
}

std::complex<double> reduced_integral_i1(const MomentumBilinear& u, const AmplitudeModel& model,
                                         const AmplitudeContext& ctx, const I2Spec& spec) {
  validate(model);
  const auto& ghq = gauss_hermite(spec.gh_q);
  const auto& ghd = gauss_hermite(spec.gh_delta);
  const double wq = spec.q_width, wd = spec.delta_width;

  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < ghq.size(); ++i)
    for (std::size_t j = 0; j < ghq.size(); ++j)
      for (std::size_t k = 0; k < ghq.size(); ++k) {
        const Vec3 t{ghq.nodes[i], ghq.nodes[j], ghq.nodes[k]};
        const Vec3 q = spec.q_center + wq * t;
        const double qn = q.norm();
        if (!(qn > 0.0)) continue;
        const Vec3 q_hat = q / qn;
        Vec3 f1, f2;
        transverse_frame(q_hat, f1, f2);
        const double wtq = ghq.weights[i] * ghq.weights[j] * ghq.weights[k] *
                           std::exp(t.norm2()) * wq * wq * wq;
        for (std::size_t di = 0; di < ghd.size(); ++di)
          for (std::size_t dj = 0; dj < ghd.size(); ++dj) {
            const Vec3 delta = wd * (ghd.nodes[di] * f1 + ghd.nodes[dj] * f2);
            const double wtd = ghd.weights[di] * ghd.weights[dj] *
                               std::exp(ghd.nodes[di] * ghd.nodes[di] +
                                        ghd.nodes[dj] * ghd.nodes[dj]) *
                               wd * wd;
            const std::complex<double> uval = u(q - delta * 0.5, q + delta * 0.5);
            if (uval == std::complex<double>(0.0, 0.0)) continue;
            acc += wtq * wtd * uval * m_kernels(model, ctx, q, delta, q_hat).m1;
          }
      }
  return acc;
}

}  // namespace decoh
