// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1 and 11 drive the CLI binary (path via --cli).

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "decoh/core.hpp"
#include "decoh/evolution.hpp"
#include "decoh/quadrature.hpp"
#include "decoh/rate.hpp"
#include "decoh/selfcheck.hpp"
#include "decoh/thermal.hpp"
#include "decoh/wavepacket_mc.hpp"
#include "decoh/weak_coupling.hpp"

namespace {

using namespace decoh;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

std::string g_cli;
int g_failures = 0;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void criterion(int id, const std::string& name, double time_limit_s,
               const std::function<std::pair<bool, std::string>()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    auto [pass, d] = fn();
    ok = pass;
    detail = d;
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > time_limit_s) {
    ok = false;
    detail += " [exceeded " + fmt(time_limit_s) + " s budget]";
  }
  if (!ok) ++g_failures;
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << "criterion " << id << " (" << name << "): "
            << detail << " (" << fmt(secs) << " s)\n";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = g_cli + " " + args + " >" + log.string() + " 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<double> csv_route_values(const std::string& body, const std::string& route) {
  std::vector<double> vals;
  std::istringstream is(body);
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() >= 4 && cells[3] == route)
      vals.push_back(std::stod(cells[1]));
  }
  return vals;
}

double min_eig(const DensityMatrixGrid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = g.at(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() * g.spacing();
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli = argv[i + 1];
  if (g_cli.empty()) {
    std::cerr << "usage: acceptance --cli <path-to-decoh-binary>\n";
    return 2;
  }

  const fs::path work = fs::temp_directory_path() / "decoh_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const UnitSystem units;
  const BathSpec bath = make_bath(1.0, 1.0, 0.01, units);
  const AmplitudeContext ctx = amplitude_context(bath);
  const AmplitudeModel constant = ConstantSWave{1.0};
  const double Rscale = units.hbar / bath.q_thermal();
  QuadratureSpec quad;

  criterion(1, "epsilon factor via compare-routes", 10.0, [&]() {
    const std::string base =
        " --set grid.count=8 --set grid.min=0.25 --set grid.max=6 --set quad.refine_tol=1e-6";
    if (run_cli("compare-routes --epsilon corrected --out " + (work / "eps_c").string() + base,
                work / "eps_c.log") != 0)
      return std::pair<bool, std::string>(false, "corrected run failed");
    if (run_cli("compare-routes --epsilon gallis-fleming --out " + (work / "eps_g").string() +
                    base,
                work / "eps_g.log") != 0)
      return std::pair<bool, std::string>(false, "gallis-fleming run failed");
    const auto vc = csv_route_values(slurp(work / "eps_c" / "compare-routes.csv"), "general");
    const auto vg = csv_route_values(slurp(work / "eps_g" / "compare-routes.csv"), "general");
    if (vc.size() != vg.size() || vc.empty())
      return std::pair<bool, std::string>(false, "csv mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < vc.size(); ++i)
      worst = std::max(worst, std::abs(vg[i] / vc[i] - 2.0 * kPi) / (2.0 * kPi));
    return std::pair<bool, std::string>(worst <= 1e-12,
                                        "max pointwise ratio deviation " + fmt(worst));
  });

  // hard-sphere geometry with q_th R_s / hbar = 1
  const BathSpec bath_hs = make_bath(1.0, 0.5, 0.01, units);
  const AmplitudeModel hs = HardSphere{1.0, kAutoLmax};
  const std::vector<double> grid_t = {0.1, 0.5, 1.0, 2.0, 4.0, 7.0, 10.0, 13.0, 16.0, 20.0};

  criterion(2, "route equivalence, general vs replacement", 60.0, [&]() {
    QuadratureSpec q8 = quad;
    q8.refine_tol = 1e-8;
    const double fsat = saturation_rate(bath_hs, hs, q8);
    double worst = 0.0;
    for (double t : grid_t) {
      const Vec3 R{0, 0, t * units.hbar / bath_hs.q_thermal()};
      const double fg = rate_general(bath_hs, hs, R, q8, EpsilonMode::Corrected);
      const double fr = rate_via_replacement(bath_hs, hs, R, q8);
      worst = std::max(worst, std::abs(fg - fr) / fsat);
    }
    return std::pair<bool, std::string>(worst <= 1e-6,
                                        "max |general-replacement|/F_sat " + fmt(worst));
  });

  criterion(3, "route equivalence, Born general vs weak coupling", 120.0, [&]() {
    const PotentialModel pot = GaussianPotential{0.05, 1.0};
    const AmplitudeModel born = BornPotential{pot};
    double worst = 0.0;
    for (double t : grid_t) {
      const Vec3 R{0, 0, t * units.hbar / bath_hs.q_thermal()};
      const double fg = rate_general(bath_hs, born, R, quad, EpsilonMode::Corrected);
      const double fw = rate_weak_coupling(bath_hs, pot, R, quad);
      worst = std::max(worst, std::abs(fg - fw) / std::max({fg, fw, 1e-300}));
    }
    return std::pair<bool, std::string>(worst <= 1e-3, "max relative difference " + fmt(worst));
  });

  criterion(4, "Monte Carlo verification", 300.0, [&]() {
    const auto split = split_bath(bath, 0.01);
    McConfig mc;
    mc.samples = 100000;
    double worst_z = 0.0, worst_err = 0.0;
    for (double t : {0.5, 1.0, 2.0}) {
      const Vec3 R1{0, 0, 0.5 * t * Rscale}, R2{0, 0, -0.5 * t * Rscale};
      const auto est = mc_rate(bath, split, constant, R1, R2, mc);
      const double fg = rate_general(bath, constant, R1 - R2, quad, EpsilonMode::Corrected);
      worst_z = std::max(worst_z, std::abs(est.value - fg) / est.stderr_);
      worst_err = std::max(worst_err, est.stderr_ / est.value);
    }
    const bool ok = worst_z <= 3.0 && worst_err <= 0.10;
    return std::pair<bool, std::string>(ok, "max |z| " + fmt(worst_z) + ", max stderr/value " +
                                                fmt(worst_err));
  });

  criterion(5, "Gbar closed form vs tail integral", 5.0, [&]() {
    const GbarSpec spec{bath, GaussianPotential{0.05, 1.0}};
    const double qth = bath.q_thermal();
    const double w0 = qth * qth / (2.0 * bath.mass * units.hbar);
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double q = (0.2 + 3.8 * i / 4.0) * qth;
        const double w = 3.0 * w0 * j / 4.0;
        const double gc = gbar_closed(spec, q, w);
        const double gi = gbar_integral(spec, q, w);
        worst = std::max(worst, std::abs(gc - gi) / std::max(gc, gi));
      }
    return std::pair<bool, std::string>(worst <= 1e-9, "max relative difference " + fmt(worst));
  });

  criterion(6, "hard-sphere optical theorem", 5.0, [&]() {
    double worst = 0.0;
    for (double x : {0.1, 1.0, 5.0})
      worst = std::max(worst, optical_theorem_residual(hs, AmplitudeContext{1.0, 1.0}, x));
    return std::pair<bool, std::string>(worst <= 1e-8, "max residual " + fmt(worst));
  });

  criterion(7, "transverse Fourier identity", 10.0, [&]() {
    const auto split = split_bath(bath, 0.01);
    const Vec3 qh = Vec3{0.2, -0.3, 0.93}.normalized();
    const Vec3 e1 = qh.cross(Vec3{0, 0, 1}).normalized();
    double worst = 0.0;
    for (int k = 0; k <= 10; ++k)
      worst = std::max(worst, gamma_fourier_residual(split, qh, e1 * (0.5 * k * split.a)));
    return std::pair<bool, std::string>(worst <= 1e-6, "max residual " + fmt(worst));
  });

  criterion(8, "limits: F(0), saturation, eta", 60.0, [&]() {
    const double f0 = rate_general(bath, constant, {0, 0, 0}, quad, EpsilonMode::Corrected);
    const double fsat = saturation_rate(bath, constant, quad);
    const double ffar =
        rate_general(bath, constant, {0, 0, 100.0 * Rscale}, quad, EpsilonMode::Corrected);
    const double sat_dev = std::abs(ffar / fsat - 1.0);
    const auto eta0 = per_collision_decoherence(constant, ctx, {0, 0, 1.3}, {0, 0, 0});
    // hard sphere, q R_s/hbar = 5, |R| = 50 hbar/q perpendicular to p
    const auto eta_far =
        per_collision_decoherence(hs, AmplitudeContext{1.0, 1.0}, {0, 0, 5.0}, {10.0, 0, 0});
    const bool ok = f0 == 0.0 && sat_dev <= 5e-3 &&
                    eta0 == std::complex<double>(1.0, 0.0) && std::abs(eta_far) <= 0.05;
    return std::pair<bool, std::string>(
        ok, "F(0)=" + fmt(f0) + ", saturation dev " + fmt(sat_dev) + ", eta(0)=" +
                fmt(std::abs(eta0)) + ", |eta|@50/q " + fmt(std::abs(eta_far)));
  });

  criterion(9, "evolution invariants", 10.0, [&]() {
    QuadratureSpec q8 = quad;
    const double fsat = saturation_rate(bath, constant, q8);
    auto rate_fn = [&](const Vec3& R) {
      return rate_general(bath, constant, R, q8, EpsilonMode::Corrected);
    };
    const int n = 64;
    const double extent = 10.0 * Rscale, sep = 4.0 * Rscale, width = 0.8 * Rscale;
    std::vector<double> pos(n);
    for (int i = 0; i < n; ++i) pos[i] = -extent + 2.0 * extent * i / (n - 1);
    std::vector<std::complex<double>> phi(n);
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = pos[i];
      phi[i] = std::exp(-(x - 0.5 * sep) * (x - 0.5 * sep) / (2.0 * width * width)) +
               std::exp(-(x + 0.5 * sep) * (x + 0.5 * sep) / (2.0 * width * width));
      nrm += std::norm(phi[i]);
    }
    nrm *= 2.0 * extent / (n - 1);
    std::vector<std::complex<double>> rho(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        rho[static_cast<std::size_t>(i) * n + j] = phi[i] * std::conj(phi[j]) / nrm;
    const auto g0 = make_density_grid({0, 0, 1}, pos, rho);

    const double t1 = 0.4 / fsat, t2 = 0.9 / fsat;
    const auto g12 = evolve(evolve(g0, rate_fn, t1), rate_fn, t2);
    const auto g2 = evolve(g0, rate_fn, t1 + t2);
    double semi = 0.0, scale = 0.0, herm = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < g0.size(); ++i)
      for (std::size_t j = 0; j < g0.size(); ++j) {
        semi = std::max(semi, std::abs(g12.at(i, j) - g2.at(i, j)));
        scale = std::max(scale, std::abs(g0.at(i, j)));
        herm = std::max(herm, std::abs(g2.at(i, j) - std::conj(g2.at(j, i))));
        if (i == j) diag = std::max(diag, std::abs(g2.at(i, i) - g0.at(i, i)));
      }
    const double trace_dev = std::abs(g2.trace() / g0.trace() - 1.0);

    std::size_t bi = 0, bj = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < g0.size(); ++i)
      for (std::size_t j = 0; j < g0.size(); ++j)
        if (std::abs(std::abs(pos[i] - pos[j]) - sep) < 0.3 * Rscale &&
            std::abs(g0.at(i, j)) > best) {
          best = std::abs(g0.at(i, j));
          bi = i;
          bj = j;
        }
    const double d = std::abs(pos[bi] - pos[bj]);
    const double decay_dev = std::abs(std::abs(g2.at(bi, bj)) / std::abs(g0.at(bi, bj)) /
                                          std::exp(-rate_fn({0, 0, d}) * (t1 + t2)) -
                                      1.0);
    const double me = min_eig(g2);
    const bool ok = semi <= 1e-12 * scale && herm <= 1e-12 * scale && diag <= 1e-14 &&
                    trace_dev <= 1e-12 && decay_dev <= 1e-10 && me >= -1e-10 * g2.trace();
    return std::pair<bool, std::string>(
        ok, "semigroup " + fmt(semi / scale) + ", trace dev " + fmt(trace_dev) + ", decay dev " +
                fmt(decay_dev) + ", min eig/trace " + fmt(me / g2.trace()));
  });

  criterion(10, "reduced collision integral vs smeared-delta Monte Carlo", 600.0, [&]() {
    const auto split = split_bath(bath, 0.01);
    const double b = split.b;
    const Vec3 p_o{0, 0, 6.0 * b};
    const Vec3 r_o{0.5 * split.a, 0, 0};
    const Vec3 R{0, 0, 0.4 * units.hbar / p_o.norm()};
    auto u = [&](const Vec3& qa, const Vec3& qb) -> std::complex<double> {
      const Vec3 qm = (qa + qb) * 0.5;
      const Vec3 dl = qb - qa;
      const double ph = dl.dot(r_o) / units.hbar;
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

    auto fit0 = [&](auto part) {
      double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
      for (const auto& pt : pts) {
        const double w = 1.0 / (pt.stderr_ * pt.stderr_);
        const double x = pt.s * pt.s, y = part(pt.value);
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
      }
      const double det = sw * swxx - swx * swx;
      return std::pair<double, double>((swxx * swy - swx * swxy) / det, std::sqrt(swxx / det));
    };
    const auto [re0, rerr] = fit0([](std::complex<double> v) { return v.real(); });
    const auto [im0, ierr] = fit0([](std::complex<double> v) { return v.imag(); });
    const double zre = std::abs(re0 - i2.real()) / rerr;
    const double zim = std::abs(im0 - i2.imag()) / ierr;
    const bool ok = zre <= 3.0 && zim <= 3.0;
    return std::pair<bool, std::string>(
        ok, "Richardson-extrapolated z-scores: re " + fmt(zre) + ", im " + fmt(zim));
  });

  criterion(11, "byte-identical mc-verify reruns", 60.0, [&]() {
    const std::string base = " --set mc.samples=20000 --set grid.count=2 --set grid.min=0.5"
                             " --set grid.max=1.5 --set quad.refine_tol=1e-6";
    if (run_cli("mc-verify --out " + (work / "det_a").string() + base, work / "det_a.log") != 0)
      return std::pair<bool, std::string>(false, "first run failed");
    if (run_cli("mc-verify --out " + (work / "det_b").string() + base, work / "det_b.log") != 0)
      return std::pair<bool, std::string>(false, "second run failed");
    const bool ok =
        slurp(work / "det_a" / "mc-verify.csv") == slurp(work / "det_b" / "mc-verify.csv");
    return std::pair<bool, std::string>(ok, ok ? "CSV bytes identical" : "CSV bytes differ");
  });

  std::cout << (g_failures == 0 ? "acceptance: all criteria passed\n"
                                : "acceptance: " + std::to_string(g_failures) + " criteria FAILED\n");
  return g_failures == 0 ? 0 : 1;
}
