// Command-line front end: subcommand dispatch, CSV/manifest output, and the
// selfcheck gate. Exit codes: 0 ok, 1 config error, 2 convergence error,
// 3 selfcheck failure.

#include <chrono>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "decoh/cli_config.hpp"
#include "decoh/core.hpp"
#include "decoh/evolution.hpp"
#include "decoh/parallel.hpp"
#include "decoh/rate.hpp"
#include "decoh/selfcheck.hpp"
#include "decoh/thermal.hpp"
#include "decoh/wavepacket_mc.hpp"
#include "decoh/weak_coupling.hpp"

namespace {

using decoh::format_g17;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct Outputs {
  json manifest;
  std::vector<std::string> warnings;
};

std::filesystem::path out_path(const decoh::RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw decoh::ConfigError("cannot write output file '" + path.string() + "'");
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_manifest(const decoh::RunConfig& cfg, const std::string& subcommand, Outputs& o,
                    double wall_seconds) {
  o.manifest["tool"] = "decoh";
  o.manifest["version"] = kVersion;
  o.manifest["subcommand"] = subcommand;
  o.manifest["seed"] = cfg.mc_seed;
  o.manifest["wall_time_seconds"] = wall_seconds;
  o.manifest["warnings"] = o.warnings;
  json cat = json::object();
  for (const auto& [k, v] : decoh::config_echo(cfg)) cat[k] = v;
  o.manifest["config"] = cat;
  std::ofstream out(out_path(cfg, subcommand + ".manifest.json"), std::ios::binary);
  out << o.manifest.dump(2) << "\n";
}

std::string signed_coord(const decoh::Vec3& R, const decoh::Vec3& axis) {
  return format_g17(R.dot(axis));
}

int cmd_rate_curve(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  const auto bath = decoh::config_bath(cfg);
  const auto model = decoh::config_model(cfg);
  const auto eps = decoh::config_epsilon(cfg);
  const auto grid = decoh::config_grid(cfg, bath);
  const auto axis = decoh::config_axis(cfg);

  decoh::Route route;
  if (cfg.rate_route == "general") route = decoh::Route::General;
  else if (cfg.rate_route == "replacement") route = decoh::Route::Replacement;
  else if (cfg.rate_route == "weak-coupling") route = decoh::Route::WeakCoupling;
  else throw decoh::ConfigError("rate.route must be general, replacement or weak-coupling");

  decoh::DecoherenceCurve curve;
  curve.route = route;
  curve.epsilon = eps;
  curve.metadata.qth_over_hbar = bath.q_thermal() / bath.units.hbar;
  for (const auto& R : grid) {
    double F = 0.0;
    switch (route) {
      case decoh::Route::General: F = rate_general(bath, model, R, cfg.quad, eps); break;
      case decoh::Route::Replacement: F = rate_via_replacement(bath, model, R, cfg.quad); break;
      case decoh::Route::WeakCoupling:
        F = rate_weak_coupling(bath, decoh::config_potential(cfg), R, cfg.quad);
        break;
      default: break;
    }
    curve.separations.push_back(R);
    curve.values.push_back(F);
  }
  decoh::validate_curve(curve, cfg.quad.refine_tol);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i)
    rows.push_back({signed_coord(grid[i], axis), format_g17(curve.values[i]), "",
                    decoh::route_name(route), decoh::epsilon_name(eps)});
  write_csv(out_path(cfg, "rate-curve.csv"), "R,F,stderr,route,epsilon", rows);

  if (bath.degeneracy_flag)
    o.warnings.push_back("bath diluteness n lambda^3 >= 0.1; low-density assumption strained");
  o.manifest["saturation_rate"] =
      format_g17(decoh::saturation_rate(bath, model, cfg.quad));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "rate-curve", o, wall);
  std::cout << "rate-curve: " << grid.size() << " separations via " << decoh::route_name(route)
            << " -> " << out_path(cfg, "rate-curve.csv").string() << "\n";
  return 0;
}

int cmd_compare_routes(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  const auto bath = decoh::config_bath(cfg);
  const auto model = decoh::config_model(cfg);
  const auto eps = decoh::config_epsilon(cfg);
  const auto grid = decoh::config_grid(cfg, bath);
  const auto axis = decoh::config_axis(cfg);
  const bool has_potential =
      cfg.model_kind == "born-gaussian" || cfg.model_kind == "born-yukawa";

  if (has_potential) {
    const double strength = decoh::born_strength(decoh::config_potential(cfg), bath);
    if (strength > 0.3)
      o.warnings.push_back("Born strength " + format_g17(strength) +
                           " > 0.3; weak-coupling comparison outside the perturbative regime");
  }

  std::vector<std::vector<std::string>> rows;
  double max_rel_repl = 0.0, max_rel_weak = 0.0, fsat = 0.0;
  fsat = decoh::saturation_rate(bath, model, cfg.quad);
  for (const auto& R : grid) {
    const double fg = rate_general(bath, model, R, cfg.quad, eps);
    const double fr = rate_via_replacement(bath, model, R, cfg.quad);
    rows.push_back({signed_coord(R, axis), format_g17(fg), "", "general",
                    decoh::epsilon_name(eps)});
    rows.push_back({signed_coord(R, axis), format_g17(fr), "", "replacement",
                    decoh::epsilon_name(decoh::EpsilonMode::Corrected)});
    max_rel_repl = std::max(
        max_rel_repl, std::abs(fg / decoh::epsilon_multiplier(eps) - fr) / std::max(fsat, 1e-300));
    if (has_potential) {
      const double fw = rate_weak_coupling(bath, decoh::config_potential(cfg), R, cfg.quad);
      rows.push_back({signed_coord(R, axis), format_g17(fw), "", "weak-coupling",
                      decoh::epsilon_name(decoh::EpsilonMode::Corrected)});
      const double s = std::max({fg / decoh::epsilon_multiplier(eps), fw, 1e-300});
      max_rel_weak = std::max(max_rel_weak,
                              std::abs(fg / decoh::epsilon_multiplier(eps) - fw) / s);
    }
  }
  write_csv(out_path(cfg, "compare-routes.csv"), "R,F,stderr,route,epsilon", rows);
  o.manifest["max_rel_diff_general_vs_replacement_over_fsat"] = format_g17(max_rel_repl);
  if (has_potential)
    o.manifest["max_rel_diff_general_vs_weak_coupling"] = format_g17(max_rel_weak);
  o.manifest["epsilon_multiplier"] = format_g17(decoh::epsilon_multiplier(eps));

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "compare-routes", o, wall);
  std::cout << "compare-routes: max |general-replacement|/F_sat = " << format_g17(max_rel_repl);
  if (has_potential) std::cout << ", max rel general-vs-weak = " << format_g17(max_rel_weak);
  std::cout << "\n";
  return 0;
}

int cmd_eta(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  const auto bath = decoh::config_bath(cfg);
  const auto model = decoh::config_model(cfg);
  const auto ctx = decoh::amplitude_context(bath);
  const auto grid = decoh::config_grid(cfg, bath);
  const auto axis = decoh::config_axis(cfg);

  const double p_mag = cfg.eta_p > 0.0 ? cfg.eta_p : bath.q_thermal();
  decoh::Vec3 p_dir;
  if (cfg.eta_direction == "parallel") p_dir = axis;
  else if (cfg.eta_direction == "perpendicular")
    p_dir = std::abs(axis.z) < 0.9 ? axis.cross(decoh::Vec3{0, 0, 1}).normalized()
                                   : axis.cross(decoh::Vec3{1, 0, 0}).normalized();
  else throw decoh::ConfigError("eta.direction must be 'parallel' or 'perpendicular'");
  const decoh::Vec3 p = p_dir * p_mag;

  std::vector<std::vector<std::string>> rows;
  for (const auto& R : grid) {
    const auto eta = decoh::per_collision_decoherence(model, ctx, p, R);
    rows.push_back({signed_coord(R, axis), format_g17(eta.real()), format_g17(eta.imag()),
                    format_g17(std::abs(eta))});
  }
  write_csv(out_path(cfg, "eta.csv"), "R,eta_re,eta_im,abs_eta", rows);
  o.manifest["p"] = format_g17(p_mag);
  o.manifest["direction"] = cfg.eta_direction;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "eta", o, wall);
  std::cout << "eta: " << grid.size() << " separations at p = " << format_g17(p_mag) << "\n";
  return 0;
}

int cmd_gbar(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  const auto bath = decoh::config_bath(cfg);
  const decoh::GbarSpec spec{bath, decoh::config_potential(cfg)};
  const double qth = bath.q_thermal();
  const double w0 = qth * qth / (2.0 * bath.mass * bath.units.hbar);

  std::vector<std::vector<std::string>> rows;
  double worst = 0.0;
  for (int i = 0; i < cfg.gbar_nq; ++i) {
    const double q =
        (cfg.gbar_qlo + (cfg.gbar_qhi - cfg.gbar_qlo) * (cfg.gbar_nq == 1 ? 0.0 : double(i) / (cfg.gbar_nq - 1))) * qth;
    for (int j = 0; j < cfg.gbar_nomega; ++j) {
      const double w = cfg.gbar_omega_hi * w0 * (cfg.gbar_nomega == 1 ? 0.0 : double(j) / (cfg.gbar_nomega - 1));
      const double gc = decoh::gbar_closed(spec, q, w);
      const double gi = decoh::gbar_integral(spec, q, w);
      const double rel = std::abs(gc - gi) / std::max({gc, gi, 1e-300});
      worst = std::max(worst, rel);
      rows.push_back({format_g17(q), format_g17(w), format_g17(gc), format_g17(gi),
                      format_g17(rel)});
    }
  }
  write_csv(out_path(cfg, "gbar.csv"), "q,omega,gbar_closed,gbar_integral,rel_diff", rows);
  o.manifest["max_rel_diff"] = format_g17(worst);
  o.manifest["golden_rule_window"] = format_g17(decoh::golden_rule_window(bath));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "gbar", o, wall);
  std::cout << "gbar: max closed-vs-integral relative difference " << format_g17(worst) << "\n";
  return 0;
}

int cmd_mc_verify(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  const auto bath = decoh::config_bath(cfg);
  const auto model = decoh::config_model(cfg);
  const auto grid = decoh::config_grid(cfg, bath);
  const auto axis = decoh::config_axis(cfg);
  const auto split = decoh::split_bath(bath, cfg.mc_bar_fraction);
  const auto mc = decoh::config_mc(cfg);

  std::vector<std::vector<std::string>> rows;
  json zs = json::array();
  for (const auto& R : grid) {
    const decoh::Vec3 R1 = R * 0.5, R2 = R * (-0.5);
    const auto est = decoh::mc_rate(bath, split, model, R1, R2, mc);
    const double fg = rate_general(bath, model, R, cfg.quad, decoh::EpsilonMode::Corrected);
    rows.push_back({signed_coord(R, axis), format_g17(est.value), format_g17(est.stderr_),
                    "monte-carlo", "corrected"});
    rows.push_back({signed_coord(R, axis), format_g17(fg), "", "general", "corrected"});
    for (const auto& w : est.warnings) o.warnings.push_back(w);
    json z;
    z["R"] = signed_coord(R, axis);
    z["z"] = est.stderr_ > 0.0 ? format_g17((est.value - fg) / est.stderr_) : "0";
    z["excluded_fraction"] = format_g17(est.excluded_fraction);
    z["worst_neglect"] = format_g17(est.worst_neglect);
    z["slow_fraction"] = format_g17(est.slow_fraction);
    zs.push_back(z);
  }
  write_csv(out_path(cfg, "mc-verify.csv"), "R,F,stderr,route,epsilon", rows);
  o.manifest["z_scores"] = zs;
  o.manifest["samples"] = cfg.mc_samples;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "mc-verify", o, wall);
  std::cout << "mc-verify: " << grid.size() << " separations, " << cfg.mc_samples
            << " samples each\n";
  return 0;
}

int cmd_evolve(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  const auto bath = decoh::config_bath(cfg);
  const auto model = decoh::config_model(cfg);
  const auto eps = decoh::config_epsilon(cfg);
  const auto axis = decoh::config_axis(cfg);
  const double Rscale = bath.units.hbar / bath.q_thermal();

  const int n = cfg.evolve_n;
  if (n < 8) throw decoh::ConfigError("evolve.n must be >= 8");
  const double extent = cfg.evolve_extent > 0.0 ? cfg.evolve_extent : 10.0 * Rscale;
  const double sep = cfg.evolve_packet_sep > 0.0 ? cfg.evolve_packet_sep : 4.0 * Rscale;
  const double width = cfg.evolve_packet_width > 0.0 ? cfg.evolve_packet_width : 0.8 * Rscale;
  const double fsat = decoh::saturation_rate(bath, model, cfg.quad);
  const double total_t = cfg.evolve_time > 0.0 ? cfg.evolve_time : (fsat > 0.0 ? 1.0 / fsat : 1.0);

  // two-Gaussian superposition as the canonical decohering state
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
  nrm *= (pos[1] - pos[0]);
  std::vector<std::complex<double>> rho(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      rho[static_cast<std::size_t>(i) * n + j] = phi[i] * std::conj(phi[j]) / nrm;
  auto g = decoh::make_density_grid(axis, pos, rho);

  auto rate_fn = [&](const decoh::Vec3& R) {
    return rate_general(bath, model, R, cfg.quad, eps);
  };

  const int snaps = std::max(1, cfg.evolve_snapshots);
  json snap_meta = json::array();
  for (int k = 0; k <= snaps; ++k) {
    if (k > 0) g = decoh::evolve(g, rate_fn, total_t / snaps);
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        rows.push_back({std::to_string(i), std::to_string(j), format_g17(pos[i]),
                        format_g17(pos[j]), format_g17(g.at(i, j).real()),
                        format_g17(g.at(i, j).imag())});
    const std::string name = "evolve_t" + std::to_string(k) + ".csv";
    write_csv(out_path(cfg, name), "i,j,Ri,Rj,re,im", rows);
    const auto cl = decoh::coherence_length(g, cfg.evolve_threshold);
    json m;
    m["file"] = name;
    m["time"] = format_g17(g.time);
    m["trace"] = format_g17(g.trace());
    m["coherence_length"] = format_g17(cl.length);
    m["coherence_saturated"] = cl.saturated;
    snap_meta.push_back(m);
  }
  o.manifest["snapshots"] = snap_meta;
  o.manifest["saturation_rate"] = format_g17(fsat);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "evolve", o, wall);
  std::cout << "evolve: " << snaps + 1 << " snapshots over t = " << format_g17(total_t) << "\n";
  return 0;
}

int cmd_selfcheck(const decoh::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Outputs o;
  decoh::CheckTier tier;
  if (cfg.selfcheck_tier == "default") tier = decoh::CheckTier::Default;
  else if (cfg.selfcheck_tier == "extended") tier = decoh::CheckTier::Extended;
  else throw decoh::ConfigError("selfcheck.tier must be 'default' or 'extended'");

  const auto results = decoh::run_selfcheck(tier);
  int failures = 0;
  json checks = json::array();
  for (const auto& r : results) {
    if (!r.pass) ++failures;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " (" << format_g17(r.seconds)
              << " s): " << r.detail << "\n";
    json c;
    c["name"] = r.name;
    c["pass"] = r.pass;
    c["detail"] = r.detail;
    c["seconds"] = r.seconds;
    checks.push_back(c);
  }
  std::cout << (failures == 0 ? "selfcheck: all " : "selfcheck: FAILURES ")
            << results.size() - failures << "/" << results.size() << " checks passed\n";
  o.manifest["checks"] = checks;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, "selfcheck", o, wall);
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collisional decoherence rate calculator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> epsilon;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--threads", threads, "worker thread cap");
  app.add_option("--seed", seed, "Monte Carlo seed override");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--epsilon", epsilon, "corrected | gallis-fleming")
      ->check(CLI::IsMember({"corrected", "gallis-fleming"}));
  app.add_option("--set", sets, "extra key=value overrides (repeatable)");

  auto* sub_rate = app.add_subcommand("rate-curve", "F(R) along one route");
  auto* sub_cmp = app.add_subcommand("compare-routes", "general vs replacement vs weak coupling");
  auto* sub_eta = app.add_subcommand("eta", "per-collision decoherence factor table");
  auto* sub_gbar = app.add_subcommand("gbar", "bath correlation spectrum, closed vs integral");
  auto* sub_mc = app.add_subcommand("mc-verify", "Monte Carlo estimate vs quadrature");
  auto* sub_evo = app.add_subcommand("evolve", "density-matrix snapshots");
  auto* sub_check = app.add_subcommand("selfcheck", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "DECOH-ERROR code=1 kind=usage msg=\"" << e.what() << "\"\n";
    return 1;
  }

  try {
    decoh::RunConfig cfg;
    if (!config_path.empty()) cfg = decoh::parse_config_file(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw decoh::ConfigError("--set expects key=value, got '" + s + "'");
      decoh::apply_config_entry(cfg, s.substr(0, eq), s.substr(eq + 1), 0);
    }
    if (seed) cfg.mc_seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (epsilon) cfg.epsilon = *epsilon;

    int nthreads = cfg.threads;
    if (const char* env = std::getenv("DECOH_THREADS")) nthreads = std::atoi(env);
    if (threads) nthreads = *threads;
    decoh::set_max_threads(nthreads);

    if (sub_rate->parsed()) return cmd_rate_curve(cfg);
    if (sub_cmp->parsed()) return cmd_compare_routes(cfg);
    if (sub_eta->parsed()) return cmd_eta(cfg);
    if (sub_gbar->parsed()) return cmd_gbar(cfg);
    if (sub_mc->parsed()) return cmd_mc_verify(cfg);
    if (sub_evo->parsed()) return cmd_evolve(cfg);
    if (sub_check->parsed()) return cmd_selfcheck(cfg);
    std::cerr << "DECOH-ERROR code=1 kind=usage msg=\"no subcommand\"\n";
    return 1;
  } catch (const decoh::ConfigError& e) {
    std::cerr << "DECOH-ERROR code=1 kind=config line=" << e.line << " msg=\"" << e.what()
              << "\"\n";
    return 1;
  } catch (const decoh::ConvergenceError& e) {
    std::cerr << "DECOH-ERROR code=2 kind=convergence achieved=" << e.achieved_tol << " msg=\""
              << e.what() << "\"\n";
    return 2;
  } catch (const decoh::Error& e) {
    std::cerr << "DECOH-ERROR code=1 kind=validation msg=\"" << e.what() << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "DECOH-ERROR code=1 kind=internal msg=\"" << e.what() << "\"\n";
    return 1;
  }
}
