#include "decoh/cli_config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace decoh {

namespace {

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value '" + v + "' for key '" + key + "'", line);
  }
}

long long parse_int(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return i;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value '" + v + "' for key '" + key + "'", line);
  }
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        int line) {
  auto d = [&] { return parse_double(value, key, line); };
  auto i = [&] { return static_cast<int>(parse_int(value, key, line)); };

  if (key == "bath.mass") cfg.bath_mass = d();
  else if (key == "bath.temperature") cfg.bath_temperature = d();
  else if (key == "bath.density") cfg.bath_density = d();
  else if (key == "units.hbar") cfg.units_hbar = d();
  else if (key == "units.boltzmann") cfg.units_boltzmann = d();
  else if (key == "model.kind") cfg.model_kind = value;
  else if (key == "model.f0") cfg.model_f0 = d();
  else if (key == "model.radius") cfg.model_radius = d();
  else if (key == "model.lmax") cfg.model_lmax = i();
  else if (key == "potential.v0") cfg.potential_v0 = d();
  else if (key == "potential.width") cfg.potential_width = d();
  else if (key == "potential.strength") cfg.potential_strength = d();
  else if (key == "potential.screening") cfg.potential_screening = d();
  else if (key == "epsilon") cfg.epsilon = value;
  else if (key == "rate.route") cfg.rate_route = value;
  else if (key == "grid.min") cfg.grid_min = d();
  else if (key == "grid.max") cfg.grid_max = d();
  else if (key == "grid.count") cfg.grid_count = i();
  else if (key == "grid.axis") cfg.grid_axis = value;
  else if (key == "quad.radial_nodes") cfg.quad.radial_nodes = i();
  else if (key == "quad.qmax_thermal") cfg.quad.radial_qmax_thermal_units = d();
  else if (key == "quad.theta_nodes") cfg.quad.angular_theta_nodes = i();
  else if (key == "quad.phi_nodes") cfg.quad.angular_phi_nodes = i();
  else if (key == "quad.refine_tol") cfg.quad.refine_tol = d();
  else if (key == "mc.seed") cfg.mc_seed = static_cast<std::uint64_t>(parse_int(value, key, line));
  else if (key == "mc.samples") cfg.mc_samples = i();
  else if (key == "mc.delta_t") cfg.mc_delta_t = d();
  else if (key == "mc.window") cfg.mc_window = d();
  else if (key == "mc.bar_fraction") cfg.mc_bar_fraction = d();
  else if (key == "eta.p") cfg.eta_p = d();
  else if (key == "eta.direction") cfg.eta_direction = value;
  else if (key == "gbar.nq") cfg.gbar_nq = i();
  else if (key == "gbar.nomega") cfg.gbar_nomega = i();
  else if (key == "gbar.qlo") cfg.gbar_qlo = d();
  else if (key == "gbar.qhi") cfg.gbar_qhi = d();
  else if (key == "gbar.omega_hi") cfg.gbar_omega_hi = d();
  else if (key == "evolve.n") cfg.evolve_n = i();
  else if (key == "evolve.extent") cfg.evolve_extent = d();
  else if (key == "evolve.time") cfg.evolve_time = d();
  else if (key == "evolve.packet_sep") cfg.evolve_packet_sep = d();
  else if (key == "evolve.packet_width") cfg.evolve_packet_width = d();
  else if (key == "evolve.threshold") cfg.evolve_threshold = d();
  else if (key == "evolve.snapshots") cfg.evolve_snapshots = i();
  else if (key == "selfcheck.tier") cfg.selfcheck_tier = value;
  else if (key == "out.dir") cfg.out_dir = value;
  else if (key == "threads") cfg.threads = i();
  else throw ConfigError("unknown configuration key '" + key + "'", line);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig cfg;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value", line);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    apply_config_entry(cfg, key, value, line);
  }
  return cfg;
}

BathSpec config_bath(const RunConfig& cfg) {
  return make_bath(cfg.bath_mass, cfg.bath_temperature, cfg.bath_density,
                   UnitSystem{cfg.units_hbar, cfg.units_boltzmann});
}

PotentialModel config_potential(const RunConfig& cfg) {
  if (cfg.model_kind == "born-yukawa")
    return YukawaPotential{cfg.potential_strength, cfg.potential_screening};
  return GaussianPotential{cfg.potential_v0, cfg.potential_width};
}

AmplitudeModel config_model(const RunConfig& cfg) {
  if (cfg.model_kind == "constant") return ConstantSWave{cfg.model_f0};
  if (cfg.model_kind == "hard-sphere") return HardSphere{cfg.model_radius, cfg.model_lmax};
  if (cfg.model_kind == "born-gaussian" || cfg.model_kind == "born-yukawa")
    return BornPotential{config_potential(cfg)};
  throw ConfigError("unknown model.kind '" + cfg.model_kind + "'");
}

EpsilonMode config_epsilon(const RunConfig& cfg) {
  if (cfg.epsilon == "corrected") return EpsilonMode::Corrected;
  if (cfg.epsilon == "gallis-fleming") return EpsilonMode::GallisFleming;
  throw ConfigError("epsilon must be 'corrected' or 'gallis-fleming'");
}

McConfig config_mc(const RunConfig& cfg) {
  McConfig mc;
  mc.seed = cfg.mc_seed;
  mc.samples = cfg.mc_samples;
  mc.delta_t = cfg.mc_delta_t;
  mc.transverse_window = cfg.mc_window;
  mc.bar_fraction = cfg.mc_bar_fraction;
  return mc;
}

Vec3 config_axis(const RunConfig& cfg) {
  if (cfg.grid_axis == "x") return {1, 0, 0};
  if (cfg.grid_axis == "y") return {0, 1, 0};
  if (cfg.grid_axis == "z") return {0, 0, 1};
  throw ConfigError("grid.axis must be one of x, y, z");
}

std::vector<Vec3> config_grid(const RunConfig& cfg, const BathSpec& bath) {
  if (cfg.grid_count < 1) throw ConfigError("grid.count must be >= 1");
  if (cfg.grid_max < cfg.grid_min) throw ConfigError("grid.max must be >= grid.min");
  const Vec3 axis = config_axis(cfg);
  const double scale = bath.units.hbar / bath.q_thermal();
  std::vector<Vec3> out;
  out.reserve(cfg.grid_count);
  for (int i = 0; i < cfg.grid_count; ++i) {
    const double t = cfg.grid_count == 1
                         ? cfg.grid_min
                         : cfg.grid_min + (cfg.grid_max - cfg.grid_min) * i / (cfg.grid_count - 1);
    out.push_back(axis * (t * scale));
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto add = [&](const char* k, const std::string& v) { kv.emplace_back(k, v); };
  auto addd = [&](const char* k, double v) { add(k, format_g17(v)); };
  auto addi = [&](const char* k, long long v) { add(k, std::to_string(v)); };
  addd("bath.mass", cfg.bath_mass);
  addd("bath.temperature", cfg.bath_temperature);
  addd("bath.density", cfg.bath_density);
  addd("units.hbar", cfg.units_hbar);
  addd("units.boltzmann", cfg.units_boltzmann);
  add("model.kind", cfg.model_kind);
  addd("model.f0", cfg.model_f0);
  addd("model.radius", cfg.model_radius);
  addi("model.lmax", cfg.model_lmax);
  addd("potential.v0", cfg.potential_v0);
  addd("potential.width", cfg.potential_width);
  addd("potential.strength", cfg.potential_strength);
  addd("potential.screening", cfg.potential_screening);
  add("epsilon", cfg.epsilon);
  add("rate.route", cfg.rate_route);
  addd("grid.min", cfg.grid_min);
  addd("grid.max", cfg.grid_max);
  addi("grid.count", cfg.grid_count);
  add("grid.axis", cfg.grid_axis);
  addi("quad.radial_nodes", cfg.quad.radial_nodes);
  addd("quad.qmax_thermal", cfg.quad.radial_qmax_thermal_units);
  addi("quad.theta_nodes", cfg.quad.angular_theta_nodes);
  addi("quad.phi_nodes", cfg.quad.angular_phi_nodes);
  addd("quad.refine_tol", cfg.quad.refine_tol);
  addi("mc.seed", static_cast<long long>(cfg.mc_seed));
  addi("mc.samples", cfg.mc_samples);
  addd("mc.delta_t", cfg.mc_delta_t);
  addd("mc.window", cfg.mc_window);
  addd("mc.bar_fraction", cfg.mc_bar_fraction);
  addd("eta.p", cfg.eta_p);
  add("eta.direction", cfg.eta_direction);
  addi("gbar.nq", cfg.gbar_nq);
  addi("gbar.nomega", cfg.gbar_nomega);
  addd("gbar.qlo", cfg.gbar_qlo);
  addd("gbar.qhi", cfg.gbar_qhi);
  addd("gbar.omega_hi", cfg.gbar_omega_hi);
  addi("evolve.n", cfg.evolve_n);
  addd("evolve.extent", cfg.evolve_extent);
  addd("evolve.time", cfg.evolve_time);
  addd("evolve.packet_sep", cfg.evolve_packet_sep);
  addd("evolve.packet_width", cfg.evolve_packet_width);
  addd("evolve.threshold", cfg.evolve_threshold);
  addi("evolve.snapshots", cfg.evolve_snapshots);
  add("selfcheck.tier", cfg.selfcheck_tier);
  add("out.dir", cfg.out_dir);
  addi("threads", cfg.threads);
  return kv;
}

}  // namespace decoh
