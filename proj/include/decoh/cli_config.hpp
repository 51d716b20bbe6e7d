#pragma once
// Flat key=value run configuration ("bath.mass=1.0"), shared by the CLI and
// by tests that exercise the tool end to end. Unknown keys and malformed
// lines raise ConfigError carrying the offending line number.

#include <cstdint>
#include <string>
#include <vector>

#include "decoh/core.hpp"
#include "decoh/rate.hpp"
#include "decoh/scattering.hpp"
#include "decoh/wavepacket_mc.hpp"

namespace decoh {

struct RunConfig {
  double bath_mass = 1.0;
  double bath_temperature = 1.0;
  double bath_density = 0.01;
  double units_hbar = 1.0;
  double units_boltzmann = 1.0;

  std::string model_kind = "constant";  // constant | hard-sphere | born-gaussian | born-yukawa
  double model_f0 = 1.0;
  double model_radius = 1.0;
  int model_lmax = kAutoLmax;
  double potential_v0 = 0.05;
  double potential_width = 1.0;
  double potential_strength = 0.05;
  double potential_screening = 1.0;

  std::string epsilon = "corrected";
  std::string rate_route = "general";  // rate-curve route selection

  // Separation grid: |R| in units of hbar / q_thermal along the chosen axis.
  double grid_min = 0.0;
  double grid_max = 10.0;
  int grid_count = 11;
  std::string grid_axis = "z";

  QuadratureSpec quad;

  std::uint64_t mc_seed = 12345;
  int mc_samples = 100000;
  double mc_delta_t = 0.0;
  double mc_window = 0.0;
  double mc_bar_fraction = 0.01;

  double eta_p = 0.0;  // momentum magnitude; 0 = thermal q
  std::string eta_direction = "perpendicular";  // or "parallel"

  int gbar_nq = 5;
  int gbar_nomega = 5;
  double gbar_qlo = 0.2;   // units of q_thermal
  double gbar_qhi = 4.0;
  double gbar_omega_hi = 3.0;  // units of q_thermal^2 / (2 m hbar)

  int evolve_n = 64;
  double evolve_extent = 0.0;       // grid half-width; 0 = auto
  double evolve_time = 0.0;         // 0 = auto (1 / F_sat)
  double evolve_packet_sep = 0.0;   // superposition separation; 0 = auto
  double evolve_packet_width = 0.0; // 0 = auto
  double evolve_threshold = 0.36787944117144233;
  int evolve_snapshots = 2;

  std::string selfcheck_tier = "default";
  std::string out_dir = ".";
  int threads = 0;
};

// Applies one key=value pair; line is used for error reporting.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        int line);

// Parses a config file; '#' starts a comment, blank lines are skipped.
RunConfig parse_config_file(const std::string& path);

BathSpec config_bath(const RunConfig& cfg);
AmplitudeModel config_model(const RunConfig& cfg);
PotentialModel config_potential(const RunConfig& cfg);
EpsilonMode config_epsilon(const RunConfig& cfg);
McConfig config_mc(const RunConfig& cfg);
std::vector<Vec3> config_grid(const RunConfig& cfg, const BathSpec& bath);
Vec3 config_axis(const RunConfig& cfg);

// Stable float formatting shared by all CSV writers: 17 significant digits.
std::string format_g17(double v);

// Flattened echo of every key (for the run manifest).
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg);

}  // namespace decoh
