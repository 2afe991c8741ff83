#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vpgen/datum.hpp"

namespace vpgen {

// Declarative experiment description. load/parse materializes every default,
// so downstream code never applies implicit ones; unknown or missing keys are
// reported by name.
struct ExperimentConfig {
  std::string experiment;  // run|sweep|stability|limit|poisson-check|scale-check

  SingularDatum datum;
  bool has_datum = false;

  double width = 0.25;          // run
  std::vector<double> widths;   // sweep | stability | limit
  std::size_t n0 = 20000;
  double T = 0.8;
  double eta = 0.1;
  double t_star = -1.0;  // materialized to 0.75*T when absent
  double tolerance = 0.15;
  std::size_t grid_bins = 0;  // 0 = automatic
  double grid_margin = 3.0;
  std::uint64_t seed = 1;
  bool track_tangent = true;
  std::size_t sample_count = 64;
  bool cold_exact = false;

  // stability
  double delta = 1e-4;
  std::string perturb_mode = "data";  // data|forcing

  // limit
  double dt_oracle_ratio = 100.0;
  std::size_t oracle_labels = 256;
  double horizon_fraction = 0.9;  // of the first oracle crossing/collapse

  // poisson-check
  double lattice_h = 0.05;

  // scale-check
  std::string scale_family = "power-of-log";  // |iterated-log|power-law
  double scale_p = 2.0;
  double scale_exponent = 0.5;
  double scale_a = 0.1;
  int scale_variant = 1;

  std::string out;  // default output directory (may be overridden)
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// canonical serialization: sorted keys, every default materialized
std::string config_to_json(const ExperimentConfig& cfg);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace vpgen
