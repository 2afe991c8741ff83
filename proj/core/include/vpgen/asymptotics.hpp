#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vpgen/datum.hpp"
#include "vpgen/dynamics.hpp"
#include "vpgen/radial_field.hpp"

namespace vpgen {

struct SweepSpec {
  SingularDatum datum;
  std::vector<double> widths;  // strictly decreasing, in (0, 1]
  std::size_t n0 = 20000;      // particles at widths.front(); n(s) = n0*s0/s
  double T = 0.8;
  double eta = 0.1;      // dt = eta * min(s^{2/3}, 0.01)
  double t_star = -1.0;  // fit sample time; < 0 picks 0.75*T
  std::size_t grid_bins = 0;  // 0 -> sized from the kernel widths
  double grid_margin = 3.0;
  std::uint64_t seed = 1;
  bool track_tangent = true;
  std::size_t sample_count = 64;
  int threads = 1;
  bool cold_exact = false;
};

struct SweepRun {
  double s = 0.0;
  std::size_t n = 0;
  bool failed = false;
  std::string error;
  double fvalue_cap = 0.0;
  double cap_constant = 0.0;
  bool resolution_warning = false;
  RunMetrics metrics;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  std::size_t failures() const;
};

// independent per-width runs (optionally on several threads); a run that
// throws is recorded as failed and the sweep continues
SweepResult run_sweep(const SweepSpec& spec);

// grid used by sweep/stability runs: outer edge at margin * max radius,
// bin width tracking a quarter of the finest kernel width
RadialGrid sweep_grid(const ParticleEnsemble& e, double margin,
                      std::size_t bins);

// least squares of log q against log(1/s); exact on pure power laws.
// Requires >= 4 pairs and positive q.
struct ExponentFit {
  double slope = 0.0, intercept = 0.0, r2 = 1.0;
};
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& sq);

struct RateRow {
  std::string quantity;
  ExponentFit fit;
  double bound = 0.0;         // admissible exponent in 1/s
  double ratio_spread = 0.0;  // max/min of q * s^bound across the sweep
  bool pass = false;
};

struct RateTable {
  std::vector<RateRow> rows;
  double t_star = 0.0;
  bool pass() const;
  std::string to_csv() const;  // "quantity,slope,intercept,r2,bound,pass"
};

// quantities {f, P, u, uprime, rho, Z} read at the sample nearest t_star;
// pass iff the fitted slope is at most bound + tolerance and the compensated
// values q * s^bound show no blow-up against the admissible law
RateTable verify_growth_rates(const SweepResult& sweep, double t_star,
                              double tolerance);

// least squares of log(final tangent sup) against s^{-2}; the slope is the
// exponential growth constant of the first-order flow derivative
struct TangentGrowthFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  bool invalid_warning = false;  // >10% of tangents invalidated in some run
};
TangentGrowthFit tangent_growth_fit(const SweepResult& sweep);

enum class PerturbMode { Data, Forcing };

struct StabilitySpec {
  SingularDatum datum;
  double s = 0.25;
  std::size_t n = 20000;
  double delta = 1e-4;
  PerturbMode mode = PerturbMode::Data;
  double T = 0.5;
  double eta = 0.1;
  std::size_t grid_bins = 0;
  double grid_margin = 4.0;
  std::uint64_t seed = 1;
  std::size_t sample_count = 16;
};

struct StabilityRow {
  double s = 0.0, delta = 0.0;
  double dZ = 0.0, drho = 0.0, dforce = 0.0;
  double amplification = 0.0;
};

std::string stability_csv(const std::vector<StabilityRow>& rows);

// base run against a run perturbed by the deterministic field
// delta * sin(pi r / R): added to the initial (r, vr) in Data mode, applied
// as an extra acceleration in Forcing mode. delta must stay below the kernel
// width; delta = 0 must produce identically zero differences.
StabilityRow stability_experiment(const StabilitySpec& spec);

// fits log(log amplification) = log A + (4/3) log(1/s) + B s^{-2} and lifts
// the intercept so the law dominates every sample
struct AmplificationFit {
  double A = 0.0, B = 0.0;
  bool finite = false;
};
AmplificationFit amplification_fit(const std::vector<StabilityRow>& rows);

}  // namespace vpgen
