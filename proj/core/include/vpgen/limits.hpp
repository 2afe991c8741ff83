#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vpgen/datum.hpp"
#include "vpgen/dynamics.hpp"

namespace vpgen {

struct CrossingEvent {
  double time;
  std::size_t label_a, label_b;
};

struct CenterEvent {
  double time;
  std::size_t label;
};

struct OracleTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> r, vr;  // [sample][label]
  std::vector<double> masses;              // per label
  std::vector<CrossingEvent> crossings;
  std::vector<CenterEvent> center_events;
  double first_crossing = std::numeric_limits<double>::infinity();
  double first_center = std::numeric_limits<double>::infinity();

  std::size_t labels() const { return masses.size(); }
  // linear interpolation between samples, clamped to the recorded range
  void state_at(double t, std::vector<double>* r_out,
                std::vector<double>* vr_out) const;
  std::string to_csv() const;  // "t,label,r,vr"
};

struct ShellOracleOptions {
  double dt = 1e-5;         // coupling step (ordering re-checked per step)
  double sample_dt = 1e-3;  // output cadence
  bool stop_at_center = false;  // if set, truncate at the first r=0 event
};

// r_k'' = -gamma*M_k/r_k^2 with the same half-self mass rule as the particle
// dynamics; RK4 with local substep refinement, crossings located by bisection,
// and exact mirror continuation through r=0 (unless stop_at_center)
OracleTrajectory shell_oracle(const std::vector<Shell>& shells, double gamma,
                              double T, const ShellOracleOptions& opt = {});

struct ColdOracleOptions {
  std::size_t labels = 256;
  double dt = 1e-5;
  double sample_dt = 1e-3;
};

// Lagrangian labels at mass-midpoint quantiles, each with the fixed initial
// enclosed mass; the first coincidence of two labels (recorded as
// first_crossing) is the validity horizon of the cold description
OracleTrajectory cold_euler_oracle(const ColdProfile& rho0,
                                   const VelocityField& w0, double gamma,
                                   double T, const ColdOracleOptions& opt = {});

// mass-quantile radii and band-mean radial velocities of a weighted particle
// set; the quantile uses the half-self cumulative rule so particle runs and
// oracle labels are directly comparable
struct QuantileRow {
  double t = 0.0;
  double r10 = 0.0, r50 = 0.0, r90 = 0.0;
  double v_lo = 0.0, v_mid = 0.0, v_hi = 0.0;  // mean vr over mass thirds
};

QuantileRow quantile_row(const std::vector<double>& r,
                         const std::vector<double>& vr,
                         const std::vector<double>& m, double t);
QuantileRow quantile_row(const SimState& state);

struct QuantileSeries {
  std::vector<QuantileRow> rows;
};

// observer for integrate(): appends one row per sample
std::function<void(const SimState&)> quantile_observer(QuantileSeries* out);

struct ComparisonRow {
  double s;
  std::string observable;
  double error;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  bool truncated = false;  // samples beyond the horizon were dropped
  std::string to_csv() const;  // "s,observable,error"
};

// sup over sample times (up to `horizon`) of |vp observable - oracle
// observable|, one row per observable
Comparison compare(double s, const QuantileSeries& vp,
                   const OracleTrajectory& oracle, double horizon);

}  // namespace vpgen
