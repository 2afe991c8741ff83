#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vpgen/datum.hpp"
#include "vpgen/radial_field.hpp"

namespace vpgen {

// columns [dr/dr0, dr/dvr0; dvr/dr0, dvr/dvr0]
struct TangentMatrix {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  double op_norm() const;
  double det() const { return a * d - b * c; }
};

enum class FieldModel {
  SelfConsistent,  // field of the ensemble itself (half-self convention)
  CentralMass,     // fixed point mass at the origin; ensemble is test matter
  None,            // free flow (plus the centrifugal term)
};

struct SimState {
  ParticleEnsemble ensemble;  // arrays stay in particle-id order throughout
  double t = 0.0;
  double P = 0.0;  // running sup of particle speed
  double Q = 0.0;  // running sup of particle radius
  FieldModel model = FieldModel::SelfConsistent;
  double central_mass = 0.0;
  bool track_tangent = false;
  double h_fd = 0.0;  // finite-difference stencil for the field derivative
  std::vector<TangentMatrix> tangent;
  std::vector<std::uint8_t> tangent_valid;
  // optional per-step acceleration (t, r) -> a; used by the perturbed runs
  std::function<double(double, double)> forcing;

  std::size_t invalid_tangents() const;
};

// h_fd <= 0 picks max(w_r, w_v)/2, falling back to support/64 for data
// without a kernel width
SimState make_state(ParticleEnsemble e, FieldModel model = FieldModel::SelfConsistent,
                    double central_mass = 0.0, bool track_tangent = false,
                    double h_fd = 0.0);

// a_i = -gamma*M(r_i)/r_i^2 + L_i^2/r_i^3 in particle-id order, with the
// half-self enclosed mass; 0 at r = 0 (only reachable with L = 0)
std::vector<double> accelerate(const SimState& state);

// one kick-drift-kick step; reflects (r, vr) -> (-r, -vr) at the center for
// L = 0 particles and refuses r <= 0 with L > 0 (time step too large)
void step(SimState& state, double dt);

struct RunMetrics {
  std::vector<double> t, P, Q, rho_sup, force_sup, u_sup, mass, energy,
      tangent_sup;
  double dt = 0.0;
  std::size_t steps = 0;
  double max_r2_uprime = 0.0;    // worst r^2|u'| over all samples
  double key_estimate_max = 0.0; // worst interpolation-estimate ratio
  double min_bound_c = 0.0;      // worst constant in |u'| <= C*min(1/r^2,P^2)
  std::size_t tangent_invalid_peak = 0;

  std::size_t samples() const { return t.size(); }
  std::string to_csv() const;  // "t,P,Q,rho_sup,force_sup,u_sup,mass,energy,tangent_sup"
  // value of a named column at the sample nearest to time tq
  double at(const std::string& column, double tq) const;
};

struct IntegrateOptions {
  double dt = 1e-3;
  std::size_t sample_every = 1;
  RadialGrid grid;
  bool allow_grid_extension = true;
  std::vector<FieldSnapshot>* snapshots = nullptr;
  std::function<void(const SimState&)> observer;  // called at sample times
};

RunMetrics integrate(SimState& state, double T, const IntegrateOptions& opt);

// eta * min(s^{2/3}, 0.01): step below both the kernel scale and a fixed cap
double default_dt(double s, double eta);

// kinetic energy plus exact pair potential energy (same half-self rule as
// the force, so the continuum value is conserved between crossings)
double total_energy(const SimState& state);

}  // namespace vpgen
