#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

namespace vpgen {

class RadialGrid;

// ---- singular initial data ------------------------------------------------

struct ColdProfile {
  enum class Kind { UniformBall, ParabolicBall } kind = Kind::UniformBall;
  double mass = 1.0;
  double radius = 1.0;

  double rho(double r) const;       // density at r
  double rho_sup() const;           // sup density
  double enclosed(double r) const;  // M(r)
  double quantile_radius(double mass_fraction) const;  // inverse of enclosed
};

// radial velocity field w0(r) of a monokinetic datum
struct VelocityField {
  enum class Kind { Zero, Hubble } kind = Kind::Zero;
  double hubble = 0.0;
  double operator()(double r) const {
    return kind == Kind::Hubble ? hubble * r : 0.0;
  }
};

struct ColdMonokinetic {
  ColdProfile rho0;
  VelocityField w0;
};

struct Shell {
  double radius = 1.0;
  double velocity = 0.0;
  double mass = 1.0;
};

struct ShellSum {
  std::vector<Shell> shells;
};

// separable compact profile A*(1-(r/R)^2)+ * (1-(w/W)^2)+ in (r, |v|)
struct SmoothBump {
  double mass = 1.0;
  double radius = 1.0;
  double vmax = 1.0;
  double amplitude() const;
};

struct SingularDatum {
  std::variant<SmoothBump, ColdMonokinetic, ShellSum> shape;
  double gamma = 1.0;  // +1 attractive, -1 repulsive

  double total_mass() const;
  double support_radius() const;
};

// ---- regularized particle ensembles ----------------------------------------

// Reduced coordinates (r, vr, L) per particle; L is conserved by the flow.
// Weights are an exact partition of each source component's mass: within a
// component every partial sum is exact in double arithmetic, so mass
// bookkeeping is bitwise reproducible (see exact_component_weights).
struct ParticleEnsemble {
  std::vector<double> r, vr, L, m;
  double width = 1.0;       // the scale parameter s the widths were sized for
  double fvalue_cap = 0.0;  // analytic sup of the mollified phase density
  double fderiv_cap = 0.0;  // analytic sup of its first derivatives
  double cap_constant = 0.0;  // recorded construction constant: 2 * fvalue_cap * s
  double total_mass = 0.0;
  double gamma = 1.0;
  double w_r = 0.0, w_v = 0.0;  // realized kernel widths (0 = direction not mollified)
  bool resolution_warning = false;
  std::vector<std::size_t> group_offsets;  // component boundaries, ends with size()

  std::size_t size() const { return r.size(); }
  // canonical mass sum: sequential within each component, components in order;
  // equals total_mass exactly
  double mass_sum() const;
};

struct RegularizeOptions {
  // diagnostic: suppress velocity mollification of cold data entirely
  // (exact monokinetic sampling; fvalue_cap is then reported as infinite)
  bool cold_exact = false;
};

ParticleEnsemble regularize(const SingularDatum& datum, double s,
                            std::size_t n_particles, std::uint64_t seed,
                            const RegularizeOptions& opt = {});

struct DatumNorms {
  double l1 = 0.0;      // exact weight sum
  double linf_f = 0.0;  // binned phase-density sup estimate
  double support_r = 0.0, support_v = 0.0;
};

DatumNorms datum_norms(const ParticleEnsemble& e, const RadialGrid& grid);

// exact equal-partition weights for one component (see ParticleEnsemble)
std::vector<double> exact_component_weights(double component_mass,
                                            std::size_t n);

}  // namespace vpgen
