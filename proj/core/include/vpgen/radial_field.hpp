#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "vpgen/datum.hpp"

namespace vpgen {

// Bin edges r_0 = 0 < r_1 < ... < r_J; node j also labels bin [r_j, r_{j+1}).
struct RadialGrid {
  std::vector<double> nodes;

  static RadialGrid uniform(double r_max, std::size_t bins);

  std::size_t bin_count() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  double outer() const { return nodes.back(); }
  std::size_t bin_of(double r) const;  // clamped to [0, bin_count)
  void validate() const;
};

// One radix sort shared by all field queries. Ties in radius broken by
// particle index; a particle's own mass enters its M(r_i) with weight 1/2,
// which keeps the force symmetric under shell crossings.
class SortedRadii {
 public:
  SortedRadii(const std::vector<double>& r, const std::vector<double>& m);

  // mass strictly inside radius r (query point, not a particle)
  double enclosed(double r) const;
  // per-particle enclosed mass incl. the half-self term, in input order
  std::vector<double> particle_enclosed() const;

  double total() const { return prefix_.back(); }
  const std::vector<double>& sorted_r() const { return r_sorted_; }
  const std::vector<double>& prefix() const { return prefix_; }
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> r_sorted_;
  std::vector<double> m_sorted_;
  std::vector<double> prefix_;  // prefix_[k] = mass of first k sorted particles
};

struct FieldSnapshot {
  RadialGrid grid;
  std::vector<double> mass;       // M(r_j), strictly-enclosed
  std::vector<double> density;    // bin value at node j; last node carries 0
  std::vector<double> potential;  // u(r_j), u -> 0 at infinity
  std::vector<double> uprime;     // gamma*M(r_j)/r_j^2, 0 at r = 0
  double gamma = 1.0;
  double total_mass = 0.0;
  double sup_force = 0.0;      // max_j |u'(r_j)|
  double sup_density = 0.0;    // max_j rho_j
  double sup_potential = 0.0;  // max_j |u(r_j)|
  double max_r2_uprime = 0.0;  // max_j r_j^2 |u'(r_j)|, must stay <= total mass

  std::string to_csv() const;  // header "r,M,rho,u,uprime"
};

std::vector<double> mass_profile(const ParticleEnsemble& e,
                                 const RadialGrid& grid);
std::vector<double> density_estimate(const ParticleEnsemble& e,
                                     const RadialGrid& grid);
// radial field u'(r) = gamma*M(r)/r^2 at a query radius; 0 at r = 0
double force_at(const ParticleEnsemble& e, double r);

// u(r_j) = -gamma*(M(r_j)/r_j + 4*pi*int_{r_j}^{inf} s*rho(s) ds), integrated
// exactly for the bin-constant density (tail beyond the grid is zero)
std::vector<double> potential_profile(const RadialGrid& grid,
                                      const std::vector<double>& mass,
                                      const std::vector<double>& density,
                                      double gamma);

FieldSnapshot build_snapshot(const ParticleEnsemble& e, const RadialGrid& grid);
// analytic-profile variant: rho(r) sampled per bin, M(r) at nodes
FieldSnapshot build_snapshot(const RadialGrid& grid,
                             const std::function<double(double)>& rho,
                             const std::function<double(double)>& enclosed,
                             double gamma, double total_mass);

// dimensionless ratio sup|u'| / (M^{1/3} sup(rho)^{2/3}); bounded across any
// family of snapshots (the interpolation estimate behind the force bound)
double verify_key_estimate(const FieldSnapshot& snap);

// constant in |u'(r)| <= C*min(1/r^2, P^2) realized by this snapshot
double min_bound_constant(const FieldSnapshot& snap, double velocity_support);

// ---- potential vanishing at infinity: dual solver + condition checker ------

struct RadialDensityProfile {
  RadialGrid grid;
  std::vector<double> rho;  // bin value at node j; last node 0
  double support_radius = 0.0;  // declared bound on supp(rho)
  double gamma = 1.0;
};

// path (a): radial quadrature (same rule as potential_profile)
std::vector<double> solve_vanishing_radial(const RadialDensityProfile& prof);

// path (b): fundamental-solution convolution on a midpoint lattice of spacing
// ~h covering [-R, R]^3; the singular cell uses the exact cube integral of
// 1/|y|. Error O(h^2). support_radius must be declared positive and finite.
std::vector<double> solve_vanishing_lattice(
    const std::function<double(const std::array<double, 3>&)>& rho3d,
    double support_radius, double h, double gamma,
    const std::vector<std::array<double, 3>>& eval_points);

struct VanishingProbe {
  std::vector<double> r;  // increasing, extends well past claimed_support
  std::vector<double> u;
  double claimed_support = 0.0;  // claimed bound on supp(Laplacian u)
  double width = 1.0;            // regularization width of the representative
};

struct VanishingConditions {
  bool cond_i = false;   // u ~ C/r on the far tail (so u -> 0 at infinity)
  bool cond_ii = false;  // discrete Laplacian ~ 0 everywhere past the claim
};

// cond_i looks at the outer quarter of the probe; cond_ii checks every node
// whose full stencil lies beyond claimed_support. A plateau smoothly cut to
// zero far out passes (i) but fails (ii) when its source claim is empty.
VanishingConditions check_vanishing_conditions(const VanishingProbe& probe);

}  // namespace vpgen
