#include "vpgen/radial_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace vpgen {
namespace {

constexpr double kPi = std::numbers::pi;
// integral of 1/|y| over the unit cube centered at the origin
constexpr double kCubeSelfIntegral = 2.3800773639795535;

void append_row(std::string& s, const char* fmt, double a, double b, double c,
                double d, double e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d, e);
  s += buf;
}

}  // namespace

RadialGrid RadialGrid::uniform(double r_max, std::size_t bins) {
  if (!(r_max > 0.0) || bins == 0)
    throw std::invalid_argument("RadialGrid: need r_max > 0 and bins >= 1");
  RadialGrid g;
  g.nodes.resize(bins + 1);
  for (std::size_t j = 0; j <= bins; ++j)
    g.nodes[j] = r_max * static_cast<double>(j) / static_cast<double>(bins);
  g.nodes[0] = 0.0;
  return g;
}

std::size_t RadialGrid::bin_of(double r) const {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
  if (it == nodes.begin()) return 0;
  std::size_t j = static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(j, bin_count() - 1);
}

void RadialGrid::validate() const {
  if (nodes.size() < 2)
    throw std::invalid_argument("RadialGrid: need at least two nodes");
  if (nodes.front() != 0.0)
    throw std::invalid_argument("RadialGrid: first node must be 0");
  for (std::size_t j = 1; j < nodes.size(); ++j)
    if (!(nodes[j] > nodes[j - 1]))
      throw std::invalid_argument("RadialGrid: nodes must increase strictly");
}

SortedRadii::SortedRadii(const std::vector<double>& r,
                         const std::vector<double>& m) {
  if (r.size() != m.size() || r.empty())
    throw std::invalid_argument("SortedRadii: mismatched or empty arrays");
  std::size_t n = r.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return r[a] < r[b] || (r[a] == r[b] && a < b);
  });
  r_sorted_.resize(n);
  m_sorted_.resize(n);
  prefix_.resize(n + 1);
  prefix_[0] = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r_sorted_[k] = r[order_[k]];
    m_sorted_[k] = m[order_[k]];
    prefix_[k + 1] = prefix_[k] + m_sorted_[k];
  }
}

double SortedRadii::enclosed(double r) const {
  auto it = std::lower_bound(r_sorted_.begin(), r_sorted_.end(), r);
  return prefix_[static_cast<std::size_t>(it - r_sorted_.begin())];
}

std::vector<double> SortedRadii::particle_enclosed() const {
  std::vector<double> out(order_.size());
  for (std::size_t k = 0; k < order_.size(); ++k)
    out[order_[k]] = prefix_[k] + 0.5 * m_sorted_[k];
  return out;
}

std::vector<double> mass_profile(const ParticleEnsemble& e,
                                 const RadialGrid& grid) {
  grid.validate();
  SortedRadii sr(e.r, e.m);
  std::vector<double> mass(grid.nodes.size());
  std::size_t k = 0;
  const auto& rs = sr.sorted_r();
  for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
    while (k < rs.size() && rs[k] < grid.nodes[j]) ++k;
    mass[j] = sr.prefix()[k];
  }
  return mass;
}

std::vector<double> density_estimate(const ParticleEnsemble& e,
                                     const RadialGrid& grid) {
  grid.validate();
  std::vector<double> rho(grid.nodes.size(), 0.0);
  for (std::size_t i = 0; i < e.size(); ++i)
    rho[grid.bin_of(e.r[i])] += e.m[i];
  double c43 = 4.0 * kPi / 3.0;
  for (std::size_t j = 0; j < grid.bin_count(); ++j) {
    double r0 = grid.nodes[j], r1 = grid.nodes[j + 1];
    rho[j] /= c43 * (r1 * r1 * r1 - r0 * r0 * r0);
  }
  return rho;
}

double force_at(const ParticleEnsemble& e, double r) {
  if (r < 0.0) throw std::invalid_argument("force_at: negative radius");
  if (r == 0.0) return 0.0;  // vanishes at the center by symmetry
  SortedRadii sr(e.r, e.m);
  return e.gamma * sr.enclosed(r) / (r * r);
}

std::vector<double> potential_profile(const RadialGrid& grid,
                                      const std::vector<double>& mass,
                                      const std::vector<double>& density,
                                      double gamma) {
  grid.validate();
  std::size_t nn = grid.nodes.size();
  if (mass.size() != nn || density.size() != nn)
    throw std::invalid_argument("potential_profile: array sizes must match the grid");
  std::vector<double> u(nn);
  double rj = grid.nodes[nn - 1];
  double tail = 0.0;  // 4*pi * int_{r_j}^{r_J} s*rho(s) ds, bin-exact
  u[nn - 1] = -gamma * mass[nn - 1] / rj;
  for (std::size_t j = nn - 1; j-- > 0;) {
    double r0 = grid.nodes[j], r1 = grid.nodes[j + 1];
    tail += 4.0 * kPi * density[j] * 0.5 * (r1 * r1 - r0 * r0);
    double inner = r0 > 0.0 ? mass[j] / r0 : 0.0;
    u[j] = -gamma * (inner + tail);
  }
  return u;
}

namespace {

FieldSnapshot finish_snapshot(RadialGrid grid, std::vector<double> mass,
                              std::vector<double> density, double gamma,
                              double total_mass) {
  FieldSnapshot s;
  s.grid = std::move(grid);
  s.mass = std::move(mass);
  s.density = std::move(density);
  s.gamma = gamma;
  s.total_mass = total_mass;
  s.potential = potential_profile(s.grid, s.mass, s.density, gamma);
  s.uprime.resize(s.grid.nodes.size());
  s.uprime[0] = 0.0;
  for (std::size_t j = 1; j < s.grid.nodes.size(); ++j) {
    double r = s.grid.nodes[j];
    s.uprime[j] = gamma * s.mass[j] / (r * r);
  }
  for (std::size_t j = 0; j < s.grid.nodes.size(); ++j) {
    double r = s.grid.nodes[j];
    s.sup_force = std::max(s.sup_force, std::abs(s.uprime[j]));
    s.sup_density = std::max(s.sup_density, s.density[j]);
    s.sup_potential = std::max(s.sup_potential, std::abs(s.potential[j]));
    s.max_r2_uprime = std::max(s.max_r2_uprime, r * r * std::abs(s.uprime[j]));
  }
  return s;
}

}  // namespace

FieldSnapshot build_snapshot(const ParticleEnsemble& e,
                             const RadialGrid& grid) {
  grid.validate();
  for (double ri : e.r)
    if (ri > grid.outer())
      throw std::domain_error("build_snapshot: support exceeds the grid");
  return finish_snapshot(grid, mass_profile(e, grid),
                         density_estimate(e, grid), e.gamma, e.mass_sum());
}

FieldSnapshot build_snapshot(const RadialGrid& grid,
                             const std::function<double(double)>& rho,
                             const std::function<double(double)>& enclosed,
                             double gamma, double total_mass) {
  grid.validate();
  std::size_t nn = grid.nodes.size();
  std::vector<double> mass(nn), density(nn, 0.0);
  for (std::size_t j = 0; j < nn; ++j) mass[j] = enclosed(grid.nodes[j]);
  for (std::size_t j = 0; j + 1 < nn; ++j)
    density[j] = rho(0.5 * (grid.nodes[j] + grid.nodes[j + 1]));
  return finish_snapshot(grid, std::move(mass), std::move(density), gamma,
                         total_mass);
}

double verify_key_estimate(const FieldSnapshot& snap) {
  if (!(snap.sup_density > 0.0) || !(snap.total_mass > 0.0))
    throw std::domain_error("verify_key_estimate: empty density");
  return snap.sup_force /
         (std::cbrt(snap.total_mass) * std::pow(snap.sup_density, 2.0 / 3.0));
}

double min_bound_constant(const FieldSnapshot& snap, double velocity_support) {
  if (!(velocity_support > 0.0))
    return std::numeric_limits<double>::infinity();
  double p2inv = 1.0 / (velocity_support * velocity_support);
  double c = 0.0;
  for (std::size_t j = 0; j < snap.grid.nodes.size(); ++j) {
    double r = snap.grid.nodes[j];
    c = std::max(c, std::abs(snap.uprime[j]) * std::max(r * r, p2inv));
  }
  return c;
}

std::string FieldSnapshot::to_csv() const {
  std::string out = "r,M,rho,u,uprime\n";
  for (std::size_t j = 0; j < grid.nodes.size(); ++j)
    append_row(out, "%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.nodes[j], mass[j],
               density[j], potential[j], uprime[j]);
  return out;
}

std::vector<double> solve_vanishing_radial(const RadialDensityProfile& prof) {
  prof.grid.validate();
  if (!(prof.support_radius > 0.0) ||
      prof.support_radius > prof.grid.outer())
    throw std::invalid_argument(
        "solve_vanishing_radial: source support must be declared and inside the grid");
  std::size_t nn = prof.grid.nodes.size();
  if (prof.rho.size() != nn)
    throw std::invalid_argument("solve_vanishing_radial: density size mismatch");
  std::vector<double> mass(nn, 0.0);
  double c43 = 4.0 * kPi / 3.0;
  for (std::size_t j = 0; j + 1 < nn; ++j) {
    double r0 = prof.grid.nodes[j], r1 = prof.grid.nodes[j + 1];
    mass[j + 1] = mass[j] + prof.rho[j] * c43 * (r1 * r1 * r1 - r0 * r0 * r0);
  }
  return potential_profile(prof.grid, mass, prof.rho, prof.gamma);
}

std::vector<double> solve_vanishing_lattice(
    const std::function<double(const std::array<double, 3>&)>& rho3d,
    double support_radius, double h, double gamma,
    const std::vector<std::array<double, 3>>& eval_points) {
  if (!(support_radius > 0.0) || !std::isfinite(support_radius))
    throw std::invalid_argument(
        "solve_vanishing_lattice: source support must be declared finite and positive");
  if (!(h > 0.0))
    throw std::invalid_argument("solve_vanishing_lattice: spacing must be positive");

  // odd cell count puts a lattice point at the origin
  std::size_t n = static_cast<std::size_t>(
      std::ceil(2.0 * support_radius / h));
  if (n % 2 == 0) ++n;
  n = std::max<std::size_t>(n, 3);
  double he = 2.0 * support_radius / static_cast<double>(n);
  double vol = he * he * he;
  double self = he * he * kCubeSelfIntegral;

  std::vector<double> u(eval_points.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double x = -support_radius + (i + 0.5) * he;
    for (std::size_t j = 0; j < n; ++j) {
      double y = -support_radius + (j + 0.5) * he;
      for (std::size_t k = 0; k < n; ++k) {
        double z = -support_radius + (k + 0.5) * he;
        double rho = rho3d({x, y, z});
        if (rho == 0.0) continue;
        for (std::size_t p = 0; p < eval_points.size(); ++p) {
          double dx = eval_points[p][0] - x;
          double dy = eval_points[p][1] - y;
          double dz = eval_points[p][2] - z;
          double d = std::sqrt(dx * dx + dy * dy + dz * dz);
          // the cell containing the evaluation point gets the exact
          // self-integral of the kernel over a centered cube
          u[p] -= gamma * rho * (d < 0.5 * he ? self : vol / d);
        }
      }
    }
  }
  return u;
}

VanishingConditions check_vanishing_conditions(const VanishingProbe& probe) {
  std::size_t n = probe.r.size();
  if (n < 8 || probe.u.size() != n)
    throw std::invalid_argument("check_vanishing_conditions: probe too small");
  for (std::size_t j = 1; j < n; ++j)
    if (!(probe.r[j] > probe.r[j - 1]))
      throw std::invalid_argument("check_vanishing_conditions: radii must increase");
  if (!(probe.r.back() > probe.claimed_support))
    throw std::invalid_argument(
        "check_vanishing_conditions: probe must extend past the claimed support");

  VanishingConditions out;

  // (i) far-tail decay u ~ C/r, i.e. r*u approaches a constant
  double rmax = probe.r.back();
  double c_tail = probe.u.back() * rmax;
  double dev = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (probe.r[j] < 0.75 * rmax) continue;
    dev = std::max(dev, std::abs(probe.u[j] * probe.r[j] - c_tail));
  }
  out.cond_i = dev <= 1e-5 * std::max(1.0, std::abs(c_tail));

  // (ii) implied source (r*u)''/(4*pi*r) vanishes wherever the full stencil
  // lies beyond the claimed support
  double sup_u = 0.0;
  for (double v : probe.u) sup_u = std::max(sup_u, std::abs(v));
  double viol = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    if (probe.r[j - 1] < probe.claimed_support) continue;
    double h0 = probe.r[j] - probe.r[j - 1];
    double h1 = probe.r[j + 1] - probe.r[j];
    double w0 = probe.r[j - 1] * probe.u[j - 1];
    double w1 = probe.r[j] * probe.u[j];
    double w2 = probe.r[j + 1] * probe.u[j + 1];
    double second =
        2.0 * (w0 * h1 - w1 * (h0 + h1) + w2 * h0) / (h0 * h1 * (h0 + h1));
    viol = std::max(viol,
                    std::abs(second) / (4.0 * kPi * std::max(probe.r[j], h0)));
  }
  out.cond_ii = viol <= 1e-8 * std::max(1.0, sup_u);
  return out;
}

}  // namespace vpgen
