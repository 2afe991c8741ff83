#include "vpgen/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vpgen {
namespace {

struct SortedView {
  std::vector<std::size_t> order;  // by (r, id)
  std::vector<double> r;           // sorted radii
  std::vector<double> prefix;      // prefix[k] = mass of first k sorted

  void rebuild(const std::vector<double>& radius,
               const std::vector<double>& mass) {
    std::size_t n = radius.size();
    if (order.size() != n) {
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      r.resize(n);
      prefix.resize(n + 1);
      prefix[0] = 0.0;
    }
    // nearly sorted between steps, so the re-sort is cheap
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return radius[a] < radius[b] || (radius[a] == radius[b] && a < b);
    });
    for (std::size_t k = 0; k < n; ++k) {
      r[k] = radius[order[k]];
      prefix[k + 1] = prefix[k] + mass[order[k]];
    }
  }

  // mass strictly below x; `hint` advances monotonically with the queries
  double enclosed(double x, std::size_t* hint) const {
    std::size_t k = *hint;
    while (k < r.size() && r[k] < x) ++k;
    *hint = k;
    return prefix[k];
  }
};

double centrifugal(double L, double r) {
  return L > 0.0 ? L * L / (r * r * r) : 0.0;
}

[[noreturn]] void fail_nonfinite(double t) {
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "dynamics: non-finite particle state at t=%.6g", t);
  throw std::runtime_error(buf);
}

// forces and (optionally) the field derivative for the tangent kick,
// everything in particle-id order
struct KickData {
  std::vector<double> a;
  std::vector<double> dadr;
};

void evaluate_forces(const SimState& st, const SortedView& sv, double t_eval,
                     bool want_derivative, KickData& out) {
  const auto& e = st.ensemble;
  std::size_t n = e.size();
  out.a.assign(n, 0.0);
  if (want_derivative) out.dadr.assign(n, 0.0);
  double gamma = e.gamma;

  if (st.model == FieldModel::SelfConsistent) {
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t id = sv.order[k];
      double r = e.r[id];
      if (r <= 0.0) {
        if (e.L[id] > 0.0)
          throw std::domain_error(
              "dynamics: particle at r<=0 with L>0 (reduce the time step)");
        continue;  // field vanishes at the center
      }
      double mhalf = sv.prefix[k] + 0.5 * e.m[id];
      out.a[id] = -gamma * mhalf / (r * r) + centrifugal(e.L[id], r);
    }
    if (want_derivative) {
      double h = st.h_fd;
      std::size_t hip = 0, him = 0;
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t id = sv.order[k];
        double r = e.r[id];
        if (r - h <= 0.0) {
          out.dadr[id] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        // field through this particle's own position: others + half self
        double mp = sv.enclosed(r + h, &hip) - 0.5 * e.m[id];
        double mm = sv.enclosed(r - h, &him) + 0.5 * e.m[id];
        double fp = -gamma * mp / ((r + h) * (r + h));
        double fm = -gamma * mm / ((r - h) * (r - h));
        double g = (fp - fm) / (2.0 * h);
        if (e.L[id] > 0.0) g += -3.0 * e.L[id] * e.L[id] / (r * r * r * r);
        out.dadr[id] = g;
      }
    }
  } else {
    double mc = st.model == FieldModel::CentralMass ? st.central_mass : 0.0;
    for (std::size_t id = 0; id < n; ++id) {
      double r = e.r[id];
      if (r <= 0.0) {
        if (e.L[id] > 0.0)
          throw std::domain_error(
              "dynamics: particle at r<=0 with L>0 (reduce the time step)");
        continue;
      }
      out.a[id] = -gamma * mc / (r * r) + centrifugal(e.L[id], r);
      if (want_derivative)
        out.dadr[id] = 2.0 * gamma * mc / (r * r * r) -
                       3.0 * e.L[id] * e.L[id] / (r * r * r * r);
    }
  }

  if (st.forcing) {
    for (std::size_t id = 0; id < n; ++id)
      out.a[id] += st.forcing(t_eval, e.r[id]);
  }
}

void kick(SimState& st, const SortedView& sv, double half_dt, double t_eval,
          KickData& kd) {
  evaluate_forces(st, sv, t_eval, st.track_tangent, kd);
  auto& e = st.ensemble;
  for (std::size_t id = 0; id < e.size(); ++id)
    e.vr[id] += half_dt * kd.a[id];
  if (st.track_tangent) {
    for (std::size_t id = 0; id < e.size(); ++id) {
      if (!st.tangent_valid[id]) continue;
      double g = kd.dadr[id];
      if (!std::isfinite(g)) {
        st.tangent_valid[id] = 0;
        continue;
      }
      TangentMatrix& T = st.tangent[id];
      T.c += g * half_dt * T.a;
      T.d += g * half_dt * T.b;
    }
  }
}

class Stepper {
 public:
  explicit Stepper(SimState& st) : st_(st) {
    sv_.rebuild(st.ensemble.r, st.ensemble.m);
    update_running_sups();
  }

  void advance(double dt) {
    auto& e = st_.ensemble;
    kick(st_, sv_, 0.5 * dt, st_.t, kd_);
    double check = 0.0;
    for (std::size_t id = 0; id < e.size(); ++id) {
      e.r[id] += dt * e.vr[id];
      if (e.r[id] < 0.0) {
        if (e.L[id] > 0.0)
          throw std::domain_error(
              "dynamics: particle crossed r=0 with L>0 (reduce the time step)");
        e.r[id] = -e.r[id];
        e.vr[id] = -e.vr[id];
        if (st_.track_tangent) st_.tangent_valid[id] = 0;
      }
      if (st_.track_tangent && st_.tangent_valid[id]) {
        TangentMatrix& T = st_.tangent[id];
        T.a += dt * T.c;
        T.b += dt * T.d;
      }
      check += e.r[id] + e.vr[id];
    }
    if (!std::isfinite(check)) fail_nonfinite(st_.t);
    sv_.rebuild(e.r, e.m);
    kick(st_, sv_, 0.5 * dt, st_.t + dt, kd_);
    st_.t += dt;
    update_running_sups();
  }

  const SortedView& sorted() const { return sv_; }

 private:
  void update_running_sups() {
    const auto& e = st_.ensemble;
    double p = st_.P, q = st_.Q;
    for (std::size_t id = 0; id < e.size(); ++id) {
      double vt = e.r[id] > 0.0 ? e.L[id] / e.r[id] : 0.0;
      p = std::max(p, std::hypot(e.vr[id], vt));
      q = std::max(q, e.r[id]);
    }
    st_.P = p;
    st_.Q = q;
  }

  SimState& st_;
  SortedView sv_;
  KickData kd_;
};

double energy_from_sorted(const SimState& st, const SortedView& sv) {
  const auto& e = st.ensemble;
  double ke = 0.0, pe = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    std::size_t id = sv.order[k];
    double r = e.r[id];
    double vt = r > 0.0 ? e.L[id] / r : 0.0;
    ke += 0.5 * e.m[id] * (e.vr[id] * e.vr[id] + vt * vt);
    if (r <= 0.0) continue;
    switch (st.model) {
      case FieldModel::SelfConsistent:
        pe += -e.gamma * e.m[id] * (sv.prefix[k] + 0.5 * e.m[id]) / r;
        break;
      case FieldModel::CentralMass:
        pe += -e.gamma * e.m[id] * st.central_mass / r;
        break;
      case FieldModel::None:
        break;
    }
  }
  return ke + pe;
}

}  // namespace

double TangentMatrix::op_norm() const {
  double tr = a * a + b * b + c * c + d * d;
  double dd = det();
  double disc = std::max(0.0, tr * tr - 4.0 * dd * dd);
  return std::sqrt(0.5 * (tr + std::sqrt(disc)));
}

std::size_t SimState::invalid_tangents() const {
  std::size_t n = 0;
  for (auto v : tangent_valid) n += v == 0;
  return n;
}

SimState make_state(ParticleEnsemble e, FieldModel model, double central_mass,
                    bool track_tangent, double h_fd) {
  SimState st;
  st.model = model;
  st.central_mass = central_mass;
  st.track_tangent = track_tangent;
  if (track_tangent) {
    st.tangent.assign(e.size(), TangentMatrix{});
    st.tangent_valid.assign(e.size(), 1);
  }
  if (h_fd > 0.0) {
    st.h_fd = h_fd;
  } else {
    double w = std::max(e.w_r, e.w_v);
    if (!(w > 0.0) || !std::isfinite(w)) {
      double rmax = 0.0;
      for (double ri : e.r) rmax = std::max(rmax, ri);
      w = rmax / 32.0;
    }
    st.h_fd = 0.5 * w;
  }
  st.ensemble = std::move(e);
  return st;
}

std::vector<double> accelerate(const SimState& state) {
  SortedView sv;
  sv.rebuild(state.ensemble.r, state.ensemble.m);
  KickData kd;
  evaluate_forces(state, sv, state.t, false, kd);
  return kd.a;
}

void step(SimState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  Stepper(state).advance(dt);
}

double default_dt(double s, double eta) {
  return eta * std::min(std::pow(s, 2.0 / 3.0), 0.01);
}

double total_energy(const SimState& state) {
  SortedView sv;
  sv.rebuild(state.ensemble.r, state.ensemble.m);
  return energy_from_sorted(state, sv);
}

std::string RunMetrics::to_csv() const {
  std::string out = "t,P,Q,rho_sup,force_sup,u_sup,mass,energy,tangent_sup\n";
  char buf[320];
  for (std::size_t k = 0; k < t.size(); ++k) {
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  t[k], P[k], Q[k], rho_sup[k], force_sup[k], u_sup[k],
                  mass[k], energy[k], tangent_sup[k]);
    out += buf;
  }
  return out;
}

double RunMetrics::at(const std::string& column, double tq) const {
  if (t.empty()) throw std::out_of_range("RunMetrics::at: no samples");
  std::size_t best = 0;
  for (std::size_t k = 1; k < t.size(); ++k)
    if (std::abs(t[k] - tq) < std::abs(t[best] - tq)) best = k;
  const std::vector<double>* col = nullptr;
  if (column == "P") col = &P;
  else if (column == "Q") col = &Q;
  else if (column == "rho_sup") col = &rho_sup;
  else if (column == "force_sup") col = &force_sup;
  else if (column == "u_sup") col = &u_sup;
  else if (column == "mass") col = &mass;
  else if (column == "energy") col = &energy;
  else if (column == "tangent_sup") col = &tangent_sup;
  else if (column == "t") col = &t;
  else throw std::invalid_argument("RunMetrics::at: unknown column " + column);
  return (*col)[best];
}

RunMetrics integrate(SimState& state, double T, const IntegrateOptions& opt) {
  if (!(T > 0.0)) throw std::invalid_argument("integrate: T must be positive");
  if (!(opt.dt > 0.0))
    throw std::invalid_argument("integrate: dt must be positive");
  RadialGrid grid = opt.grid;
  grid.validate();

  RunMetrics rm;
  rm.dt = opt.dt;
  auto nsteps = static_cast<std::size_t>(std::llround(T / opt.dt));
  if (nsteps == 0 || std::abs(nsteps * opt.dt - T) > 1e-9 * std::max(1.0, T))
    nsteps = static_cast<std::size_t>(std::ceil(T / opt.dt));
  rm.steps = nsteps;

  Stepper stepper(state);
  bool extended = false;

  auto sample = [&]() {
    const auto& e = state.ensemble;
    double rmax = 0.0;
    for (double ri : e.r) rmax = std::max(rmax, ri);
    if (rmax > grid.outer()) {
      if (!opt.allow_grid_extension || extended)
        throw std::runtime_error("integrate: support escaped the grid");
      double width = grid.nodes[1] - grid.nodes[0];
      double outer = 2.0 * rmax;
      auto bins = std::min<std::size_t>(
          16384, static_cast<std::size_t>(std::ceil(outer / width)));
      grid = RadialGrid::uniform(outer, bins);
      extended = true;
    }
    FieldSnapshot snap = build_snapshot(e, grid);
    rm.t.push_back(state.t);
    rm.P.push_back(state.P);
    rm.Q.push_back(state.Q);
    rm.rho_sup.push_back(snap.sup_density);
    rm.force_sup.push_back(snap.sup_force);
    rm.u_sup.push_back(snap.sup_potential);
    rm.mass.push_back(e.mass_sum());
    rm.energy.push_back(energy_from_sorted(state, stepper.sorted()));
    double tng = 0.0;
    if (state.track_tangent) {
      for (std::size_t id = 0; id < e.size(); ++id)
        if (state.tangent_valid[id])
          tng = std::max(tng, state.tangent[id].op_norm());
      rm.tangent_invalid_peak =
          std::max(rm.tangent_invalid_peak, state.invalid_tangents());
    }
    rm.tangent_sup.push_back(tng);
    rm.max_r2_uprime = std::max(rm.max_r2_uprime, snap.max_r2_uprime);
    if (snap.sup_density > 0.0)
      rm.key_estimate_max =
          std::max(rm.key_estimate_max, verify_key_estimate(snap));
    if (state.P > 0.0)
      rm.min_bound_c =
          std::max(rm.min_bound_c, min_bound_constant(snap, state.P));
    if (opt.snapshots) opt.snapshots->push_back(std::move(snap));
    if (opt.observer) opt.observer(state);
  };

  sample();
  double done = 0.0;
  for (std::size_t k = 0; k < nsteps; ++k) {
    double dt = std::min(opt.dt, T - done);
    if (dt <= 0.0) break;
    stepper.advance(dt);
    done += dt;
    if ((k + 1) % opt.sample_every == 0 || k + 1 == nsteps) sample();
  }
  return rm;
}

}  // namespace vpgen
