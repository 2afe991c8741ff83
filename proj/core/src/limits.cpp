#include "vpgen/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "vpgen/quadrature.hpp"

namespace vpgen {

namespace {

// time for an infalling label at (r1, -vin) to reach the center under
// a = -mu/r^2 (mu > 0); substitution r = x^2 removes the 1/sqrt singularity
double time_to_center(double r1, double vin, double mu) {
  const double x1 = std::sqrt(r1);
  auto f = [&](double x) {
    if (x <= 0.0) return 0.0;
    double v2 = vin * vin + 2.0 * mu * (1.0 / (x * x) - 1.0 / r1);
    return 2.0 * x / std::sqrt(v2);
  };
  return integrate(f, 0.0, x1, 1e-15);
}

void rk4(double& r, double& v, double gmu, double h) {
  auto acc = [&](double rr) { return -gmu / (rr * rr); };
  double k1r = v, k1v = acc(r);
  double k2r = v + 0.5 * h * k1v, k2v = acc(r + 0.5 * h * k1r);
  double k3r = v + 0.5 * h * k2v, k3v = acc(r + 0.5 * h * k2r);
  double k4r = v + h * k3v, k4v = acc(r + h * k3r);
  r += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

// advance one label by h under a = -gmu/r^2 with reflection at the center;
// center passage times (relative to the start of the step) are appended.
// RK4 with substeps kept below 1% of the current radius; once the required
// substep falls 2^18 below the remaining budget the infall is carried through
// r=0 by the exact time-mirror of the trajectory (the bounce window is
// microscopic there), after which outgoing substeps grow geometrically.
void advance_label(double& r, double& v, double gmu, double h,
                   std::vector<double>* center_rel) {
  double rem = h;
  double tloc = 0.0;
  int guard = 0;
  while (rem > 0.0) {
    if (++guard > 400000)
      throw std::runtime_error("oracle: integration stalled near the center");
    if (gmu == 0.0) {  // free flight, exact
      double rn = r + v * rem;
      if (v < 0.0 && rn < 0.0) {
        if (center_rel) center_rel->push_back(tloc - r / v);
        r = -rn;
        v = -v;
      } else {
        r = rn;
      }
      return;
    }
    double h_sub = rem;
    double speed = std::abs(v);
    const double hmin = rem * 0x1p-42;
    while (h_sub > hmin &&
           (h_sub * speed > 0.01 * r ||
            h_sub * h_sub * std::abs(gmu) / (r * r) > 0.01 * r))
      h_sub *= 0.5;
    if (h_sub <= rem * 0x1p-18 && v < 0.0 && gmu > 0.0) {
      double tau = time_to_center(r, -v, gmu);
      if (2.0 * tau <= rem) {
        if (center_rel) center_rel->push_back(tloc + tau);
        v = -v;
        tloc += 2.0 * tau;
        rem -= 2.0 * tau;
      } else {
        // budget ends inside the bounce window (width ~ tau); park at the
        // mirror point, which is within o(h) of the true state
        if (tau <= rem && center_rel) center_rel->push_back(tloc + tau);
        if (tau <= rem) v = -v;
        rem = 0.0;
      }
      continue;
    }
    rk4(r, v, gmu, h_sub);
    if (!(r > 0.0) || !std::isfinite(r) || !std::isfinite(v))
      throw std::runtime_error("oracle: step produced an invalid radius");
    tloc += h_sub;
    rem -= h_sub;
  }
}

struct Engine {
  std::vector<double> r, v, mass, gmu;  // gmu = gamma * effective mass
  std::vector<std::size_t> order;       // indices sorted by (r, index)
  double gamma = 1.0;
  bool fixed_mu = false;  // cold oracle: enclosed mass frozen at t=0

  void sort_order() {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (r[a] != r[b]) return r[a] < r[b];
      return a < b;
    });
  }

  void refresh_mu() {
    if (fixed_mu) return;
    double prefix = 0.0;
    for (std::size_t k : order) {
      gmu[k] = gamma * (prefix + 0.5 * mass[k]);
      prefix += mass[k];
    }
  }

  bool order_violated() const {
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::size_t a = order[i], b = order[i + 1];
      if (r[a] > r[b] || (r[a] == r[b] && a > b)) return true;
    }
    return false;
  }

  void advance(double h, double t0, std::vector<CenterEvent>* events) {
    std::vector<double> rel;
    for (std::size_t k = 0; k < r.size(); ++k) {
      rel.clear();
      advance_label(r[k], v[k], gmu[k], h, events ? &rel : nullptr);
      if (events)
        for (double tr : rel) events->push_back({t0 + tr, k});
    }
  }
};

OracleTrajectory run_engine(Engine eng, double T, double dt, double sample_dt,
                            bool stop_at_center) {
  if (!(dt > 0.0) || !(T > 0.0))
    throw std::invalid_argument("oracle: T and dt must be positive");
  if (sample_dt < dt) sample_dt = dt;

  OracleTrajectory out;
  out.masses = eng.mass;
  const std::size_t n = eng.r.size();

  auto record = [&](double t) {
    out.times.push_back(t);
    out.r.emplace_back(eng.r);
    out.vr.emplace_back(eng.v);
  };

  eng.sort_order();
  eng.refresh_mu();
  record(0.0);

  double t = 0.0;
  double next_sample = sample_dt;
  std::vector<CenterEvent> step_events;
  const double tol_cross = 1e-10;

  while (t < T - 1e-12 * std::max(1.0, T)) {
    double h = std::min(dt, T - t);
    Engine saved = eng;
    step_events.clear();
    eng.advance(h, t, &step_events);

    if (eng.order_violated() && out.crossings.size() > 100000) {
      // degenerate data flapping across a contact; stop resolving individual
      // crossing times and just keep the ordering consistent per step
      eng.sort_order();
      eng.refresh_mu();
    } else if (eng.order_violated()) {
      // bisect the earliest ordering change into (lo, hi]
      double lo = 0.0, hi = h;
      while (hi - lo > tol_cross) {
        double mid = 0.5 * (lo + hi);
        Engine probe = saved;
        probe.advance(mid, t, nullptr);
        if (probe.order_violated())
          hi = mid;
        else
          lo = mid;
      }
      eng = saved;
      step_events.clear();
      eng.advance(hi, t, &step_events);
      // identify the pairs that are out of order just past the crossing
      for (std::size_t i = 0; i + 1 < eng.order.size(); ++i) {
        std::size_t a = eng.order[i], b = eng.order[i + 1];
        if (eng.r[a] > eng.r[b] || (eng.r[a] == eng.r[b] && a > b)) {
          out.crossings.push_back({t + hi, std::min(a, b), std::max(a, b)});
          out.first_crossing = std::min(out.first_crossing, t + hi);
        }
      }
      eng.sort_order();
      eng.refresh_mu();
      h = hi;
    }

    for (const CenterEvent& ev : step_events) {
      out.center_events.push_back(ev);
      out.first_center = std::min(out.first_center, ev.time);
    }
    t += h;
    if (stop_at_center && !out.center_events.empty()) {
      record(t);
      return out;
    }
    if (t >= next_sample - 1e-12) {
      record(t);
      while (next_sample <= t + 1e-12) next_sample += sample_dt;
    }
  }
  if (out.times.back() < t) record(t);
  (void)n;
  return out;
}

double interp(const std::vector<double>& xs, std::size_t i, double w,
              const std::vector<std::vector<double>>& cols, std::size_t k) {
  (void)xs;
  return (1.0 - w) * cols[i][k] + w * cols[i + 1][k];
}

}  // namespace

void OracleTrajectory::state_at(double t, std::vector<double>* r_out,
                                std::vector<double>* vr_out) const {
  if (times.empty()) throw std::logic_error("oracle trajectory is empty");
  if (times.size() == 1) {
    if (r_out) *r_out = r.front();
    if (vr_out) *vr_out = vr.front();
    return;
  }
  const std::size_t n = labels();
  std::size_t i = 0;
  double w = 0.0;
  if (t <= times.front()) {
    i = 0;
    w = 0.0;
  } else if (t >= times.back()) {
    i = times.size() - 2;
    w = 1.0;
  } else {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    i = static_cast<std::size_t>(it - times.begin()) - 1;
    double t0 = times[i], t1 = times[i + 1];
    w = (t - t0) / (t1 - t0);
  }
  if (r_out) {
    r_out->resize(n);
    for (std::size_t k = 0; k < n; ++k) (*r_out)[k] = interp(times, i, w, r, k);
  }
  if (vr_out) {
    vr_out->resize(n);
    for (std::size_t k = 0; k < n; ++k)
      (*vr_out)[k] = interp(times, i, w, vr, k);
  }
}

std::string OracleTrajectory::to_csv() const {
  std::string s = "t,label,r,vr\n";
  char buf[128];
  for (std::size_t i = 0; i < times.size(); ++i)
    for (std::size_t k = 0; k < labels(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g\n", times[i], k,
                    r[i][k], vr[i][k]);
      s += buf;
    }
  return s;
}

OracleTrajectory shell_oracle(const std::vector<Shell>& shells, double gamma,
                              double T, const ShellOracleOptions& opt) {
  if (shells.empty()) throw std::invalid_argument("shell oracle: no shells");
  Engine eng;
  eng.gamma = gamma;
  eng.fixed_mu = false;
  for (const Shell& sh : shells) {
    if (!(sh.radius > 0.0))
      throw std::invalid_argument("shell oracle: radius must be positive");
    if (!(sh.mass > 0.0))
      throw std::invalid_argument("shell oracle: mass must be positive");
    eng.r.push_back(sh.radius);
    eng.v.push_back(sh.velocity);
    eng.mass.push_back(sh.mass);
    eng.gmu.push_back(0.0);
  }
  eng.order.resize(eng.r.size());
  std::iota(eng.order.begin(), eng.order.end(), std::size_t{0});
  return run_engine(std::move(eng), T, opt.dt, opt.sample_dt,
                    opt.stop_at_center);
}

OracleTrajectory cold_euler_oracle(const ColdProfile& rho0,
                                   const VelocityField& w0, double gamma,
                                   double T, const ColdOracleOptions& opt) {
  if (opt.labels == 0)
    throw std::invalid_argument("cold oracle: need at least one label");
  Engine eng;
  eng.gamma = gamma;
  eng.fixed_mu = true;
  const std::size_t n = opt.labels;
  const double mlabel = rho0.mass / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    double q = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    double r0 = rho0.quantile_radius(q);
    eng.r.push_back(r0);
    eng.v.push_back(w0(r0));
    eng.mass.push_back(mlabel);
    eng.gmu.push_back(gamma * rho0.enclosed(r0));
  }
  eng.order.resize(n);
  std::iota(eng.order.begin(), eng.order.end(), std::size_t{0});
  return run_engine(std::move(eng), T, opt.dt, opt.sample_dt, false);
}

QuantileRow quantile_row(const std::vector<double>& r,
                         const std::vector<double>& vr,
                         const std::vector<double>& m, double t) {
  const std::size_t n = r.size();
  if (n == 0 || vr.size() != n || m.size() != n)
    throw std::invalid_argument("quantile_row: mismatched arrays");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (r[a] != r[b]) return r[a] < r[b];
    return a < b;
  });
  double total = 0.0;
  for (std::size_t k : idx) total += m[k];

  QuantileRow row;
  row.t = t;
  double qs[3] = {0.1, 0.5, 0.9};
  double* rq[3] = {&row.r10, &row.r50, &row.r90};
  double vsum[3] = {0.0, 0.0, 0.0}, msum[3] = {0.0, 0.0, 0.0};
  std::size_t qi = 0;
  double prefix = 0.0;
  for (std::size_t k : idx) {
    double cum = prefix + 0.5 * m[k];
    while (qi < 3 && cum >= qs[qi] * total) *rq[qi++] = r[k];
    double frac = cum / total;
    int band = frac < 1.0 / 3.0 ? 0 : (frac < 2.0 / 3.0 ? 1 : 2);
    vsum[band] += m[k] * vr[k];
    msum[band] += m[k];
    prefix += m[k];
  }
  while (qi < 3) *rq[qi++] = r[idx.back()];
  row.v_lo = msum[0] > 0.0 ? vsum[0] / msum[0] : 0.0;
  row.v_mid = msum[1] > 0.0 ? vsum[1] / msum[1] : 0.0;
  row.v_hi = msum[2] > 0.0 ? vsum[2] / msum[2] : 0.0;
  return row;
}

QuantileRow quantile_row(const SimState& state) {
  return quantile_row(state.ensemble.r, state.ensemble.vr, state.ensemble.m,
                      state.t);
}

std::function<void(const SimState&)> quantile_observer(QuantileSeries* out) {
  return [out](const SimState& s) { out->rows.push_back(quantile_row(s)); };
}

std::string Comparison::to_csv() const {
  std::string s = "s,observable,error\n";
  char buf[128];
  for (const ComparisonRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", row.s,
                  row.observable.c_str(), row.error);
    s += buf;
  }
  return s;
}

Comparison compare(double s, const QuantileSeries& vp,
                   const OracleTrajectory& oracle, double horizon) {
  Comparison out;
  const char* names[6] = {"r10", "r50", "r90", "v_lo", "v_mid", "v_hi"};
  double sup[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  double tmax = std::min(horizon, oracle.times.empty()
                                      ? horizon
                                      : oracle.times.back());
  std::vector<double> orr, orv;
  bool any = false;
  for (const QuantileRow& row : vp.rows) {
    if (row.t > tmax + 1e-12) {
      out.truncated = true;
      continue;
    }
    any = true;
    oracle.state_at(row.t, &orr, &orv);
    QuantileRow oq = quantile_row(orr, orv, oracle.masses, row.t);
    double d[6] = {std::abs(row.r10 - oq.r10),   std::abs(row.r50 - oq.r50),
                   std::abs(row.r90 - oq.r90),   std::abs(row.v_lo - oq.v_lo),
                   std::abs(row.v_mid - oq.v_mid),
                   std::abs(row.v_hi - oq.v_hi)};
    for (int i = 0; i < 6; ++i) sup[i] = std::max(sup[i], d[i]);
  }
  if (!any) throw std::invalid_argument("compare: no samples within horizon");
  for (int i = 0; i < 6; ++i) out.rows.push_back({s, names[i], sup[i]});
  return out;
}

}  // namespace vpgen
