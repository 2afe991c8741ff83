#include "vpgen/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <thread>

namespace vpgen {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 1.0;
};

LineFit least_squares(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy <= 1e-30) {
    f.r2 = 1.0;
  } else {
    double ssres = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = y[i] - (f.intercept + f.slope * x[i]);
      ssres += e * e;
    }
    f.r2 = 1.0 - ssres / syy;
  }
  return f;
}

}  // namespace

std::size_t SweepResult::failures() const {
  std::size_t k = 0;
  for (const SweepRun& r : runs) k += r.failed ? 1 : 0;
  return k;
}

RadialGrid sweep_grid(const ParticleEnsemble& e, double margin,
                      std::size_t bins) {
  double rmax = 0.0;
  for (double r : e.r) rmax = std::max(rmax, r);
  if (rmax <= 0.0) rmax = 1.0;
  double outer = margin * rmax;
  if (bins == 0) {
    double w = std::numeric_limits<double>::infinity();
    if (e.w_r > 0.0) w = std::min(w, e.w_r);
    if (e.w_v > 0.0) w = std::min(w, e.w_v);
    if (!std::isfinite(w)) w = rmax / 64.0;
    double target = std::max(w / 4.0, outer / 16384.0);
    bins = static_cast<std::size_t>(std::ceil(outer / target));
    bins = std::clamp<std::size_t>(bins, 64, 2048);
  }
  return RadialGrid::uniform(outer, bins);
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.widths.size() < 1)
    throw std::invalid_argument("sweep: needs at least one width");
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i)
    if (!(spec.widths[i] > spec.widths[i + 1]))
      throw std::invalid_argument("sweep: widths must be strictly decreasing");

  SweepResult out;
  out.runs.resize(spec.widths.size());
  const double s0 = spec.widths.front();

  auto work = [&](std::size_t k) {
    SweepRun& run = out.runs[k];
    run.s = spec.widths[k];
    run.n = static_cast<std::size_t>(
        std::llround(static_cast<double>(spec.n0) * s0 / run.s));
    try {
      RegularizeOptions ropt;
      ropt.cold_exact = spec.cold_exact;
      ParticleEnsemble e =
          regularize(spec.datum, run.s, run.n, spec.seed, ropt);
      run.fvalue_cap = e.fvalue_cap;
      run.cap_constant = e.cap_constant;
      run.resolution_warning = e.resolution_warning;

      IntegrateOptions iopt;
      iopt.dt = default_dt(run.s, spec.eta);
      iopt.grid = sweep_grid(e, spec.grid_margin, spec.grid_bins);
      std::size_t steps = static_cast<std::size_t>(
          std::ceil(spec.T / iopt.dt - 1e-9));
      iopt.sample_every =
          std::max<std::size_t>(1, steps / std::max<std::size_t>(
                                            1, spec.sample_count));
      SimState state = make_state(std::move(e), FieldModel::SelfConsistent,
                                  0.0, spec.track_tangent);
      run.metrics = integrate(state, spec.T, iopt);
    } catch (const std::exception& ex) {
      run.failed = true;
      run.error = ex.what();
    }
  };

  int threads = std::max(1, spec.threads);
  if (threads == 1 || spec.widths.size() == 1) {
    for (std::size_t k = 0; k < spec.widths.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = static_cast<std::size_t>(t);
             k < spec.widths.size(); k += static_cast<std::size_t>(threads))
          work(k);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& sq) {
  if (sq.size() < 4)
    throw std::invalid_argument("fit_exponent: needs at least 4 samples");
  std::vector<double> x, y;
  for (auto& [s, q] : sq) {
    if (!(s > 0.0) || !(q > 0.0) || !std::isfinite(q))
      throw std::invalid_argument(
          "fit_exponent: samples must be positive and finite");
    x.push_back(std::log(1.0 / s));
    y.push_back(std::log(q));
  }
  LineFit f = least_squares(x, y);
  return {f.slope, f.intercept, f.r2};
}

bool RateTable::pass() const {
  for (const RateRow& r : rows)
    if (!r.pass) return false;
  return !rows.empty();
}

std::string RateTable::to_csv() const {
  std::string s = "quantity,slope,intercept,r2,bound,pass\n";
  char buf[192];
  for (const RateRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%d\n",
                  r.quantity.c_str(), r.fit.slope, r.fit.intercept, r.fit.r2,
                  r.bound, r.pass ? 1 : 0);
    s += buf;
  }
  return s;
}

RateTable verify_growth_rates(const SweepResult& sweep, double t_star,
                              double tolerance) {
  std::vector<const SweepRun*> ok;
  for (const SweepRun& r : sweep.runs)
    if (!r.failed) ok.push_back(&r);
  if (ok.size() < 4)
    throw std::invalid_argument(
        "growth rates: need at least 4 completed runs");

  struct Q {
    const char* name;
    double bound;
  };
  const Q quantities[] = {{"f", 1.0},      {"P", 1.0 / 3.0}, {"u", 4.0 / 3.0},
                          {"uprime", 4.0 / 3.0}, {"rho", 2.0},
                          {"Z", 1.0 / 3.0}};

  RateTable table;
  table.t_star = t_star;
  for (const Q& q : quantities) {
    std::vector<std::pair<double, double>> sq;
    for (const SweepRun* r : ok) {
      double v;
      if (std::string(q.name) == "f")
        v = r->fvalue_cap;
      else if (std::string(q.name) == "P")
        v = r->metrics.at("P", t_star);
      else if (std::string(q.name) == "u")
        v = r->metrics.at("u_sup", t_star);
      else if (std::string(q.name) == "uprime")
        v = r->metrics.at("force_sup", t_star);
      else if (std::string(q.name) == "rho")
        v = r->metrics.at("rho_sup", t_star);
      else
        v = std::max(r->metrics.at("P", t_star), r->metrics.at("Q", t_star));
      sq.emplace_back(r->s, v);
    }
    RateRow row;
    row.quantity = q.name;
    row.bound = q.bound;
    row.fit = fit_exponent(sq);
    double comp_max = 0.0, comp_min = std::numeric_limits<double>::infinity();
    double comp_head = 0.0;  // scale set by the two widest runs
    for (std::size_t k = 0; k < sq.size(); ++k) {
      double comp = sq[k].second * std::pow(sq[k].first, q.bound);
      comp_max = std::max(comp_max, comp);
      comp_min = std::min(comp_min, comp);
      if (k < 2) comp_head = std::max(comp_head, comp);
    }
    row.ratio_spread = comp_max / comp_min;
    row.pass = row.fit.slope <= q.bound + tolerance &&
               comp_max <= 2.5 * comp_head;
    table.rows.push_back(row);
  }
  return table;
}

TangentGrowthFit tangent_growth_fit(const SweepResult& sweep) {
  std::vector<double> x, y;
  TangentGrowthFit out;
  for (const SweepRun& r : sweep.runs) {
    if (r.failed) continue;
    if (r.metrics.tangent_sup.empty())
      throw std::invalid_argument("tangent fit: sweep ran without tangents");
    double ts = r.metrics.tangent_sup.back();
    if (!(ts > 0.0) || !std::isfinite(ts))
      throw std::invalid_argument("tangent fit: non-positive tangent sup");
    x.push_back(1.0 / (r.s * r.s));
    y.push_back(std::log(ts));
    if (r.metrics.tangent_invalid_peak * 10 > r.n) out.invalid_warning = true;
  }
  if (x.size() < 4)
    throw std::invalid_argument("tangent fit: need at least 4 runs");
  LineFit f = least_squares(x, y);
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  return out;
}

std::string stability_csv(const std::vector<StabilityRow>& rows) {
  std::string s = "s,delta,dZ,drho,dforce,amplification\n";
  char buf[224];
  for (const StabilityRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.s, r.delta, r.dZ, r.drho, r.dforce, r.amplification);
    s += buf;
  }
  return s;
}

StabilityRow stability_experiment(const StabilitySpec& spec) {
  ParticleEnsemble base = regularize(spec.datum, spec.s, spec.n, spec.seed);
  double kernel = std::max(base.w_r, base.w_v);
  if (spec.delta > 0.0 && kernel > 0.0 && spec.delta >= kernel)
    throw std::invalid_argument(
        "stability: delta must stay below the kernel width");

  const double R = spec.datum.support_radius();
  auto g = [R](double r) { return std::sin(kPi * r / R); };

  ParticleEnsemble pert = base;
  if (spec.mode == PerturbMode::Data && spec.delta != 0.0) {
    for (std::size_t i = 0; i < pert.size(); ++i) {
      pert.r[i] += spec.delta * g(pert.r[i]);
      pert.vr[i] += spec.delta * g(pert.r[i]);
    }
  }

  IntegrateOptions iopt;
  iopt.dt = default_dt(spec.s, spec.eta);
  iopt.grid = sweep_grid(base, spec.grid_margin, spec.grid_bins);
  iopt.allow_grid_extension = false;  // both runs must share the grid
  std::size_t steps =
      static_cast<std::size_t>(std::ceil(spec.T / iopt.dt - 1e-9));
  iopt.sample_every = std::max<std::size_t>(
      1, steps / std::max<std::size_t>(1, spec.sample_count));

  struct Capture {
    std::vector<std::vector<double>> r, vr;
  };
  auto run_one = [&](ParticleEnsemble e, bool forced, Capture* cap,
                     std::vector<FieldSnapshot>* snaps) {
    SimState st = make_state(std::move(e));
    if (forced) {
      double d = spec.delta;
      st.forcing = [d, g](double, double r) { return d * g(r); };
    }
    IntegrateOptions o = iopt;
    o.snapshots = snaps;
    o.observer = [cap](const SimState& s) {
      cap->r.push_back(s.ensemble.r);
      cap->vr.push_back(s.ensemble.vr);
    };
    integrate(st, spec.T, o);
  };

  Capture ca, cb;
  std::vector<FieldSnapshot> sa, sb;
  bool force_pert = spec.mode == PerturbMode::Forcing && spec.delta != 0.0;
  run_one(base, false, &ca, &sa);
  run_one(std::move(pert), force_pert, &cb, &sb);

  if (ca.r.size() != cb.r.size() || sa.size() != sb.size())
    throw std::logic_error("stability: sample counts diverged");

  StabilityRow row;
  row.s = spec.s;
  row.delta = spec.delta;
  for (std::size_t k = 0; k < ca.r.size(); ++k)
    for (std::size_t i = 0; i < ca.r[k].size(); ++i) {
      row.dZ = std::max(row.dZ, std::abs(ca.r[k][i] - cb.r[k][i]));
      row.dZ = std::max(row.dZ, std::abs(ca.vr[k][i] - cb.vr[k][i]));
    }
  for (std::size_t k = 0; k < sa.size(); ++k) {
    const auto& da = sa[k].density;
    const auto& db = sb[k].density;
    for (std::size_t j = 0; j < da.size(); ++j)
      row.drho = std::max(row.drho, std::abs(da[j] - db[j]));
    const auto& fa = sa[k].uprime;
    const auto& fb = sb[k].uprime;
    for (std::size_t j = 0; j < fa.size(); ++j)
      row.dforce = std::max(row.dforce, std::abs(fa[j] - fb[j]));
  }
  row.amplification = spec.delta != 0.0 ? row.dZ / spec.delta : 0.0;
  return row;
}

AmplificationFit amplification_fit(const std::vector<StabilityRow>& rows) {
  std::vector<double> x, y;
  for (const StabilityRow& r : rows) {
    if (!(r.s > 0.0) || !std::isfinite(r.amplification)) return {};
    double z = std::max(std::log(std::max(r.amplification, 1e-12)), 1e-9);
    y.push_back(std::log(z) - (4.0 / 3.0) * std::log(1.0 / r.s));
    x.push_back(1.0 / (r.s * r.s));
  }
  if (x.size() < 2) return {};
  AmplificationFit out;
  double B, c;
  if (x.size() == 2) {
    B = (y[1] - y[0]) / (x[1] - x[0]);
    c = y[0] - B * x[0];
  } else {
    LineFit f = least_squares(x, y);
    B = f.slope;
    c = f.intercept;
  }
  // lift the intercept so the law dominates every sample
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, y[i] - (c + B * x[i]));
  c += worst + 1e-12;
  out.A = std::exp(c);
  out.B = B;
  out.finite = std::isfinite(out.A) && std::isfinite(out.B);
  return out;
}

}  // namespace vpgen
