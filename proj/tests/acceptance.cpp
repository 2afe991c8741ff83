// Acceptance gates for the shipped experiments: one pass/fail line per
// criterion, tolerances pinned here.  Exit status is the number of failed
// gates clamped to 1, so CTest reports any regression.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "vpgen/asymptotics.hpp"
#include "vpgen/datum.hpp"
#include "vpgen/dynamics.hpp"
#include "vpgen/limits.hpp"
#include "vpgen/radial_field.hpp"
#include "vpgen/scales.hpp"

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kPi = 3.14159265358979323846;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strf(const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

struct Gate {
  int id;
  bool pass;
  std::string detail;
};
std::vector<Gate> gates;

void record(int id, bool pass, std::string detail) {
  gates.push_back({id, pass, std::move(detail)});
}

// Every metrics trace and field snapshot produced below feeds these two
// global gates: the enclosed-mass force bound and exact mass bookkeeping.
struct Tracker {
  std::mutex mu;
  std::size_t runs = 0;
  std::size_t snapshots = 0;
  std::size_t mass_samples = 0;
  double worst_excess = -1e300;  // max over runs of max r^2|u'| - total mass
  bool mass_exact = true;

  void add(const vpgen::RunMetrics& m) {
    if (m.mass.empty()) return;
    std::lock_guard<std::mutex> lk(mu);
    ++runs;
    worst_excess = std::max(worst_excess, m.max_r2_uprime - m.mass.front());
    std::uint64_t first;
    std::memcpy(&first, &m.mass.front(), sizeof first);
    for (double v : m.mass) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      if (bits != first) mass_exact = false;
      ++mass_samples;
    }
  }

  void add_snapshot(const vpgen::FieldSnapshot& s) {
    std::lock_guard<std::mutex> lk(mu);
    ++snapshots;
    worst_excess = std::max(worst_excess, s.max_r2_uprime - s.total_mass);
  }
} tracker;

vpgen::SingularDatum cold_ball() {
  vpgen::ColdMonokinetic cm;
  cm.rho0.kind = vpgen::ColdProfile::Kind::UniformBall;
  cm.w0.kind = vpgen::VelocityField::Kind::Zero;
  vpgen::SingularDatum d;
  d.shape = cm;
  d.gamma = 1.0;
  return d;
}

vpgen::SingularDatum single_shell() {
  vpgen::ShellSum ss;
  ss.shells.push_back({1.0, 0.0, 1.0});
  vpgen::SingularDatum d;
  d.shape = ss;
  d.gamma = 1.0;
  return d;
}

vpgen::ParticleEnsemble kepler_particle(double vr0) {
  vpgen::ParticleEnsemble e;
  e.r = {1.0};
  e.vr = {vr0};
  e.L = {1.0};
  e.m = {1.0};
  e.total_mass = 1.0;
  e.gamma = 1.0;
  e.group_offsets = {1};
  return e;
}

// Self-consistent run recording mass-quantile observables.  A refused
// sub-resolution center passage (step too large for the realized angular
// barrier) retries the whole run with a halved step; the sample cadence in
// physical time stays fixed so downstream argmin refinement is unaffected.
// Post-collapse a handful of under-resolved flyby particles can be flung
// past any fixed grid; when min_coverage > 0 a run cut short that way is
// still accepted if its samples already reach that time.
struct QuantileRun {
  vpgen::RunMetrics metrics;
  vpgen::QuantileSeries series;
  double dt = 0.0;
  int retries = 0;
  bool truncated = false;
};

QuantileRun run_quantiles(const vpgen::SingularDatum& datum, double s,
                          std::size_t n, double T, double dt0,
                          int max_retries, double grid_margin = 3.0,
                          double min_coverage = -1.0) {
  double dt = dt0;
  for (int attempt = 0;; ++attempt) {
    vpgen::ParticleEnsemble e = vpgen::regularize(datum, s, n, 1);
    vpgen::SimState st = vpgen::make_state(std::move(e));
    QuantileRun out;
    out.dt = dt;
    out.retries = attempt;
    vpgen::IntegrateOptions opt;
    opt.dt = dt;
    opt.sample_every = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(0.005 / dt)));
    opt.grid = vpgen::sweep_grid(st.ensemble, grid_margin, 0);
    opt.observer = vpgen::quantile_observer(&out.series);
    try {
      out.metrics = vpgen::integrate(st, T, opt);
      return out;
    } catch (const std::domain_error&) {
      if (attempt >= max_retries) throw;
      dt *= 0.5;
    } catch (const std::runtime_error&) {
      if (min_coverage > 0.0 && !out.series.rows.empty() &&
          out.series.rows.back().t >= min_coverage) {
        out.truncated = true;
        return out;
      }
      throw;
    }
  }
}

// Parabolic refinement of the sample argmin (uniform cadence assumed).
double refine_min_time(const std::vector<double>& t,
                       const std::vector<double>& y) {
  std::size_t k = 0;
  for (std::size_t j = 1; j < y.size(); ++j)
    if (y[j] < y[k]) k = j;
  if (k == 0 || k + 1 == y.size()) return t[k];
  double d2 = y[k - 1] - 2.0 * y[k] + y[k + 1];
  if (!(d2 > 0.0)) return t[k];
  double h = t[k + 1] - t[k];
  return t[k] + 0.5 * h * (y[k - 1] - y[k + 1]) / d2;
}

// ---- criterion 1: potential values of the uniform unit ball ---------------

void criterion1() {
  auto t0 = Clock::now();

  // Particle path: exact stratified sampling, bins aligned with the mass
  // strata so the bin-constant density matches the profile exactly.
  vpgen::RegularizeOptions ropt;
  ropt.cold_exact = true;
  vpgen::ParticleEnsemble e =
      vpgen::regularize(cold_ball(), 0.5, 100000, 1, ropt);

  vpgen::ColdProfile prof;  // unit ball
  std::vector<double> nodes;
  const std::size_t inner = 100, outer = 300;
  for (std::size_t k = 0; k < inner; ++k)
    nodes.push_back(prof.quantile_radius(static_cast<double>(k) / inner));
  for (std::size_t j = 0; j <= outer; ++j)
    nodes.push_back(1.0 + 3.0 * static_cast<double>(j) / outer);
  vpgen::RadialGrid grid{nodes};
  grid.validate();

  std::vector<double> mass = vpgen::mass_profile(e, grid);
  std::vector<double> dens = vpgen::density_estimate(e, grid);
  std::vector<double> u = vpgen::potential_profile(grid, mass, dens, 1.0);
  double err_particle = std::max({std::abs(u[0] + 1.5),
                                  std::abs(u[inner] + 1.0),
                                  std::abs(u[inner + 100] + 0.5)});
  tracker.add_snapshot(vpgen::build_snapshot(e, grid));

  // Convolution path on a midpoint lattice.
  auto rho3d = [](const std::array<double, 3>& x) {
    double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return r2 < 1.0 ? 3.0 / (4.0 * kPi) : 0.0;
  };
  std::vector<std::array<double, 3>> evals = {
      {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
  std::vector<double> u3 =
      vpgen::solve_vanishing_lattice(rho3d, 1.0, 0.0125, 1.0, evals);
  double err_lattice = std::max({std::abs(u3[0] + 1.5),
                                 std::abs(u3[1] + 1.0),
                                 std::abs(u3[2] + 0.5)});

  double secs = elapsed(t0);
  bool ok = err_particle <= 1e-6 && err_lattice <= 1e-3 && secs < 10.0;
  record(1, ok,
         strf("u(0),u(1),u(2) particle-path err=%.2e (<=1e-6), "
              "lattice err=%.2e (<=1e-3), %.1fs (<10s)",
              err_particle, err_lattice, secs));
}

// ---- criteria 3+4: growth-exponent sweep and tangent growth ----------------

void criteria3_4() {
  auto t0 = Clock::now();
  vpgen::SweepSpec spec;
  spec.datum = cold_ball();
  spec.widths = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  spec.n0 = 20000;
  spec.T = 0.8;
  spec.t_star = 0.6;
  spec.track_tangent = true;
  spec.sample_count = 64;
  spec.threads = static_cast<int>(
      std::min(6u, std::max(1u, std::thread::hardware_concurrency())));

  vpgen::SweepResult sweep;
  try {
    sweep = vpgen::run_sweep(spec);
  } catch (const std::exception& ex) {
    record(3, false, strf("exception: %s", ex.what()));
    record(4, false, strf("exception: %s", ex.what()));
    return;
  }
  double secs = elapsed(t0);
  for (const vpgen::SweepRun& r : sweep.runs)
    if (!r.failed) tracker.add(r.metrics);

  try {
    vpgen::RateTable table = vpgen::verify_growth_rates(sweep, 0.6, 0.15);
    auto slope = [&](const char* q) {
      for (const vpgen::RateRow& row : table.rows)
        if (row.quantity == q) return row.fit.slope;
      return std::nan("");
    };
    double sf = slope("f"), sP = slope("P"), su = slope("uprime"),
           sr = slope("rho");
    bool ok = sweep.failures() == 0 && sf <= 1.15 && sP <= 0.48 &&
              su <= 1.48 && sr <= 2.15 && secs < 300.0;
    record(3, ok,
           strf("exponents f=%.3f(<=1.15) P=%.3f(<=0.48) uprime=%.3f(<=1.48) "
                "rho=%.3f(<=2.15), %zu failed runs, %.0fs (<300s)",
                sf, sP, su, sr, sweep.failures(), secs));
  } catch (const std::exception& ex) {
    record(3, false, strf("exception: %s", ex.what()));
  }

  try {
    vpgen::TangentGrowthFit fit = vpgen::tangent_growth_fit(sweep);

    // Free-flow control at the same widths: the growth constant must vanish.
    vpgen::SweepResult control;
    for (double s : spec.widths) {
      vpgen::ParticleEnsemble e = vpgen::regularize(spec.datum, s, 4000, 1);
      vpgen::SimState st = vpgen::make_state(std::move(e), vpgen::FieldModel::None,
                                             0.0, true, 0.0);
      vpgen::IntegrateOptions opt;
      opt.dt = 5e-4;
      opt.sample_every = 100;
      opt.grid = vpgen::sweep_grid(st.ensemble, 3.0, 0);
      vpgen::SweepRun run;
      run.s = s;
      run.n = st.ensemble.size();
      run.metrics = vpgen::integrate(st, 0.8, opt);
      tracker.add(run.metrics);
      control.runs.push_back(std::move(run));
    }
    vpgen::TangentGrowthFit ctl = vpgen::tangent_growth_fit(control);

    std::string ys;
    for (const vpgen::SweepRun& r : sweep.runs)
      if (!r.failed && !r.metrics.tangent_sup.empty())
        ys += strf("%s%.2f", ys.empty() ? "" : " ",
                   std::log(r.metrics.tangent_sup.back()));
    bool ok = std::isfinite(fit.slope) && fit.slope > 0.0 && fit.r2 >= 0.9 &&
              std::abs(ctl.slope) <= 0.05;
    record(4, ok,
           strf("attractive C=%.4g R2=%.3f (need C>0, R2>=0.9), "
                "log-tangent per width [%s]; free-flow C=%.2e (|C|<=0.05)",
                fit.slope, fit.r2, ys.c_str(), ctl.slope));
  } catch (const std::exception& ex) {
    record(4, false, strf("exception: %s", ex.what()));
  }
}

// ---- criterion 6: integrator order on the point-mass orbit -----------------

double kepler_energy_dev(double dt) {
  vpgen::SimState st = vpgen::make_state(
      kepler_particle(0.3), vpgen::FieldModel::CentralMass, 1.0, false, 0.0);
  vpgen::IntegrateOptions opt;
  opt.dt = dt;
  opt.sample_every = 1;
  opt.grid = vpgen::RadialGrid::uniform(8.0, 64);
  vpgen::RunMetrics m = vpgen::integrate(st, 2.0, opt);
  tracker.add(m);
  double e0 = m.energy.front(), worst = 0.0;
  for (double ek : m.energy) worst = std::max(worst, std::abs(ek - e0));
  return worst;
}

void criterion6() {
  double d1 = kepler_energy_dev(2e-3);
  double d2 = kepler_energy_dev(1e-3);
  double d3 = kepler_energy_dev(5e-4);
  double r12 = d1 / d2, r23 = d2 / d3;

  vpgen::SimState cs = vpgen::make_state(
      kepler_particle(0.0), vpgen::FieldModel::CentralMass, 1.0, false, 0.0);
  const double dt = 1e-3;
  auto steps = static_cast<std::size_t>(std::ceil(100.0 * 2.0 * kPi / dt));
  double dev = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    vpgen::step(cs, dt);
    dev = std::max(dev, std::abs(cs.ensemble.r[0] - 1.0));
  }

  bool ok = r12 >= 3.5 && r23 >= 3.5 && dev <= 1e-6;
  record(6, ok,
         strf("energy-drift halving ratios %.2f, %.2f (>=3.5); "
              "circular |r-1| over 100 orbits: %.2e (<=1e-6)",
              r12, r23, dev));
}

// ---- criterion 7: collapse time of the cold uniform ball -------------------

void criterion7() {
  const double t_inf = kPi / (2.0 * std::sqrt(2.0));
  // The collapse-time offset of the argmin scales like the square of the
  // velocity kernel width, which only shrinks like the cube root of s, so
  // the limit is probed at widths well below the field-growth sweep's.
  const std::vector<double> widths = {0.032, 0.016, 0.008, 0.004, 0.002,
                                      0.001};
  struct WidthResult {
    double tmin = 0.0, err = 0.0;
    int retries = 0;
    bool ok = false, truncated = false;
    std::string error;
  };
  std::vector<WidthResult> res(widths.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    pool.emplace_back([&res, &widths, t_inf, i] {
      // Minimum-L particles pass the center closer than any affordable step
      // resolves; an unlucky passage slingshots them outward at enormous
      // speed.  The quantile observable never touches the metrics grid, so
      // a very wide (coarsely binned) grid keeps such ejecta inside through
      // T in almost every case; a truncated series is still accepted when
      // the r90 minimum is already bracketed, and otherwise the run rerolls
      // at a halved step.
      WidthResult wr;
      double dt0 = 5e-4;
      for (int reroll = 0; reroll < 3 && !wr.ok; ++reroll) {
        try {
          QuantileRun qr = run_quantiles(cold_ball(), widths[i], 6000, 1.5,
                                         dt0, 8, 400.0, 1.05);
          if (!qr.truncated) tracker.add(qr.metrics);
          std::vector<double> t, y;
          for (const vpgen::QuantileRow& row : qr.series.rows) {
            t.push_back(row.t);
            y.push_back(row.r90);
          }
          std::size_t k = 0;
          for (std::size_t j = 1; j < y.size(); ++j)
            if (y[j] < y[k]) k = j;
          if (qr.truncated && (k == 0 || k + 3 > y.size())) {
            wr.error = "minimum not bracketed before grid escape";
            dt0 = qr.dt * 0.5;
            continue;
          }
          wr.tmin = refine_min_time(t, y);
          wr.err = std::abs(wr.tmin - t_inf);
          wr.retries = qr.retries;
          wr.truncated = qr.truncated;
          wr.ok = true;
        } catch (const std::exception& ex) {
          wr.error = ex.what();
          dt0 *= 0.5;
        }
      }
      res[i] = wr;
    });
  }
  for (std::thread& th : pool) th.join();

  std::string errs;
  bool all_ok = true;
  int retries = 0, truncated = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    all_ok = all_ok && res[i].ok;
    retries += res[i].retries;
    truncated += res[i].truncated ? 1 : 0;
    errs += strf("%s%.4f", i ? " " : "", res[i].ok ? res[i].err : -1.0);
  }
  if (!all_ok) {
    std::string why;
    for (const WidthResult& w : res)
      if (!w.ok) why = w.error;
    record(7, false, strf("run failed: %s", why.c_str()));
    return;
  }
  double rel = res.back().err / t_inf;
  bool mono3 = false;
  for (std::size_t k = 0; k + 2 < res.size(); ++k)
    mono3 = mono3 ||
            (res[k].err > res[k + 1].err && res[k + 1].err > res[k + 2].err);
  bool ok = rel <= 0.02 && mono3;
  record(7, ok,
         strf("argmin-r90 errors per width [%s], finest rel err %.2f%% "
              "(<=2%%), 3-width monotone decrease: %s, retries %d, "
              "truncated tails %d",
              errs.c_str(), 100.0 * rel, mono3 ? "yes" : "no", retries,
              truncated));
}

// ---- criterion 8: single shell against the shell oracle --------------------

void criterion8() {
  vpgen::SingularDatum shell = single_shell();
  vpgen::ShellOracleOptions oopt;
  vpgen::OracleTrajectory oracle = vpgen::shell_oracle(
      std::get<vpgen::ShellSum>(shell.shape).shells, 1.0, 1.7, oopt);
  if (!std::isfinite(oracle.first_center)) {
    record(8, false, "oracle never reached the center");
    return;
  }
  double horizon = 0.9 * oracle.first_center;

  const std::vector<double> widths = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> errs(widths.size(), -1.0);
  std::vector<std::string> fails(widths.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    pool.emplace_back([&, i] {
      try {
        double s = widths[i];
        auto n = static_cast<std::size_t>(std::llround(4000.0 * 0.5 / s));
        QuantileRun qr = run_quantiles(shell, s, n, horizon, 1e-3, 5);
        tracker.add(qr.metrics);
        vpgen::Comparison cmp = vpgen::compare(s, qr.series, oracle, horizon);
        for (const vpgen::ComparisonRow& row : cmp.rows)
          if (row.observable == "r50") errs[i] = row.error;
      } catch (const std::exception& ex) {
        fails[i] = ex.what();
      }
    });
  }
  for (std::thread& th : pool) th.join();

  for (const std::string& f : fails)
    if (!f.empty()) {
      record(8, false, strf("run failed: %s", f.c_str()));
      return;
    }

  std::vector<std::pair<double, double>> sq;
  std::string list;
  bool decreasing = true;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    sq.emplace_back(widths[i], errs[i]);
    if (i && !(errs[i] < errs[i - 1])) decreasing = false;
    list += strf("%s%.4f", i ? " " : "", errs[i]);
  }
  vpgen::ExponentFit fit = vpgen::fit_exponent(sq);
  // fit_exponent regresses log(err) on log(1/s), so for a decreasing error
  // the convergence order is the negated slope.  The realized kernel width
  // scales like s^(1/4): the order in the width itself is four times the
  // order in s.
  double order_s = -fit.slope;
  bool ok = decreasing && order_s >= 1.0;
  record(8, ok,
         strf("r50 sup-errors [%s], monotone decrease: %s, fitted order in "
              "s %.2f (>=1; in kernel width: %.2f)",
              list.c_str(), decreasing ? "yes" : "no", order_s,
              4.0 * order_s));
}

// ---- criterion 9: linear response and amplification law --------------------

void criterion9() {
  vpgen::SingularDatum ball = cold_ball();
  auto run_stab = [&](double s, std::size_t n, double delta) {
    vpgen::StabilitySpec sp;
    sp.datum = ball;
    sp.s = s;
    sp.n = n;
    sp.delta = delta;
    sp.T = 0.5;
    sp.seed = 1;
    return vpgen::stability_experiment(sp);
  };

  // The density/force deviations are sups of binned fields, quantized in
  // units of (particle mass)/(bin volume); the particle count must be large
  // enough that the smooth delta-proportional response dominates that
  // quantum, and delta small enough that the most sensitive trajectories
  // stay in the linear regime.
  vpgen::StabilityRow zero = run_stab(0.25, 200000, 0.0);
  vpgen::StabilityRow a = run_stab(0.25, 200000, 4e-3);
  vpgen::StabilityRow b = run_stab(0.25, 200000, 2e-3);
  auto ratio_ok = [](double x, double y) {
    double r = x / y;
    return r >= 1.6 && r <= 2.4;
  };
  bool linear = ratio_ok(a.dZ, b.dZ) && ratio_ok(a.drho, b.drho) &&
                ratio_ok(a.dforce, b.dforce);
  bool zero_ok = std::abs(zero.dZ) < 1e-12 && std::abs(zero.drho) < 1e-12 &&
                 std::abs(zero.dforce) < 1e-12;

  std::vector<vpgen::StabilityRow> rows;
  for (double s : {0.5, 0.25, 0.125, 0.0625})
    rows.push_back(
        run_stab(s, static_cast<std::size_t>(std::llround(10000.0 * 0.5 / s)),
                 1e-4));
  vpgen::AmplificationFit af = vpgen::amplification_fit(rows);

  bool ok = linear && zero_ok && af.finite && std::isfinite(af.A) &&
            std::isfinite(af.B);
  record(9, ok,
         strf("delta-halving ratios dZ=%.2f drho=%.2f dforce=%.2f "
              "(in [1.6,2.4]); zero-perturbation max diff %.1e (<1e-12); "
              "amplification law A=%.3g B=%.3g finite=%s",
              a.dZ / b.dZ, a.drho / b.drho, a.dforce / b.dforce,
              std::max({std::abs(zero.dZ), std::abs(zero.drho),
                        std::abs(zero.dforce)}),
              af.A, af.B, af.finite ? "yes" : "no"));
}

// ---- criterion 10: scale classifier ----------------------------------------

void criterion10() {
  using vpgen::Scale;
  vpgen::MembershipReport m1 =
      vpgen::classify_scale(Scale::power_of_log(2.0), 2.0, 1);
  vpgen::MembershipReport m2 =
      vpgen::classify_scale(Scale::power_law(0.1), 2.0, 1);
  vpgen::MembershipReport m3 =
      vpgen::classify_scale(Scale::iterated_log(2.0, 0.5), 2.0, 2);
  bool examples = m1.member && !m2.member && m3.member;

  std::vector<Scale> builtins = {
      Scale::power_of_log(1.0), Scale::power_of_log(2.0),
      Scale::power_of_log(3.0), Scale::iterated_log(2.0, 0.5),
      Scale::iterated_log(3.0, 1.0), Scale::power_law(0.1),
      Scale::power_law(0.05)};
  bool implication = true;
  for (const Scale& sc : builtins)
    for (double p : {1.0, 2.0, 3.0})
      if (vpgen::classify_scale(sc, p, 2).member &&
          !vpgen::classify_scale(sc, p, 1).member)
        implication = false;

  bool nesting = true;
  for (double apar : {1.0, 2.0, 3.0})
    for (int variant : {1, 2})
      for (int p = 1; p <= 3; ++p)
        for (int q = 1; q <= p; ++q)
          if (vpgen::classify_scale(Scale::power_of_log(apar), p, variant)
                  .member &&
              !vpgen::classify_scale(Scale::power_of_log(apar), q, variant)
                   .member)
            nesting = false;

  bool ok = examples && implication && nesting;
  record(10, ok,
         strf("examples %d/%d/%d (want 1/0/1); strong=>weak on built-ins: %s; "
              "family nesting in p: %s",
              m1.member ? 1 : 0, m2.member ? 1 : 0, m3.member ? 1 : 0,
              implication ? "yes" : "no", nesting ? "yes" : "no"));
}

// ---- criterion 11: vanishing-at-infinity conditions ------------------------

void criterion11() {
  // Plateau smoothly cut to zero: decays fine but hides sources past an
  // empty support claim.
  vpgen::VanishingProbe plateau;
  for (double r = 0.05; r <= 40.0 + 1e-9; r += 0.05) {
    plateau.r.push_back(r);
    double x = (r - 10.0) / 10.0;
    double u = x <= 0.0   ? 1.0
               : x >= 1.0 ? 0.0
                          : 1.0 - x * x * x * (x * (x * 6.0 - 15.0) + 10.0);
    plateau.u.push_back(u);
  }
  plateau.claimed_support = 0.0;
  vpgen::VanishingConditions pc = vpgen::check_vanishing_conditions(plateau);
  bool plateau_ok = pc.cond_i && !pc.cond_ii;

  auto radial_probe = [](vpgen::ColdProfile::Kind kind) {
    vpgen::RadialDensityProfile prof;
    prof.grid = vpgen::RadialGrid::uniform(8.0, 1600);
    prof.support_radius = 1.0;
    prof.gamma = 1.0;
    vpgen::ColdProfile cp;
    cp.kind = kind;
    for (std::size_t j = 0; j < prof.grid.bin_count(); ++j) {
      double mid = 0.5 * (prof.grid.nodes[j] + prof.grid.nodes[j + 1]);
      prof.rho.push_back(cp.rho(mid));
    }
    prof.rho.push_back(0.0);
    vpgen::VanishingProbe probe;
    probe.r = prof.grid.nodes;
    probe.u = vpgen::solve_vanishing_radial(prof);
    probe.claimed_support = 1.0;
    return vpgen::check_vanishing_conditions(probe);
  };
  vpgen::VanishingConditions vball =
      radial_probe(vpgen::ColdProfile::Kind::UniformBall);
  vpgen::VanishingConditions vpara =
      radial_probe(vpgen::ColdProfile::Kind::ParabolicBall);

  // Particle-snapshot potential as a third solver output.
  vpgen::ParticleEnsemble pe = vpgen::regularize(single_shell(), 0.25, 20000, 1);
  double rmax = 0.0;
  for (double ri : pe.r) rmax = std::max(rmax, ri);
  vpgen::FieldSnapshot snap =
      vpgen::build_snapshot(pe, vpgen::RadialGrid::uniform(4.0 * rmax, 2000));
  tracker.add_snapshot(snap);
  vpgen::VanishingProbe pprobe;
  pprobe.r = snap.grid.nodes;
  pprobe.u = snap.potential;
  // The binned field's vacuum starts at the upper edge of the last occupied
  // bin, not at the outermost particle radius inside it.
  pprobe.claimed_support = rmax;
  for (std::size_t j = 0; j < snap.grid.bin_count(); ++j)
    if (snap.density[j] != 0.0)
      pprobe.claimed_support = snap.grid.nodes[j + 1];
  vpgen::VanishingConditions vpart = vpgen::check_vanishing_conditions(pprobe);

  bool solver_ok = vball.cond_i && vball.cond_ii && vpara.cond_i &&
                   vpara.cond_ii && vpart.cond_i && vpart.cond_ii;
  record(11, plateau_ok && solver_ok,
         strf("plateau net (i,ii)=(%d,%d) want (1,0); solver outputs "
              "ball(%d,%d) parabolic(%d,%d) particle(%d,%d) want all (1,1)",
              pc.cond_i ? 1 : 0, pc.cond_ii ? 1 : 0, vball.cond_i ? 1 : 0,
              vball.cond_ii ? 1 : 0, vpara.cond_i ? 1 : 0,
              vpara.cond_ii ? 1 : 0, vpart.cond_i ? 1 : 0,
              vpart.cond_ii ? 1 : 0));
}

void guard(int id, void (*body)()) {
  try {
    body();
  } catch (const std::exception& ex) {
    record(id, false, strf("exception: %s", ex.what()));
  }
}

}  // namespace

int main() {
  std::printf("acceptance gates\n");
  guard(1, criterion1);
  criteria3_4();  // records 3 and 4 itself
  guard(6, criterion6);
  guard(7, criterion7);
  guard(8, criterion8);
  guard(9, criterion9);
  guard(10, criterion10);
  guard(11, criterion11);

  record(2, tracker.runs > 0 && tracker.worst_excess <= 1e-9,
         strf("max r^2|u'| - M over %zu runs + %zu snapshots: %.3e (<=1e-9)",
              tracker.runs, tracker.snapshots, tracker.worst_excess));
  record(5, tracker.runs > 0 && tracker.mass_exact,
         strf("mass column bitwise-constant across %zu runs (%zu samples): %s",
              tracker.runs, tracker.mass_samples,
              tracker.mass_exact ? "yes" : "no"));

  std::sort(gates.begin(), gates.end(),
            [](const Gate& a, const Gate& b) { return a.id < b.id; });
  int failures = 0;
  for (const Gate& g : gates) {
    std::printf("criterion %2d: %s - %s\n", g.id, g.pass ? "PASS" : "FAIL",
                g.detail.c_str());
    failures += g.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", gates.size() - failures,
              gates.size());
  return failures > 0 ? 1 : 0;
}
