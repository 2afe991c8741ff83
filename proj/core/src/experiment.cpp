#include "vpgen/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include "vpgen/asymptotics.hpp"
#include "vpgen/limits.hpp"
#include "vpgen/radial_field.hpp"
#include "vpgen/scales.hpp"
#include "vpgen/version.hpp"

namespace vpgen {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string width_label(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", s);
  return buf;
}

std::string now_iso() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sanitize(std::string msg) {
  for (char& c : msg)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return msg;
}

struct Sink {
  fs::path dir;
  ExperimentResult* result;

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
    result->artifacts.push_back(name);
  }
};

// ---- small CSV reader (report path) ----------------------------------------

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("csv: missing column " + name);
  }
};

Csv read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (ss.eof() && !line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      csv.header = cells;
      first = false;
    } else {
      csv.rows.push_back(cells);
    }
  }
  return csv;
}

// ---- shared pieces ----------------------------------------------------------

SweepSpec sweep_spec_from(const ExperimentConfig& cfg, int threads) {
  SweepSpec spec;
  spec.datum = cfg.datum;
  spec.widths = cfg.widths;
  spec.n0 = cfg.n0;
  spec.T = cfg.T;
  spec.eta = cfg.eta;
  spec.t_star = cfg.t_star;
  spec.grid_bins = cfg.grid_bins;
  spec.grid_margin = cfg.grid_margin;
  spec.seed = cfg.seed;
  spec.track_tangent = cfg.track_tangent;
  spec.sample_count = cfg.sample_count;
  spec.threads = threads;
  spec.cold_exact = cfg.cold_exact;
  return spec;
}

std::string runs_csv(const SweepResult& sweep) {
  std::string s = "s,n,fvalue_cap,cap_constant,resolution_warning,failed,error\n";
  for (const SweepRun& r : sweep.runs)
    s += fmt17(r.s) + "," + std::to_string(r.n) + "," + fmt17(r.fvalue_cap) +
         "," + fmt17(r.cap_constant) + "," +
         (r.resolution_warning ? "1" : "0") + "," + (r.failed ? "1" : "0") +
         "," + sanitize(r.error) + "\n";
  return s;
}

std::string summary_csv(const SweepResult& sweep, const ExperimentConfig& cfg) {
  RateTable table = verify_growth_rates(sweep, cfg.t_star, cfg.tolerance);
  std::string s = table.to_csv();
  if (cfg.track_tangent) {
    TangentGrowthFit tf = tangent_growth_fit(sweep);
    char buf[192];
    std::snprintf(buf, sizeof buf, "tangent,%.17g,%.17g,%.17g,%.17g,%d\n",
                  tf.slope, tf.intercept, tf.r2,
                  std::numeric_limits<double>::infinity(),
                  std::isfinite(tf.slope) ? 1 : 0);
    s += buf;
  }
  return s;
}

void do_run(const ExperimentConfig& cfg, const Sink& sink,
            ExperimentResult& result) {
  try {
    RegularizeOptions ropt;
    ropt.cold_exact = cfg.cold_exact;
    ParticleEnsemble e =
        regularize(cfg.datum, cfg.width, cfg.n0, cfg.seed, ropt);
    IntegrateOptions iopt;
    iopt.dt = default_dt(cfg.width, cfg.eta);
    iopt.grid = sweep_grid(e, cfg.grid_margin, cfg.grid_bins);
    std::size_t steps =
        static_cast<std::size_t>(std::ceil(cfg.T / iopt.dt - 1e-9));
    iopt.sample_every = std::max<std::size_t>(
        1, steps / std::max<std::size_t>(1, cfg.sample_count));
    std::vector<FieldSnapshot> snaps;
    iopt.snapshots = &snaps;
    SimState state = make_state(std::move(e), FieldModel::SelfConsistent, 0.0,
                                cfg.track_tangent);
    RunMetrics metrics = integrate(state, cfg.T, iopt);
    sink.write("metrics.csv", metrics.to_csv());
    if (!snaps.empty()) sink.write("snapshot.csv", snaps.back().to_csv());
  } catch (const std::exception& ex) {
    result.failures.push_back(std::string("run: ") + ex.what());
  }
}

void do_sweep(const ExperimentConfig& cfg, int threads, const Sink& sink,
              ExperimentResult& result) {
  SweepResult sweep = run_sweep(sweep_spec_from(cfg, threads));
  for (const SweepRun& r : sweep.runs) {
    if (r.failed) {
      result.failures.push_back("s=" + width_label(r.s) + ": " + r.error);
      continue;
    }
    sink.write("metrics_s" + width_label(r.s) + ".csv", r.metrics.to_csv());
  }
  sink.write("runs.csv", runs_csv(sweep));
  try {
    sink.write("summary.csv", summary_csv(sweep, cfg));
  } catch (const std::exception& ex) {
    result.failures.push_back(std::string("summary: ") + ex.what());
  }
}

void do_stability(const ExperimentConfig& cfg, int threads, const Sink& sink,
                  ExperimentResult& result) {
  struct Unit {
    double s, delta;
  };
  std::vector<Unit> units;
  units.push_back({cfg.widths.front(), 0.0});  // built-in zero-pert control
  for (double s : cfg.widths) {
    units.push_back({s, cfg.delta});
    units.push_back({s, cfg.delta / 2.0});
  }
  std::vector<StabilityRow> rows(units.size());
  std::vector<std::string> errors(units.size());
  const double s0 = cfg.widths.front();

  auto work = [&](std::size_t k) {
    StabilitySpec spec;
    spec.datum = cfg.datum;
    spec.s = units[k].s;
    spec.n = static_cast<std::size_t>(
        std::llround(static_cast<double>(cfg.n0) * s0 / units[k].s));
    spec.delta = units[k].delta;
    spec.mode = cfg.perturb_mode == "forcing" ? PerturbMode::Forcing
                                              : PerturbMode::Data;
    spec.T = cfg.T;
    spec.eta = cfg.eta;
    spec.grid_bins = cfg.grid_bins;
    spec.grid_margin = std::max(cfg.grid_margin, 4.0);
    spec.seed = cfg.seed;
    spec.sample_count = std::min<std::size_t>(cfg.sample_count, 16);
    try {
      rows[k] = stability_experiment(spec);
    } catch (const std::exception& ex) {
      errors[k] = ex.what();
      rows[k].s = units[k].s;
      rows[k].delta = units[k].delta;
    }
  };

  int nt = std::max(1, threads);
  if (nt == 1) {
    for (std::size_t k = 0; k < units.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = static_cast<std::size_t>(t); k < units.size();
             k += static_cast<std::size_t>(nt))
          work(k);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<StabilityRow> ok;
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (!errors[k].empty()) {
      result.failures.push_back("s=" + width_label(units[k].s) +
                                " delta=" + width_label(units[k].delta) +
                                ": " + errors[k]);
      continue;
    }
    ok.push_back(rows[k]);
  }
  sink.write("stability.csv", stability_csv(ok));

  std::vector<StabilityRow> at_delta;
  for (const StabilityRow& r : ok)
    if (r.delta == cfg.delta) at_delta.push_back(r);
  AmplificationFit fit = amplification_fit(at_delta);
  sink.write("amplification.csv",
             "A,B,finite\n" + fmt17(fit.A) + "," + fmt17(fit.B) + "," +
                 (fit.finite ? std::string("1") : std::string("0")) + "\n");
}

void do_limit(const ExperimentConfig& cfg, int threads, const Sink& sink,
              ExperimentResult& result) {
  const double dt_finest = default_dt(cfg.widths.back(), cfg.eta);
  OracleTrajectory oracle;
  if (const auto* shells = std::get_if<ShellSum>(&cfg.datum.shape)) {
    ShellOracleOptions o;
    o.dt = dt_finest / cfg.dt_oracle_ratio;
    o.sample_dt = dt_finest;
    oracle = shell_oracle(shells->shells, cfg.datum.gamma, cfg.T, o);
  } else if (const auto* cold = std::get_if<ColdMonokinetic>(&cfg.datum.shape)) {
    ColdOracleOptions o;
    o.labels = cfg.oracle_labels;
    o.dt = dt_finest / cfg.dt_oracle_ratio;
    o.sample_dt = dt_finest;
    oracle = cold_euler_oracle(cold->rho0, cold->w0, cfg.datum.gamma, cfg.T, o);
  } else {
    throw std::invalid_argument(
        "config: limit experiment requires a cold or shells datum");
  }
  sink.write("oracle.csv", oracle.to_csv());

  double event = std::min(oracle.first_crossing, oracle.first_center);
  double horizon =
      std::isfinite(event) ? cfg.horizon_fraction * event : cfg.T;
  double t_run = std::min(cfg.T, horizon);

  struct Unit {
    double s = 0;
    QuantileSeries series;
    bool failed = false;
    std::string error;
  };
  std::vector<Unit> units(cfg.widths.size());
  const double s0 = cfg.widths.front();

  auto work = [&](std::size_t k) {
    Unit& u = units[k];
    u.s = cfg.widths[k];
    try {
      std::size_t n = static_cast<std::size_t>(
          std::llround(static_cast<double>(cfg.n0) * s0 / u.s));
      RegularizeOptions ropt;
      ropt.cold_exact = cfg.cold_exact;
      ParticleEnsemble e = regularize(cfg.datum, u.s, n, cfg.seed, ropt);
      IntegrateOptions iopt;
      iopt.dt = default_dt(u.s, cfg.eta);
      iopt.grid = sweep_grid(e, cfg.grid_margin, cfg.grid_bins);
      std::size_t steps =
          static_cast<std::size_t>(std::ceil(t_run / iopt.dt - 1e-9));
      iopt.sample_every = std::max<std::size_t>(
          1, steps / std::max<std::size_t>(1, cfg.sample_count));
      iopt.observer = quantile_observer(&u.series);
      SimState state = make_state(std::move(e));
      integrate(state, t_run, iopt);
    } catch (const std::exception& ex) {
      u.failed = true;
      u.error = ex.what();
    }
  };

  int nt = std::max(1, threads);
  if (nt == 1) {
    for (std::size_t k = 0; k < units.size(); ++k) work(k);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t k = static_cast<std::size_t>(t); k < units.size();
             k += static_cast<std::size_t>(nt))
          work(k);
      });
    for (auto& th : pool) th.join();
  }

  std::string comparison = "s,observable,error\n";
  std::map<std::string, std::vector<std::pair<double, double>>> per_obs;
  for (const Unit& u : units) {
    if (u.failed) {
      result.failures.push_back("s=" + width_label(u.s) + ": " + u.error);
      continue;
    }
    Comparison cmp = compare(u.s, u.series, oracle, horizon);
    for (const ComparisonRow& row : cmp.rows) {
      comparison += fmt17(row.s) + "," + row.observable + "," +
                    fmt17(row.error) + "\n";
      per_obs[row.observable].emplace_back(row.s, row.error);
    }
  }
  sink.write("comparison.csv", comparison);

  std::string conv = "quantity,slope,intercept,r2,bound,pass\n";
  bool any_fit = false;
  for (const auto& [name, sq] : per_obs) {
    if (sq.size() < 4) continue;
    bool positive = true;
    for (const auto& [s, q] : sq) positive = positive && q > 0.0;
    if (!positive) continue;
    ExponentFit fit = fit_exponent(sq);
    bool radius = name[0] == 'r';
    double bound = radius ? 1.0 : 0.0;
    bool pass = radius ? fit.slope >= bound : fit.slope > bound;
    char buf[192];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%d\n",
                  name.c_str(), fit.slope, fit.intercept, fit.r2, bound,
                  pass ? 1 : 0);
    conv += buf;
    any_fit = true;
  }
  if (any_fit) sink.write("convergence.csv", conv);
}

void do_poisson_check(const ExperimentConfig& cfg, const Sink& sink) {
  double M = 1.0, R = 1.0;
  double gamma = cfg.has_datum ? cfg.datum.gamma : 1.0;
  if (cfg.has_datum)
    if (const auto* cold = std::get_if<ColdMonokinetic>(&cfg.datum.shape)) {
      M = cold->rho0.mass;
      R = cold->rho0.radius;
    }
  const double pi = 3.14159265358979323846;
  const double rho0 = 3.0 * M / (4.0 * pi * R * R * R);
  auto u_exact = [&](double r) {
    return r <= R ? -gamma * M * (3.0 * R * R - r * r) / (2.0 * R * R * R)
                  : -gamma * M / r;
  };

  // radial path on a grid with nodes exactly at multiples of R/1024
  RadialDensityProfile prof;
  prof.grid = RadialGrid::uniform(4.0 * R, 4096);
  prof.rho.assign(prof.grid.nodes.size(), 0.0);
  for (std::size_t j = 0; j + 1 < prof.grid.nodes.size(); ++j)
    if (prof.grid.nodes[j] < R) prof.rho[j] = rho0;
  prof.support_radius = R;
  prof.gamma = gamma;
  std::vector<double> u_radial = solve_vanishing_radial(prof);

  auto rho3d = [&](const std::array<double, 3>& x) {
    double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    return r < R ? rho0 : 0.0;
  };
  std::vector<double> evals = {0.0, 0.5 * R, R, 1.5 * R, 2.0 * R};
  std::vector<std::array<double, 3>> pts;
  for (double r : evals) pts.push_back({r, 0.0, 0.0});
  std::vector<double> u_lat =
      solve_vanishing_lattice(rho3d, R, cfg.lattice_h, gamma, pts);

  std::string pcsv = "r,u_radial,u_lattice,u_exact\n";
  for (std::size_t i = 0; i < evals.size(); ++i) {
    double r = evals[i];
    std::size_t j = static_cast<std::size_t>(
        std::llround(r / (prof.grid.outer() / prof.grid.bin_count())));
    pcsv += fmt17(r) + "," + fmt17(u_radial[j]) + "," + fmt17(u_lat[i]) + "," +
            fmt17(u_exact(r)) + "\n";
  }
  sink.write("poisson.csv", pcsv);

  VanishingProbe solver_probe;
  solver_probe.r = prof.grid.nodes;
  solver_probe.u = u_radial;
  solver_probe.claimed_support = R;
  solver_probe.width = 1.0;
  VanishingConditions solver_cond = check_vanishing_conditions(solver_probe);

  // plateau smoothly cut to zero far out, with an empty source claim: decays
  // (trivially, C = 0) but its Laplacian does not vanish in the cut region
  VanishingProbe plateau;
  const std::size_t n = 400;
  for (std::size_t i = 0; i <= n; ++i) {
    double r = 40.0 * static_cast<double>(i) / static_cast<double>(n);
    double u;
    if (r <= 10.0) {
      u = 1.0;
    } else if (r >= 20.0) {
      u = 0.0;
    } else {
      double x = (r - 10.0) / 10.0;
      u = 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    }
    plateau.r.push_back(r);
    plateau.u.push_back(u);
  }
  plateau.claimed_support = 0.0;
  plateau.width = 1.0;
  VanishingConditions plateau_cond = check_vanishing_conditions(plateau);

  std::string ccsv = "case,cond_i,cond_ii\n";
  ccsv += std::string("solver_output,") + (solver_cond.cond_i ? "1" : "0") +
          "," + (solver_cond.cond_ii ? "1" : "0") + "\n";
  ccsv += std::string("plateau,") + (plateau_cond.cond_i ? "1" : "0") + "," +
          (plateau_cond.cond_ii ? "1" : "0") + "\n";
  sink.write("conditions.csv", ccsv);
}

void do_scale_check(const ExperimentConfig& cfg, const Sink& sink,
                    ExperimentResult& result) {
  Scale scale;
  if (cfg.scale_family == "power-of-log")
    scale = Scale::power_of_log(cfg.scale_p);
  else if (cfg.scale_family == "iterated-log")
    scale = Scale::iterated_log(cfg.scale_p, cfg.scale_exponent);
  else
    scale = Scale::power_law(cfg.scale_a);
  MembershipReport rep = classify_scale(scale, cfg.scale_p, cfg.scale_variant);

  std::string mcsv = "family,p,variant,member,max_statistic\n";
  mcsv += cfg.scale_family + "," + fmt17(cfg.scale_p) + "," +
          std::to_string(rep.variant) + "," + (rep.member ? "1" : "0") + "," +
          fmt17(rep.max_statistic) + "\n";
  sink.write("membership.csv", mcsv);

  std::string scsv = "lambda,statistic\n";
  for (const auto& [lambda, stat] : rep.certificate)
    scsv += fmt17(lambda) + "," + fmt17(stat) + "\n";
  sink.write("scale.csv", scsv);

  result.note = std::string("membership ") + (rep.member ? "true" : "false");
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir, int threads) {
  if (out_dir.empty())
    throw std::invalid_argument("config: no output directory given");
  ExperimentResult result;
  result.out_dir = out_dir;
  fs::create_directories(out_dir);
  Sink sink{out_dir, &result};

  const std::string started = now_iso();
  const std::string cfg_json = config_to_json(cfg);
  sink.write("config.json", cfg_json);

  if (cfg.experiment == "run")
    do_run(cfg, sink, result);
  else if (cfg.experiment == "sweep")
    do_sweep(cfg, threads, sink, result);
  else if (cfg.experiment == "stability")
    do_stability(cfg, threads, sink, result);
  else if (cfg.experiment == "limit")
    do_limit(cfg, threads, sink, result);
  else if (cfg.experiment == "poisson-check")
    do_poisson_check(cfg, sink);
  else if (cfg.experiment == "scale-check")
    do_scale_check(cfg, sink, result);
  else
    throw std::invalid_argument("config: unknown experiment kind \"" +
                                cfg.experiment + "\"");

  json manifest;
  manifest["config_sha256"] = sha256_hex(cfg_json);
  manifest["version"] = kVersion;
  manifest["started"] = started;
  manifest["finished"] = now_iso();
  manifest["failures"] = result.failures;
  sink.write("manifest.json", manifest.dump(2) + "\n");
  return result;
}

ExperimentResult run_report(const std::string& dir) {
  ExperimentResult result;
  result.out_dir = dir;
  ExperimentConfig cfg = load_config((fs::path(dir) / "config.json").string());
  if (cfg.experiment != "sweep")
    throw std::invalid_argument(
        "report: directory does not hold a sweep (config.json kind \"" +
        cfg.experiment + "\")");

  Csv runs = read_csv(fs::path(dir) / "runs.csv");
  SweepResult sweep;
  std::size_t c_s = runs.col("s"), c_n = runs.col("n"),
              c_cap = runs.col("fvalue_cap"),
              c_const = runs.col("cap_constant"),
              c_warn = runs.col("resolution_warning"),
              c_failed = runs.col("failed"), c_err = runs.col("error");
  for (const auto& row : runs.rows) {
    SweepRun r;
    r.s = std::stod(row.at(c_s));
    r.n = static_cast<std::size_t>(std::stoull(row.at(c_n)));
    r.fvalue_cap = std::stod(row.at(c_cap));
    r.cap_constant = std::stod(row.at(c_const));
    r.resolution_warning = row.at(c_warn) == "1";
    r.failed = row.at(c_failed) == "1";
    if (c_err < row.size()) r.error = row.at(c_err);
    if (!r.failed) {
      Csv m = read_csv(fs::path(dir) /
                       ("metrics_s" + width_label(r.s) + ".csv"));
      auto col = [&](const char* name) {
        std::vector<double> v;
        std::size_t c = m.col(name);
        for (const auto& mr : m.rows) v.push_back(std::stod(mr.at(c)));
        return v;
      };
      r.metrics.t = col("t");
      r.metrics.P = col("P");
      r.metrics.Q = col("Q");
      r.metrics.rho_sup = col("rho_sup");
      r.metrics.force_sup = col("force_sup");
      r.metrics.u_sup = col("u_sup");
      r.metrics.mass = col("mass");
      r.metrics.energy = col("energy");
      r.metrics.tangent_sup = col("tangent_sup");
    }
    sweep.runs.push_back(std::move(r));
  }

  Sink sink{dir, &result};
  sink.write("summary.csv", summary_csv(sweep, cfg));
  result.note = "summary.csv rebuilt from " +
                std::to_string(sweep.runs.size() - sweep.failures()) +
                " runs";
  return result;
}

}  // namespace vpgen
