#include "vpgen/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vpgen {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

// strict accessor: every key must be consumed exactly once
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_.empty() ? "expected an object"
                                           : "\"" + path_ + "\" must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    seen_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail("key \"" + full(key) + "\" has the wrong type");
    }
  }

  template <typename T>
  T get_or(const std::string& key, T def) {
    if (!j_.contains(key)) return def;
    return get<T>(key);
  }

  void require(std::initializer_list<const char*> keys) const {
    std::string missing;
    for (const char* k : keys)
      if (!j_.contains(k)) missing += missing.empty() ? std::string(k)
                                                      : ", " + std::string(k);
    if (!missing.empty()) fail("missing required key(s): " + missing);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key \"" + full(it.key()) + "\"");
  }

  std::string full(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  std::string path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SingularDatum parse_datum(const json& j) {
  Obj o(j, "datum");
  o.require({"type"});
  std::string type = o.get<std::string>("type");
  SingularDatum d;
  d.gamma = o.get_or<double>("gamma", 1.0);
  if (d.gamma != 1.0 && d.gamma != -1.0)
    fail("\"datum.gamma\" must be +1 or -1");
  if (type == "cold") {
    ColdMonokinetic c;
    std::string profile = o.get_or<std::string>("profile", "uniform");
    if (profile == "uniform")
      c.rho0.kind = ColdProfile::Kind::UniformBall;
    else if (profile == "parabolic")
      c.rho0.kind = ColdProfile::Kind::ParabolicBall;
    else
      fail("\"datum.profile\" must be \"uniform\" or \"parabolic\"");
    c.rho0.mass = o.get_or<double>("mass", 1.0);
    c.rho0.radius = o.get_or<double>("radius", 1.0);
    double hubble = o.get_or<double>("hubble", 0.0);
    c.w0.kind = hubble == 0.0 ? VelocityField::Kind::Zero
                              : VelocityField::Kind::Hubble;
    c.w0.hubble = hubble;
    if (!(c.rho0.mass > 0.0) || !(c.rho0.radius > 0.0))
      fail("\"datum\" mass and radius must be positive");
    d.shape = c;
  } else if (type == "shells") {
    o.require({"shells"});
    const json& arr = o.raw("shells");
    if (!arr.is_array() || arr.empty())
      fail("\"datum.shells\" must be a non-empty array");
    ShellSum sum;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Obj so(arr[i], "datum.shells[" + std::to_string(i) + "]");
      so.require({"r", "m"});
      Shell sh;
      sh.radius = so.get<double>("r");
      sh.velocity = so.get_or<double>("v", 0.0);
      sh.mass = so.get<double>("m");
      so.finish();
      if (!(sh.radius > 0.0) || !(sh.mass > 0.0))
        fail("shell radii and masses must be positive");
      sum.shells.push_back(sh);
    }
    d.shape = sum;
  } else if (type == "smooth") {
    SmoothBump b;
    b.mass = o.get_or<double>("mass", 1.0);
    b.radius = o.get_or<double>("radius", 1.0);
    b.vmax = o.get_or<double>("vmax", 1.0);
    if (!(b.mass > 0.0) || !(b.radius > 0.0) || !(b.vmax > 0.0))
      fail("\"datum\" mass, radius and vmax must be positive");
    d.shape = b;
  } else {
    fail("\"datum.type\" must be one of cold, shells, smooth");
  }
  o.finish();
  return d;
}

json datum_to_json(const SingularDatum& d) {
  json j;
  j["gamma"] = d.gamma;
  if (const auto* c = std::get_if<ColdMonokinetic>(&d.shape)) {
    j["type"] = "cold";
    j["profile"] = c->rho0.kind == ColdProfile::Kind::UniformBall
                       ? "uniform"
                       : "parabolic";
    j["mass"] = c->rho0.mass;
    j["radius"] = c->rho0.radius;
    j["hubble"] = c->w0.kind == VelocityField::Kind::Hubble ? c->w0.hubble
                                                            : 0.0;
  } else if (const auto* s = std::get_if<ShellSum>(&d.shape)) {
    j["type"] = "shells";
    json arr = json::array();
    for (const Shell& sh : s->shells)
      arr.push_back({{"r", sh.radius}, {"v", sh.velocity}, {"m", sh.mass}});
    j["shells"] = arr;
  } else {
    const auto& b = std::get<SmoothBump>(d.shape);
    j["type"] = "smooth";
    j["mass"] = b.mass;
    j["radius"] = b.radius;
    j["vmax"] = b.vmax;
  }
  return j;
}

ExperimentConfig parse_config(const json& j) {
  Obj o(j, "");
  o.require({"experiment"});
  ExperimentConfig c;
  c.experiment = o.get<std::string>("experiment");
  const std::set<std::string> kinds = {"run",   "sweep",        "stability",
                                       "limit", "poisson-check", "scale-check"};
  if (!kinds.count(c.experiment))
    fail("\"experiment\" must be one of run, sweep, stability, limit, "
         "poisson-check, scale-check");

  bool needs_datum = c.experiment == "run" || c.experiment == "sweep" ||
                     c.experiment == "stability" || c.experiment == "limit";
  if (needs_datum) {
    o.require({"datum"});
    c.datum = parse_datum(o.raw("datum"));
    c.has_datum = true;
  } else if (o.has("datum")) {
    c.datum = parse_datum(o.raw("datum"));
    c.has_datum = true;
  }

  bool needs_widths = c.experiment == "sweep" || c.experiment == "stability" ||
                      c.experiment == "limit";
  if (needs_widths) {
    o.require({"widths"});
    c.widths = o.get<std::vector<double>>("widths");
    if (c.widths.empty()) fail("\"widths\" must be non-empty");
    for (std::size_t i = 0; i < c.widths.size(); ++i) {
      if (!(c.widths[i] > 0.0) || c.widths[i] > 1.0)
        fail("\"widths\" entries must lie in (0, 1]");
      if (i + 1 < c.widths.size() && !(c.widths[i] > c.widths[i + 1]))
        fail("\"widths\" must be strictly decreasing");
    }
  } else if (o.has("widths")) {
    c.widths = o.get<std::vector<double>>("widths");
  }

  c.width = o.get_or<double>("width", c.width);
  if (!(c.width > 0.0) || c.width > 1.0) fail("\"width\" must lie in (0, 1]");
  c.n0 = o.get_or<std::size_t>("n0", c.n0);
  if (c.n0 == 0) fail("\"n0\" must be positive");
  c.T = o.get_or<double>("T", c.T);
  if (!(c.T > 0.0)) fail("\"T\" must be positive");
  c.eta = o.get_or<double>("eta", c.eta);
  if (!(c.eta > 0.0) || c.eta > 1.0) fail("\"eta\" must lie in (0, 1]");
  c.t_star = o.get_or<double>("t_star", -1.0);
  if (c.t_star < 0.0) c.t_star = 0.75 * c.T;
  if (c.t_star > c.T) fail("\"t_star\" must not exceed T");
  c.tolerance = o.get_or<double>("tolerance", c.tolerance);
  if (!(c.tolerance >= 0.0)) fail("\"tolerance\" must be non-negative");
  c.grid_bins = o.get_or<std::size_t>("grid_bins", c.grid_bins);
  c.grid_margin = o.get_or<double>("grid_margin", c.grid_margin);
  if (!(c.grid_margin >= 1.0)) fail("\"grid_margin\" must be at least 1");
  c.seed = o.get_or<std::uint64_t>("seed", c.seed);
  c.track_tangent = o.get_or<bool>("track_tangent", c.track_tangent);
  c.sample_count = o.get_or<std::size_t>("sample_count", c.sample_count);
  if (c.sample_count == 0) fail("\"sample_count\" must be positive");
  c.cold_exact = o.get_or<bool>("cold_exact", c.cold_exact);

  c.delta = o.get_or<double>("delta", c.delta);
  if (c.delta < 0.0) fail("\"delta\" must be non-negative");
  c.perturb_mode = o.get_or<std::string>("perturb_mode", c.perturb_mode);
  if (c.perturb_mode != "data" && c.perturb_mode != "forcing")
    fail("\"perturb_mode\" must be \"data\" or \"forcing\"");

  c.dt_oracle_ratio = o.get_or<double>("dt_oracle_ratio", c.dt_oracle_ratio);
  if (!(c.dt_oracle_ratio >= 1.0)) fail("\"dt_oracle_ratio\" must be >= 1");
  c.oracle_labels = o.get_or<std::size_t>("oracle_labels", c.oracle_labels);
  if (c.oracle_labels == 0) fail("\"oracle_labels\" must be positive");
  c.horizon_fraction = o.get_or<double>("horizon_fraction", c.horizon_fraction);
  if (!(c.horizon_fraction > 0.0) || c.horizon_fraction > 1.0)
    fail("\"horizon_fraction\" must lie in (0, 1]");

  c.lattice_h = o.get_or<double>("lattice_h", c.lattice_h);
  if (!(c.lattice_h > 0.0)) fail("\"lattice_h\" must be positive");

  if (o.has("scale")) {
    Obj so(o.raw("scale"), "scale");
    c.scale_family = so.get_or<std::string>("family", c.scale_family);
    if (c.scale_family != "power-of-log" && c.scale_family != "iterated-log" &&
        c.scale_family != "power-law")
      fail("\"scale.family\" must be power-of-log, iterated-log or power-law");
    c.scale_p = so.get_or<double>("p", c.scale_p);
    c.scale_exponent = so.get_or<double>("exponent", c.scale_exponent);
    c.scale_a = so.get_or<double>("a", c.scale_a);
    c.scale_variant = so.get_or<int>("variant", c.scale_variant);
    if (c.scale_variant != 1 && c.scale_variant != 2)
      fail("\"scale.variant\" must be 1 or 2");
    so.finish();
  }

  c.out = o.get_or<std::string>("out", c.out);
  o.finish();
  return c;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    // unreadable input is a runtime failure, not a bad argument
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: expected an object");
  return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open \"" + path + "\"");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  if (c.has_datum) j["datum"] = datum_to_json(c.datum);
  if (!c.widths.empty()) j["widths"] = c.widths;
  j["width"] = c.width;
  j["n0"] = c.n0;
  j["T"] = c.T;
  j["eta"] = c.eta;
  j["t_star"] = c.t_star;
  j["tolerance"] = c.tolerance;
  j["grid_bins"] = c.grid_bins;
  j["grid_margin"] = c.grid_margin;
  j["seed"] = c.seed;
  j["track_tangent"] = c.track_tangent;
  j["sample_count"] = c.sample_count;
  j["cold_exact"] = c.cold_exact;
  j["delta"] = c.delta;
  j["perturb_mode"] = c.perturb_mode;
  j["dt_oracle_ratio"] = c.dt_oracle_ratio;
  j["oracle_labels"] = c.oracle_labels;
  j["horizon_fraction"] = c.horizon_fraction;
  j["lattice_h"] = c.lattice_h;
  j["scale"] = {{"family", c.scale_family},
                {"p", c.scale_p},
                {"exponent", c.scale_exponent},
                {"a", c.scale_a},
                {"variant", c.scale_variant}};
  j["out"] = c.out;
  return j.dump(2) + "\n";
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

}  // namespace vpgen
