#include "vpgen/datum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vpgen/mollifier.hpp"
#include "vpgen/radial_field.hpp"
#include "vpgen/rng.hpp"

namespace vpgen {
namespace {

constexpr double kPi = std::numbers::pi;

// rng streams; a draw is keyed by (seed, stream, global particle id)
enum Stream : std::uint64_t {
  kStratify = 0,   // mass-coordinate jitter within a stratum
  kVKernelR = 1,   // velocity-kernel radius
  kVKernelC = 2,   // velocity-kernel polar cosine
  kRKernel = 3,    // radial-kernel offset (shells)
  kSpeed = 4,      // speed draw (smooth phase profile)
  kVAngle = 5,     // velocity/radius angle (smooth phase profile)
};

// mass fraction of the profile (1 - x^2) on the unit ball, x in [0,1]
double parabolic_mass_fraction(double x) {
  return 0.5 * x * x * x * (5.0 - 3.0 * x * x);
}

double parabolic_quantile(double q) {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-15) {
    double mid = 0.5 * (lo + hi);
    (parabolic_mass_fraction(mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// velocity-kernel draw reduced to (dvr, dvperp): radius from the 3-d radial
// cdf, polar cosine uniform; the azimuth never enters reduced coordinates
void velocity_offset(const MollifierKernel& kv, const CounterRng& rng,
                     std::uint64_t id, double* dvr, double* dvperp) {
  double out[3];
  kv.sample_offset3(rng.uniform(kVKernelR, id), rng.uniform(kVKernelC, id),
                    0.0, out);
  *dvr = out[2];
  *dvperp = std::abs(out[0]);
}

void push_group(ParticleEnsemble& e, std::size_t count) {
  if (e.group_offsets.empty()) e.group_offsets.push_back(0);
  e.group_offsets.push_back(e.group_offsets.back() + count);
}

}  // namespace

double ColdProfile::rho(double r) const {
  if (r > radius) return 0.0;
  double x = r / radius;
  double r3 = radius * radius * radius;
  switch (kind) {
    case Kind::UniformBall:
      return 3.0 * mass / (4.0 * kPi * r3);
    case Kind::ParabolicBall:
      return 15.0 * mass / (8.0 * kPi * r3) * (1.0 - x * x);
  }
  return 0.0;
}

double ColdProfile::rho_sup() const { return rho(0.0); }

double ColdProfile::enclosed(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= radius) return mass;
  double x = r / radius;
  switch (kind) {
    case Kind::UniformBall:
      return mass * x * x * x;
    case Kind::ParabolicBall:
      return mass * parabolic_mass_fraction(x);
  }
  return 0.0;
}

double ColdProfile::quantile_radius(double mass_fraction) const {
  double q = std::clamp(mass_fraction, 0.0, 1.0);
  switch (kind) {
    case Kind::UniformBall:
      return radius * std::cbrt(q);
    case Kind::ParabolicBall:
      return radius * parabolic_quantile(q);
  }
  return 0.0;
}

double SmoothBump::amplitude() const {
  double c = 8.0 * kPi / 15.0;  // integral of (1 - |y|^2)+ over the unit ball
  double r3 = radius * radius * radius;
  double v3 = vmax * vmax * vmax;
  return mass / (c * r3 * c * v3);
}

double SingularDatum::total_mass() const {
  if (const auto* sb = std::get_if<SmoothBump>(&shape)) return sb->mass;
  if (const auto* cm = std::get_if<ColdMonokinetic>(&shape))
    return cm->rho0.mass;
  const auto& shells = std::get<ShellSum>(shape).shells;
  double total = 0.0;  // canonical component order; mass_sum() mirrors it
  for (const auto& sh : shells) total += sh.mass;
  return total;
}

double SingularDatum::support_radius() const {
  if (const auto* sb = std::get_if<SmoothBump>(&shape)) return sb->radius;
  if (const auto* cm = std::get_if<ColdMonokinetic>(&shape))
    return cm->rho0.radius;
  double r = 0.0;
  for (const auto& sh : std::get<ShellSum>(shape).shells)
    r = std::max(r, sh.radius);
  return r;
}

// Equal weights w0 = mass/n truncated so that every multiple k*w0 (k < n) is
// exactly representable; the last weight absorbs the truncation remainder via
// an exact subtraction. Hence all within-component partial sums are exact and
// the component's weights add up to exactly `component_mass`.
std::vector<double> exact_component_weights(double component_mass,
                                            std::size_t n) {
  if (!(component_mass > 0.0) || !std::isfinite(component_mass))
    throw std::invalid_argument("exact_component_weights: mass must be positive");
  if (n == 0)
    throw std::invalid_argument("exact_component_weights: need n >= 1");
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = component_mass;
    return w;
  }
  int keep = 52 - static_cast<int>(std::bit_width(n - 1));
  if (keep < 1)
    throw std::invalid_argument("exact_component_weights: n too large");
  double q = component_mass / static_cast<double>(n);
  int e;
  std::frexp(q, &e);
  double w0 = std::ldexp(std::floor(std::ldexp(q, keep - e)), e - keep);
  for (std::size_t i = 0; i + 1 < n; ++i) w[i] = w0;
  w[n - 1] = component_mass - static_cast<double>(n - 1) * w0;
  return w;
}

double ParticleEnsemble::mass_sum() const {
  // component partial sums are exact, so this equals the canonical fold of
  // the component masses bit for bit
  if (group_offsets.size() < 2) {
    double c = 0.0;
    for (double mi : m) c += mi;
    return c;
  }
  double total = 0.0;
  for (std::size_t g = 0; g + 1 < group_offsets.size(); ++g) {
    double c = 0.0;
    for (std::size_t i = group_offsets[g]; i < group_offsets[g + 1]; ++i)
      c += m[i];
    total += c;
  }
  return total;
}

namespace {

void regularize_cold(const ColdMonokinetic& cm, double s, std::size_t n,
                     const CounterRng& rng, bool cold_exact,
                     ParticleEnsemble& e) {
  if (!(cm.rho0.mass > 0.0) || !(cm.rho0.radius > 0.0))
    throw std::invalid_argument("regularize: cold profile needs positive mass and radius");
  double rho_sup = cm.rho0.rho_sup();
  double w_v = std::cbrt(s / rho_sup);
  MollifierKernel kv(w_v, 3);

  e.m = exact_component_weights(cm.rho0.mass, n);
  push_group(e, n);
  e.r.resize(n);
  e.vr.resize(n);
  e.L.resize(n);
  double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double jitter = cold_exact ? 0.5 : rng.uniform(kStratify, i);
    double r = cm.rho0.quantile_radius((static_cast<double>(i) + jitter) / dn);
    double vr = cm.w0(r), L = 0.0;
    if (!cold_exact) {
      double dvr, dvp;
      velocity_offset(kv, rng, i, &dvr, &dvp);
      vr += dvr;
      L = r * dvp;
    }
    e.r[i] = r;
    e.vr[i] = vr;
    e.L[i] = L;
  }

  double inf = std::numeric_limits<double>::infinity();
  e.fvalue_cap = cold_exact ? inf : rho_sup * kv.peak();
  e.fderiv_cap = cold_exact ? inf : rho_sup * kv.deriv_sup();
  e.w_r = 0.0;
  e.w_v = cold_exact ? 0.0 : w_v;
  // sampling must resolve the velocity-kernel scale radially
  if (!cold_exact && dn * w_v / cm.rho0.radius < 8.0)
    e.resolution_warning = true;
}

void regularize_shells(const ShellSum& ss, double s, std::size_t n,
                       const CounterRng& rng, ParticleEnsemble& e) {
  const auto& shells = ss.shells;
  std::size_t K = shells.size();
  if (K == 0) throw std::invalid_argument("regularize: shell list is empty");
  if (n < K)
    throw std::invalid_argument("regularize: fewer particles than shells");
  double mtot = 0.0;
  for (const auto& sh : shells) {
    if (!(sh.radius > 0.0))
      throw std::invalid_argument("regularize: shell radius must be positive");
    if (!(sh.mass > 0.0))
      throw std::invalid_argument("regularize: shell mass must be positive");
    mtot += sh.mass;
  }

  // counts proportional to mass, largest remainder, at least one per shell
  std::vector<std::size_t> counts(K);
  std::vector<std::pair<double, std::size_t>> frac(K);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double share = static_cast<double>(n) * shells[k].mass / mtot;
    counts[k] = std::max<std::size_t>(1, static_cast<std::size_t>(share));
    frac[k] = {share - std::floor(share), k};
    assigned += counts[k];
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (std::size_t j = 0; assigned < n; j = (j + 1) % K, ++assigned)
    ++counts[frac[j].second];
  while (assigned > n) {  // trim from the largest count
    std::size_t big = std::max_element(counts.begin(), counts.end()) -
                      counts.begin();
    if (counts[big] <= 1) break;
    --counts[big];
    --assigned;
  }

  double peak1 = MollifierKernel(1.0, 1).peak();
  double peak3 = MollifierKernel(1.0, 3).peak();
  e.w_r = std::numeric_limits<double>::infinity();
  e.w_v = std::numeric_limits<double>::infinity();

  std::vector<double> widths(K);
  std::size_t id = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const Shell& sh = shells[k];
    // balanced widths w_r = w_v = (A*s)^{1/4} put the nominal phase-density
    // peak of this shell at exactly 1/s
    double A = sh.mass * peak1 * peak3 / (4.0 * kPi * sh.radius * sh.radius);
    double w = std::pow(A * s, 0.25);
    widths[k] = w;
    if (sh.radius < w)
      throw std::invalid_argument(
          "regularize: shell at radius " + std::to_string(sh.radius) +
          " is narrower than its mollification width " + std::to_string(w));
    MollifierKernel kr(w, 1), kv(w, 3);

    auto wk = exact_component_weights(sh.mass, counts[k]);
    push_group(e, counts[k]);
    double dn = static_cast<double>(counts[k]);
    for (std::size_t j = 0; j < counts[k]; ++j, ++id) {
      double u = (static_cast<double>(j) + rng.uniform(kStratify, id)) / dn;
      double r = sh.radius + kr.sample_offset(u);
      double dvr, dvp;
      velocity_offset(kv, rng, id, &dvr, &dvp);
      e.r.push_back(r);
      e.vr.push_back(sh.velocity + dvr);
      e.L.push_back(r * dvp);
      e.m.push_back(wk[j]);
    }
    e.w_r = std::min(e.w_r, w);
    e.w_v = std::min(e.w_v, w);
    if (counts[k] < 8) e.resolution_warning = true;
  }

  // analytic sup of the mollified phase density: scan the sum of the radial
  // factors with every velocity kernel at its peak (exact for one shell,
  // an upper envelope for several)
  auto radial_term = [&](std::size_t k, double r) {
    const Shell& sh = shells[k];
    MollifierKernel kr(widths[k], 1), kv(widths[k], 3);
    return sh.mass * kr.density(r - sh.radius) / (4.0 * kPi * r * r) *
           kv.peak();
  };
  double cap = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double lo = std::max(1e-12, shells[k].radius - widths[k]);
    double hi = shells[k].radius + widths[k];
    for (int i = 0; i <= 512; ++i) {
      double r = lo + (hi - lo) * i / 512.0;
      double total = 0.0;
      for (std::size_t kk = 0; kk < K; ++kk) total += radial_term(kk, r);
      cap = std::max(cap, total);
    }
  }
  e.fvalue_cap = cap;

  double dcap = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    MollifierKernel kr(widths[k], 1), kv(widths[k], 3);
    double rmin = shells[k].radius - widths[k];
    double amp = shells[k].mass / (4.0 * kPi * rmin * rmin);
    dcap += amp * (kr.deriv_sup() * kv.peak() + kr.peak() * kv.deriv_sup() +
                   2.0 / rmin * kr.peak() * kv.peak());
  }
  e.fderiv_cap = dcap;
}

void regularize_smooth(const SmoothBump& sb, std::size_t n,
                       const CounterRng& rng, ParticleEnsemble& e) {
  if (!(sb.mass > 0.0) || !(sb.radius > 0.0) || !(sb.vmax > 0.0))
    throw std::invalid_argument("regularize: smooth profile needs positive mass, radius, vmax");
  e.m = exact_component_weights(sb.mass, n);
  push_group(e, n);
  e.r.resize(n);
  e.vr.resize(n);
  e.L.resize(n);
  double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = (static_cast<double>(i) + rng.uniform(kStratify, i)) / dn;
    double r = sb.radius * parabolic_quantile(u);
    double speed = sb.vmax * parabolic_quantile(rng.uniform(kSpeed, i));
    double c = 2.0 * rng.uniform(kVAngle, i) - 1.0;
    e.r[i] = r;
    e.vr[i] = speed * c;
    e.L[i] = r * speed * std::sqrt(std::max(0.0, 1.0 - c * c));
  }
  e.fvalue_cap = sb.amplitude();
  e.fderiv_cap =
      sb.amplitude() * 2.0 * std::max(1.0 / sb.radius, 1.0 / sb.vmax);
  e.w_r = 0.0;
  e.w_v = 0.0;
}

}  // namespace

ParticleEnsemble regularize(const SingularDatum& datum, double s,
                            std::size_t n_particles, std::uint64_t seed,
                            const RegularizeOptions& opt) {
  if (!(s > 0.0) || s > 1.0)
    throw std::invalid_argument("regularize: width s must lie in (0, 1]");
  if (n_particles == 0)
    throw std::invalid_argument("regularize: need at least one particle");

  ParticleEnsemble e;
  e.width = s;
  e.gamma = datum.gamma;
  CounterRng rng{seed};

  if (const auto* cm = std::get_if<ColdMonokinetic>(&datum.shape))
    regularize_cold(*cm, s, n_particles, rng, opt.cold_exact, e);
  else if (const auto* ss = std::get_if<ShellSum>(&datum.shape))
    regularize_shells(*ss, s, n_particles, rng, e);
  else
    regularize_smooth(std::get<SmoothBump>(datum.shape), n_particles, rng, e);

  e.total_mass = e.mass_sum();
  e.cap_constant = 2.0 * e.fvalue_cap * s;
  return e;
}

DatumNorms datum_norms(const ParticleEnsemble& e, const RadialGrid& grid) {
  if (e.size() == 0)
    throw std::invalid_argument("datum_norms: empty ensemble");
  grid.validate();
  DatumNorms out;
  out.l1 = e.mass_sum();

  std::size_t n = e.size();
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) {
    double vt = e.r[i] > 0.0 ? e.L[i] / e.r[i] : 0.0;
    speed[i] = std::hypot(e.vr[i], vt);
    out.support_r = std::max(out.support_r, e.r[i]);
    out.support_v = std::max(out.support_v, speed[i]);
  }
  if (out.support_v == 0.0) {
    // exact velocity delta: the sup is unbounded by construction
    out.linf_f = std::numeric_limits<double>::infinity();
    return out;
  }

  // phase-space cells: grid bins in r, uniform bins in speed sized to resolve
  // the velocity kernel; cell volume is the exact product of shell volumes
  double target = e.w_v > 0.0 ? e.w_v / 4.0 : out.support_v / 16.0;
  std::size_t nw = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(out.support_v / target)), 4, 256);
  double wmax = out.support_v * (1.0 + 1e-12);
  std::size_t nr = grid.bin_count();
  std::vector<double> cell(nr * nw, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t jr = grid.bin_of(e.r[i]);
    auto jw = std::min<std::size_t>(
        nw - 1, static_cast<std::size_t>(speed[i] / wmax * nw));
    cell[jr * nw + jw] += e.m[i];
  }
  double c43 = 4.0 * kPi / 3.0;
  for (std::size_t jr = 0; jr < nr; ++jr) {
    double r0 = grid.nodes[jr], r1 = grid.nodes[jr + 1];
    double vol_r = c43 * (r1 * r1 * r1 - r0 * r0 * r0);
    for (std::size_t jw = 0; jw < nw; ++jw) {
      double w0 = wmax * jw / nw, w1 = wmax * (jw + 1) / nw;
      double vol_w = c43 * (w1 * w1 * w1 - w0 * w0 * w0);
      double mass = cell[jr * nw + jw];
      if (mass > 0.0)
        out.linf_f = std::max(out.linf_f, mass / (vol_r * vol_w));
    }
  }
  return out;
}

}  // namespace vpgen
