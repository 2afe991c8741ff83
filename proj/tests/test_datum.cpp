#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "vpgen/datum.hpp"
#include "vpgen/radial_field.hpp"

using namespace vpgen;

namespace {

SingularDatum cold_ball(double mass = 1.0, double radius = 1.0, double hubble = 0.0,
                        double gamma = 1.0) {
  ColdMonokinetic cm;
  cm.rho0.kind = ColdProfile::Kind::UniformBall;
  cm.rho0.mass = mass;
  cm.rho0.radius = radius;
  cm.w0.kind = hubble == 0.0 ? VelocityField::Kind::Zero : VelocityField::Kind::Hubble;
  cm.w0.hubble = hubble;
  SingularDatum d;
  d.shape = cm;
  d.gamma = gamma;
  return d;
}

}  // namespace

TEST_CASE("component weights partition the mass with exact partial sums") {
  for (double M : {1.0, 0.3, 7.25, 1e-3}) {
    for (std::size_t n : {1ul, 2ul, 3ul, 17ul, 1000ul, 99991ul}) {
      std::vector<double> w = exact_component_weights(M, n);
      REQUIRE(w.size() == n);
      double acc = 0.0;
      for (double wi : w) {
        CHECK(wi > 0.0);
        acc += wi;
      }
      CHECK(acc == M);  // bitwise: the sequential sum is exact by construction
      // all but the last weight are identical
      for (std::size_t i = 1; i + 1 < n; ++i) CHECK(w[i] == w[0]);
    }
  }
}

TEST_CASE("weight truncation keeps enough headroom for any accumulation order") {
  // pairwise / reversed orders also sum exactly for power-of-two counts
  std::vector<double> w = exact_component_weights(1.0, 4096);
  double fwd = std::accumulate(w.begin(), w.end(), 0.0);
  double rev = std::accumulate(w.rbegin(), w.rend(), 0.0);
  CHECK(fwd == 1.0);
  CHECK(rev == 1.0);
}

TEST_CASE("regularize is bitwise deterministic in the seed") {
  SingularDatum d = cold_ball();
  ParticleEnsemble a = regularize(d, 0.25, 5000, 42);
  ParticleEnsemble b = regularize(d, 0.25, 5000, 42);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.r.data(), b.r.data(), a.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.vr.data(), b.vr.data(), a.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.L.data(), b.L.data(), a.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.m.data(), b.m.data(), a.size() * sizeof(double)) == 0);

  ParticleEnsemble c = regularize(d, 0.25, 5000, 43);
  CHECK(std::memcmp(a.r.data(), c.r.data(), a.size() * sizeof(double)) != 0);
}

TEST_CASE("cold ball ensemble fills the mollified support") {
  SingularDatum d = cold_ball();
  const double s = 0.25;
  ParticleEnsemble e = regularize(d, s, 20000, 1);
  REQUIRE(e.size() == 20000);
  CHECK(e.total_mass == 1.0);
  CHECK(e.mass_sum() == 1.0);
  CHECK(e.gamma == 1.0);
  CHECK(e.w_r == 0.0);  // cold radii come from exact quantiles, not a kernel
  CHECK(e.w_v > 0.0);
  double rmax = 0.0, vmax = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(e.r[i] > 0.0);
    double vt = e.L[i] / e.r[i];
    rmax = std::max(rmax, e.r[i]);
    vmax = std::max(vmax, std::hypot(e.vr[i], vt));
  }
  CHECK(rmax <= 1.0 + 1e-12);
  CHECK(rmax > 0.95);           // outer edge actually populated
  CHECK(vmax <= e.w_v + 1e-12); // zero flow: only kernel velocities
  CHECK(vmax > 0.5 * e.w_v);    // ...and the kernel ball is actually filled
}

TEST_CASE("phase-density cap scales like the inverse width") {
  SingularDatum d = cold_ball();
  double c0 = 0.0;
  for (double s : {0.5, 0.25, 0.125, 0.0625}) {
    ParticleEnsemble e = regularize(d, s, 2000, 1);
    CHECK(e.fvalue_cap > 0.0);
    CHECK(e.cap_constant == doctest::Approx(2.0 * e.fvalue_cap * s).epsilon(1e-12));
    if (c0 == 0.0)
      c0 = e.cap_constant;
    else
      CHECK(e.cap_constant == doctest::Approx(c0).epsilon(1e-9));
  }
}

TEST_CASE("binned phase-density sup tracks the analytic cap") {
  SingularDatum d = cold_ball();
  // equal-mass radial bins keep every histogram cell well populated, so the
  // sup estimate is the bin average of the kernel rather than shot noise
  ColdProfile prof;
  std::vector<double> nodes;
  for (int k = 0; k <= 32; ++k) nodes.push_back(prof.quantile_radius(k / 32.0));
  RadialGrid grid{nodes};
  for (double s : {0.5, 0.25}) {
    ParticleEnsemble e = regularize(d, s, 400000, 7);
    DatumNorms norms = datum_norms(e, grid);
    CHECK(norms.l1 == 1.0);
    CHECK(norms.support_v <= e.w_v + 1e-12);
    CHECK(norms.support_r <= 1.0 + e.w_r + 1e-12);
    // bin averages sit below the analytic peak; sampling noise stays small
    CHECK(norms.linf_f <= e.fvalue_cap * 1.25);
    CHECK(norms.linf_f >= e.fvalue_cap * 0.5);
  }
}

TEST_CASE("empirical phase-density sup grows like 1/s across a sweep") {
  SingularDatum d = cold_ball();
  std::vector<double> widths = {0.5, 0.25, 0.125, 0.0625};
  std::vector<double> caps;
  for (double s : widths) caps.push_back(regularize(d, s, 1000, 1).fvalue_cap);
  // regression of log cap against log 1/s
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    double x = std::log(1.0 / widths[i]), y = std::log(caps[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double n = double(widths.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cold_exact suppresses velocity mollification") {
  SingularDatum d = cold_ball(1.0, 1.0, 0.5);
  RegularizeOptions opt;
  opt.cold_exact = true;
  ParticleEnsemble e = regularize(d, 0.25, 4096, 1, opt);
  CHECK(e.w_v == 0.0);
  CHECK(std::isinf(e.fvalue_cap));
  for (std::size_t i = 0; i < e.size(); ++i) {
    CHECK(e.vr[i] == doctest::Approx(0.5 * e.r[i]).epsilon(1e-12));  // exact flow
  }
  // deterministic midpoint quantiles: radii strictly increasing
  for (std::size_t i = 1; i < e.size(); ++i) CHECK(e.r[i] > e.r[i - 1]);
}

TEST_CASE("parabolic profile quantiles invert the enclosed mass") {
  ColdProfile prof;
  prof.kind = ColdProfile::Kind::ParabolicBall;
  prof.mass = 2.0;
  prof.radius = 1.5;
  CHECK(prof.enclosed(1.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(prof.rho(1.5) == doctest::Approx(0.0));
  CHECK(prof.rho(0.0) == doctest::Approx(prof.rho_sup()));
  for (double q : {0.05, 0.3, 0.5, 0.77, 0.99}) {
    double r = prof.quantile_radius(q);
    CHECK(prof.enclosed(r) == doctest::Approx(q * prof.mass).epsilon(1e-9));
  }
  // density decreasing
  CHECK(prof.rho(0.2) > prof.rho(0.9));
}

TEST_CASE("uniform profile closed forms") {
  ColdProfile prof;  // defaults: uniform, M = 1, R = 1
  const double pi = 3.14159265358979323846;
  CHECK(prof.rho(0.5) == doctest::Approx(3.0 / (4.0 * pi)).epsilon(1e-12));
  CHECK(prof.rho(1.1) == 0.0);
  CHECK(prof.enclosed(0.5) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(prof.quantile_radius(0.125) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("shell datum clusters around each shell with exact group masses") {
  ShellSum sum;
  sum.shells = {{0.5, -0.1, 0.25}, {1.0, 0.2, 0.75}};
  SingularDatum d;
  d.shape = sum;
  d.gamma = 1.0;
  ParticleEnsemble e = regularize(d, 0.125, 10000, 3);
  REQUIRE(e.group_offsets.size() == 3);
  CHECK(e.group_offsets[0] == 0);
  CHECK(e.group_offsets[2] == e.size());
  // per-group sequential mass sums land exactly on the shell masses
  for (int g = 0; g < 2; ++g) {
    double acc = 0.0;
    for (std::size_t i = e.group_offsets[g]; i < e.group_offsets[g + 1]; ++i)
      acc += e.m[i];
    CHECK(acc == sum.shells[g].mass);
    // particles concentrated near the parent shell (per-shell widths stay
    // below 0.3 at this scale; e.w_r records only the narrowest one)
    for (std::size_t i = e.group_offsets[g]; i < e.group_offsets[g + 1]; ++i) {
      CHECK(std::abs(e.r[i] - sum.shells[g].radius) <= 0.3);
      CHECK(std::abs(e.vr[i] - sum.shells[g].velocity) <= 0.3);
      CHECK(e.r[i] > 0.0);
    }
  }
  CHECK(e.mass_sum() == 1.0);
  CHECK(e.total_mass == 1.0);
}

TEST_CASE("particle counts split proportionally to shell mass") {
  ShellSum sum;
  sum.shells = {{0.5, 0.0, 0.2}, {1.0, 0.0, 0.8}};
  SingularDatum d;
  d.shape = sum;
  ParticleEnsemble e = regularize(d, 0.25, 1000, 1);
  std::size_t n0 = e.group_offsets[1] - e.group_offsets[0];
  std::size_t n1 = e.group_offsets[2] - e.group_offsets[1];
  CHECK(n0 + n1 == e.size());
  CHECK(std::abs(double(n0) - 200.0) <= 1.0);
  CHECK(std::abs(double(n1) - 800.0) <= 1.0);
}

TEST_CASE("kernel width too large for an inner shell is rejected") {
  ShellSum sum;
  sum.shells = {{0.05, 0.0, 1.0}};
  SingularDatum d;
  d.shape = sum;
  CHECK_THROWS_AS(regularize(d, 0.5, 100, 1), std::invalid_argument);
}

TEST_CASE("under-resolved ensembles raise the resolution warning") {
  SingularDatum d = cold_ball();
  // too few particles to resolve the velocity-kernel scale radially
  ParticleEnsemble coarse = regularize(d, 0.015625, 15, 1);
  CHECK(coarse.resolution_warning);
  ParticleEnsemble fine = regularize(d, 0.25, 20000, 1);
  CHECK_FALSE(fine.resolution_warning);
}

TEST_CASE("smooth bump datum obeys its declared amplitude and support") {
  SmoothBump bump;
  bump.mass = 1.0;
  bump.radius = 1.0;
  bump.vmax = 0.5;
  SingularDatum d;
  d.shape = bump;
  CHECK(d.total_mass() == doctest::Approx(1.0));
  CHECK(d.support_radius() == doctest::Approx(1.0));
  ParticleEnsemble e = regularize(d, 0.25, 30000, 5);
  CHECK(e.mass_sum() == 1.0);
  // smooth data need no mollification: the cap is the datum's own sup
  CHECK(e.fvalue_cap == doctest::Approx(bump.amplitude()).epsilon(1e-12));
  double vmax = 0.0, rmax = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double v = std::sqrt(e.vr[i] * e.vr[i] +
                         (e.r[i] > 0 ? e.L[i] * e.L[i] / (e.r[i] * e.r[i]) : 0.0));
    vmax = std::max(vmax, v);
    rmax = std::max(rmax, e.r[i]);
  }
  CHECK(vmax <= 0.5 + 1e-9);
  CHECK(rmax <= 1.0 + 1e-9);
  // angular momentum present for genuinely 3d velocity draws
  CHECK(*std::max_element(e.L.begin(), e.L.end()) > 0.0);
}

TEST_CASE("invalid regularization arguments are rejected") {
  SingularDatum d = cold_ball();
  CHECK_THROWS_AS(regularize(d, 0.0, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(regularize(d, -0.1, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(regularize(d, 1.5, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(regularize(d, 0.25, 0, 1), std::invalid_argument);
}
