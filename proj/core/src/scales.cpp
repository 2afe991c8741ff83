#include "vpgen/scales.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vpgen {
namespace {

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> g(n);
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
  return g;
}

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

void validate(const Scale& s) {
  switch (s.family) {
    case ScaleFamily::PowerOfLog:
    case ScaleFamily::IteratedLog:
      if (!(s.p > 0.0)) throw std::invalid_argument("scale: p must be > 0");
      break;
    case ScaleFamily::PowerLaw:
      if (!(s.a > 0.0)) throw std::invalid_argument("scale: a must be > 0");
      break;
  }
}

// log sigma as a function of y = log(lambda); lets the sampling window reach
// turnovers far beyond the floating range of lambda itself (the slowest
// built-in needs y ~ (C/2)^2 = 2500 before C*sigma^-p - log lambda bends over)
double log_sigma_at_log_lambda(const Scale& s, double y) {
  double ls = 0.0;
  switch (s.family) {
    case ScaleFamily::PowerOfLog:
      ls = -y / s.p;
      break;
    case ScaleFamily::IteratedLog:
      ls = y > 0.0 ? -(s.exponent / s.p) * std::log(y)
                   : std::numeric_limits<double>::infinity();
      break;
    case ScaleFamily::PowerLaw:
      ls = -s.a * std::exp(std::min(y, 700.0));
      break;
  }
  return std::min(ls, 0.0);
}

}  // namespace

double Scale::log_sigma(double lambda) const {
  double ls = 0.0;
  switch (family) {
    case ScaleFamily::PowerOfLog:
      ls = lambda > 0.0 ? -std::log(lambda) / p
                        : std::numeric_limits<double>::infinity();
      break;
    case ScaleFamily::IteratedLog:
      ls = lambda > 1.0 ? -(exponent / p) * std::log(std::log(lambda))
                        : std::numeric_limits<double>::infinity();
      break;
    case ScaleFamily::PowerLaw:
      ls = -a * lambda;
      break;
  }
  return std::min(ls, 0.0);  // sigma clamped into (0,1]
}

double Scale::sigma(double eps) const {
  if (!(eps > 0.0) || eps > 1.0)
    throw std::invalid_argument("scale: eps must lie in (0,1]");
  return std::exp(log_sigma(-std::log(eps)));
}

std::string Scale::describe() const {
  switch (family) {
    case ScaleFamily::PowerOfLog:
      return "power of log: |log eps|^(-1/" + std::to_string(p) + ")";
    case ScaleFamily::IteratedLog:
      return "iterated log: (log|log eps|)^(-" + std::to_string(exponent) +
             "/" + std::to_string(p) + ")";
    case ScaleFamily::PowerLaw:
      return "power law: eps^" + std::to_string(a);
  }
  return "?";
}

Scale Scale::power_of_log(double p) {
  Scale s;
  s.family = ScaleFamily::PowerOfLog;
  s.p = p;
  validate(s);
  return s;
}

Scale Scale::iterated_log(double p, double exponent) {
  Scale s;
  s.family = ScaleFamily::IteratedLog;
  s.p = p;
  s.exponent = exponent;
  validate(s);
  return s;
}

Scale Scale::power_law(double a) {
  Scale s;
  s.family = ScaleFamily::PowerLaw;
  s.a = a;
  validate(s);
  return s;
}

MembershipReport classify_scale(const Scale& scale, double p, int variant) {
  validate(scale);
  if (!(p > 0.0)) throw std::invalid_argument("classify_scale: p must be > 0");
  if (variant != 1 && variant != 2)
    throw std::invalid_argument("classify_scale: variant must be 1 or 2");

  MembershipReport rep;
  rep.variant = variant;
  rep.p = p;

  constexpr int kSamples = 256;
  // sigma must decrease to 0: probe deep into the formal grid
  {
    auto grid = log_spaced(2.0, 1e8, 64);
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : grid) {
      double ls = scale.log_sigma(lam);
      if (ls > prev + 1e-12)
        throw std::invalid_argument("classify_scale: sigma is not decreasing");
      prev = ls;
    }
    if (!(prev < std::log(0.9)))
      throw std::invalid_argument("classify_scale: sigma does not tend to 0");
  }

  if (variant == 1) {
    // eps from e^-1 down to 1e-300, i.e. lambda in [1, 690.8]
    auto grid = log_spaced(1.0, 690.77552789821, kSamples);
    std::vector<double> lx, ly;
    rep.certificate.reserve(grid.size());
    double max_stat = 0.0;
    for (double lam : grid) {
      double log_ratio = -scale.log_sigma(lam) - std::log(lam) / p;
      double ratio = log_ratio < 700.0 ? std::exp(log_ratio)
                                       : std::numeric_limits<double>::infinity();
      rep.certificate.emplace_back(lam, ratio);
      max_stat = std::max(max_stat, ratio);
      lx.push_back(std::log(lam));
      ly.push_back(log_ratio);
    }
    rep.max_statistic = max_stat;
    // bounded iff log(ratio) stops growing: tail slope in log-log at most ~0
    std::size_t half = lx.size() / 2;
    std::vector<double> tx(lx.begin() + half, lx.end());
    std::vector<double> ty(ly.begin() + half, ly.end());
    rep.member = fit_slope(tx, ty) <= 0.02;
    return rep;
  }

  // variant 2: walk y = log lambda out to 1e6 (formal eps = exp(-e^y)); for
  // each C the difference D = C*sigma^-p - log lambda must turn over (its sup
  // attained away from the deep end of the grid).
  auto grid = log_spaced(0.5, 1e6, kSamples);
  bool member = true;
  double max_stat = -std::numeric_limits<double>::infinity();
  for (double C : {1.0, 10.0, 100.0}) {
    std::vector<double> d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double e = -p * log_sigma_at_log_lambda(scale, grid[i]);
      double pw = e < 700.0 ? std::exp(e) : std::numeric_limits<double>::infinity();
      d[i] = C * pw - grid[i];
    }
    double global = *std::max_element(d.begin(), d.end());
    double tail = *std::max_element(d.begin() + 3 * d.size() / 4, d.end());
    bool ok = std::isfinite(global) &&
              tail < global - 1e-9 * (1.0 + std::abs(global));
    // monotone nonincreasing from the start also counts as bounded
    if (!ok) {
      bool decreasing = true;
      for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i] > d[i - 1] + 1e-12) { decreasing = false; break; }
      ok = decreasing;
    }
    member = member && ok;
    if (C == 100.0) {
      rep.certificate.reserve(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i)
        rep.certificate.emplace_back(grid[i], d[i]);
      max_stat = global;
    }
  }
  rep.member = member;
  rep.max_statistic = max_stat;
  return rep;
}

}  // namespace vpgen
