#include "vpgen/mollifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "vpgen/quadrature.hpp"

namespace vpgen {
namespace {

constexpr double kPi = std::numbers::pi;
// sup_t |d/dt exp(-1/(1-t^2))|, attained at t = 0.75983568565158056
constexpr double kBumpDerivSup = 0.7984297518335995;

struct UnitTables {
  double mass1;  // integral of bump over [-1,1]
  double mass3;  // 4*pi * integral of r^2 bump over [0,1]
  std::vector<double> cdf1;  // cumulative over [-1,1], normalized to [0,1]
  std::vector<double> cdf3;  // cumulative radial mass over [0,1]
};

std::vector<double> cumulative(const std::function<double(double)>& f,
                               double a, double b, int cells) {
  std::vector<double> c(cells + 1, 0.0);
  double h = (b - a) / cells;
  for (int k = 1; k <= cells; ++k) {
    double x0 = a + (k - 1) * h, x1 = a + k * h;
    c[k] = c[k - 1] + h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
  }
  double total = c[cells];
  for (double& v : c) v /= total;
  return c;
}

const UnitTables& tables() {
  static const UnitTables t = [] {
    UnitTables u;
    u.mass1 = integrate(MollifierKernel::bump, -1.0, 1.0);
    u.mass3 =
        4.0 * kPi *
        integrate([](double r) { return r * r * MollifierKernel::bump(r); },
                  0.0, 1.0);
    u.cdf1 = cumulative(MollifierKernel::bump, -1.0, 1.0, 4096);
    u.cdf3 = cumulative(
        [](double r) { return r * r * MollifierKernel::bump(r); }, 0.0, 1.0,
        4096);
    return u;
  }();
  return t;
}

// invert a normalized monotone table over [a,b]
double invert(const std::vector<double>& cdf, double a, double b, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  std::size_t k = std::min<std::size_t>(cdf.size() - 1,
                                        std::max<std::ptrdiff_t>(1, it - cdf.begin()));
  double c0 = cdf[k - 1], c1 = cdf[k];
  double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  double h = (b - a) / (cdf.size() - 1);
  return a + (k - 1 + frac) * h;
}

}  // namespace

double MollifierKernel::bump(double t) {
  double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return std::exp(-1.0 / s);
}

double MollifierKernel::bump_deriv(double t) {
  double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return std::exp(-1.0 / s) * (-2.0 * t / (s * s));
}

MollifierKernel::MollifierKernel(double width, int dimension)
    : width_(width), dim_(dimension) {
  if (!(width > 0.0)) throw std::invalid_argument("mollifier: width must be > 0");
  if (dim_ != 1 && dim_ != 3)
    throw std::invalid_argument("mollifier: dimension must be 1 or 3");
  norm_ = dim_ == 1 ? 1.0 / tables().mass1 : 1.0 / tables().mass3;
}

double MollifierKernel::density(double r) const {
  double w = width_;
  double scale = dim_ == 1 ? norm_ / w : norm_ / (w * w * w);
  return scale * bump(r / w);
}

double MollifierKernel::peak() const { return density(0.0); }

double MollifierKernel::deriv_sup() const {
  double w = width_;
  double scale = dim_ == 1 ? norm_ / (w * w) : norm_ / (w * w * w * w);
  return scale * kBumpDerivSup;
}

double MollifierKernel::mass_quadrature() const {
  if (dim_ == 1)
    return integrate([this](double t) { return density(t); }, -width_, width_);
  return integrate(
      [this](double r) { return 4.0 * kPi * r * r * density(r); }, 0.0,
      width_);
}

double MollifierKernel::sample_offset(double u) const {
  if (dim_ != 1) throw std::logic_error("sample_offset: 1-d kernels only");
  return width_ * invert(tables().cdf1, -1.0, 1.0, u);
}

void MollifierKernel::sample_offset3(double u0, double u1, double u2,
                                     double out[3]) const {
  if (dim_ != 3) throw std::logic_error("sample_offset3: 3-d kernels only");
  double r = width_ * invert(tables().cdf3, 0.0, 1.0, u0);
  double c = 2.0 * u1 - 1.0;  // cos(theta), uniform
  double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  double phi = 2.0 * kPi * u2;
  out[0] = r * s * std::cos(phi);
  out[1] = r * s * std::sin(phi);
  out[2] = r * c;
}

MollifierKernel bump_kernel(double width, int dimension) {
  return MollifierKernel(width, dimension);
}

}  // namespace vpgen
