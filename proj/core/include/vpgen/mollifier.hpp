#pragma once

namespace vpgen {

// Radial bump mollifier exp(-1/(1-t^2)) on (-1,1), scaled to `width` and
// normalized to unit mass: over the line for dimension 1, over the ball
// |x| < width for dimension 3.
class MollifierKernel {
 public:
  MollifierKernel(double width, int dimension);

  double width() const { return width_; }
  int dimension() const { return dim_; }

  // density at signed offset (dim 1) or at radius |x| = r (dim 3)
  double density(double r) const;
  double peak() const;       // density at the origin
  double deriv_sup() const;  // sup |d(density)/dr|
  double mass_quadrature() const;  // re-integrated mass, == 1 up to quadrature

  // inverse-CDF draws; u uniform in [0,1)
  double sample_offset(double u) const;  // dim 1: signed offset in (-w, w)
  void sample_offset3(double u0, double u1, double u2,
                      double out[3]) const;  // dim 3: vector in the w-ball

  static double bump(double t);
  static double bump_deriv(double t);

 private:
  double width_;
  int dim_;
  double norm_;  // unit-width normalization constant
};

MollifierKernel bump_kernel(double width, int dimension);

}  // namespace vpgen
