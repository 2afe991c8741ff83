#pragma once

#include <functional>

namespace vpgen {

// Adaptive Simpson on [a,b]; f must be continuous. Absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-14);

}  // namespace vpgen
