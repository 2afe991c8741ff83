#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vpgen {

enum class ScaleFamily { PowerOfLog, IteratedLog, PowerLaw };

// A concentration scale sigma: (0,1] -> (0,1], decreasing to 0 with eps.
// Closed forms (lambda = |log eps|, clamped into (0,1]):
//   PowerOfLog(p):           sigma = lambda^(-1/p)
//   IteratedLog(p, exponent): sigma = (log lambda)^(-exponent/p)
//   PowerLaw(a):             sigma = eps^a
struct Scale {
  ScaleFamily family = ScaleFamily::PowerOfLog;
  double p = 1.0;         // PowerOfLog, IteratedLog
  double exponent = 0.5;  // IteratedLog only
  double a = 1.0;         // PowerLaw only

  double sigma(double eps) const;
  // log sigma as a function of lambda = |log eps|; usable far beyond the
  // floating range of eps itself
  double log_sigma(double lambda) const;
  std::string describe() const;

  static Scale power_of_log(double p);
  static Scale iterated_log(double p, double exponent);
  static Scale power_law(double a);
};

struct MembershipReport {
  bool member = false;
  int variant = 1;
  double p = 0.0;
  double max_statistic = 0.0;  // max ratio (variant 1) / max difference (variant 2)
  // samples backing the decision: (lambda, ratio) for variant 1,
  // (log lambda, difference) for variant 2
  std::vector<std::pair<double, double>> certificate;
};

// variant 1: is 1/sigma = O(lambda^(1/p))?   (ratio bounded)
// variant 2: is exp(C*sigma^(-p)) = O(lambda) for C in {1,10,100}?
//            (difference C*sigma^(-p) - log lambda bounded above)
// Both are decided from closed-form samples in the log domain; variant 1
// walks eps down to 1e-300, variant 2 walks log(lambda) up to 1e6 where the
// turnover of bounded differences becomes visible even at C = 100.
MembershipReport classify_scale(const Scale& scale, double p, int variant);

}  // namespace vpgen
