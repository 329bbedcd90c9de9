#pragma once

#include <cmath>

namespace lgrowth {

inline double normal_pdf(double z) {
  static const double kInvSqrt2Pi = 0.3989422804014326779;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

inline double normal_ccdf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

// Inverse of the standard normal CDF (Wichura's PPND16 rational
// approximations), accurate to ~1e-15 over p in (1e-316, 1 - 1e-16).
double inverse_normal_cdf(double p);

}  // namespace lgrowth
