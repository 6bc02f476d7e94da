#pragma once

#include <cmath>
#include <limits>

#include "fbc/core.hpp"

namespace fbc {

template <typename S>
S normal_cdf(S z) {
  return std::erfc(-z / std::sqrt(S(2))) / S(2);
}

template <typename S>
S normal_pdf(S z) {
  const S inv_sqrt_2pi = S(1) / std::sqrt(S(2) * S(M_PI));
  return inv_sqrt_2pi * std::exp(-z * z / S(2));
}

// Acklam's rational approximation refined by Newton steps on the erfc-based
// CDF; residual |Phi(Phi^{-1}(p)) - p| stays below 1e-15 over (0,1).
template <typename S>
S normal_quantile(S p) {
  if (!(p > S(0) && p < S(1))) fail(errc::bad_parameter, "normal_quantile: p must be in (0,1)");

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};

  const double pd = static_cast<double>(p);
  const double plow = 0.02425;
  double x;
  if (pd < plow) {
    double q = std::sqrt(-2 * std::log(pd));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (pd <= 1 - plow) {
    double q = pd - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - pd));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }

  S z = static_cast<S>(x);
  for (int i = 0; i < 3; ++i) {
    S f = normal_cdf(z) - p;
    S df = normal_pdf(z);
    if (df <= std::numeric_limits<S>::min()) break;
    S step = f / df;
    z -= step;
    if (std::abs(step) < std::numeric_limits<S>::epsilon() * (S(1) + std::abs(z))) break;
  }
  return z;
}

}  // namespace fbc
