#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tilatlas/concord.hpp"

namespace tilatlas {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();

  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  double x;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - kLow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

namespace {

// 10-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
constexpr double kNodes[5] = {0.1488743389816312, 0.4333953941292472,
                              0.6794095682990244, 0.8650633666889845,
                              0.9739065285171717};
constexpr double kWeights[5] = {0.2955242247147529, 0.2692667193099963,
                                0.2190863625159820, 0.1494513491505806,
                                0.0666713443086881};

template <class F>
double gauss_legendre(F& f, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (int k = 0; k < 5; ++k) {
    sum += kWeights[k] * (f(mid - half * kNodes[k]) + f(mid + half * kNodes[k]));
  }
  return sum * half;
}

template <class F>
double adaptive_gl(F& f, double lo, double hi, double whole, double tol,
                   int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = gauss_legendre(f, lo, mid);
  const double right = gauss_legendre(f, mid, hi);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adaptive_gl(f, lo, mid, left, 0.5 * tol, depth - 1) +
         adaptive_gl(f, mid, hi, right, 0.5 * tol, depth - 1);
}

}  // namespace

double bivariate_normal_cdf(double a, double b, double rho) {
  if (std::isnan(a) || std::isnan(b) || std::isnan(rho)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (a == -INFINITY || b == -INFINITY) return 0.0;
  if (a == INFINITY) return normal_cdf(b);
  if (b == INFINITY) return normal_cdf(a);
  rho = std::clamp(rho, -1.0, 1.0);
  if (rho == 1.0) return normal_cdf(std::min(a, b));
  if (rho == -1.0) return std::max(0.0, normal_cdf(a) + normal_cdf(b) - 1.0);

  // Substituting r = sin(t) in the integral of the density over the
  // correlation removes the 1/sqrt(1 - r^2) singularity:
  //   F(a,b;rho) = F(a)F(b) + 1/(2 pi) * int_0^asin(rho) g(t) dt,
  //   g(t) = exp(-(a^2 - 2ab sin t + b^2) / (2 cos^2 t)).
  const double s = a * a + b * b;
  const double ab = 2.0 * a * b;
  auto g = [&](double t) {
    const double ct = std::cos(t);
    return std::exp(-(s - ab * std::sin(t)) / (2.0 * ct * ct));
  };
  const double upper = std::asin(rho);
  const double whole = gauss_legendre(g, 0.0, upper);
  const double integral = adaptive_gl(g, 0.0, upper, whole, 1e-13, 40);
  const double value =
      normal_cdf(a) * normal_cdf(b) + integral / (2.0 * std::numbers::pi);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace tilatlas
