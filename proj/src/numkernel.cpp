#include "glsm/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "glsm/error.hpp"

namespace glsm::num {

namespace {

constexpr double kEps = 1e-16;

double saturate(double p) { return std::clamp(p, kCdfFloor, kCdfCeil); }

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) return h;
  }
  throw NumericalError("inc_beta_reg: continued fraction did not converge");
}

// Temme's gamma-function auxiliaries for |mu| <= 1/2:
// gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  gam2 = 0.5 * (gammi + gampl);
  if (std::abs(mu) < 1e-3) {
    // Odd coefficients of the Taylor series of 1/G(1+x).
    constexpr double c1 = 0.5772156649015329;
    constexpr double c3 = -0.0420026350340952;
    constexpr double c5 = -0.0421977345555443;
    const double mu2 = mu * mu;
    gam1 = -(c1 + mu2 * (c3 + mu2 * c5));
  } else {
    gam1 = (gammi - gampl) / (2.0 * mu);
  }
}

// Returns exp(x) K_nu(x) for nu >= 0 via Temme's series (x <= 2) or Steed's
// CF2 (x > 2), then upward recurrence from the fractional order.
double bessel_k_scaled_impl(double nu, double x) {
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  double rkmu = 0.0;
  double rk1 = 0.0;
  if (x <= 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double gam1, gam2, gampl, gammi;
    temme_gammas(mu, gam1, gam2, gampl, gammi);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= 10000; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= i - mu;
      q /= i + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    if (i > 10000) throw NumericalError("bessel_k: series did not converge");
    const double scale = std::exp(x);
    rkmu = sum * scale;
    rk1 = sum1 * xi2 * scale;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= 100000; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < kEps) break;
    }
    if (i > 100000) throw NumericalError("bessel_k: continued fraction did not converge");
    h = a1 * h;
    rkmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    rk1 = rkmu * (mu + x + 0.5 - h) * xi;
  }
  for (int k = 1; k <= nl; ++k) {
    const double next = (mu + k) * xi2 * rk1 + rkmu;
    rkmu = rk1;
    rk1 = next;
  }
  return rkmu;
}

}  // namespace

double std_normal_cdf(double x) {
  return saturate(0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0));
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("std_normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation, refined with one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step; Phi(x) - p is formed from the smaller tail.
  const double e = x < 0 ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - p
                         : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double inc_beta_reg(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("inc_beta_reg: a and b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double x, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("student_t_cdf: nu must be positive");
  if (x == 0.0) return 0.5;
  // Lower tail mass of |x|, then reflect so T(-x) = 1 - T(x) holds exactly.
  const double t2 = x * x;
  double tail;
  if (t2 < nu) {
    // I_{t2/(nu+t2)}(1/2, nu/2) is the central mass; more accurate near 0.
    const double central = inc_beta_reg(0.5, 0.5 * nu, t2 / (nu + t2));
    tail = 0.5 * (1.0 - central);
  } else {
    tail = 0.5 * inc_beta_reg(0.5 * nu, 0.5, nu / (nu + t2));
  }
  return saturate(x < 0 ? tail : 1.0 - tail);
}

double bessel_k_scaled(double order, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument("bessel_k: argument must be positive");
  if (!std::isfinite(order)) throw InvalidArgument("bessel_k: order must be finite");
  return bessel_k_scaled_impl(std::abs(order), x);
}

double bessel_k(double order, double x) { return bessel_k_scaled(order, x) * std::exp(-x); }

double log_bessel_k(double order, double x) { return std::log(bessel_k_scaled(order, x)) - x; }

double mvn_logpdf(std::span<const double> z, const Eigen::MatrixXd& chol) {
  const auto m = static_cast<Eigen::Index>(z.size());
  if (chol.rows() != m || chol.cols() != m) throw InvalidArgument("mvn_logpdf: dimension mismatch");
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(z.data(), m);
  chol.triangularView<Eigen::Lower>().solveInPlace(y);
  const double log_det = chol.diagonal().array().log().sum();
  return -0.5 * m * std::log(2.0 * std::numbers::pi) - log_det - 0.5 * y.squaredNorm();
}

}  // namespace glsm::num
