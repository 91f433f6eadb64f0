#pragma once

#include <span>

#include <Eigen/Dense>

// Scalar special functions and Gaussian density kernels.
namespace glsm::num {

inline constexpr double kCdfFloor = 1e-300;
inline constexpr double kCdfCeil = 1.0 - 1e-16;

// Phi(x), saturated to [kCdfFloor, kCdfCeil].
double std_normal_cdf(double x);

// Inverse of Phi on (0, 1).
double std_normal_quantile(double p);

// Regularised incomplete beta I_x(a, b).
double inc_beta_reg(double a, double b, double x);

// Student t cdf with nu > 0 degrees of freedom (nu may be non-integer).
double student_t_cdf(double x, double nu);

// Modified Bessel function of the second kind K_order(x), x > 0.
// Negative orders are folded onto |order|.
double bessel_k(double order, double x);

// exp(x) * K_order(x); stays finite where K_order underflows.
double bessel_k_scaled(double order, double x);

// log K_order(x).
double log_bessel_k(double order, double x);

// Log density of N(0, L L^T) at z, with L the lower Cholesky factor.
double mvn_logpdf(std::span<const double> z, const Eigen::MatrixXd& chol);

}  // namespace glsm::num
