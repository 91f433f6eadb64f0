#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "glsm/error.hpp"
#include "glsm/numkernel.hpp"
#include "test_util.hpp"

using namespace glsm;

TEST_SUITE("numkernel") {

TEST_CASE("normal cdf values") {
  CHECK(num::std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // erfc oracle
  CHECK(std::abs(num::std_normal_cdf(-0.70711) - 0.5 * std::erfc(0.70711 / std::sqrt(2.0))) < 1e-6);
  CHECK(std::abs(num::std_normal_cdf(-0.70711) - 0.23975) < 1e-5);
  CHECK(std::abs(num::std_normal_cdf(1.96) - 0.97500) < 1e-5);
}

TEST_CASE("normal cdf symmetry and saturation") {
  for (double x = -8.0; x <= 8.0; x += 0.01)
    CHECK(std::abs(num::std_normal_cdf(-x) - (1.0 - num::std_normal_cdf(x))) <= 1e-14);
  CHECK(num::std_normal_cdf(-50.0) >= num::kCdfFloor);
  CHECK(num::std_normal_cdf(50.0) <= num::kCdfCeil);
  CHECK(std::isfinite(std::log(num::std_normal_cdf(-50.0))));
}

TEST_CASE("normal cdf is monotone") {
  double prev = 0.0;
  for (double x = -10.0; x <= 10.0; x += 0.001) {
    const double v = num::std_normal_cdf(x);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("normal quantile inverts the cdf") {
  double worst = 0.0;
  for (double lp = -10.0; lp <= -1e-3; lp += 0.01) {
    for (double p : {std::pow(10.0, lp), 1.0 - std::pow(10.0, lp)}) {
      if (p < 1e-10 || p > 1.0 - 1e-10) continue;
      worst = std::max(worst, std::abs(num::std_normal_cdf(num::std_normal_quantile(p)) - p));
    }
  }
  for (double p = 0.001; p < 1.0; p += 0.001)
    worst = std::max(worst, std::abs(num::std_normal_cdf(num::std_normal_quantile(p)) - p));
  CHECK(worst <= 1e-8);
  const boost::math::normal nd;
  for (double p : {1e-10, 1e-5, 0.025, 0.3, 0.5, 0.9, 0.975, 1 - 1e-8})
    CHECK(num::std_normal_quantile(p) == doctest::Approx(boost::math::quantile(nd, p)).epsilon(1e-12));
  CHECK_THROWS_AS(num::std_normal_quantile(0.0), InvalidArgument);
  CHECK_THROWS_AS(num::std_normal_quantile(1.0), InvalidArgument);
}

TEST_CASE("student t cdf values") {
  for (double nu : {0.5, 1.0, 3.0, 17.5}) CHECK(num::student_t_cdf(0.0, nu) == doctest::Approx(0.5));
  CHECK(std::abs(num::student_t_cdf(1.0, 1.0) - (0.5 + std::atan(1.0) / std::numbers::pi)) < 1e-14);
  CHECK(std::abs(num::student_t_cdf(1.0, 1.0) - 0.75) < 1e-14);
  // closed form for three degrees of freedom
  const double t = -1.0, s3 = std::sqrt(3.0);
  const double oracle = 0.5 + (t / (s3 * (1.0 + t * t / 3.0)) + std::atan(t / s3)) / std::numbers::pi;
  CHECK(std::abs(num::student_t_cdf(-1.0, 3.0) - oracle) < 1e-12);
  CHECK(std::abs(num::student_t_cdf(-1.0, 3.0) - 0.19550) < 1e-5);
  CHECK_THROWS_AS(num::student_t_cdf(1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(num::student_t_cdf(1.0, -2.0), InvalidArgument);
}

TEST_CASE("student t cdf against boost over a grid") {
  for (double nu : {0.3, 1.0, 2.0, 3.0, 4.3, 10.0, 31.0, 200.0}) {
    const boost::math::students_t dist(nu);
    for (double x = -30.0; x <= 30.0; x += 0.37) {
      const double ref = boost::math::cdf(dist, x);
      CHECK(num::student_t_cdf(x, nu) == doctest::Approx(ref).epsilon(1e-10));
      CHECK(std::abs(num::student_t_cdf(-x, nu) - (1.0 - num::student_t_cdf(x, nu))) < 1e-13);
    }
  }
}

TEST_CASE("student t tends to the normal") {
  for (double nu : {1e4, 1e6}) {
    double worst = 0.0;
    for (double x = -5.0; x <= 5.0; x += 0.01)
      worst = std::max(worst, std::abs(num::student_t_cdf(x, nu) - num::std_normal_cdf(x)));
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("bessel K values") {
  CHECK(std::abs(num::bessel_k(0.5, 1.0) - std::sqrt(std::numbers::pi / 2.0) * std::exp(-1.0)) < 1e-14);
  CHECK(std::abs(num::bessel_k(0.5, 1.0) - 0.46107) < 1e-5);
  CHECK(std::abs(num::bessel_k(1.0, 1.0) - std::cyl_bessel_k(1.0, 1.0)) < 1e-8);
  CHECK(std::abs(num::bessel_k(1.0, 1.0) - 0.60191) < 1e-5);
  for (double x : {0.1, 1.0, 7.0}) CHECK(num::bessel_k(-0.5, x) == num::bessel_k(0.5, x));
  CHECK_THROWS_AS(num::bessel_k(0.5, 0.0), InvalidArgument);
  CHECK_THROWS_AS(num::bessel_k(0.5, -1.0), InvalidArgument);
}

TEST_CASE("bessel K half-integer closed form") {
  double worst = 0.0;
  for (double x = 0.01; x <= 50.0; x *= 1.01)
    worst = std::max(worst, std::abs(num::bessel_k(0.5, x) * std::exp(x) * std::sqrt(2.0 * x / std::numbers::pi) - 1.0));
  CHECK(worst <= 1e-12);
  // K_{3/2}(x) = sqrt(pi/(2x)) e^{-x} (1 + 1/x)
  for (double x = 0.05; x <= 40.0; x *= 1.1) {
    const double ref = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) * (1.0 + 1.0 / x);
    CHECK(num::bessel_k(1.5, x) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("bessel K against the standard library") {
  for (double nu : {0.02, 0.1, 0.3, 0.5, 0.9, 1.0, 1.7, 2.5, 4.0, 9.3, 20.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double x = 1e-3; x <= 300.0; x *= 1.07) {
      const double ref = std::cyl_bessel_k(nu, x);
      const double v = num::bessel_k(nu, x);
      if (ref > 1e-300 && ref < 1e300) CHECK(v == doctest::Approx(ref).epsilon(1e-10));
      CHECK(num::bessel_k_scaled(nu, x) == doctest::Approx(std::exp(x) * ref).epsilon(1e-10));
      CHECK(v <= prev);
      prev = v;
      if (ref > 1e-300 && ref < 1e300) CHECK(num::log_bessel_k(nu, x) == doctest::Approx(std::log(ref)).epsilon(1e-10));
    }
  }
  // far tail where K underflows but the log stays finite
  CHECK(std::isfinite(num::log_bessel_k(0.5, 1000.0)));
  CHECK(num::log_bessel_k(0.5, 1000.0) == doctest::Approx(0.5 * std::log(std::numbers::pi / 2000.0) - 1000.0));
}

TEST_CASE("mvn log density values") {
  Eigen::MatrixXd one(1, 1);
  one << 1.0;
  const std::vector<double> z1{0.0};
  CHECK(num::mvn_logpdf(z1, one) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(std::abs(num::mvn_logpdf(z1, one) - (-0.91894)) < 1e-5);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<double> z2{0.0, 0.0};
  CHECK(std::abs(num::mvn_logpdf(z2, eye) - (-1.83788)) < 1e-5);
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  const Eigen::MatrixXd l = s.llt().matrixL();
  CHECK(num::mvn_logpdf(z2, l) == doctest::Approx(-std::log(2.0 * std::numbers::pi) - 0.5 * std::log(0.75)));
  CHECK(std::abs(num::mvn_logpdf(z2, l) - (-1.69404)) < 1e-5);
  CHECK_THROWS_AS(num::mvn_logpdf(z1, l), InvalidArgument);
}

TEST_CASE("mvn density integrates to one") {
  Eigen::MatrixXd one(1, 1);
  one << 1.3;
  const double i1 = testing::integrate([&](double x) {
    const std::vector<double> z{x};
    return std::exp(num::mvn_logpdf(z, one));
  }, -20.0, 20.0);
  CHECK(std::abs(i1 - 1.0) < 1e-4);

  Eigen::MatrixXd s(2, 2);
  s << 1.0, 0.6, 0.6, 1.0;
  const Eigen::MatrixXd l = s.llt().matrixL();
  const double h = 0.02;
  double total = 0.0;
  for (double x = -8.0; x < 8.0; x += h)
    for (double y = -8.0; y < 8.0; y += h) {
      const std::vector<double> z{x + h / 2, y + h / 2};
      total += std::exp(num::mvn_logpdf(z, l)) * h * h;
    }
  CHECK(std::abs(total - 1.0) < 1e-4);
}

TEST_CASE("incomplete beta edge values") {
  CHECK(num::inc_beta_reg(2.0, 3.0, 0.0) == 0.0);
  CHECK(num::inc_beta_reg(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, b) = 1 - (1 - x)^b
  for (double x : {0.1, 0.5, 0.9}) CHECK(num::inc_beta_reg(1.0, 2.5, x) == doctest::Approx(1.0 - std::pow(1.0 - x, 2.5)));
}

}
