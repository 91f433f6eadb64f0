#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "glsm/error.hpp"
#include "glsm/marginal.hpp"
#include "glsm/random.hpp"
#include "test_util.hpp"

using namespace glsm;
using namespace glsm::egpd;

namespace {

EgpdParams random_params(Stream& rng) {
  EgpdParams p;
  p.sigma = 0.2 + 3.0 * rng.uniform();
  p.xi = -0.4 + 0.9 * rng.uniform();
  p.p = rng.uniform();
  p.kappa1 = 0.3 + 2.0 * rng.uniform();
  p.kappa2 = p.kappa1 + 4.0 * rng.uniform();
  return p;
}

}  // namespace

TEST_SUITE("marginal") {

TEST_CASE("gpd cdf values") {
  CHECK(gpd_cdf(0.0, 0.3, 1.0) == 0.0);
  CHECK(gpd_cdf(1.0, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(gpd_cdf(std::log(2.0), 0.0, 1.0) == doctest::Approx(0.5));
  CHECK(gpd_cdf(std::log(2.0), 1e-10, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(gpd_cdf(2.0, -0.5, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(gpd_cdf(-1.0, 0.3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(gpd_cdf(2.5, -0.5, 1.0), InvalidArgument);
  for (double v : {0.0, 0.1, 0.5, 0.99}) CHECK(gpd_cdf(gpd_inverse(v, 0.2, 1.5), 0.2, 1.5) == doctest::Approx(v));
}

TEST_CASE("egpd special cases") {
  EgpdParams id{1.7, 0.25, 1.0, 1.0, 2.0};
  for (double y = 0.0; y < 30.0; y += 0.13) CHECK(egpd_cdf(y, id) == doctest::Approx(gpd_cdf(y, 0.25, 1.7)).epsilon(1e-14));
  const EgpdParams e{2.0, 0.0, 1.0, 1.0, 1.0};
  CHECK(egpd_quantile(0.5, e) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(std::abs(egpd_quantile(0.5, e) - 1.38629) < 1e-5);
  const EgpdParams b{1.0, -0.25, 0.4, 0.7, 2.5};
  CHECK(egpd_cdf(0.0, b) == 0.0);
  CHECK(egpd_cdf(b.upper_endpoint(), b) == doctest::Approx(1.0));
  CHECK(egpd_cdf(1e6, EgpdParams{1.0, 0.3, 0.4, 0.7, 2.5}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.upper_endpoint() == doctest::Approx(4.0));
  CHECK(std::isinf(EgpdParams{}.upper_endpoint()));
  CHECK_THROWS_AS(egpd_cdf(-0.1, b), InvalidArgument);
  CHECK_THROWS_AS(egpd_cdf(4.5, b), InvalidArgument);
  CHECK_THROWS_AS(egpd_quantile(0.0, b), InvalidArgument);
  CHECK_THROWS_AS(egpd_quantile(1.0, b), InvalidArgument);
  CHECK_THROWS_AS(egpd_cdf(1.0, EgpdParams{1.0, 0.1, 0.5, 2.0, 1.0}), InvalidArgument);
}

TEST_CASE("equal powers make the weight irrelevant") {
  for (double y : {0.01, 0.5, 2.0, 9.0}) {
    const double a = egpd_cdf(y, EgpdParams{1.0, 0.1, 0.0, 1.7, 1.7});
    CHECK(egpd_cdf(y, EgpdParams{1.0, 0.1, 0.5, 1.7, 1.7}) == a);
    CHECK(egpd_cdf(y, EgpdParams{1.0, 0.1, 1.0, 1.7, 1.7}) == a);
  }
}

TEST_CASE("B inverse") {
  const EgpdParams p{1.0, 0.1, 0.3, 0.6, 4.0};
  for (double v = 0.0; v <= 1.0; v += 0.01) CHECK(std::abs(b_cdf(b_inverse(v, p), p) - v) < 1e-12);
  CHECK(b_inverse(0.0, p) == 0.0);
  CHECK(b_inverse(1.0, p) == 1.0);
}

TEST_CASE("quantile inverts the cdf for random parameters") {
  Stream rng(1);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const EgpdParams p = random_params(rng);
    const double top = egpd_quantile(1.0 - 1e-6, p);
    for (int i = 1; i <= 200; ++i) {
      const double y = top * i / 200.0;
      const double u = egpd_cdf(y, p);
      if (u <= 0.0 || u >= 1.0) continue;
      worst = std::max(worst, std::abs(egpd_quantile(u, p) - y) / std::max(1.0, y));
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("density integrates to one and cdf is monotone") {
  Stream rng(2);
  for (int k = 0; k < 30; ++k) {
    const EgpdParams p = random_params(rng);
    CAPTURE(p.sigma);
    CAPTURE(p.xi);
    CAPTURE(p.kappa1);
    const double hi = p.xi < 0 ? p.upper_endpoint() : std::numeric_limits<double>::infinity();
    auto f = [&](double y) { return y <= 0.0 || y >= hi ? 0.0 : egpd_pdf(y, p); };
    const double mid = egpd_quantile(0.5, p);
    const double total = testing::integrate_singular(f, 0.0, mid) + testing::integrate(f, mid, hi, 1e-10);
    CHECK(std::abs(total - 1.0) < 1e-5);
    const double top = egpd_quantile(1.0 - 1e-9, p);
    double prev = 0.0;
    for (int i = 0; i <= 10000; ++i) {
      const double v = egpd_cdf(top * i / 10000.0, p);
      CHECK(v >= prev);
      prev = v;
    }
    for (double y : {0.3 * top, 0.01 * top})
      CHECK(egpd_logpdf(y, p) == doctest::Approx(std::log(egpd_pdf(y, p))).epsilon(1e-12));
  }
}

TEST_CASE("pdf is the derivative of the cdf") {
  const EgpdParams p{1.3, 0.15, 0.6, 0.8, 3.0};
  for (double y : {0.05, 0.4, 1.0, 3.0, 10.0}) {
    const double h = 1e-6 * std::max(1.0, y);
    CHECK(egpd_pdf(y, p) == doctest::Approx((egpd_cdf(y + h, p) - egpd_cdf(y - h, p)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("sampling follows the cdf") {
  const EgpdParams p{1.0, 0.2, 0.7, 0.8, 3.0};
  const auto x = egpd_sample(p, 100000, 5);
  CHECK(testing::ks_statistic(x, [&](double y) { return egpd_cdf(y, p); }) < testing::ks_critical_001(x.size()));
  CHECK(egpd_sample(p, 10, 5) == egpd_sample(p, 10, 5));
}

TEST_CASE("fit on plain GPD samples reproduces the cdf") {
  const auto x = egpd_sample(EgpdParams{2.0, 0.15, 1.0, 1.0, 1.0}, 10000, 8);
  const EgpdFit f = egpd_fit(x);
  double worst = 0.0;
  for (double y = 0.0; y < 60.0; y += 0.05) worst = std::max(worst, std::abs(egpd_cdf(y, f.params) - gpd_cdf(y, 0.15, 2.0)));
  CHECK(worst < 0.01);
}

TEST_CASE("fit input checks") {
  std::vector<double> x(200, 1.0);
  CHECK_THROWS_AS(egpd_fit(x), DataError);
  x[3] = 2.0;
  x[5] = -1.0;
  CHECK_THROWS_AS(egpd_fit(x), DataError);
  CHECK_THROWS_AS(egpd_fit(std::vector<double>(50, 1.0)), DataError);
}

TEST_CASE("parameter table round trip") {
  const auto path = std::filesystem::temp_directory_path() / "glsm_egpd.csv";
  const std::vector<SiteEgpd> a{{1, {1.0, 0.1, 0.5, 1.0, 2.0}}, {2, {0.3, -0.2, 0.9, 0.4, 0.4}}};
  write_egpd_table(path.string(), a);
  const auto b = read_egpd_table(path.string());
  REQUIRE(b.size() == 2);
  CHECK(b[1].site == 2);
  CHECK(b[1].params.xi == -0.2);
  CHECK(b[0].params.kappa2 == 2.0);
}

}
