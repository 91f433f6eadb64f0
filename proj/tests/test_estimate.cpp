#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "glsm/error.hpp"
#include "glsm/estimate.hpp"
#include "glsm/numkernel.hpp"
#include "test_util.hpp"

using namespace glsm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

double nll_row(const std::vector<double>& z, const SiteSet& sites, const Step1Class& cls, const MaternParams& p) {
  ZRows zr;
  zr.z.resize(1, static_cast<Eigen::Index>(z.size()));
  for (std::size_t k = 0; k < z.size(); ++k) zr.z(0, static_cast<Eigen::Index>(k)) = z[k];
  return step1_negloglik(p, zr, sites, cls);
}

double sd(const std::vector<double>& v) { return std::sqrt(testing::variance(v)); }

SiteSet pair_at(double h) { return {{0.0, 0.0}, {h, 0.0}}; }

}  // namespace

TEST_SUITE("estimate") {

TEST_CASE("z transforms") {
  const Step1Class loc{Step1Kind::Location, 0, 1};
  const Step1Class sc{Step1Kind::Scale, 0, 1};
  const Step1Class ls{Step1Kind::LocationScale, 0, 1};
  CHECK(*z_transform(vec({1, 2, 4}), loc) == vec({1, 3}));
  CHECK(*z_transform(vec({2, 4, 6}), sc) == vec({2, 3}));
  CHECK(*z_transform(vec({1, 2, 4, 7}), ls) == vec({3, 6}));
  CHECK(*z_transform(vec({1, 2, 4}), Step1Class{}) == vec({1, 2, 4}));
  CHECK_FALSE(z_transform(vec({0, 4, 6}), sc).has_value());
  CHECK_FALSE(z_transform(vec({1e-13, 4, 6}), sc).has_value());
  CHECK_FALSE(z_transform(vec({2, 2, 6, 1}), ls).has_value());
  // other references
  CHECK(*z_transform(vec({1, 2, 4}), Step1Class{Step1Kind::Location, 2, 0}) == vec({-3, -2}));
  CHECK(*z_transform(vec({1, 2, 4, 7}), Step1Class{Step1Kind::LocationScale, 3, 1}) == vec({6.0 / 5.0, 3.0 / 5.0}));
  CHECK_THROWS_AS(z_transform(vec({1, 2, 4}), Step1Class{Step1Kind::Location, 5, 1}), InvalidArgument);
  CHECK_THROWS_AS(z_transform(vec({1, 2, 4}), Step1Class{Step1Kind::LocationScale, 1, 1}), InvalidArgument);
}

TEST_CASE("zero denominators are skipped per row") {
  RowMatrix x(5, 3);
  x << 1, 2, 3, 0, 1, 2, 2, 2, 2, 0, 5, 5, 3, 1, 1;
  const ZRows z = z_transform_rows(x, Step1Class{Step1Kind::Scale, 0, 1});
  CHECK(z.skipped == 2);
  CHECK(z.z.rows() == 3);
  const ZRows w = z_transform_rows(x, Step1Class{Step1Kind::LocationScale, 0, 1});
  CHECK(w.skipped == 1);
  CHECK(z_transform_rows(x, Step1Class{Step1Kind::Location, 0, 1}).skipped == 0);
}

TEST_CASE("difference operator") {
  const Eigen::MatrixXd a = difference_operator(Step1Class{Step1Kind::Location, 1, 0}, 3);
  CHECK(a.rows() == 2);
  CHECK(a * vec({1, 2, 4}) == *z_transform(vec({1, 2, 4}), Step1Class{Step1Kind::Location, 1, 0}));
  const Eigen::MatrixXd b = difference_operator(Step1Class{Step1Kind::LocationScale, 0, 2}, 4);
  CHECK(b.rows() == 3);
  CHECK(b.row(0) == Eigen::RowVector4d(-1, 0, 1, 0));
}

TEST_CASE("location class at m = 2 is a normal with variance 2(1 - rho)") {
  const MaternParams p{50.0, 0.5};
  const double rho = std::exp(-std::sqrt(2.0) * 30.0 / 50.0);
  const double v = nll_row({0.0}, pair_at(30.0), Step1Class{Step1Kind::Location, 0, 1}, p);
  CHECK(v == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi * 2.0 * (1.0 - rho))).epsilon(1e-13));
  for (double z : {-2.0, 0.3, 1.7}) {
    const double ref = 0.5 * std::log(2.0 * std::numbers::pi * 2.0 * (1.0 - rho)) + z * z / (4.0 * (1.0 - rho));
    CHECK(nll_row({z}, pair_at(30.0), Step1Class{Step1Kind::Location, 0, 1}, p) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("scale class at m = 2 is Cauchy") {
  for (double h : {5.0, 40.0, 120.0}) {
    const MaternParams p{50.0, 0.8};
    const double rho = matern_rho(h, p);
    const double s = std::sqrt(1.0 - rho * rho);
    double worst = 0.0;
    for (double z = -50.0; z <= 50.0; z += 0.1) {
      const double ref = -std::log(s / (std::numbers::pi * ((z - rho) * (z - rho) + s * s)));
      worst = std::max(worst, std::abs(nll_row({z}, pair_at(h), Step1Class{Step1Kind::Scale, 0, 1}, p) - ref));
    }
    CHECK(worst <= 1e-10);
  }
  // negative correlation through an explicit matrix
  const double rho = -0.5, s = std::sqrt(0.75);
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, rho, rho, 1.0;
  for (double z : {-3.0, -0.5, 0.0, 2.0}) {
    ZRows zr;
    zr.z = RowMatrix::Constant(1, 1, z);
    const double ref = -std::log(s / (std::numbers::pi * ((z - rho) * (z - rho) + s * s)));
    CHECK(Step1Problem(zr, pair_at(1.0), Step1Class{Step1Kind::Scale, 0, 1}).negloglik_sigma(sigma) ==
          doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK_THROWS_AS(Step1Problem({RowMatrix::Zero(1, 1), 0}, pair_at(1.0), Step1Class{Step1Kind::Scale, 0, 1})
                      .negloglik_sigma(Eigen::MatrixXd::Identity(3, 3)),
                  InvalidArgument);
}

TEST_CASE("z densities integrate to one") {
  const MaternParams p{50.0, 0.5};
  const SiteSet two = pair_at(35.0);
  const SiteSet three{{0, 0}, {35, 0}, {10, 40}};
  auto dens = [&](const SiteSet& s, Step1Kind k) {
    return [&, k](double z) { return std::exp(-nll_row({z}, s, Step1Class{k, 0, 1}, p)); };
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (auto [sites, kind] : {std::pair{&two, Step1Kind::Location}, std::pair{&two, Step1Kind::Scale},
                             std::pair{&three, Step1Kind::LocationScale}}) {
    auto f = dens(*sites, kind);
    const double total = testing::integrate(f, -inf, 0.0, 1e-12) + testing::integrate(f, 0.0, inf, 1e-12);
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("reference invariance") {
  const ModelParams truth{mix::LSM1{1.0}, {50.0, 0.5}};
  const DataMatrix d = simulate(truth, uniform_sites(12, 3), 60, 4);
  for (Step1Kind kind : {Step1Kind::Location, Step1Kind::Scale, Step1Kind::LocationScale}) {
    CAPTURE(step1_kind_name(kind));
    const Step1Class a{kind, 0, 1}, b{kind, 5, 9};
    const ZRows za = z_transform_rows(d.values, a), zb = z_transform_rows(d.values, b);
    const Step1Problem pa(za, d.sites, a), pb(zb, d.sites, b);
    std::vector<double> diff;
    for (double phi : {20.0, 35.0, 50.0, 70.0, 110.0})
      for (double eta : {0.2, 0.4, 0.5, 0.9, 1.6}) diff.push_back(pa.negloglik({phi, eta}) - pb.negloglik({phi, eta}));
    CHECK(sd(diff) < 1e-8);
    if (kind == Step1Kind::Location) CHECK(std::abs(testing::mean(diff)) < 1e-8);
  }
}

TEST_CASE("non-factorisable parameters return infinity") {
  const DataMatrix d = simulate({mix::SM1{}, {50.0, 0.5}}, uniform_sites(5, 1), 10, 1);
  const Step1Class c{Step1Kind::Scale, 0, 1};
  CHECK(std::isinf(step1_negloglik({-1.0, 0.5}, z_transform_rows(d.values, c), d.sites, c)));
}

TEST_CASE("theta_W recovery on Gaussian data") {
  std::vector<double> phi, eta;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const DataMatrix d = simulate({mix::Gaussian{}, {50.0, 0.5}}, uniform_sites(50, 100 + r), 100, 200 + r);
    const ThetaWFit f = fit_theta_w(d, Step1Class{});
    CHECK(f.converged);
    phi.push_back(f.params.range);
    eta.push_back(f.params.smoothness);
  }
  CHECK(testing::median(phi) > 40.0);
  CHECK(testing::median(phi) < 60.0);
  CHECK(testing::median(eta) > 0.4);
  CHECK(testing::median(eta) < 0.6);
}

TEST_CASE("theta_W fit is deterministic and can fix the smoothness") {
  const DataMatrix d = simulate({mix::SM1{}, {50.0, 0.5}}, uniform_sites(30, 1), 60, 2);
  const Step1Class c = default_step1_class(mix::SM1{});
  const ThetaWFit a = fit_theta_w(d, c), b = fit_theta_w(d, c);
  CHECK(a.params.range == b.params.range);
  CHECK(a.params.smoothness == b.params.smoothness);
  Step1Options o;
  o.fixed_smoothness = 0.5;
  const ThetaWFit e = fit_theta_w(d, c, o);
  CHECK(e.params.smoothness == 0.5);
  CHECK(e.negloglik >= a.negloglik - 1e-6);
  CHECK_THROWS_AS(fit_theta_w(simulate({mix::SM1{}, {50.0, 0.5}}, d.sites, 1, 3), c), DataError);
}

TEST_CASE("cramer-von mises statistic") {
  const std::size_t n = 20000;
  Stream rng(3);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  std::sort(x.begin(), x.end());
  MonteCarloMarginal perfect{x};
  CHECK(cvm_stat(x, perfect) == 1.0 / (12.0 * static_cast<double>(n)));
  const RowMeans means = row_means(simulate({mix::SM3{2.0}, {50.0, 0.5}}, uniform_sites(20, 1), 200, 2).values, 0.4);
  const CvmConfig cfg;
  for (double nu : {0.5, 2.0, 9.0}) {
    const double a = cvm_stat(mix::SM3{nu}, means, cfg);
    const double b = cvm_stat(mix::SM3{nu}, means, cfg);
    CHECK(a == b);
    CHECK(a >= 1.0 / (12.0 * 200.0));
  }
  CvmConfig other = cfg;
  other.seed = cfg.seed + 1;
  CHECK(cvm_stat(mix::SM3{2.0}, means, other) != cvm_stat(mix::SM3{2.0}, means, cfg));
  other.draws = 100;
  CHECK_THROWS_AS(cvm_stat(mix::SM3{2.0}, means, other), InvalidArgument);
}

TEST_CASE("theta_SR fit requires parameters and brackets are ordered") {
  const DataMatrix d = simulate({mix::SM1{}, {50.0, 0.5}}, uniform_sites(10, 1), 50, 2);
  CHECK_THROWS_AS(fit_theta_sr(d, {50.0, 0.5}, mix::Gaussian{}, CvmConfig{}), InvalidArgument);
  CHECK_THROWS_AS(fit_theta_sr(d, {50.0, 0.5}, mix::SM1{}, CvmConfig{}), InvalidArgument);
  for (const auto& name : model_names()) {
    const MixingSpec s = make_spec(name);
    for (std::size_t k = 0; k < param_names(s).size(); ++k) {
      const auto [lo, hi] = theta_sr_bracket(s, k);
      CHECK(lo < hi);
      const double t = to_unconstrained(s)[k];
      CHECK(t >= lo);
      CHECK(t <= hi);
    }
  }
}

TEST_CASE("two-step fit is repeatable and reports counts") {
  const DataMatrix d = simulate({mix::LM1{1.0}, {50.0, 0.5}}, uniform_sites(30, 8), 200, 9);
  const FitResult a = fit_two_step(d, mix::LM1{1.0});
  const FitResult b = fit_two_step(d, mix::LM1{1.0});
  CHECK(a.values() == b.values());
  CHECK(a.names() == std::vector<std::string>{"phi", "eta", "lambda"});
  CHECK(a.rows_used == 200);
  CHECK(a.rows_skipped == 0);
  CHECK(a.step1_converged);
  CHECK(a.cvm >= 1.0 / (12.0 * 200.0));
  CHECK_FALSE(a.trace.empty());
  CHECK(std::get<mix::LM1>(a.mixing).lambda > 0.5);
  CHECK(std::get<mix::LM1>(a.mixing).lambda < 2.0);
}

TEST_CASE("copula round trip through the true table and theta_W agreement") {
  const ModelParams truth{mix::SM3{2.0}, {50.0, 0.5}};
  const DataMatrix x = simulate(truth, uniform_sites(30, 5), 200, 6);
  FitOptions fo;
  fo.table_draws = 200000;
  const MonteCarloMarginal table = CommonDraws(fo.table_draws, 1, fo.table_seed).table(truth.mixing);
  const DataMatrix u = to_uniform(x, table);
  const FitResult direct = fit_two_step(x, truth.mixing, fo);
  const FitResult cop = fit_copula(u, truth.mixing, fo);
  CHECK(cop.copula);
  // mapping back through the same table reproduces the data
  const DataMatrix back = from_uniform(u, table);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.values.size(); ++i)
    worst = std::max(worst, std::abs(back.values.data()[i] - x.values.data()[i]) / (1.0 + std::abs(x.values.data()[i])));
  CHECK(worst < 1e-9);
  CHECK(std::get<mix::SM3>(cop.mixing).nu > 0.5);
  CHECK(std::abs(std::log(cop.corr.range / direct.corr.range)) < 0.1);
  CHECK(std::abs(std::log(cop.corr.smoothness / direct.corr.smoothness)) < 0.1);
  DataMatrix bad = u;
  bad.values(0, 0) = 1.0;
  CHECK_THROWS_AS(fit_copula(bad, truth.mixing, fo), DataError);
}

TEST_CASE("bootstrap intervals") {
  const ModelParams truth{mix::SM1{}, {50.0, 0.5}};
  const DataMatrix d = simulate(truth, uniform_sites(20, 1), 60, 2);
  const FitResult f = fit_two_step(d, truth.mixing);
  BootstrapOptions bo;
  bo.replicates = 0;
  CHECK_THROWS_AS(bootstrap_ci(f, d.sites, d.n(), bo), InvalidArgument);
  bo.replicates = 49;
  CHECK_THROWS_AS(bootstrap_ci(f, d.sites, d.n(), bo), InvalidArgument);
  bo.replicates = 100;
  bo.workers = 2;
  const BootstrapResult r = bootstrap_ci(f, d.sites, d.n(), bo);
  CHECK(r.succeeded + r.failed == 100);
  REQUIRE(r.intervals.size() == 2);
  for (const auto& iv : r.intervals) {
    CHECK(iv.lower <= iv.upper);
    CHECK(iv.lower <= iv.estimate);
    CHECK(iv.estimate <= iv.upper);
  }
  bo.workers = 1;
  const BootstrapResult again = bootstrap_ci(f, d.sites, d.n(), bo);
  CHECK(again.intervals[0].lower == r.intervals[0].lower);
  CHECK(again.intervals[1].upper == r.intervals[1].upper);
}

TEST_CASE("bootstrap modes and copula variants run") {
  const ModelParams truth{mix::SM3{3.0}, {50.0, 0.5}};
  const DataMatrix d = simulate(truth, uniform_sites(12, 1), 60, 2);
  FitOptions fo;
  fo.cvm.draws = 10000;
  fo.cvm.grid_points = 5;
  fo.cvm.max_evaluations = 12;
  fo.cvm.tol = 1e-3;
  fo.table_draws = 10000;
  for (bool copula : {false, true}) {
    FitResult f = copula ? fit_copula(pseudo_uniform(d), truth.mixing, fo) : fit_two_step(d, truth.mixing, fo);
    for (BootstrapMode mode : {BootstrapMode::Fast, BootstrapMode::Standard}) {
      BootstrapOptions bo;
      bo.replicates = 50;
      bo.mode = mode;
      bo.fit = fo;
      const BootstrapResult r = bootstrap_ci(f, d.sites, d.n(), bo);
      CHECK(r.intervals.size() == 3);
      for (const auto& iv : r.intervals) CHECK(iv.lower <= iv.upper);
      CHECK(r.replicates.size() == r.succeeded);
    }
  }
}

TEST_CASE("quadrature oracle") {
  // Gaussian: plain multivariate normal
  const SiteSet three{{0, 0}, {20, 0}, {0, 30}};
  const DataMatrix g = simulate({mix::Gaussian{}, {50.0, 0.5}}, three, 5, 1);
  const Eigen::MatrixXd l = build_corr_matrix(three, {50.0, 0.5}).chol();
  double ref = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) ref -= num::mvn_logpdf({g.values.row(i).data(), 3}, l);
  CHECK(quad_negloglik_oracle({mix::Gaussian{}, {50.0, 0.5}}, g) == ref);

  // SM3 at m = 2 is a bivariate Student t
  const double nu = 2.5;
  const SiteSet two = pair_at(25.0);
  const DataMatrix t = simulate({mix::SM3{nu}, {50.0, 0.5}}, two, 8, 2);
  const double rho = matern_rho(25.0, {50.0, 0.5});
  double tref = 0.0;
  for (Eigen::Index i = 0; i < 8; ++i) {
    const double a = t.values(i, 0), b = t.values(i, 1);
    const double q = (a * a - 2 * rho * a * b + b * b) / (1 - rho * rho);
    tref -= -std::log(2 * std::numbers::pi) - 0.5 * std::log(1 - rho * rho) - (nu + 2) / 2 * std::log1p(q / nu);
  }
  CHECK(std::abs(quad_negloglik_oracle({mix::SM3{nu}, {50.0, 0.5}}, t) - tref) < 1e-6);

  // LM1 at m = 1: exponentially modified Gaussian density
  const double lambda = 1.3;
  DataMatrix one{RowMatrix(4, 1), SiteSet{{0, 0}}};
  one.values << -1.0, 0.2, 1.5, 4.0;
  double eref = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double x = one.values(i, 0);
    eref -= std::log(lambda) + lambda * lambda / 2 - lambda * x + std::log(num::std_normal_cdf(x - lambda));
  }
  CHECK(std::abs(quad_negloglik_oracle({mix::LM1{lambda}, {1.0, 0.5}}, one) - eref) < 1e-8);

  // SM4 latent double integral against SM3-like sanity: finite and symmetric in x
  const Eigen::MatrixXd l2 = build_corr_matrix(two, {50.0, 0.5}).chol();
  const double p1 = quad_logdensity_oracle({mix::SM4{0.5}, {50.0, 0.5}}, vec({0.7, -0.2}), l2);
  const double p2 = quad_logdensity_oracle({mix::SM4{0.5}, {50.0, 0.5}}, vec({-0.7, 0.2}), l2);
  CHECK(std::isfinite(p1));
  CHECK(p1 == doctest::Approx(p2).epsilon(1e-8));
  DataMatrix four{RowMatrix(1, 4), uniform_sites(4, 1)};
  four.values << 1, 2, 3, 4;
  CHECK_THROWS_AS(quad_negloglik_oracle({mix::SM1{}, {50.0, 0.5}}, four), InvalidArgument);
}

}

TEST_SUITE("localisation") {

// Config B SM3 data; the statistic at the truth against +-50% in nu, per
// dataset and on average over 50 datasets.
TEST_CASE("cramer-von mises statistic localises the truth") {
  const ModelParams truth{mix::SM3{2.0}, {50.0, 0.5}};
  const SiteSet sites = uniform_sites(100, 77);
  const double v = avg_variance(build_corr_matrix(sites, truth.corr));
  const CvmConfig cfg;
  const CommonDraws draws(cfg.draws, 1, cfg.seed);
  int wins = 0;
  double at_sum = 0.0, lo_sum = 0.0, hi_sum = 0.0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const RowMeans means = row_means(simulate(truth, sites, 500, 500 + r).values, v);
    const double at = cvm_stat(mix::SM3{2.0}, means, draws);
    const double lo = cvm_stat(mix::SM3{1.0}, means, draws), hi = cvm_stat(mix::SM3{3.0}, means, draws);
    wins += at <= lo && at <= hi;
    at_sum += at;
    lo_sum += lo;
    hi_sum += hi;
  }
  MESSAGE("wins " << wins << "/50");
  CHECK(at_sum <= lo_sum);
  CHECK(at_sum <= hi_sum);
  CHECK(wins >= 45);
}

}

