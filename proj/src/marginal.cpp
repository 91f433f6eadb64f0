#include "glsm/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "glsm/error.hpp"
#include "glsm/optimize.hpp"
#include "glsm/random.hpp"
#include "glsm/table_io.hpp"

namespace glsm::egpd {

namespace {

constexpr double kXiZero = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

// log H_xi(x) for x > 0 in the support.
double log_gpd_cdf_std(double x, double xi) {
  const double log_tail = std::abs(xi) < kXiZero ? -x : -std::log1p(xi * x) / xi;
  return std::log(-std::expm1(log_tail));
}

// log h_xi(x), the standard GPD log density.
double log_gpd_pdf_std(double x, double xi) {
  if (std::abs(xi) < kXiZero) return -x;
  return -(1.0 / xi + 1.0) * std::log1p(xi * x);
}

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double mx = std::max(a, b);
  return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

// log B'(v) from log v.
double log_b_pdf(double log_v, const EgpdParams& p) {
  const double a = p.p > 0.0 ? std::log(p.p) + std::log(p.kappa1) + (p.kappa1 - 1.0) * log_v : -kInf;
  const double b = p.p < 1.0 ? std::log1p(-p.p) + std::log(p.kappa2) + (p.kappa2 - 1.0) * log_v : -kInf;
  return log_sum_exp(a, b);
}

void check_support(double y, const EgpdParams& p) {
  if (!(y >= 0.0)) throw InvalidArgument("EGPD: y must be non-negative");
  if (y > p.upper_endpoint()) throw InvalidArgument("EGPD: y beyond the upper endpoint");
}

}  // namespace

void EgpdParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("EGPD: sigma must be positive");
  if (!std::isfinite(xi)) throw InvalidArgument("EGPD: xi must be finite");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("EGPD: p must lie in [0, 1]");
  if (!(kappa1 > 0.0) || !std::isfinite(kappa1)) throw InvalidArgument("EGPD: kappa1 must be positive");
  if (!(kappa2 >= kappa1) || !std::isfinite(kappa2)) throw InvalidArgument("EGPD: kappa2 must be >= kappa1");
}

double EgpdParams::upper_endpoint() const { return xi < -kXiZero ? -sigma / xi : kInf; }

double gpd_cdf(double x, double xi, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gpd_cdf: sigma must be positive");
  if (!(x >= 0.0)) throw InvalidArgument("gpd_cdf: x must be non-negative");
  if (xi < -kXiZero && x > -sigma / xi) throw InvalidArgument("gpd_cdf: x beyond the upper endpoint");
  const double z = x / sigma;
  if (std::abs(xi) < kXiZero) return -std::expm1(-z);
  if (xi < 0.0 && 1.0 + xi * z <= 0.0) return 1.0;
  return -std::expm1(-std::log1p(xi * z) / xi);
}

double gpd_inverse(double v, double xi, double sigma) {
  if (!(v >= 0.0 && v < 1.0)) {
    if (v == 1.0 && xi < -kXiZero) return -sigma / xi;
    throw InvalidArgument("gpd_inverse: v must lie in [0, 1)");
  }
  const double l = std::log1p(-v);
  if (std::abs(xi) < kXiZero) return -sigma * l;
  return sigma * std::expm1(-xi * l) / xi;
}

double b_cdf(double u, const EgpdParams& p) {
  return p.p * std::pow(u, p.kappa1) + (1.0 - p.p) * std::pow(u, p.kappa2);
}

double b_inverse(double v, const EgpdParams& p) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("b_inverse: v must lie in [0, 1]");
  if (v == 0.0 || v == 1.0) return v;
  if (p.kappa1 == p.kappa2 || p.p == 1.0) return std::pow(v, 1.0 / p.kappa1);
  if (p.p == 0.0) return std::pow(v, 1.0 / p.kappa2);
  double lo = 0.0, hi = 1.0;
  // Start between the two pure-power inverses, which bracket the root.
  double x = 0.5 * (std::pow(v, 1.0 / p.kappa1) + std::pow(v, 1.0 / p.kappa2));
  for (int it = 0; it < 200; ++it) {
    const double f = b_cdf(x, p) - v;
    if (f > 0.0) hi = x;
    else lo = x;
    const double dfdx = p.p * p.kappa1 * std::pow(x, p.kappa1 - 1.0) +
                        (1.0 - p.p) * p.kappa2 * std::pow(x, p.kappa2 - 1.0);
    double next = x - f / dfdx;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x || hi - lo <= 1e-300) return next;
    x = next;
  }
  return x;
}

double egpd_cdf(double y, const EgpdParams& p) {
  p.validate();
  check_support(y, p);
  return b_cdf(gpd_cdf(y, p.xi, p.sigma), p);
}

double egpd_logpdf(double y, const EgpdParams& p) {
  p.validate();
  check_support(y, p);
  if (y == 0.0) {
    const double k = p.p > 0.0 ? p.kappa1 : p.kappa2;
    if (k < 1.0) return kInf;
    if (k > 1.0) return -kInf;
    return std::log(p.p > 0.0 ? p.p : 1.0) - std::log(p.sigma);
  }
  const double z = y / p.sigma;
  if (p.xi < -kXiZero && 1.0 + p.xi * z <= 0.0) return -kInf;
  return log_b_pdf(log_gpd_cdf_std(z, p.xi), p) + log_gpd_pdf_std(z, p.xi) - std::log(p.sigma);
}

double egpd_pdf(double y, const EgpdParams& p) { return std::exp(egpd_logpdf(y, p)); }

double egpd_quantile(double u, const EgpdParams& p) {
  p.validate();
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("egpd_quantile: u must lie in (0, 1)");
  return gpd_inverse(b_inverse(u, p), p.xi, p.sigma);
}

std::vector<double> egpd_sample(const EgpdParams& p, std::size_t n, std::uint64_t seed) {
  p.validate();
  Stream rng(seed);
  std::vector<double> out(n);
  for (auto& y : out) y = egpd_quantile(rng.uniform(), p);
  return out;
}

namespace {

EgpdParams unpack(const std::vector<double>& t) {
  EgpdParams p;
  p.sigma = std::exp(t[0]);
  p.xi = t[1];
  p.p = 1.0 / (1.0 + std::exp(-t[2]));
  p.kappa1 = std::exp(t[3]);
  p.kappa2 = p.kappa1 + std::exp(t[4]);
  return p;
}

double negloglik(const std::vector<double>& y, const EgpdParams& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma) || !std::isfinite(p.kappa2) || std::abs(p.xi) > 5.0)
    return kInf;
  const double upper = p.upper_endpoint();
  double total = 0.0;
  for (double v : y) {
    if (v >= upper) return kInf;
    total -= egpd_logpdf(v, p);
  }
  return std::isfinite(total) ? total : kInf;
}

}  // namespace

EgpdFit egpd_fit(const std::vector<double>& samples) {
  if (samples.size() < 100) throw DataError("egpd_fit: need at least 100 samples");
  for (double v : samples)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError("egpd_fit: samples must be finite and >= 0");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mn == *mx) throw DataError("egpd_fit: degenerate sample (all values equal)");
  // Exact zeros have zero density unless kappa <= 1; nudge them inside the support.
  std::vector<double> y = samples;
  const double tiny = *mx * 1e-12;
  for (auto& v : y) v = std::max(v, tiny);

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  auto f = [&](const std::vector<double>& t) { return negloglik(y, unpack(t)); };
  opt::NelderMeadOptions nm{1e-10, 1e-7, 4000};
  const std::vector<double> step{0.5, 0.2, 1.0, 0.5, 0.5};

  // Short runs from every start, full runs from the two best.
  opt::NelderMeadOptions scout = nm;
  scout.max_evaluations = 300;
  std::vector<opt::Result> starts;
  for (double xi0 : {0.05, 0.3})
    for (double k0 : {0.7, 1.5})
      for (double p0 : {0.3, 0.8}) {
        const std::vector<double> t0{std::log(mean), xi0, std::log(p0 / (1.0 - p0)), std::log(k0), 0.0};
        starts.push_back(opt::nelder_mead(f, t0, step, scout));
      }
  std::sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  EgpdFit best{};
  best.negloglik = kInf;
  for (std::size_t k = 0; k < 2; ++k) {
    opt::Result r = opt::nelder_mead(f, starts[k].x, step, nm);
    r = opt::nelder_mead(f, r.x, step, nm);
    if (r.value < best.negloglik) best = {unpack(r.x), r.value, r.converged};
  }
  if (!std::isfinite(best.negloglik)) throw NumericalError("egpd_fit: no finite likelihood found");
  return best;
}

void write_egpd_table(const std::string& path, const std::vector<SiteEgpd>& fits) {
  Table t({"site", "sigma", "xi", "p", "kappa1", "kappa2"});
  for (const auto& f : fits)
    t.add_row({static_cast<double>(f.site), f.params.sigma, f.params.xi, f.params.p, f.params.kappa1,
               f.params.kappa2});
  write_table(path, t);
}

std::vector<SiteEgpd> read_egpd_table(const std::string& path) {
  const Table t = read_table(path);
  const std::size_t cs = t.column("site"), c0 = t.column("sigma"), c1 = t.column("xi"), c2 = t.column("p"),
                    c3 = t.column("kappa1"), c4 = t.column("kappa2");
  std::vector<SiteEgpd> out;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    SiteEgpd s{static_cast<std::size_t>(t.at(i, cs)), {t.at(i, c0), t.at(i, c1), t.at(i, c2), t.at(i, c3), t.at(i, c4)}};
    s.params.validate();
    out.push_back(s);
  }
  return out;
}

}  // namespace glsm::egpd
