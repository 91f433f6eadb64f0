#include "glsm/taildep.hpp"

#include <algorithm>
#include <cmath>

#include "glsm/error.hpp"
#include "glsm/numkernel.hpp"
#include "glsm/parallel.hpp"
#include "glsm/random.hpp"
#include "glsm/table_io.hpp"

namespace glsm {

namespace {

void check_rho(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw InvalidArgument("correlation must lie in (-1, 1)");
}

double chi_student(double nu, double rho) {
  return 2.0 * num::student_t_cdf(-std::sqrt(nu + 1.0) * std::sqrt((1.0 - rho) / (1.0 + rho)), nu + 1.0);
}

double chi_location(double lambda, double rho) {
  return 2.0 * num::std_normal_cdf(-lambda * std::sqrt((1.0 - rho) / 2.0));
}

// E[min(Z1^l, Z2^l)] / E[Z^l] with Z = exp(R W), R = sqrt(E), E ~ Exp(1/2).
// RW is Laplace(1), so E[Z^l] = 1/(1 - l^2).
ChiValue chi_lsm(double lambda, double rho, const ChiMcOptions& mc) {
  if (mc.draws < 2) throw InvalidArgument("chi_theory: need at least two Monte-Carlo draws");
  Stream rng(mc.seed);
  const double c = std::sqrt(1.0 - rho * rho);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < mc.draws; ++k) {
    const double r = std::sqrt(-2.0 * std::log(rng.uniform()));
    const double w1 = rng.normal();
    const double w2 = rho * w1 + c * rng.normal();
    const double v = std::exp(lambda * r * std::min(w1, w2));
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  const double scale = 1.0 - lambda * lambda;
  const double sd = std::sqrt(m2 / static_cast<double>(mc.draws - 1));
  return {std::min(1.0, mean * scale), sd * scale / std::sqrt(static_cast<double>(mc.draws))};
}

double chibar_laplace(double rho) { return std::sqrt(2.0 * (1.0 + rho)) - 1.0; }

double chibar_lsm_upper(double lambda, double rho) {
  if (lambda <= 1.0) return 1.0;
  return std::max(2.0 / lambda - 1.0, rho);
}

// Type-7 sample quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (pos - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

struct Counts {
  std::size_t first = 0;
  std::size_t joint = 0;
};

Counts exceedances(const double* u1, const double* u2, std::size_t n, double p, TailSide side,
                   std::size_t stride) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
  Counts c;
  const double q = 1.0 - p;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u1[i * stride];
    const double b = u2[i * stride];
    const bool ea = side == TailSide::Upper ? a > p : a < q;
    const bool eb = side == TailSide::Upper ? b > p : b < q;
    c.first += ea;
    c.joint += ea && eb;
  }
  return c;
}

}  // namespace

ChiValue chi_theory(const MixingSpec& spec, double rho, TailSide side, const ChiMcOptions& mc) {
  check_rho(rho);
  validate(spec);
  const bool upper = side == TailSide::Upper;
  return std::visit(
      [&](const auto& v) -> ChiValue {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, mix::LM1>) return {upper ? chi_location(v.lambda, rho) : 0.0};
        else if constexpr (std::is_same_v<T, mix::LM2>)
          return {chi_location(upper ? v.lambda1 : v.lambda2, rho)};
        else if constexpr (std::is_same_v<T, mix::SM3>) return {chi_student(v.nu, rho)};
        else if constexpr (std::is_same_v<T, mix::SM4>) return {chi_student(1.0 / v.gamma, rho)};
        else if constexpr (std::is_same_v<T, mix::SM5>)
          return {v.gamma > 1e-12 ? chi_student(1.0 / v.gamma, rho) : 0.0};
        else if constexpr (std::is_same_v<T, mix::LSM1>) {
          if (!upper || v.lambda >= 1.0) return {0.0};
          return chi_lsm(v.lambda, rho, mc);
        } else if constexpr (std::is_same_v<T, mix::LSM2>) {
          const double lambda = upper ? v.lambda1 : v.lambda2;
          if (lambda >= 1.0) return {0.0};
          return chi_lsm(lambda, rho, mc);
        } else {
          return {0.0};  // Gaussian, SM1, SM2
        }
      },
      spec);
}

double chibar_theory(const MixingSpec& spec, double rho, TailSide side) {
  check_rho(rho);
  validate(spec);
  const bool upper = side == TailSide::Upper;
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, mix::Gaussian>) return rho;
        else if constexpr (std::is_same_v<T, mix::LM1>) return upper ? 1.0 : rho;
        else if constexpr (std::is_same_v<T, mix::SM1> || std::is_same_v<T, mix::SM2>) return chibar_laplace(rho);
        else if constexpr (std::is_same_v<T, mix::SM5>) {
          if (v.gamma > 1e-12) return 1.0;
          if (v.gamma < -1e-12) return rho;
          return std::cbrt(4.0 * (1.0 + rho)) - 1.0;
        } else if constexpr (std::is_same_v<T, mix::LSM1>)
          return upper ? chibar_lsm_upper(v.lambda, rho) : chibar_laplace(rho);
        else if constexpr (std::is_same_v<T, mix::LSM2>)
          return chibar_lsm_upper(upper ? v.lambda1 : v.lambda2, rho);
        else return 1.0;  // LM2, SM3, SM4
      },
      spec);
}

std::optional<double> chi_empirical(const double* u1, const double* u2, std::size_t n, double p,
                                    TailSide side, std::size_t stride) {
  const Counts c = exceedances(u1, u2, n, p, side, stride);
  if (c.joint == 0) return std::nullopt;
  return static_cast<double>(c.joint) / static_cast<double>(c.first);
}

std::optional<double> chibar_empirical(const double* u1, const double* u2, std::size_t n, double p,
                                       TailSide side, std::size_t stride) {
  const Counts c = exceedances(u1, u2, n, p, side, stride);
  if (c.joint == 0) return std::nullopt;
  const double pn = static_cast<double>(n);
  const double joint = static_cast<double>(c.joint) / pn;
  if (joint >= 1.0) return 1.0;
  return 2.0 * std::log(static_cast<double>(c.first) / pn) / std::log(joint) - 1.0;
}

const std::vector<double>& default_chi_thresholds() {
  static const std::vector<double> t{0.5, 0.75, 0.9, 0.95, 0.975, 0.99};
  return t;
}

ChiCurve chi_by_distance(const DataMatrix& udata, const std::vector<double>& thresholds, double bin_width,
                         TailSide side, int workers) {
  const std::size_t m = udata.m();
  const std::size_t n = udata.n();
  if (m < 2) throw InvalidArgument("chi_by_distance: need at least two sites");
  if (!(bin_width > 0.0)) throw InvalidArgument("chi_by_distance: bin width must be positive");
  if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end()))
    throw InvalidArgument("chi_by_distance: thresholds must be ascending");
  const Eigen::MatrixXd dist = distance_matrix(udata.sites);
  const std::size_t nbins = static_cast<std::size_t>(std::floor(dist.maxCoeff() / bin_width)) + 1;
  const std::size_t nt = thresholds.size();

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  std::vector<double> est(pairs.size() * nt, std::nan(""));
  const double* base = udata.values.data();
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    for (std::size_t t = 0; t < nt; ++t) {
      const auto c = chi_empirical(base + i, base + j, n, thresholds[t], side, m);
      if (c) est[k * nt + t] = *c;
    }
  });

  ChiCurve curve{thresholds, bin_width, {}};
  std::vector<std::vector<double>> cells(nbins * nt);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto b = static_cast<std::size_t>(dist(pairs[k].first, pairs[k].second) / bin_width);
    for (std::size_t t = 0; t < nt; ++t)
      if (!std::isnan(est[k * nt + t])) cells[t * nbins + b].push_back(est[k * nt + t]);
  }
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t b = 0; b < nbins; ++b) {
      auto& v = cells[t * nbins + b];
      ChiBin bin{(static_cast<double>(b) + 0.5) * bin_width, thresholds[t], v.size(), std::nan(""),
                 std::nan(""), std::nan("")};
      if (!v.empty()) {
        std::sort(v.begin(), v.end());
        bin.q1 = quantile_sorted(v, 0.25);
        bin.median = quantile_sorted(v, 0.5);
        bin.q3 = quantile_sorted(v, 0.75);
      }
      curve.bins.push_back(bin);
    }
  }
  return curve;
}

void write_chi_curve(const std::string& path, const ChiCurve& curve) {
  Table t({"bin_center", "p", "q1", "median", "q3", "pairs"});
  for (const auto& b : curve.bins)
    t.add_row({b.center, b.p, b.q1, b.median, b.q3, static_cast<double>(b.pairs)});
  write_table(path, t);
}

}  // namespace glsm
