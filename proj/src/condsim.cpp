#include "glsm/condsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glsm/error.hpp"
#include "glsm/numkernel.hpp"
#include "glsm/parallel.hpp"

namespace glsm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool latent_state(const MixingSpec& spec) { return !logdensity_sr(spec, 0.0, 1.0).has_value(); }

// Unnormalised log target on the random-walk coordinates.
double log_target(const MixingSpec& spec, const LatentDraw& d, std::span<const double> x1,
                  const Eigen::MatrixXd& chol11, bool log_s, Eigen::VectorXd& scratch) {
  const auto m = static_cast<Eigen::Index>(x1.size());
  if (!(d.r > 0.0) || !std::isfinite(d.r) || !std::isfinite(d.s)) return kNegInf;
  double lp;
  double jac;
  if (latent_state(spec)) {
    if (!(d.latent[0] > 0.0 && d.latent[1] > 0.0)) return kNegInf;
    lp = logdensity_latent(spec, d);
    jac = std::log(d.latent[0]) + std::log(d.latent[1]) - m * std::log(d.r);
  } else {
    lp = *logdensity_sr(spec, d.s, d.r);
    if (lp == kNegInf) return kNegInf;
    jac = -(m - 1) * std::log(d.r);
    if (log_s) {
      if (!(d.s > 0.0)) return kNegInf;
      jac += std::log(d.s);
    }
  }
  scratch.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) scratch[j] = (x1[static_cast<std::size_t>(j)] - d.s) / d.r;
  return lp + jac + num::mvn_logpdf({scratch.data(), static_cast<std::size_t>(m)}, chol11);
}

LatentDraw propose(const MixingSpec& spec, const LatentDraw& cur, double sd_s, double sd_logr, bool log_s,
                   Stream& rng) {
  LatentDraw c = cur;
  if (latent_state(spec)) {
    c.latent[0] = cur.latent[0] * std::exp(sd_logr * rng.normal());
    c.latent[1] = cur.latent[1] * std::exp(sd_logr * rng.normal());
    latent_to_sr(spec, c);
    return c;
  }
  if (has_location(spec)) c.s = log_s ? cur.s * std::exp(sd_s * rng.normal()) : cur.s + sd_s * rng.normal();
  if (has_scale(spec)) c.r = cur.r * std::exp(sd_logr * rng.normal());
  return c;
}

}  // namespace

void CondSimConfig::validate() const {
  if (thin < 1) throw InvalidArgument("thin must be >= 1");
  if (steps < thin) throw InvalidArgument("steps must be at least thin");
  if (!(prop_sd_s > 0.0) || !(prop_sd_logr > 0.0)) throw InvalidArgument("proposal sds must be positive");
}

double mh_log_accept(const MixingSpec& spec, const LatentDraw& cand, const LatentDraw& cur,
                     std::span<const double> x1, const Eigen::MatrixXd& chol11, bool log_s) {
  if (static_cast<Eigen::Index>(x1.size()) != chol11.rows())
    throw InvalidArgument("mh_log_accept: x1 and Sigma11 dimensions differ");
  Eigen::VectorXd scratch;
  const double a = log_target(spec, cand, x1, chol11, log_s, scratch);
  if (a == kNegInf) return kNegInf;
  const double b = log_target(spec, cur, x1, chol11, log_s, scratch);
  return std::min(0.0, a - b);
}

Chain mh_chain(const MixingSpec& spec, std::span<const double> x1, const Eigen::MatrixXd& chol11,
               const CondSimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  validate(spec);
  if (static_cast<Eigen::Index>(x1.size()) != chol11.rows())
    throw InvalidArgument("mh_chain: x1 and Sigma11 dimensions differ");
  Chain chain;
  const std::size_t keep = cfg.retained();
  chain.draws.reserve(keep);
  if (std::holds_alternative<mix::Gaussian>(spec)) {
    chain.draws.assign(keep, LatentDraw{});
    chain.acceptance_rate = 1.0;
    return chain;
  }
  const bool log_s = cfg.log_s && location_positive(spec) && !latent_state(spec);
  Stream rng(seed);
  Eigen::VectorXd scratch;

  // Start from the best of a batch of prior draws.
  LatentDraw cur = sample_sr(spec, rng);
  double cur_lp = log_target(spec, cur, x1, chol11, log_s, scratch);
  for (int k = 0; k < 1000; ++k) {
    LatentDraw d = sample_sr(spec, rng);
    const double lp = log_target(spec, d, x1, chol11, log_s, scratch);
    if (lp > cur_lp) {
      cur = d;
      cur_lp = lp;
    }
  }
  if (cur_lp == kNegInf) throw NumericalError("mh_chain: no starting point with positive density");

  double sd_s = cfg.prop_sd_s;
  double sd_r = cfg.prop_sd_logr;
  std::size_t accepted = 0;
  std::size_t window_accepted = 0;
  const std::size_t total = cfg.burnin + cfg.steps;
  for (std::size_t it = 0; it < total; ++it) {
    const LatentDraw cand = propose(spec, cur, sd_s, sd_r, log_s, rng);
    const double cand_lp = log_target(spec, cand, x1, chol11, log_s, scratch);
    const double log_u = std::log(rng.uniform());
    if (cand_lp != kNegInf && log_u < cand_lp - cur_lp) {
      cur = cand;
      cur_lp = cand_lp;
      if (it >= cfg.burnin) ++accepted;
      ++window_accepted;
    }
    if (cfg.adapt && it < cfg.burnin && (it + 1) % 100 == 0) {
      const double rate = static_cast<double>(window_accepted) / 100.0;
      const double f = std::exp(rate - 0.3);
      sd_s *= f;
      sd_r *= f;
      window_accepted = 0;
    }
    if (it >= cfg.burnin && (it - cfg.burnin + 1) % cfg.thin == 0) chain.draws.push_back(cur);
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.steps);
  if (accepted == 0) throw NumericalError("mh_chain: no proposal accepted after burn-in");
  return chain;
}

Chain mh_chain(const ModelParams& params, std::span<const double> x1, const SiteSet& sites1,
               const CondSimConfig& cfg, std::uint64_t seed) {
  if (x1.size() != sites1.size()) throw InvalidArgument("mh_chain: x1 length differs from site count");
  Eigen::MatrixXd chol;
  if (sites1.size() == 1) chol = Eigen::MatrixXd::Ones(1, 1);
  else chol = build_corr_matrix(sites1, params.corr).chol();
  return mh_chain(params.mixing, x1, chol, cfg, seed);
}

Kriging kriging(const Eigen::MatrixXd& chol11, const Eigen::MatrixXd& sigma21, const Eigen::MatrixXd& sigma22) {
  if (sigma21.cols() != chol11.rows() || sigma22.rows() != sigma21.rows() || sigma22.cols() != sigma22.rows())
    throw InvalidArgument("kriging: block dimensions do not conform");
  Kriging k;
  Eigen::MatrixXd x = sigma21.transpose();  // Sigma12
  chol11.triangularView<Eigen::Lower>().solveInPlace(x);
  chol11.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  k.weights = x.transpose();
  k.cov = sigma22 - sigma21 * x;
  k.cov = 0.5 * (k.cov + k.cov.transpose());
  k.cov_chol = robust_cholesky(k.cov);
  return k;
}

Eigen::VectorXd gaussian_conditional(const Kriging& k, const Eigen::VectorXd& w1, Stream& stream) {
  if (w1.size() != k.weights.cols()) throw InvalidArgument("gaussian_conditional: w1 has wrong length");
  Eigen::VectorXd g(k.cov.rows());
  for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = stream.normal();
  return k.weights * w1 + k.cov_chol.triangularView<Eigen::Lower>() * g;
}

RowMatrix conditional_simulate(const ModelParams& params, const SiteSet& sites1, std::span<const double> x1,
                               const SiteSet& sites2, const CondSimConfig& cfg, std::uint64_t seed,
                               Chain* chain_out) {
  if (sites1.empty() || sites2.empty()) throw InvalidArgument("conditional_simulate: empty site list");
  if (x1.size() != sites1.size()) throw InvalidArgument("conditional_simulate: x1 length differs from site count");
  for (const auto& a : sites1)
    for (const auto& b : sites2)
      if (a.x == b.x && a.y == b.y) throw InvalidArgument("conditional_simulate: site sets overlap");
  SiteSet all = sites1;
  all.insert(all.end(), sites2.begin(), sites2.end());
  validate_sites(all);
  const auto m1 = static_cast<Eigen::Index>(sites1.size());
  const auto m2 = static_cast<Eigen::Index>(sites2.size());
  const Eigen::MatrixXd d = distance_matrix(all);
  const Eigen::MatrixXd sigma = build_corr_matrix(d, params.corr).matrix();
  const Eigen::MatrixXd chol11 = robust_cholesky(sigma.topLeftCorner(m1, m1));
  const Kriging k = kriging(chol11, sigma.bottomLeftCorner(m2, m1), sigma.bottomRightCorner(m2, m2));

  Chain chain = mh_chain(params.mixing, x1, chol11, cfg, derive_seed(seed, 0));
  Stream rng(derive_seed(seed, 1));
  RowMatrix out(static_cast<Eigen::Index>(chain.draws.size()), m2);
  Eigen::VectorXd w1(m1);
  for (std::size_t i = 0; i < chain.draws.size(); ++i) {
    const auto& dr = chain.draws[i];
    for (Eigen::Index j = 0; j < m1; ++j) w1[j] = (x1[static_cast<std::size_t>(j)] - dr.s) / dr.r;
    const Eigen::VectorXd w2 = gaussian_conditional(k, w1, rng);
    out.row(static_cast<Eigen::Index>(i)) = (dr.s + dr.r * w2.array()).matrix().transpose();
  }
  if (chain_out) *chain_out = std::move(chain);
  return out;
}

std::vector<double> conditional_predict(const RowMatrix& draws, const MonteCarloMarginal* table,
                                        const std::vector<egpd::EgpdParams>* margins) {
  if (draws.rows() == 0) throw InvalidArgument("conditional_predict: no draws");
  if (margins && !table) throw InvalidArgument("conditional_predict: EGPD margins need a marginal table");
  if (margins && margins->size() != static_cast<std::size_t>(draws.cols()))
    throw InvalidArgument("conditional_predict: one EGPD margin per target site required");
  std::vector<double> out(static_cast<std::size_t>(draws.cols()));
  std::vector<double> col(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    for (Eigen::Index i = 0; i < draws.rows(); ++i) col[static_cast<std::size_t>(i)] = draws(i, j);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    double med = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    if (table) {
      const double u = mc_cdf(*table, med);
      med = margins ? egpd::egpd_quantile(u, (*margins)[static_cast<std::size_t>(j)]) : u;
    }
    out[static_cast<std::size_t>(j)] = med;
  }
  return out;
}

}  // namespace glsm
