#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "glsm/correlation.hpp"
#include "glsm/marginal.hpp"
#include "glsm/mixing.hpp"
#include "glsm/process.hpp"

namespace glsm {

struct CondSimConfig {
  std::size_t burnin = 5000;   // iterations discarded before retention starts
  std::size_t steps = 50000;   // iterations after burn-in
  std::size_t thin = 100;
  double prop_sd_s = 1.0;
  double prop_sd_logr = 1.0;
  // Random walk on log s when S lives on [0, inf).
  bool log_s = true;
  // Rescale proposal sds towards a 0.3 acceptance rate during burn-in.
  bool adapt = false;

  void validate() const;
  std::size_t retained() const { return steps / thin; }
};

struct Chain {
  std::vector<LatentDraw> draws;
  double acceptance_rate = 0.0;
};

// log min(1, ratio) for a move cur -> cand targeting (S, R) | X1 = x1. With
// a closed-form f_{S,R} the state is (s, log r) (and log s if log_s); for SM4
// the state is (log e, log g).
double mh_log_accept(const MixingSpec& spec, const LatentDraw& cand, const LatentDraw& cur,
                     std::span<const double> x1, const Eigen::MatrixXd& chol11, bool log_s = false);

Chain mh_chain(const MixingSpec& spec, std::span<const double> x1, const Eigen::MatrixXd& chol11,
               const CondSimConfig& cfg, std::uint64_t seed);
Chain mh_chain(const ModelParams& params, std::span<const double> x1, const SiteSet& sites1,
               const CondSimConfig& cfg, std::uint64_t seed);

// Conditional law of W2 | W1 = w1: mean weights * w1, covariance cov.
struct Kriging {
  Eigen::MatrixXd weights;  // Sigma21 Sigma11^{-1}
  Eigen::MatrixXd cov;      // Sigma22 - Sigma21 Sigma11^{-1} Sigma12
  Eigen::MatrixXd cov_chol;
};

Kriging kriging(const Eigen::MatrixXd& chol11, const Eigen::MatrixXd& sigma21, const Eigen::MatrixXd& sigma22);

Eigen::VectorXd gaussian_conditional(const Kriging& k, const Eigen::VectorXd& w1, Stream& stream);

// One row of X2 draws per retained chain state.
RowMatrix conditional_simulate(const ModelParams& params, const SiteSet& sites1, std::span<const double> x1,
                               const SiteSet& sites2, const CondSimConfig& cfg, std::uint64_t seed,
                               Chain* chain_out = nullptr);

// Per-column medians; when a table and per-site EGPD margins are given, the
// medians are mapped to the observed scale by egpd_quantile(mc_cdf(.)).
std::vector<double> conditional_predict(const RowMatrix& draws, const MonteCarloMarginal* table = nullptr,
                                        const std::vector<egpd::EgpdParams>* margins = nullptr);

}  // namespace glsm
