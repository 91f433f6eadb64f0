#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glsm/correlation.hpp"
#include "glsm/mixing.hpp"
#include "glsm/optimize.hpp"
#include "glsm/process.hpp"

namespace glsm {

enum class Step1Kind { PureGaussian, Location, Scale, LocationScale };

// Transformation class for the restricted likelihood, with 0-based
// reference sites (ref2 is used by LocationScale only).
struct Step1Class {
  Step1Kind kind = Step1Kind::PureGaussian;
  std::size_t ref1 = 0;
  std::size_t ref2 = 1;

  void validate(std::size_t m) const;
};

Step1Class default_step1_class(const MixingSpec& spec);
std::string step1_kind_name(Step1Kind k);
Step1Kind parse_step1_kind(const std::string& name);

// Differencing operator: rows e_j - e_ref1 for j != ref1. For LocationScale
// the row of ref2 comes first; otherwise rows follow site order.
Eigen::MatrixXd difference_operator(const Step1Class& cls, std::size_t m);

// Differences, ratios or ratios of differences against the references;
// nullopt when a denominator is below 1e-12 in absolute value.
std::optional<Eigen::VectorXd> z_transform(const Eigen::VectorXd& row, const Step1Class& cls);

struct ZRows {
  RowMatrix z;                 // valid rows only
  std::size_t skipped = 0;     // rows dropped for zero denominators
};

ZRows z_transform_rows(const RowMatrix& x, const Step1Class& cls);

// Precomputed sufficient quantities for repeated likelihood evaluation.
class Step1Problem {
 public:
  Step1Problem(const ZRows& z, const SiteSet& sites, const Step1Class& cls);

  double negloglik(const MaternParams& p) const;
  // Same likelihood at an arbitrary site correlation matrix.
  double negloglik_sigma(const Eigen::MatrixXd& sigma) const;
  std::size_t rows() const { return n_; }
  std::size_t skipped() const { return skipped_; }
  const Eigen::MatrixXd& distances() const { return dist_; }
  const Step1Class& cls() const { return cls_; }

 private:
  Step1Class cls_;
  Eigen::MatrixXd dist_;
  std::vector<Eigen::Index> order_;  // Scale: sites; difference classes: non-reference sites
  Eigen::MatrixXd scatter_;  // sum of z z' (Gaussian classes)
  Eigen::MatrixXd zdot_;     // columns (1, z) in operator order (ratio classes)
  std::size_t n_ = 0;
  std::size_t skipped_ = 0;
};

// Negative restricted log-likelihood; +infinity if Sigma is not factorisable.
double step1_negloglik(const MaternParams& p, const ZRows& z, const SiteSet& sites, const Step1Class& cls);

struct Step1Options {
  std::optional<MaternParams> start;  // default: range = half the median distance, smoothness 1
  std::optional<double> fixed_smoothness;
  opt::NelderMeadOptions nm{1e-10, 1e-5, 1500};
  int restarts = 1;
};

struct TraceEntry {
  int stage = 0;  // 1: step 1 (log phi, log eta), 2: step 2 (unconstrained mixing parameters)
  std::vector<double> x;
  double value = 0.0;
};

struct ThetaWFit {
  MaternParams params;
  double negloglik = 0.0;
  bool converged = false;
  std::size_t rows = 0;
  std::size_t skipped = 0;
};

ThetaWFit fit_theta_w(const DataMatrix& data, const Step1Class& cls, const Step1Options& opts = {},
                      std::vector<TraceEntry>* trace = nullptr);
ThetaWFit fit_theta_w(const Step1Problem& problem, const Step1Options& opts = {},
                      std::vector<TraceEntry>* trace = nullptr);

struct RowMeans {
  std::vector<double> sorted;  // ascending spatial averages
  double var_wbar = 0.0;       // m^-2 1' Sigma 1
};

RowMeans row_means(const RowMatrix& x, double var_wbar);

struct CvmConfig {
  std::size_t draws = 100000;
  std::uint64_t seed = 977;
  double tol = 1e-6;
  int max_evaluations = 200;
  int grid_points = 15;
};

// 1/(12n) + sum_i ((i - 1/2)/n - F(x_(i)))^2 for sorted means.
double cvm_stat(const std::vector<double>& sorted_means, const MonteCarloMarginal& model);
double cvm_stat(const MixingSpec& spec, const RowMeans& means, const CommonDraws& draws);
double cvm_stat(const MixingSpec& spec, const RowMeans& means, const CvmConfig& cfg);

struct ThetaSrFit {
  MixingSpec mixing;
  double cvm = 0.0;
  bool converged = false;
};

// Search interval per unconstrained coordinate.
std::pair<double, double> theta_sr_bracket(const MixingSpec& spec, std::size_t index);

ThetaSrFit fit_theta_sr(const RowMeans& means, const MixingSpec& spec, const CvmConfig& cfg,
                        std::vector<TraceEntry>* trace = nullptr);
ThetaSrFit fit_theta_sr(const DataMatrix& data, const MaternParams& theta_w, const MixingSpec& spec,
                        const CvmConfig& cfg, std::vector<TraceEntry>* trace = nullptr);

struct FitOptions {
  std::optional<Step1Class> cls;  // default_step1_class(spec)
  Step1Options step1;
  CvmConfig cvm;
  std::size_t table_draws = 100000;  // copula quantile tables
  std::uint64_t table_seed = 4211;
};

struct FitResult {
  MaternParams corr;
  MixingSpec mixing;
  Step1Class cls;
  double step1_negloglik = 0.0;
  double cvm = 0.0;
  bool step1_converged = false;
  bool step2_converged = false;
  bool copula = false;
  std::size_t rows_used = 0;
  std::size_t rows_skipped = 0;
  double seconds = 0.0;
  std::vector<TraceEntry> trace;

  // (phi, eta, mixing parameters...)
  std::vector<std::string> names() const;
  std::vector<double> values() const;
};

FitResult fit_two_step(const DataMatrix& data, const MixingSpec& spec, const FitOptions& opts = {});

// Copula fit on uniform-scale data: outer search over the mixing parameters,
// each trial maps u to x through a Monte-Carlo quantile table, refits theta_W
// (warm-started) and scores the Cramer-von Mises statistic.
FitResult fit_copula(const DataMatrix& udata, const MixingSpec& spec, const FitOptions& opts = {});

enum class BootstrapMode { Fast, Standard };

struct BootstrapOptions {
  std::size_t replicates = 100;
  double level = 0.95;
  BootstrapMode mode = BootstrapMode::Fast;
  std::uint64_t seed = 1;
  int workers = 1;
  FitOptions fit;
};

struct Interval {
  std::string name;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapResult {
  std::vector<Interval> intervals;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::vector<std::vector<double>> replicates;  // per successful replicate, FitResult::values order
};

// Parametric bootstrap at the fitted parameters; the copula flag of fit
// selects the copula variants of both modes.
BootstrapResult bootstrap_ci(const FitResult& fit, const SiteSet& sites, std::size_t n,
                             const BootstrapOptions& opts);

// Full-likelihood negative log-likelihood by adaptive quadrature over the
// mixing variables, for m <= 3. Intended as a test oracle.
double quad_negloglik_oracle(const ModelParams& params, const DataMatrix& data);
double quad_logdensity_oracle(const ModelParams& params, const Eigen::VectorXd& x,
                              const Eigen::MatrixXd& chol);

}  // namespace glsm
