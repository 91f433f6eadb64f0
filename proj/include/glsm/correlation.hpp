#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glsm {

struct MaternParams {
  double range = 1.0;       // phi
  double smoothness = 0.5;  // eta

  void validate() const;
};

struct Site {
  double x = 0.0;
  double y = 0.0;
};

using SiteSet = std::vector<Site>;

// Matern correlation at distance h >= 0.
double matern_rho(double h, const MaternParams& p);

// Pairwise Euclidean distances.
Eigen::MatrixXd distance_matrix(const SiteSet& sites);
Eigen::MatrixXd distance_matrix(const SiteSet& a, const SiteSet& b);

// Applies matern_rho elementwise to a distance matrix.
Eigen::MatrixXd matern_matrix(const Eigen::MatrixXd& dist, const MaternParams& p);

// Lower Cholesky factor of a symmetric positive definite matrix. On failure,
// retries with diagonal jitter 1e-10, 1e-9, ..., 1e-6 before throwing
// NumericalError. `jitter_used` receives the jitter that succeeded.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& a, double* jitter_used = nullptr);

// Symmetric correlation matrix with a cached lower Cholesky factor.
class CorrMatrix {
 public:
  explicit CorrMatrix(Eigen::MatrixXd sigma);

  const Eigen::MatrixXd& matrix() const { return sigma_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  Eigen::Index size() const { return sigma_.rows(); }
  double jitter() const { return jitter_; }
  // log det Sigma from the Cholesky diagonal.
  double log_det() const;

 private:
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
  double jitter_ = 0.0;
};

// Rejects sets with fewer than two sites or with duplicated coordinates.
void validate_sites(const SiteSet& sites);

CorrMatrix build_corr_matrix(const SiteSet& sites, const MaternParams& p);
CorrMatrix build_corr_matrix(const Eigen::MatrixXd& dist, const MaternParams& p);

// m^-2 1' Sigma 1.
double avg_variance(const CorrMatrix& sigma);

// m sites uniform on [lo, hi]^2.
SiteSet uniform_sites(std::size_t m, std::uint64_t seed, double lo = 0.0, double hi = 200.0);

SiteSet read_sites(const std::string& path);
void write_sites(const std::string& path, const SiteSet& sites);

}  // namespace glsm
