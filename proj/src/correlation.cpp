#include "glsm/correlation.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <utility>

#include "glsm/error.hpp"
#include "glsm/numkernel.hpp"
#include "glsm/random.hpp"
#include "glsm/table_io.hpp"

namespace glsm {

void MaternParams::validate() const {
  if (!(range > 0.0) || !std::isfinite(range)) throw InvalidArgument("Matern range must be positive");
  if (!(smoothness > 0.0) || !std::isfinite(smoothness))
    throw InvalidArgument("Matern smoothness must be positive");
}

namespace {

double matern_rho_unchecked(double h, double range, double eta) {
  if (h == 0.0) return 1.0;
  const double u = 2.0 * std::sqrt(eta) * h / range;
  if (eta == 0.5) return std::exp(-u);
  // 2^{1-eta}/Gamma(eta) u^eta K_eta(u), assembled in log space.
  const double log_rho = (1.0 - eta) * std::log(2.0) - std::lgamma(eta) + eta * std::log(u) +
                         num::log_bessel_k(eta, u);
  return std::min(std::exp(log_rho), 1.0);
}

}  // namespace

double matern_rho(double h, const MaternParams& p) {
  p.validate();
  if (h < 0.0 || !std::isfinite(h)) throw InvalidArgument("matern_rho: distance must be >= 0");
  return matern_rho_unchecked(h, p.range, p.smoothness);
}

Eigen::MatrixXd distance_matrix(const SiteSet& sites) { return distance_matrix(sites, sites); }

Eigen::MatrixXd distance_matrix(const SiteSet& a, const SiteSet& b) {
  Eigen::MatrixXd d(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) d(i, j) = std::hypot(a[i].x - b[j].x, a[i].y - b[j].y);
  return d;
}

Eigen::MatrixXd matern_matrix(const Eigen::MatrixXd& dist, const MaternParams& p) {
  p.validate();
  if ((dist.array() < 0.0).any()) throw InvalidArgument("matern_matrix: negative distance");
  return dist.unaryExpr([&](double h) { return matern_rho_unchecked(h, p.range, p.smoothness); });
}

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& a, double* jitter_used) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    if (jitter_used) *jitter_used = 0.0;
    return llt.matrixL();
  }
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt.matrixL();
    }
  }
  throw NumericalError("Cholesky factorisation failed after maximum jitter");
}

CorrMatrix::CorrMatrix(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() == 0)
    throw InvalidArgument("CorrMatrix: matrix must be square and non-empty");
  chol_ = robust_cholesky(sigma_, &jitter_);
}

double CorrMatrix::log_det() const { return 2.0 * chol_.diagonal().array().log().sum(); }

void validate_sites(const SiteSet& sites) {
  if (sites.size() < 2) throw InvalidArgument("site set needs at least two sites");
  std::set<std::pair<double, double>> seen;
  for (const auto& s : sites) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) throw InvalidArgument("site coordinates must be finite");
    if (!seen.emplace(s.x, s.y).second) throw InvalidArgument("duplicate site coordinates");
  }
}

CorrMatrix build_corr_matrix(const SiteSet& sites, const MaternParams& p) {
  validate_sites(sites);
  return build_corr_matrix(distance_matrix(sites), p);
}

CorrMatrix build_corr_matrix(const Eigen::MatrixXd& dist, const MaternParams& p) {
  p.validate();
  const Eigen::Index m = dist.rows();
  if (dist.cols() != m) throw InvalidArgument("build_corr_matrix: distance matrix must be square");
  Eigen::MatrixXd sigma(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    sigma(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < m; ++i) {
      const double r = matern_rho_unchecked(dist(i, j), p.range, p.smoothness);
      sigma(i, j) = r;
      sigma(j, i) = r;
    }
  }
  return CorrMatrix(std::move(sigma));
}

double avg_variance(const CorrMatrix& sigma) {
  const double m = static_cast<double>(sigma.size());
  return sigma.matrix().sum() / (m * m);
}

SiteSet uniform_sites(std::size_t m, std::uint64_t seed, double lo, double hi) {
  Stream rng(seed);
  SiteSet sites(m);
  for (auto& s : sites) {
    s.x = lo + (hi - lo) * rng.uniform();
    s.y = lo + (hi - lo) * rng.uniform();
  }
  return sites;
}

SiteSet read_sites(const std::string& path) {
  const Table t = read_table(path);
  if (t.cols() != 2) throw DataError("site file must have two columns: " + path);
  SiteSet sites(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) sites[i] = {t.at(i, 0), t.at(i, 1)};
  validate_sites(sites);
  return sites;
}

void write_sites(const std::string& path, const SiteSet& sites) {
  Table t({"x", "y"});
  for (const auto& s : sites) t.add_row({s.x, s.y});
  write_table(path, t);
}

}  // namespace glsm
