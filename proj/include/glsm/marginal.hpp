#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace glsm::egpd {

// F(y) = B(H_xi(y / sigma)) with B(u) = p u^kappa1 + (1 - p) u^kappa2.
struct EgpdParams {
  double sigma = 1.0;
  double xi = 0.1;
  double p = 0.5;
  double kappa1 = 1.0;
  double kappa2 = 2.0;

  void validate() const;
  // Upper end of the support (infinity for xi >= 0).
  double upper_endpoint() const;
};

double gpd_cdf(double x, double xi, double sigma);
// Inverse of gpd_cdf on [0, 1).
double gpd_inverse(double v, double xi, double sigma);

double b_cdf(double u, const EgpdParams& p);
// Inverse of B on [0, 1] by safeguarded Newton, converged to a few ulps.
double b_inverse(double v, const EgpdParams& p);

double egpd_cdf(double y, const EgpdParams& p);
double egpd_pdf(double y, const EgpdParams& p);
double egpd_logpdf(double y, const EgpdParams& p);
double egpd_quantile(double u, const EgpdParams& p);

std::vector<double> egpd_sample(const EgpdParams& p, std::size_t n, std::uint64_t seed);

struct EgpdFit {
  EgpdParams params;
  double negloglik = 0.0;
  bool converged = false;
};

// Maximum likelihood over (log sigma, xi, logit p, log kappa1,
// log(kappa2 - kappa1)) by multi-start Nelder-Mead.
EgpdFit egpd_fit(const std::vector<double>& samples);

struct SiteEgpd {
  std::size_t site = 0;
  EgpdParams params;
};

void write_egpd_table(const std::string& path, const std::vector<SiteEgpd>& fits);
std::vector<SiteEgpd> read_egpd_table(const std::string& path);

}  // namespace glsm::egpd
