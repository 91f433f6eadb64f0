#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glsm/correlation.hpp"
#include "glsm/mixing.hpp"

namespace glsm {

struct ModelParams {
  MixingSpec mixing;
  MaternParams corr;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// n replications (rows) by m sites (columns).
struct DataMatrix {
  RowMatrix values;
  SiteSet sites;

  std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(values.cols()); }
  void validate() const;
};

// Row i is s_i + r_i * chol * g_i, drawn from Stream(seed, i).
DataMatrix simulate(const ModelParams& params, const SiteSet& sites, std::size_t n, std::uint64_t seed,
                    int workers = 1);
RowMatrix simulate_rows(const MixingSpec& spec, const Eigen::MatrixXd& chol, std::size_t n,
                        std::uint64_t seed, int workers = 1);

// Sorted Monte-Carlo sample of S + R W.
struct MonteCarloMarginal {
  std::vector<double> sorted;
  std::size_t size() const { return sorted.size(); }
};

inline constexpr std::size_t kMinTableSize = 10000;

// Fixed uniforms and standard normals reused across parameter values, so the
// Monte-Carlo sample s + r * scale * g is a smooth function of the mixing
// parameters for a given seed.
class CommonDraws {
 public:
  CommonDraws(std::size_t n, int uniform_dim, std::uint64_t seed);

  std::size_t size() const { return normals_.size(); }
  int uniform_dim() const { return udim_; }
  // Unsorted values s_k + r_k * scale * g_k.
  void values(const MixingSpec& spec, double scale, std::vector<double>& out) const;
  MonteCarloMarginal table(const MixingSpec& spec, double scale = 1.0) const;

 private:
  int udim_;
  std::vector<double> uniforms_;
  std::vector<double> normals_;
};

MonteCarloMarginal marginal_table(const MixingSpec& spec, std::size_t n, std::uint64_t seed,
                                  double scale = 1.0);

// Piecewise-linear interpolation through (x_(k), (k - 1/2)/N), clamped to
// [1/(2N), 1 - 1/(2N)].
double mc_cdf(const MonteCarloMarginal& table, double x);
// Inverse of mc_cdf; clamps to the extreme draws outside [1/(2N), 1 - 1/(2N)].
double mc_quantile(const MonteCarloMarginal& table, double u);

DataMatrix to_uniform(const DataMatrix& data, const MonteCarloMarginal& table);
DataMatrix from_uniform(const DataMatrix& udata, const MonteCarloMarginal& table);

// Column-wise ranks / (n + 1).
DataMatrix pseudo_uniform(const DataMatrix& data);

RowMatrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const RowMatrix& values, const std::string& prefix = "s");
DataMatrix read_data(const std::string& data_path, const std::string& sites_path);

}  // namespace glsm
