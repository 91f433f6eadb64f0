#include "glsm/process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glsm/error.hpp"
#include "glsm/numkernel.hpp"
#include "glsm/parallel.hpp"
#include "glsm/random.hpp"
#include "glsm/table_io.hpp"

namespace glsm {

void DataMatrix::validate() const {
  if (values.rows() < 1) throw DataError("data matrix has no rows");
  if (static_cast<std::size_t>(values.cols()) != sites.size())
    throw DataError("data column count does not match site count");
  if (!values.allFinite()) throw DataError("data matrix contains non-finite values");
}

RowMatrix simulate_rows(const MixingSpec& spec, const Eigen::MatrixXd& chol, std::size_t n,
                        std::uint64_t seed, int workers) {
  validate(spec);
  const Eigen::Index m = chol.rows();
  RowMatrix out(static_cast<Eigen::Index>(n), m);
  parallel_for(n, workers, [&](std::size_t i) {
    Stream rng(seed, i);
    const LatentDraw d = sample_sr(spec, rng);
    Eigen::VectorXd g(m);
    for (Eigen::Index j = 0; j < m; ++j) g[j] = rng.normal();
    const Eigen::VectorXd w = chol.triangularView<Eigen::Lower>() * g;
    out.row(static_cast<Eigen::Index>(i)) = (d.s + d.r * w.array()).matrix().transpose();
  });
  return out;
}

DataMatrix simulate(const ModelParams& params, const SiteSet& sites, std::size_t n, std::uint64_t seed,
                    int workers) {
  if (n == 0) throw InvalidArgument("simulate: n must be positive");
  const CorrMatrix sigma = build_corr_matrix(sites, params.corr);
  return DataMatrix{simulate_rows(params.mixing, sigma.chol(), n, seed, workers), sites};
}

CommonDraws::CommonDraws(std::size_t n, int uniform_dim, std::uint64_t seed)
    : udim_(uniform_dim), uniforms_(n * static_cast<std::size_t>(uniform_dim)), normals_(n) {
  Stream rng(seed);
  for (auto& u : uniforms_) u = rng.uniform();
  for (auto& g : normals_) g = num::std_normal_quantile(rng.uniform());
}

void CommonDraws::values(const MixingSpec& spec, double scale, std::vector<double>& out) const {
  if (glsm::uniform_dim(spec) != udim_) throw InvalidArgument("CommonDraws: model needs a different uniform count");
  const std::size_t n = normals_.size();
  out.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const LatentDraw d = from_uniforms(spec, uniforms_.data() + k * static_cast<std::size_t>(udim_));
    out[k] = d.s + d.r * scale * normals_[k];
  }
}

MonteCarloMarginal CommonDraws::table(const MixingSpec& spec, double scale) const {
  MonteCarloMarginal t;
  values(spec, scale, t.sorted);
  std::sort(t.sorted.begin(), t.sorted.end());
  return t;
}

MonteCarloMarginal marginal_table(const MixingSpec& spec, std::size_t n, std::uint64_t seed, double scale) {
  if (n < kMinTableSize) throw InvalidArgument("marginal_table: N must be at least 10^4");
  validate(spec);
  return CommonDraws(n, uniform_dim(spec), seed).table(spec, scale);
}

double mc_cdf(const MonteCarloMarginal& table, double x) {
  const auto& v = table.sorted;
  const double n = static_cast<double>(v.size());
  if (v.empty()) throw InvalidArgument("mc_cdf: empty table");
  if (x <= v.front()) return 0.5 / n;
  if (x >= v.back()) return 1.0 - 0.5 / n;
  // v[k-1] <= x < v[k] with k in [1, N-1]
  const auto k = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin());
  const double lo = v[k - 1];
  const double hi = v[k];
  const double frac = hi > lo ? (x - lo) / (hi - lo) : 1.0;
  return (static_cast<double>(k) - 0.5 + frac) / n;
}

double mc_quantile(const MonteCarloMarginal& table, double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("mc_quantile: u must lie in (0, 1)");
  const auto& v = table.sorted;
  if (v.empty()) throw InvalidArgument("mc_quantile: empty table");
  const double n = static_cast<double>(v.size());
  const double pos = u * n - 0.5;  // 0-based fractional index
  if (pos <= 0.0) return v.front();
  if (pos >= n - 1.0) return v.back();
  const auto k = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(k);
  return v[k] + frac * (v[k + 1] - v[k]);
}

DataMatrix to_uniform(const DataMatrix& data, const MonteCarloMarginal& table) {
  DataMatrix out{data.values.unaryExpr([&](double x) { return mc_cdf(table, x); }), data.sites};
  return out;
}

DataMatrix from_uniform(const DataMatrix& udata, const MonteCarloMarginal& table) {
  if (!((udata.values.array() > 0.0).all() && (udata.values.array() < 1.0).all()))
    throw DataError("from_uniform: values must lie strictly inside (0, 1)");
  return DataMatrix{udata.values.unaryExpr([&](double u) { return mc_quantile(table, u); }), udata.sites};
}

DataMatrix pseudo_uniform(const DataMatrix& data) {
  const auto n = data.values.rows();
  DataMatrix out{RowMatrix(n, data.values.cols()), data.sites};
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < data.values.cols(); ++j) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](auto a, auto b) { return data.values(a, j) < data.values(b, j); });
    for (Eigen::Index k = 0; k < n; ++k)
      out.values(idx[static_cast<std::size_t>(k)], j) = static_cast<double>(k + 1) / static_cast<double>(n + 1);
  }
  return out;
}

RowMatrix read_matrix(const std::string& path) {
  const Table t = read_table(path);
  if (t.rows() == 0) throw DataError("no data rows in " + path);
  RowMatrix out(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
  std::copy(t.values().begin(), t.values().end(), out.data());
  return out;
}

void write_matrix(const std::string& path, const RowMatrix& values, const std::string& prefix) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < values.cols(); ++j) header.push_back(prefix + std::to_string(j + 1));
  Table t(header);
  std::vector<double> row(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) row[static_cast<std::size_t>(j)] = values(i, j);
    t.add_row(row);
  }
  write_table(path, t);
}

DataMatrix read_data(const std::string& data_path, const std::string& sites_path) {
  DataMatrix d{read_matrix(data_path), read_sites(sites_path)};
  d.validate();
  return d;
}

}  // namespace glsm
