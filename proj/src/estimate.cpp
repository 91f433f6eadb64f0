#include "glsm/estimate.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "glsm/error.hpp"
#include "glsm/numkernel.hpp"
#include "glsm/parallel.hpp"
#include "glsm/random.hpp"

namespace glsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroDen = 1e-12;

std::size_t z_dim(Step1Kind k, std::size_t m) {
  switch (k) {
    case Step1Kind::PureGaussian: return m;
    case Step1Kind::Location:
    case Step1Kind::Scale: return m - 1;
    default: return m - 2;
  }
}

// Sites other than the references, in site order; LocationScale puts ref2 first.
std::vector<Eigen::Index> difference_order(const Step1Class& cls, std::size_t m) {
  std::vector<Eigen::Index> out;
  if (cls.kind == Step1Kind::LocationScale) out.push_back(static_cast<Eigen::Index>(cls.ref2));
  for (std::size_t j = 0; j < m; ++j) {
    if (j == cls.ref1) continue;
    if (cls.kind == Step1Kind::LocationScale && j == cls.ref2) continue;
    out.push_back(static_cast<Eigen::Index>(j));
  }
  return out;
}

double median_pair_distance(const Eigen::MatrixXd& d) {
  std::vector<double> v;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    for (Eigen::Index i = j + 1; i < d.rows(); ++i) v.push_back(d(i, j));
  if (v.empty()) return 1.0;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(pos);
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (pos - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double var_wbar(const SiteSet& sites, const MaternParams& p) { return avg_variance(build_corr_matrix(sites, p)); }

}  // namespace

// ---------------------------------------------------------------------------
// Step 1

void Step1Class::validate(std::size_t m) const {
  const std::size_t need = kind == Step1Kind::LocationScale ? 3 : (kind == Step1Kind::PureGaussian ? 1 : 2);
  if (m < need) throw InvalidArgument("step-1 class needs more sites");
  if (kind == Step1Kind::PureGaussian) return;
  if (ref1 >= m) throw InvalidArgument("reference index out of range");
  if (kind == Step1Kind::LocationScale && (ref2 >= m || ref2 == ref1))
    throw InvalidArgument("second reference must be distinct and in range");
}

Step1Class default_step1_class(const MixingSpec& spec) {
  Step1Class c;
  if (has_location(spec) && has_scale(spec)) c.kind = Step1Kind::LocationScale;
  else if (has_location(spec)) c.kind = Step1Kind::Location;
  else if (has_scale(spec)) c.kind = Step1Kind::Scale;
  else c.kind = Step1Kind::PureGaussian;
  return c;
}

std::string step1_kind_name(Step1Kind k) {
  switch (k) {
    case Step1Kind::PureGaussian: return "gaussian";
    case Step1Kind::Location: return "location";
    case Step1Kind::Scale: return "scale";
    default: return "locscale";
  }
}

Step1Kind parse_step1_kind(const std::string& name) {
  for (auto k : {Step1Kind::PureGaussian, Step1Kind::Location, Step1Kind::Scale, Step1Kind::LocationScale})
    if (step1_kind_name(k) == name) return k;
  throw InvalidArgument("unknown step-1 class: " + name);
}

Eigen::MatrixXd difference_operator(const Step1Class& cls, std::size_t m) {
  cls.validate(m);
  if (cls.kind == Step1Kind::PureGaussian || cls.kind == Step1Kind::Scale)
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  Step1Class loc = cls;
  const auto order = difference_order(cls, m);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < order.size(); ++r) {
    a(static_cast<Eigen::Index>(r), order[r]) = 1.0;
    a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(loc.ref1)) = -1.0;
  }
  return a;
}

std::optional<Eigen::VectorXd> z_transform(const Eigen::VectorXd& row, const Step1Class& cls) {
  const auto m = static_cast<std::size_t>(row.size());
  cls.validate(m);
  const auto a = static_cast<Eigen::Index>(cls.ref1);
  const auto b = static_cast<Eigen::Index>(cls.ref2);
  Eigen::VectorXd z(static_cast<Eigen::Index>(z_dim(cls.kind, m)));
  Eigen::Index k = 0;
  switch (cls.kind) {
    case Step1Kind::PureGaussian: return row;
    case Step1Kind::Location:
      for (Eigen::Index j = 0; j < row.size(); ++j)
        if (j != a) z[k++] = row[j] - row[a];
      return z;
    case Step1Kind::Scale:
      if (std::abs(row[a]) < kZeroDen) return std::nullopt;
      for (Eigen::Index j = 0; j < row.size(); ++j)
        if (j != a) z[k++] = row[j] / row[a];
      return z;
    case Step1Kind::LocationScale: {
      const double den = row[b] - row[a];
      if (std::abs(den) < kZeroDen) return std::nullopt;
      for (Eigen::Index j = 0; j < row.size(); ++j)
        if (j != a && j != b) z[k++] = (row[j] - row[a]) / den;
      return z;
    }
  }
  return std::nullopt;
}

ZRows z_transform_rows(const RowMatrix& x, const Step1Class& cls) {
  const auto m = static_cast<std::size_t>(x.cols());
  cls.validate(m);
  ZRows out;
  std::vector<Eigen::VectorXd> rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto z = z_transform(x.row(i).transpose(), cls);
    if (z) rows.push_back(std::move(*z));
    else ++out.skipped;
  }
  out.z.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(z_dim(cls.kind, m)));
  for (std::size_t i = 0; i < rows.size(); ++i) out.z.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

Step1Problem::Step1Problem(const ZRows& z, const SiteSet& sites, const Step1Class& cls)
    : cls_(cls), dist_(distance_matrix(sites)), n_(static_cast<std::size_t>(z.z.rows())), skipped_(z.skipped) {
  validate_sites(sites);
  const std::size_t m = sites.size();
  cls.validate(m);
  if (static_cast<std::size_t>(z.z.cols()) != z_dim(cls.kind, m))
    throw InvalidArgument("Step1Problem: z rows have the wrong dimension for the class");
  if (n_ == 0) throw DataError("no valid rows for the step-1 likelihood");
  if (cls.kind != Step1Kind::PureGaussian && cls.kind != Step1Kind::Scale) order_ = difference_order(cls, m);
  if (cls.kind == Step1Kind::PureGaussian || cls.kind == Step1Kind::Location) {
    scatter_ = z.z.transpose() * z.z;
  } else if (cls.kind == Step1Kind::Scale) {
    // (1, z) placed back in site order, one column per row.
    zdot_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n_));
    for (Eigen::Index i = 0; i < z.z.rows(); ++i) {
      Eigen::Index k = 0;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j)
        zdot_(j, i) = j == static_cast<Eigen::Index>(cls.ref1) ? 1.0 : z.z(i, k++);
    }
  } else {
    zdot_.resize(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(n_));
    zdot_.row(0).setOnes();
    zdot_.bottomRows(static_cast<Eigen::Index>(m - 2)) = z.z.transpose();
  }
}

double Step1Problem::negloglik(const MaternParams& p) const {
  Eigen::MatrixXd sigma;
  try {
    sigma = build_corr_matrix(dist_, p).matrix();
  } catch (const NumericalError&) {
    return kInf;
  } catch (const InvalidArgument&) {
    return kInf;
  }
  return negloglik_sigma(sigma);
}

double Step1Problem::negloglik_sigma(const Eigen::MatrixXd& sigma_in) const {
  if (sigma_in.rows() != dist_.rows() || sigma_in.cols() != dist_.cols())
    throw InvalidArgument("Step1Problem: correlation matrix has the wrong size");
  Eigen::MatrixXd sigma = sigma_in;
  Eigen::MatrixXd cov;
  if (order_.empty()) {
    cov = std::move(sigma);
  } else {
    const auto a = static_cast<Eigen::Index>(cls_.ref1);
    const auto d = static_cast<Eigen::Index>(order_.size());
    cov.resize(d, d);
    for (Eigen::Index q = 0; q < d; ++q)
      for (Eigen::Index r = 0; r < d; ++r)
        cov(r, q) = sigma(order_[r], order_[q]) - sigma(order_[r], a) - sigma(a, order_[q]) + sigma(a, a);
  }
  Eigen::MatrixXd chol;
  try {
    chol = robust_cholesky(cov);
  } catch (const NumericalError&) {
    return kInf;
  }
  const double d = static_cast<double>(cov.rows());
  const double n = static_cast<double>(n_);
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  if (cls_.kind == Step1Kind::PureGaussian || cls_.kind == Step1Kind::Location) {
    Eigen::MatrixXd y = scatter_;
    chol.triangularView<Eigen::Lower>().solveInPlace(y);
    chol.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
    return 0.5 * n * (d * std::log(2.0 * std::numbers::pi) + log_det) + 0.5 * y.trace();
  }
  Eigen::MatrixXd y = zdot_;
  chol.triangularView<Eigen::Lower>().solveInPlace(y);
  const Eigen::VectorXd q = y.colwise().squaredNorm().transpose();
  const double sum_log_q = q.array().log().sum();
  return 0.5 * d * sum_log_q + 0.5 * n * log_det + n * (0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d));
}

double step1_negloglik(const MaternParams& p, const ZRows& z, const SiteSet& sites, const Step1Class& cls) {
  return Step1Problem(z, sites, cls).negloglik(p);
}

ThetaWFit fit_theta_w(const Step1Problem& problem, const Step1Options& opts, std::vector<TraceEntry>* trace) {
  const double dmax = problem.distances().maxCoeff();
  MaternParams start = opts.start.value_or(MaternParams{0.5 * median_pair_distance(problem.distances()), 1.0});
  if (opts.fixed_smoothness) start.smoothness = *opts.fixed_smoothness;
  const double lo_phi = std::log(1e-3 * dmax), hi_phi = std::log(1e3 * dmax);
  const double lo_eta = std::log(0.02), hi_eta = std::log(20.0);

  auto unpack = [&](const std::vector<double>& t) {
    return MaternParams{std::exp(t[0]), opts.fixed_smoothness ? *opts.fixed_smoothness : std::exp(t[1])};
  };
  auto f = [&](const std::vector<double>& t) {
    if (t[0] < lo_phi || t[0] > hi_phi) return kInf;
    if (!opts.fixed_smoothness && (t[1] < lo_eta || t[1] > hi_eta)) return kInf;
    const double v = problem.negloglik(unpack(t));
    if (trace) trace->push_back({1, t, v});
    return v;
  };
  std::vector<double> t0{std::log(start.range)};
  std::vector<double> step{0.5};
  if (!opts.fixed_smoothness) {
    t0.push_back(std::log(start.smoothness));
    step.push_back(0.5);
  }
  opt::Result r = opt::nelder_mead(f, t0, step, opts.nm);
  for (int k = 0; k < opts.restarts; ++k) {
    std::vector<double> small(step.size(), 0.1);
    opt::Result again = opt::nelder_mead(f, r.x, small, opts.nm);
    if (again.value <= r.value) r = again;
    else r.converged = r.converged && again.converged;
  }
  ThetaWFit out;
  out.params = unpack(r.x);
  out.negloglik = r.value;
  out.converged = r.converged && std::isfinite(r.value);
  out.rows = problem.rows();
  out.skipped = problem.skipped();
  return out;
}

ThetaWFit fit_theta_w(const DataMatrix& data, const Step1Class& cls, const Step1Options& opts,
                      std::vector<TraceEntry>* trace) {
  if (data.n() < 2) throw DataError("fit_theta_w: need at least two replications");
  data.validate();
  const Step1Problem problem(z_transform_rows(data.values, cls), data.sites, cls);
  return fit_theta_w(problem, opts, trace);
}

// ---------------------------------------------------------------------------
// Step 2

RowMeans row_means(const RowMatrix& x, double var_wbar) {
  if (!(var_wbar > 0.0)) throw InvalidArgument("row_means: variance of the average must be positive");
  RowMeans out;
  out.var_wbar = var_wbar;
  out.sorted.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.sorted[static_cast<std::size_t>(i)] = x.row(i).mean();
  std::sort(out.sorted.begin(), out.sorted.end());
  return out;
}

double cvm_stat(const std::vector<double>& sorted_means, const MonteCarloMarginal& model) {
  const std::size_t n = sorted_means.size();
  if (n == 0) throw InvalidArgument("cvm_stat: no observations");
  const double dn = static_cast<double>(n);
  double t = 1.0 / (12.0 * dn);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (static_cast<double>(i + 1) - 0.5) / dn - mc_cdf(model, sorted_means[i]);
    t += e * e;
  }
  return t;
}

double cvm_stat(const MixingSpec& spec, const RowMeans& means, const CommonDraws& draws) {
  return cvm_stat(means.sorted, draws.table(spec, std::sqrt(means.var_wbar)));
}

double cvm_stat(const MixingSpec& spec, const RowMeans& means, const CvmConfig& cfg) {
  validate(spec);
  if (cfg.draws < kMinTableSize) throw InvalidArgument("cvm_stat: N must be at least 10^4");
  return cvm_stat(spec, means, CommonDraws(cfg.draws, uniform_dim(spec), cfg.seed));
}

std::pair<double, double> theta_sr_bracket(const MixingSpec& spec, std::size_t index) {
  if (index >= param_names(spec).size()) throw InvalidArgument("theta_sr_bracket: index out of range");
  if (std::holds_alternative<mix::SM5>(spec)) return {-0.9, 0.9};
  if (std::holds_alternative<mix::SM3>(spec)) return {std::log(0.2), std::log(200.0)};
  if (std::holds_alternative<mix::SM4>(spec)) return {std::log(0.01), std::log(3.0)};
  return {std::log(0.02), std::log(50.0)};
}

namespace {

// Minimises g over the unconstrained mixing coordinates of spec.
opt::Result minimise_theta_sr(const MixingSpec& spec, const CvmConfig& cfg,
                              const std::function<double(const std::vector<double>&)>& g) {
  const std::size_t d = param_names(spec).size();
  if (d == 1) {
    const auto [lo, hi] = theta_sr_bracket(spec, 0);
    return opt::grid_brent([&](double t) { return g({t}); }, lo, hi, cfg.grid_points,
                           cfg.tol * (hi - lo), std::max(cfg.max_evaluations - cfg.grid_points, 10));
  }
  std::vector<std::pair<double, double>> br;
  for (std::size_t k = 0; k < d; ++k) br.push_back(theta_sr_bracket(spec, k));
  constexpr int per_axis = 5;
  std::vector<double> best(d), cur(d);
  double best_val = kInf;
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= per_axis;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      cur[k] = br[k].first + (br[k].second - br[k].first) * (i + 0.5) / per_axis;
    }
    const double v = g(cur);
    if (v < best_val) {
      best_val = v;
      best = cur;
    }
  }
  std::vector<double> step(d);
  for (std::size_t k = 0; k < d; ++k) step[k] = (br[k].second - br[k].first) / (2.0 * per_axis);
  opt::NelderMeadOptions nm{cfg.tol, 1e-4, std::max(cfg.max_evaluations - static_cast<int>(total), 20)};
  opt::Result r = opt::nelder_mead(g, best, step, nm);
  r.evaluations += static_cast<int>(total);
  return r;
}

double guarded(const std::function<double()>& f) {
  try {
    return f();
  } catch (const InvalidArgument&) {
    return kInf;
  } catch (const NumericalError&) {
    return kInf;
  } catch (const DataError&) {
    return kInf;
  }
}

}  // namespace

ThetaSrFit fit_theta_sr(const RowMeans& means, const MixingSpec& spec, const CvmConfig& cfg,
                        std::vector<TraceEntry>* trace) {
  validate(spec);
  if (param_names(spec).empty()) throw InvalidArgument("fit_theta_sr: model " + model_name(spec) + " has no parameters");
  if (cfg.draws < kMinTableSize) throw InvalidArgument("fit_theta_sr: N must be at least 10^4");
  const CommonDraws draws(cfg.draws, uniform_dim(spec), cfg.seed);
  auto g = [&](const std::vector<double>& t) {
    const double v = guarded([&] { return cvm_stat(from_unconstrained(spec, t), means, draws); });
    if (trace) trace->push_back({2, t, v});
    return v;
  };
  const opt::Result r = minimise_theta_sr(spec, cfg, g);
  if (!std::isfinite(r.value)) throw NumericalError("fit_theta_sr: objective not finite anywhere");
  return {from_unconstrained(spec, r.x), r.value, r.converged};
}

ThetaSrFit fit_theta_sr(const DataMatrix& data, const MaternParams& theta_w, const MixingSpec& spec,
                        const CvmConfig& cfg, std::vector<TraceEntry>* trace) {
  data.validate();
  return fit_theta_sr(row_means(data.values, var_wbar(data.sites, theta_w)), spec, cfg, trace);
}

// ---------------------------------------------------------------------------
// Combined fits

std::vector<std::string> FitResult::names() const {
  std::vector<std::string> out{"phi", "eta"};
  for (auto& n : param_names(mixing)) out.push_back(n);
  return out;
}

std::vector<double> FitResult::values() const {
  std::vector<double> out{corr.range, corr.smoothness};
  for (double v : param_values(mixing)) out.push_back(v);
  return out;
}

FitResult fit_two_step(const DataMatrix& data, const MixingSpec& spec, const FitOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(spec);
  data.validate();
  FitResult res;
  res.cls = opts.cls.value_or(default_step1_class(spec));
  const Step1Problem problem(z_transform_rows(data.values, res.cls), data.sites, res.cls);
  const ThetaWFit w = fit_theta_w(problem, opts.step1, &res.trace);
  res.corr = w.params;
  res.step1_negloglik = w.negloglik;
  res.step1_converged = w.converged;
  res.rows_used = w.rows;
  res.rows_skipped = w.skipped;
  const RowMeans means = row_means(data.values, var_wbar(data.sites, w.params));
  if (param_names(spec).empty()) {
    res.mixing = spec;
    res.cvm = cvm_stat(spec, means, opts.cvm);
    res.step2_converged = true;
  } else {
    const ThetaSrFit sr = fit_theta_sr(means, spec, opts.cvm, &res.trace);
    res.mixing = sr.mixing;
    res.cvm = sr.cvm;
    res.step2_converged = sr.converged;
  }
  res.seconds = elapsed_seconds(t0);
  return res;
}

namespace {

void check_uniform(const DataMatrix& udata) {
  udata.validate();
  if (!((udata.values.array() > 0.0).all() && (udata.values.array() < 1.0).all()))
    throw DataError("copula data must lie strictly inside (0, 1)");
}

}  // namespace

FitResult fit_copula(const DataMatrix& udata, const MixingSpec& spec, const FitOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(spec);
  check_uniform(udata);
  FitResult res;
  res.copula = true;
  res.cls = opts.cls.value_or(default_step1_class(spec));
  const int udim = uniform_dim(spec);
  const CommonDraws table_draws(opts.table_draws, udim, opts.table_seed);
  const CommonDraws cvm_draws(opts.cvm.draws, udim, opts.cvm.seed);

  struct Trial {
    double cvm = kInf;
    ThetaWFit w;
    MixingSpec spec;
  };
  Trial best;
  std::optional<MaternParams> warm = opts.step1.start;

  auto evaluate = [&](const MixingSpec& s) -> double {
    const MonteCarloMarginal table = table_draws.table(s);
    const DataMatrix x = from_uniform(udata, table);
    const Step1Problem problem(z_transform_rows(x.values, res.cls), x.sites, res.cls);
    Step1Options so = opts.step1;
    so.start = warm;
    const ThetaWFit w = fit_theta_w(problem, so);
    if (!std::isfinite(w.negloglik)) return kInf;
    warm = w.params;
    const RowMeans means = row_means(x.values, var_wbar(x.sites, w.params));
    const double t = cvm_stat(s, means, cvm_draws);
    if (t < best.cvm) best = {t, w, s};
    return t;
  };

  bool converged = true;
  if (param_names(spec).empty()) {
    evaluate(spec);
  } else {
    auto g = [&](const std::vector<double>& t) {
      const double v = guarded([&] { return evaluate(from_unconstrained(spec, t)); });
      res.trace.push_back({2, t, v});
      return v;
    };
    converged = minimise_theta_sr(spec, opts.cvm, g).converged;
  }
  if (!std::isfinite(best.cvm)) throw NumericalError("fit_copula: objective not finite anywhere");
  res.mixing = best.spec;
  res.corr = best.w.params;
  res.cvm = best.cvm;
  res.step1_negloglik = best.w.negloglik;
  res.step1_converged = best.w.converged;
  res.step2_converged = converged;
  res.rows_used = best.w.rows;
  res.rows_skipped = best.w.skipped;
  res.seconds = elapsed_seconds(t0);
  return res;
}

// ---------------------------------------------------------------------------
// Bootstrap

namespace {

std::vector<double> bootstrap_replicate(const FitResult& fit, const SiteSet& sites, std::size_t n,
                                        const BootstrapOptions& opts, std::uint64_t seed,
                                        const MonteCarloMarginal* fitted_table) {
  const ModelParams truth{fit.mixing, fit.corr};
  const DataMatrix sim = simulate(truth, sites, n, seed);
  FitOptions fo = opts.fit;
  fo.cls = fit.cls;
  const bool has_sr = !param_names(fit.mixing).empty();

  if (!fit.copula) {
    if (opts.mode == BootstrapMode::Standard) return fit_two_step(sim, fit.mixing, fo).values();
    const ThetaWFit w = fit_theta_w(sim, fit.cls, fo.step1);
    MixingSpec sr = fit.mixing;
    if (has_sr) {
      const RowMeans means = row_means(sim.values, var_wbar(sites, fit.corr));
      sr = fit_theta_sr(means, fit.mixing, fo.cvm).mixing;
    }
    FitResult r;
    r.corr = w.params;
    r.mixing = sr;
    return r.values();
  }

  const DataMatrix u = to_uniform(sim, *fitted_table);
  if (opts.mode == BootstrapMode::Standard) return fit_copula(u, fit.mixing, fo).values();
  // Mixing parameters with theta_W held at the fitted value, then theta_W on
  // the data mapped through the resulting quantile table.
  const int udim = uniform_dim(fit.mixing);
  const CommonDraws table_draws(fo.table_draws, udim, fo.table_seed);
  MixingSpec sr = fit.mixing;
  if (has_sr) {
    const CommonDraws cvm_draws(fo.cvm.draws, udim, fo.cvm.seed);
    const double v = var_wbar(sites, fit.corr);
    auto g = [&](const std::vector<double>& t) {
      return guarded([&] {
        const MixingSpec s = from_unconstrained(fit.mixing, t);
        const DataMatrix x = from_uniform(u, table_draws.table(s));
        return cvm_stat(s, row_means(x.values, v), cvm_draws);
      });
    };
    sr = from_unconstrained(fit.mixing, minimise_theta_sr(fit.mixing, fo.cvm, g).x);
  }
  const DataMatrix x = from_uniform(u, table_draws.table(sr));
  Step1Options so = fo.step1;
  so.start = fit.corr;
  const ThetaWFit w = fit_theta_w(x, fit.cls, so);
  FitResult r;
  r.corr = w.params;
  r.mixing = sr;
  return r.values();
}

}  // namespace

BootstrapResult bootstrap_ci(const FitResult& fit, const SiteSet& sites, std::size_t n,
                             const BootstrapOptions& opts) {
  if (opts.replicates < 50) throw InvalidArgument("bootstrap_ci: need at least 50 replicates");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw InvalidArgument("bootstrap_ci: level must lie in (0, 1)");
  if (n < 2) throw InvalidArgument("bootstrap_ci: n must be at least 2");
  std::optional<MonteCarloMarginal> table;
  if (fit.copula)
    table = CommonDraws(opts.fit.table_draws, uniform_dim(fit.mixing), opts.fit.table_seed).table(fit.mixing);

  const std::size_t b_count = opts.replicates;
  std::vector<std::optional<std::vector<double>>> reps(b_count);
  parallel_for(b_count, opts.workers, [&](std::size_t b) {
    try {
      auto v = bootstrap_replicate(fit, sites, n, opts, derive_seed(opts.seed, b), table ? &*table : nullptr);
      if (std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); })) reps[b] = std::move(v);
    } catch (const std::exception&) {
    }
  });

  BootstrapResult out;
  for (auto& r : reps) {
    if (r) {
      out.replicates.push_back(std::move(*r));
      ++out.succeeded;
    } else {
      ++out.failed;
    }
  }
  if (static_cast<double>(out.failed) > 0.1 * static_cast<double>(b_count))
    throw NumericalError("bootstrap_ci: more than 10% of replicate fits failed");
  const auto names = fit.names();
  const auto est = fit.values();
  const double a = 0.5 * (1.0 - opts.level);
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double> col;
    for (const auto& r : out.replicates) col.push_back(r[k]);
    std::sort(col.begin(), col.end());
    out.intervals.push_back({names[k], est[k], quantile_sorted(col, a), quantile_sorted(col, 1.0 - a)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature oracle

namespace {

template <class F>
double integrate(F f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12, &err);
  if (!std::isfinite(v)) throw NumericalError("quadrature did not converge");
  return v;
}

// Integrates over s in R, splitting at 0.
template <class F>
double integrate_real_line(F f) {
  return integrate(f, -kInf, 0.0) + integrate(f, 0.0, kInf);
}

}  // namespace

double quad_logdensity_oracle(const ModelParams& params, const Eigen::VectorXd& x, const Eigen::MatrixXd& chol) {
  const auto m = x.size();
  if (m > 3) throw InvalidArgument("quad oracle: m must be at most 3");
  const MixingSpec& spec = params.mixing;
  Eigen::VectorXd w(m);
  auto kernel = [&](double s, double r) {
    for (Eigen::Index j = 0; j < m; ++j) w[j] = (x[j] - s) / r;
    return std::exp(num::mvn_logpdf({w.data(), static_cast<std::size_t>(m)}, chol) - m * std::log(r));
  };
  auto density = [&](double s, double r) {
    const double lp = *logdensity_sr(spec, s, r);
    return lp == -kInf ? 0.0 : std::exp(lp) * kernel(s, r);
  };
  if (std::holds_alternative<mix::Gaussian>(spec)) {
    return num::mvn_logpdf({x.data(), static_cast<std::size_t>(m)}, chol);
  }
  double f = 0.0;
  if (const auto* v = std::get_if<mix::SM4>(&spec)) {
    const double k = 1.0 / v->gamma;
    auto outer = [&](double g) {
      if (!(g > 0.0)) return 0.0;
      const double lg = k * std::log(k) - std::lgamma(k) + (k - 1.0) * std::log(g) - k * g;
      auto inner = [&](double e) {
        if (!(e > 0.0)) return 0.0;
        return 0.5 * std::exp(-0.5 * e) * kernel(0.0, std::sqrt(e) / g);
      };
      return std::exp(lg) * integrate(inner, 0.0, kInf);
    };
    f = integrate(outer, 0.0, kInf);
  } else if (!has_scale(spec)) {
    auto g = [&](double s) { return density(s, 1.0); };
    f = location_positive(spec) ? integrate(g, 0.0, kInf) : integrate_real_line(g);
  } else if (!has_location(spec)) {
    double upper = kInf;
    if (const auto* v = std::get_if<mix::SM5>(&spec); v && v->gamma < 0.0) upper = -1.0 / v->gamma;
    auto g = [&](double r) { return r > 0.0 ? density(0.0, r) : 0.0; };
    f = integrate(g, 0.0, upper);
  } else {
    auto outer = [&](double r) {
      if (!(r > 0.0)) return 0.0;
      auto g = [&](double s) { return density(s, r); };
      return location_positive(spec) ? integrate(g, 0.0, kInf) : integrate_real_line(g);
    };
    f = integrate(outer, 0.0, kInf);
  }
  if (!(f > 0.0)) throw NumericalError("quad oracle: density underflow");
  return std::log(f);
}

double quad_negloglik_oracle(const ModelParams& params, const DataMatrix& data) {
  data.validate();
  if (data.m() > 3) throw InvalidArgument("quad oracle: m must be at most 3");
  const Eigen::MatrixXd chol =
      data.m() == 1 ? Eigen::MatrixXd::Ones(1, 1) : build_corr_matrix(data.sites, params.corr).chol();
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.values.rows(); ++i)
    total -= quad_logdensity_oracle(params, data.values.row(i).transpose(), chol);
  return total;
}

}  // namespace glsm
