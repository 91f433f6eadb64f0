#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "glsm/condsim.hpp"
#include "glsm/error.hpp"
#include "glsm/estimate.hpp"
#include "glsm/marginal.hpp"
#include "glsm/process.hpp"
#include "glsm/taildep.hpp"

namespace py = pybind11;
using namespace glsm;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

SiteSet to_sites(const Points& p) {
  SiteSet s(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) s[static_cast<std::size_t>(i)] = {p(i, 0), p(i, 1)};
  return s;
}

Points from_sites(const SiteSet& s) {
  Points p(static_cast<Eigen::Index>(s.size()), 2);
  for (std::size_t i = 0; i < s.size(); ++i) p.row(static_cast<Eigen::Index>(i)) << s[i].x, s[i].y;
  return p;
}

TailSide to_side(const std::string& side) {
  if (side == "upper") return TailSide::Upper;
  if (side == "lower") return TailSide::Lower;
  throw InvalidArgument("side must be 'upper' or 'lower'");
}

egpd::EgpdParams to_egpd(const py::dict& d) {
  egpd::EgpdParams p;
  for (auto [k, v] : d) {
    const auto key = k.cast<std::string>();
    const auto val = v.cast<double>();
    if (key == "sigma") p.sigma = val;
    else if (key == "xi") p.xi = val;
    else if (key == "p") p.p = val;
    else if (key == "kappa1") p.kappa1 = val;
    else if (key == "kappa2") p.kappa2 = val;
    else throw InvalidArgument("unknown EGPD parameter: " + key);
  }
  p.validate();
  return p;
}

py::dict from_egpd(const egpd::EgpdParams& p) {
  py::dict d;
  d["sigma"] = p.sigma;
  d["xi"] = p.xi;
  d["p"] = p.p;
  d["kappa1"] = p.kappa1;
  d["kappa2"] = p.kappa2;
  return d;
}

py::dict fit_to_dict(const FitResult& r) {
  py::dict d;
  const auto names = r.names();
  const auto vals = r.values();
  py::dict est;
  for (std::size_t k = 0; k < names.size(); ++k) est[py::str(names[k])] = vals[k];
  d["model"] = model_name(r.mixing);
  d["estimates"] = est;
  d["step1_class"] = step1_kind_name(r.cls.kind);
  d["step1_negloglik"] = r.step1_negloglik;
  d["cvm"] = r.cvm;
  d["converged"] = r.step1_converged && r.step2_converged;
  d["rows_used"] = r.rows_used;
  d["rows_skipped"] = r.rows_skipped;
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian location-scale mixture processes for spatial extremes";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("model_names", &model_names);
  m.def(
      "param_names", [](const std::string& model) { return param_names(make_spec(model)); }, py::arg("model"));

  m.def(
      "matern_rho", [](double h, double range, double smoothness) { return matern_rho(h, {range, smoothness}); },
      py::arg("h"), py::arg("range"), py::arg("smoothness"));

  m.def(
      "uniform_sites",
      [](std::size_t count, std::uint64_t seed, double lo, double hi) { return from_sites(uniform_sites(count, seed, lo, hi)); },
      py::arg("m"), py::arg("seed"), py::arg("lo") = 0.0, py::arg("hi") = 200.0);

  m.def(
      "simulate",
      [](const std::string& model, const std::map<std::string, double>& params, const Points& sites, std::size_t n,
         std::uint64_t seed, double range, double smoothness, int workers) {
        const ModelParams mp{make_spec(model, params), {range, smoothness}};
        py::gil_scoped_release release;
        return simulate(mp, to_sites(sites), n, seed, workers).values;
      },
      py::arg("model"), py::arg("params"), py::arg("sites"), py::arg("n"), py::arg("seed"), py::arg("range") = 50.0,
      py::arg("smoothness") = 0.5, py::arg("workers") = 1,
      "Simulate n replications (rows) at the given sites (columns).");

  m.def(
      "fit",
      [](const RowMatrix& data, const Points& sites, const std::string& model, bool copula, std::size_t cvm_draws,
         std::uint64_t seed) {
        const DataMatrix d{data, to_sites(sites)};
        const MixingSpec spec = make_spec(model);
        FitOptions fo;
        fo.cvm.draws = cvm_draws;
        fo.cvm.seed = seed;
        fo.table_seed = derive_seed(seed, 1);
        FitResult r;
        {
          py::gil_scoped_release release;
          r = copula ? fit_copula(d, spec, fo) : fit_two_step(d, spec, fo);
        }
        return fit_to_dict(r);
      },
      py::arg("data"), py::arg("sites"), py::arg("model"), py::arg("copula") = false, py::arg("cvm_draws") = 100000,
      py::arg("seed") = 977, "Two-step fit, or the copula fit on uniform-scale data.");

  m.def(
      "pseudo_uniform",
      [](const RowMatrix& data, const Points& sites) { return pseudo_uniform({data, to_sites(sites)}).values; },
      py::arg("data"), py::arg("sites"));

  m.def(
      "chi_theory",
      [](const std::string& model, const std::map<std::string, double>& params, double rho, const std::string& side) {
        return chi_theory(make_spec(model, params), rho, to_side(side)).value;
      },
      py::arg("model"), py::arg("params"), py::arg("rho"), py::arg("side") = "upper");

  m.def(
      "chibar_theory",
      [](const std::string& model, const std::map<std::string, double>& params, double rho, const std::string& side) {
        return chibar_theory(make_spec(model, params), rho, to_side(side));
      },
      py::arg("model"), py::arg("params"), py::arg("rho"), py::arg("side") = "upper");

  m.def(
      "chi_empirical",
      [](const Eigen::VectorXd& u1, const Eigen::VectorXd& u2, double p, const std::string& side) {
        if (u1.size() != u2.size()) throw InvalidArgument("u1 and u2 must have the same length");
        return chi_empirical(u1.data(), u2.data(), static_cast<std::size_t>(u1.size()), p, to_side(side));
      },
      py::arg("u1"), py::arg("u2"), py::arg("p"), py::arg("side") = "upper");

  m.def(
      "conditional_simulate",
      [](const std::string& model, const std::map<std::string, double>& params, const Points& sites1,
         const Eigen::VectorXd& x1, const Points& sites2, double range, double smoothness, std::size_t burnin,
         std::size_t steps, std::size_t thin, std::uint64_t seed) {
        CondSimConfig cfg;
        cfg.burnin = burnin;
        cfg.steps = steps;
        cfg.thin = thin;
        cfg.validate();
        const ModelParams mp{make_spec(model, params), {range, smoothness}};
        const std::vector<double> x(x1.data(), x1.data() + x1.size());
        py::gil_scoped_release release;
        return conditional_simulate(mp, to_sites(sites1), x, to_sites(sites2), cfg, seed);
      },
      py::arg("model"), py::arg("params"), py::arg("sites1"), py::arg("x1"), py::arg("sites2"),
      py::arg("range") = 50.0, py::arg("smoothness") = 0.5, py::arg("burnin") = 5000, py::arg("steps") = 50000,
      py::arg("thin") = 100, py::arg("seed") = 1, "Draws of X at sites2 given X = x1 at sites1, one row per draw.");

  m.def(
      "egpd_cdf",
      [](const Eigen::VectorXd& y, const py::dict& params) {
        const auto p = to_egpd(params);
        Eigen::VectorXd out(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = egpd::egpd_cdf(y[i], p);
        return out;
      },
      py::arg("y"), py::arg("params"));

  m.def(
      "egpd_quantile",
      [](const Eigen::VectorXd& u, const py::dict& params) {
        const auto p = to_egpd(params);
        Eigen::VectorXd out(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = egpd::egpd_quantile(u[i], p);
        return out;
      },
      py::arg("u"), py::arg("params"));

  m.def(
      "egpd_sample",
      [](const py::dict& params, std::size_t n, std::uint64_t seed) { return egpd::egpd_sample(to_egpd(params), n, seed); },
      py::arg("params"), py::arg("n"), py::arg("seed"));

  m.def(
      "egpd_fit",
      [](const std::vector<double>& y) {
        egpd::EgpdFit f;
        {
          py::gil_scoped_release release;
          f = egpd::egpd_fit(y);
        }
        py::dict d = from_egpd(f.params);
        d["negloglik"] = f.negloglik;
        d["converged"] = f.converged;
        return d;
      },
      py::arg("samples"));
}
