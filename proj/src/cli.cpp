#include "glsm/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "glsm/condsim.hpp"
#include "glsm/error.hpp"
#include "glsm/estimate.hpp"
#include "glsm/marginal.hpp"
#include "glsm/parallel.hpp"
#include "glsm/process.hpp"
#include "glsm/random.hpp"
#include "glsm/table_io.hpp"
#include "glsm/taildep.hpp"

namespace glsm::cli {

namespace fs = std::filesystem;

std::pair<std::size_t, std::size_t> study_size(const std::string& label) {
  if (label == "A") return {50, 100};
  if (label == "B") return {100, 500};
  if (label == "C") return {200, 1000};
  if (label == "D") return {400, 2000};
  throw InvalidArgument("unknown study configuration: " + label + " (expected A, B, C or D)");
}

MixingSpec model_from_config(const Config& cfg) {
  const std::string name = cfg.require("model");
  std::map<std::string, double> params;
  for (const auto& p : param_names(make_spec(name, {}))) {
    if (cfg.has("model." + p)) params[p] = cfg.get_double("model." + p, 0.0);
    else if (cfg.has(p)) params[p] = cfg.get_double(p, 0.0);
  }
  for (const auto& [k, v] : cfg.section("model"))
    if (!params.count(k)) throw InvalidArgument("unknown parameter model." + k + " for model " + name);
  return make_spec(name, params);
}

MaternParams corr_from_config(const Config& cfg) {
  MaternParams p{cfg.get_double("corr.range", 50.0), cfg.get_double("corr.smoothness", 0.5)};
  p.validate();
  return p;
}

namespace {

struct Context {
  Config cfg;
  std::uint64_t seed = 1;
  int workers = 1;
  fs::path out = ".";
};

fs::path out_file(const Context& ctx, const std::string& name) { return ctx.out / name; }

void write_model(Config& c, const MixingSpec& spec, const MaternParams& corr) {
  c.set("model", model_name(spec));
  const auto names = param_names(spec);
  const auto vals = param_values(spec);
  for (std::size_t k = 0; k < names.size(); ++k) c.set("model." + names[k], format_double(vals[k]));
  c.set("corr.range", format_double(corr.range));
  c.set("corr.smoothness", format_double(corr.smoothness));
}

std::size_t as_size(long long v, const char* what) {
  if (v < 0) throw InvalidArgument(std::string(what) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

FitOptions fit_options(const Context& ctx, const MixingSpec& spec, std::size_t m) {
  const Config& c = ctx.cfg;
  FitOptions fo;
  if (c.has("fit.class") || c.has("fit.ref1") || c.has("fit.ref2")) {
    Step1Class cls = default_step1_class(spec);
    if (c.has("fit.class")) cls.kind = parse_step1_kind(c.require("fit.class"));
    cls.ref1 = as_size(c.get_int("fit.ref1", 1) - 1, "fit.ref1");
    cls.ref2 = as_size(c.get_int("fit.ref2", 2) - 1, "fit.ref2");
    cls.validate(m);
    fo.cls = cls;
  }
  if (c.has("step1.smoothness")) fo.step1.fixed_smoothness = c.get_double("step1.smoothness", 0.5);
  fo.cvm.draws = as_size(c.get_int("cvm.draws", 100000), "cvm.draws");
  fo.cvm.seed = c.get_u64("cvm.seed", derive_seed(ctx.seed, 11));
  fo.cvm.max_evaluations = static_cast<int>(c.get_int("cvm.max_evaluations", 200));
  fo.cvm.tol = c.get_double("cvm.tol", 1e-6);
  fo.table_draws = as_size(c.get_int("table.draws", 100000), "table.draws");
  fo.table_seed = c.get_u64("table.seed", derive_seed(ctx.seed, 12));
  return fo;
}

void write_trace(const fs::path& path, const std::vector<TraceEntry>& trace) {
  std::size_t width = 0;
  for (const auto& t : trace) width = std::max(width, t.x.size());
  std::vector<std::string> header{"stage", "eval"};
  for (std::size_t k = 0; k < width; ++k) header.push_back("x" + std::to_string(k + 1));
  header.push_back("value");
  Table tab(header);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::vector<double> row{static_cast<double>(trace[i].stage), static_cast<double>(i + 1)};
    for (std::size_t k = 0; k < width; ++k) row.push_back(k < trace[i].x.size() ? trace[i].x[k] : std::nan(""));
    row.push_back(trace[i].value);
    tab.add_row(row);
  }
  write_table(path.string(), tab);
}

int cmd_simulate(const Context& ctx) {
  const Config& c = ctx.cfg;
  const MixingSpec spec = model_from_config(c);
  const MaternParams corr = corr_from_config(c);
  std::size_t m = 0, n = 0;
  if (c.has("study")) std::tie(m, n) = study_size(c.require("study"));
  m = as_size(c.get_int("m", static_cast<long long>(m)), "m");
  n = as_size(c.get_int("n", static_cast<long long>(n)), "n");
  SiteSet sites;
  if (c.has("sites")) sites = read_sites(c.require("sites"));
  else {
    if (m < 2) throw InvalidArgument("simulate: give sites, study or m >= 2");
    sites = uniform_sites(m, derive_seed(ctx.seed, 101), c.get_double("domain.min", 0.0),
                          c.get_double("domain.max", 200.0));
  }
  if (n == 0) throw InvalidArgument("simulate: give study or n >= 1");
  const DataMatrix data = simulate({spec, corr}, sites, n, derive_seed(ctx.seed, 102), ctx.workers);
  write_sites(out_file(ctx, "sites.csv").string(), sites);
  write_matrix(out_file(ctx, "data.csv").string(), data.values);
  if (c.get_bool("simulate.uniform", false)) {
    const auto table = marginal_table(spec, as_size(c.get_int("table.draws", 1000000), "table.draws"),
                                      derive_seed(ctx.seed, 103));
    write_matrix(out_file(ctx, "uniform.csv").string(), to_uniform(data, table).values);
  }
  std::cout << "simulated " << n << " x " << sites.size() << " (" << model_name(spec) << ") -> " << ctx.out.string()
            << "\n";
  return kOk;
}

int cmd_fit(const Context& ctx) {
  const Config& c = ctx.cfg;
  const MixingSpec spec = model_from_config(c);
  DataMatrix data = read_data(c.require("data"), c.require("sites"));
  const bool copula = c.get_bool("fit.copula", false);
  if (copula && c.get_bool("fit.rank_transform", false)) data = pseudo_uniform(data);
  FitOptions fo = fit_options(ctx, spec, data.m());
  const FitResult r = copula ? fit_copula(data, spec, fo) : fit_two_step(data, spec, fo);

  Config out;
  write_model(out, r.mixing, r.corr);
  out.set("fit.copula", copula ? "true" : "false");
  out.set("fit.class", step1_kind_name(r.cls.kind));
  out.set("fit.ref1", std::to_string(r.cls.ref1 + 1));
  out.set("fit.ref2", std::to_string(r.cls.ref2 + 1));
  out.set("result.step1_negloglik", format_double(r.step1_negloglik));
  out.set("result.cvm", format_double(r.cvm));
  out.set("result.step1_converged", r.step1_converged ? "true" : "false");
  out.set("result.step2_converged", r.step2_converged ? "true" : "false");
  out.set("result.rows_used", std::to_string(r.rows_used));
  out.set("result.rows_skipped", std::to_string(r.rows_skipped));
  out.set("result.seconds", format_double(r.seconds));
  out.set("n", std::to_string(data.n()));
  out.set("m", std::to_string(data.m()));
  out.set("sites", c.require("sites"));
  out.set("data", c.require("data"));
  out.set("seed", std::to_string(ctx.seed));
  for (const char* k : {"cvm.draws", "cvm.seed", "table.draws", "table.seed"})
    if (c.has(k)) out.set(k, c.require(k));
  out.write(out_file(ctx, "fit.cfg").string());
  write_trace(out_file(ctx, "trace.csv"), r.trace);
  const auto names = r.names();
  const auto vals = r.values();
  for (std::size_t k = 0; k < names.size(); ++k) std::cout << names[k] << " = " << format_double(vals[k]) << "\n";
  std::cout << "cvm = " << format_double(r.cvm) << ", seconds = " << r.seconds << "\n";
  return r.step1_converged && r.step2_converged ? kOk : kNumerical;
}

int cmd_condsim(const Context& ctx) {
  const Config& c = ctx.cfg;
  const ModelParams params{model_from_config(c), corr_from_config(c)};
  const SiteSet sites1 = read_sites(c.require("sites"));
  const RowMatrix x = read_matrix(c.require("data"));
  if (static_cast<std::size_t>(x.cols()) != sites1.size())
    throw DataError("condsim: data columns do not match conditioning sites");
  const Table targets_table = read_table(c.require("targets"));
  SiteSet sites2;
  for (std::size_t i = 0; i < targets_table.rows(); ++i) sites2.push_back({targets_table.at(i, 0), targets_table.at(i, 1)});
  if (sites2.empty()) throw InvalidArgument("condsim: empty target list");

  CondSimConfig cs;
  cs.burnin = as_size(c.get_int("burnin", 5000), "burnin");
  cs.steps = as_size(c.get_int("steps", 50000), "steps");
  cs.thin = as_size(c.get_int("thin", 100), "thin");
  cs.prop_sd_s = c.get_double("prop_sd_s", 1.0);
  cs.prop_sd_logr = c.get_double("prop_sd_logr", 1.0);
  cs.log_s = c.get_bool("condsim.log_s", true);
  cs.adapt = c.get_bool("condsim.adapt", false);
  cs.validate();

  std::vector<std::size_t> rows;
  const std::string which = c.get("condsim.rows", "1");
  if (which == "all") {
    for (Eigen::Index i = 0; i < x.rows(); ++i) rows.push_back(static_cast<std::size_t>(i));
  } else {
    for (double v : c.get_doubles("condsim.rows", {1.0})) {
      if (v < 1 || v > static_cast<double>(x.rows())) throw InvalidArgument("condsim.rows out of range");
      rows.push_back(static_cast<std::size_t>(v) - 1);
    }
  }

  std::optional<MonteCarloMarginal> table;
  const bool uniform_input = c.get("input.scale", "x") == "uniform";
  std::optional<std::vector<egpd::EgpdParams>> margins;
  if (uniform_input || c.has("margins"))
    table = marginal_table(params.mixing, as_size(c.get_int("table.draws", 1000000), "table.draws"),
                           derive_seed(ctx.seed, 201));
  if (c.has("margins")) {
    margins.emplace();
    for (const auto& s : egpd::read_egpd_table(c.require("margins"))) margins->push_back(s.params);
    if (margins->size() != sites2.size()) throw DataError("condsim: one EGPD row per target site required");
  }

  struct Out {
    RowMatrix draws;
    Chain chain;
    std::vector<double> medians, observed;
  };
  std::vector<Out> results(rows.size());
  parallel_for(rows.size(), ctx.workers, [&](std::size_t k) {
    std::vector<double> x1(sites1.size());
    for (std::size_t j = 0; j < x1.size(); ++j) {
      const double v = x(static_cast<Eigen::Index>(rows[k]), static_cast<Eigen::Index>(j));
      x1[j] = uniform_input ? mc_quantile(*table, v) : v;
    }
    Out& o = results[k];
    o.draws = conditional_simulate(params, sites1, x1, sites2, cs, derive_seed(ctx.seed, 1000 + rows[k]), &o.chain);
    o.medians = conditional_predict(o.draws);
    if (margins) o.observed = conditional_predict(o.draws, &*table, &*margins);
  });

  std::vector<std::string> th{"row"}, chain_h{"row", "s", "r"};
  for (std::size_t j = 0; j < sites2.size(); ++j) th.push_back("t" + std::to_string(j + 1));
  Table draws(th), medians(th), observed(th), chain(chain_h);
  Table acc({"row", "acceptance_rate"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double row_id = static_cast<double>(rows[k] + 1);
    const auto& o = results[k];
    for (Eigen::Index i = 0; i < o.draws.rows(); ++i) {
      std::vector<double> r{row_id};
      for (Eigen::Index j = 0; j < o.draws.cols(); ++j) r.push_back(o.draws(i, j));
      draws.add_row(r);
    }
    for (const auto& d : o.chain.draws) chain.add_row({row_id, d.s, d.r});
    std::vector<double> r{row_id};
    r.insert(r.end(), o.medians.begin(), o.medians.end());
    medians.add_row(r);
    if (margins) {
      std::vector<double> q{row_id};
      q.insert(q.end(), o.observed.begin(), o.observed.end());
      observed.add_row(q);
    }
    acc.add_row({row_id, o.chain.acceptance_rate});
  }
  write_table(out_file(ctx, "draws.csv").string(), draws);
  write_table(out_file(ctx, "medians.csv").string(), medians);
  write_table(out_file(ctx, "chain.csv").string(), chain);
  write_table(out_file(ctx, "acceptance.csv").string(), acc);
  if (margins) write_table(out_file(ctx, "medians_observed.csv").string(), observed);
  std::cout << "conditional simulation: " << rows.size() << " row(s), " << sites2.size() << " target(s)\n";
  return kOk;
}

int cmd_chi(const Context& ctx) {
  const Config& c = ctx.cfg;
  DataMatrix data = read_data(c.require("data"), c.require("sites"));
  const std::string input = c.get("chi.input", "ranks");
  if (input == "ranks") data = pseudo_uniform(data);
  else if (input != "uniform") throw InvalidArgument("chi.input must be ranks or uniform");
  const auto thresholds = c.get_doubles("chi.thresholds", default_chi_thresholds());
  const std::string side = c.get("chi.side", "upper");
  if (side != "upper" && side != "lower") throw InvalidArgument("chi.side must be upper or lower");
  const ChiCurve curve = chi_by_distance(data, thresholds, c.get_double("chi.bin_width", 25.0),
                                         side == "upper" ? TailSide::Upper : TailSide::Lower, ctx.workers);
  write_chi_curve(out_file(ctx, "chi.csv").string(), curve);
  std::size_t empty = 0;
  for (const auto& b : curve.bins) empty += b.pairs == 0;
  std::cout << "chi curve: " << curve.bins.size() << " cells, " << empty << " empty\n";
  return kOk;
}

int cmd_bootstrap(const Context& ctx) {
  const Config& c = ctx.cfg;
  FitResult fit;
  fit.mixing = model_from_config(c);
  fit.corr = corr_from_config(c);
  fit.copula = c.get_bool("fit.copula", false);
  const SiteSet sites = read_sites(c.require("sites"));
  fit.cls = default_step1_class(fit.mixing);
  if (c.has("fit.class")) fit.cls.kind = parse_step1_kind(c.require("fit.class"));
  fit.cls.ref1 = as_size(c.get_int("fit.ref1", 1) - 1, "fit.ref1");
  fit.cls.ref2 = as_size(c.get_int("fit.ref2", 2) - 1, "fit.ref2");
  const std::size_t n = as_size(c.get_int("n", 0), "n");
  if (n == 0) throw InvalidArgument("bootstrap: n is required");

  BootstrapOptions bo;
  bo.replicates = as_size(c.get_int("bootstrap.replicates", 100), "bootstrap.replicates");
  bo.level = c.get_double("bootstrap.level", 0.95);
  const std::string mode = c.get("bootstrap.mode", "fast");
  if (mode == "fast") bo.mode = BootstrapMode::Fast;
  else if (mode == "standard") bo.mode = BootstrapMode::Standard;
  else throw InvalidArgument("bootstrap.mode must be fast or standard");
  bo.seed = derive_seed(ctx.seed, 301);
  bo.workers = ctx.workers;
  bo.fit = fit_options(ctx, fit.mixing, sites.size());
  const BootstrapResult r = bootstrap_ci(fit, sites, n, bo);

  const fs::path path = out_file(ctx, "intervals.csv");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "name,estimate,lower,upper\n";
  for (const auto& iv : r.intervals)
    out << iv.name << ',' << format_double(iv.estimate) << ',' << format_double(iv.lower) << ','
        << format_double(iv.upper) << '\n';
  std::cout << "bootstrap: " << r.succeeded << " succeeded, " << r.failed << " failed\n";
  return kOk;
}

int cmd_marginal_fit(const Context& ctx) {
  const Config& c = ctx.cfg;
  const RowMatrix y = read_matrix(c.require("data"));
  const auto m = static_cast<std::size_t>(y.cols());
  std::vector<egpd::SiteEgpd> fits(m);
  parallel_for(m, ctx.workers, [&](std::size_t j) {
    std::vector<double> col(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index i = 0; i < y.rows(); ++i) col[static_cast<std::size_t>(i)] = y(i, static_cast<Eigen::Index>(j));
    fits[j] = {j + 1, egpd::egpd_fit(col).params};
  });
  egpd::write_egpd_table(out_file(ctx, "egpd.csv").string(), fits);
  if (c.get_bool("marginal.write_uniform", true)) {
    RowMatrix u(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index j = 0; j < y.cols(); ++j) {
        const double v = egpd::egpd_cdf(y(i, j), fits[static_cast<std::size_t>(j)].params);
        u(i, j) = std::clamp(v, 1e-12, 1.0 - 1e-12);
      }
    write_matrix(out_file(ctx, "uniform.csv").string(), u);
  }
  std::cout << "fitted EGPD margins at " << m << " site(s)\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Gaussian location-scale mixture processes for spatial extremes"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  int workers = 0;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "Run-config file (key = value)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--workers", workers, "Worker threads (default: GLSM_WORKERS or 1)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", overrides, "Override a config entry, key=value (repeatable)");
  app.fallthrough();

  using Handler = int (*)(const Context&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"simulate", "Simulate sites and replications", cmd_simulate},
      {"fit", "Two-step or copula fit", cmd_fit},
      {"condsim", "Conditional simulation at target sites", cmd_condsim},
      {"chi", "Empirical chi by distance", cmd_chi},
      {"bootstrap", "Parametric bootstrap intervals", cmd_bootstrap},
      {"marginal-fit", "Per-site EGPD margins", cmd_marginal_fit},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, h] : commands) subs.push_back(app.add_subcommand(name, help));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    Context ctx;
    if (!config_path.empty()) ctx.cfg = Config::from_file(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value: " + o);
      ctx.cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed >= 0) ctx.seed = static_cast<std::uint64_t>(seed);
    else ctx.seed = ctx.cfg.get_u64("seed", 1);
    ctx.workers = workers > 0 ? workers : default_workers();
    ctx.out = out_dir;
    fs::create_directories(ctx.out);
    for (std::size_t k = 0; k < subs.size(); ++k)
      if (subs[k]->parsed()) return std::get<2>(commands[k])(ctx);
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace glsm::cli
