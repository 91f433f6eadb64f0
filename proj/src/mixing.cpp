#include "glsm/mixing.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

#include <boost/math/special_functions/gamma.hpp>

#include "glsm/error.hpp"

namespace glsm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class T, class V>
constexpr bool is = std::is_same_v<std::decay_t<V>, T>;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidArgument(std::string(what) + " must be positive and finite");
}

double exp_quantile(double u, double rate) { return -std::log1p(-u) / rate; }

double exp_logpdf(double x, double rate) {
  return x < 0.0 ? kNegInf : std::log(rate) - rate * x;
}

// Gamma(shape, rate) quantile.
double gamma_quantile(double u, double shape, double rate) {
  const double q = u < 0.5 ? boost::math::gamma_p_inv(shape, u) : boost::math::gamma_q_inv(shape, 1.0 - u);
  return q / rate;
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double rayleigh_logpdf(double r) { return r > 0.0 ? std::log(r) - 0.5 * r * r : kNegInf; }

double gpd_logpdf(double r, double gamma) {
  if (r < 0.0) return kNegInf;
  if (std::abs(gamma) < 1e-12) return -r;
  const double t = 1.0 + gamma * r;
  if (!(t > 0.0)) return kNegInf;
  return -(1.0 / gamma + 1.0) * std::log(t);
}

}  // namespace

std::string model_name(const MixingSpec& spec) {
  static const char* names[] = {"gaussian", "lm1", "lm2", "sm1", "sm2", "sm3", "sm4", "sm5", "lsm1", "lsm2"};
  return names[spec.index()];
}

std::vector<std::string> model_names() {
  return {"gaussian", "lm1", "lm2", "sm1", "sm2", "sm3", "sm4", "sm5", "lsm1", "lsm2"};
}

std::vector<std::string> param_names(const MixingSpec& spec) {
  return std::visit(
      [](const auto& v) -> std::vector<std::string> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::LM1, T> || is<mix::LSM1, T>) return {"lambda"};
        else if constexpr (is<mix::LM2, T> || is<mix::LSM2, T>) return {"lambda1", "lambda2"};
        else if constexpr (is<mix::SM2, T>) return {"alpha"};
        else if constexpr (is<mix::SM3, T>) return {"nu"};
        else if constexpr (is<mix::SM4, T> || is<mix::SM5, T>) return {"gamma"};
        else return {};
      },
      spec);
}

std::vector<double> param_values(const MixingSpec& spec) {
  return std::visit(
      [](const auto& v) -> std::vector<double> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::LM1, T> || is<mix::LSM1, T>) return {v.lambda};
        else if constexpr (is<mix::LM2, T> || is<mix::LSM2, T>) return {v.lambda1, v.lambda2};
        else if constexpr (is<mix::SM2, T>) return {v.alpha};
        else if constexpr (is<mix::SM3, T>) return {v.nu};
        else if constexpr (is<mix::SM4, T> || is<mix::SM5, T>) return {v.gamma};
        else return {};
      },
      spec);
}

MixingSpec with_param_values(const MixingSpec& spec, const std::vector<double>& values) {
  if (values.size() != param_names(spec).size())
    throw InvalidArgument("wrong number of parameters for model " + model_name(spec));
  MixingSpec out = std::visit(
      [&](auto v) -> MixingSpec {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::LM1, T> || is<mix::LSM1, T>) v.lambda = values[0];
        else if constexpr (is<mix::LM2, T> || is<mix::LSM2, T>) {
          v.lambda1 = values[0];
          v.lambda2 = values[1];
        } else if constexpr (is<mix::SM2, T>) v.alpha = values[0];
        else if constexpr (is<mix::SM3, T>) v.nu = values[0];
        else if constexpr (is<mix::SM4, T> || is<mix::SM5, T>) v.gamma = values[0];
        return v;
      },
      spec);
  validate(out);
  return out;
}

MixingSpec make_spec(const std::string& name, const std::map<std::string, double>& params) {
  const auto names = model_names();
  std::string key_name = name;
  for (auto& c : key_name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  MixingSpec spec;
  bool found = false;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] != key_name) continue;
    switch (i) {
      case 0: spec = mix::Gaussian{}; break;
      case 1: spec = mix::LM1{}; break;
      case 2: spec = mix::LM2{}; break;
      case 3: spec = mix::SM1{}; break;
      case 4: spec = mix::SM2{}; break;
      case 5: spec = mix::SM3{}; break;
      case 6: spec = mix::SM4{}; break;
      case 7: spec = mix::SM5{}; break;
      case 8: spec = mix::LSM1{}; break;
      default: spec = mix::LSM2{}; break;
    }
    found = true;
  }
  if (!found) throw InvalidArgument("unknown model name: " + name);
  const auto pn = param_names(spec);
  auto values = param_values(spec);
  for (const auto& [key, value] : params) {
    bool known = false;
    for (std::size_t j = 0; j < pn.size(); ++j) {
      if (pn[j] == key) {
        values[j] = value;
        known = true;
      }
    }
    if (!known) throw InvalidArgument("model " + name + " has no parameter " + key);
  }
  return with_param_values(spec, values);
}

void validate(const MixingSpec& spec) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::LM1, T> || is<mix::LSM1, T>) require_positive(v.lambda, "lambda");
        else if constexpr (is<mix::LM2, T> || is<mix::LSM2, T>) {
          require_positive(v.lambda1, "lambda1");
          require_positive(v.lambda2, "lambda2");
        } else if constexpr (is<mix::SM2, T>) require_positive(v.alpha, "alpha");
        else if constexpr (is<mix::SM3, T>) require_positive(v.nu, "nu");
        else if constexpr (is<mix::SM4, T>) require_positive(v.gamma, "gamma");
        else if constexpr (is<mix::SM5, T>) {
          if (!std::isfinite(v.gamma)) throw InvalidArgument("gamma must be finite");
        }
      },
      spec);
}

std::vector<double> to_unconstrained(const MixingSpec& spec) {
  auto v = param_values(spec);
  if (!std::holds_alternative<mix::SM5>(spec))
    for (auto& x : v) x = std::log(x);
  return v;
}

MixingSpec from_unconstrained(const MixingSpec& spec, const std::vector<double>& theta) {
  auto v = theta;
  if (!std::holds_alternative<mix::SM5>(spec))
    for (auto& x : v) x = std::exp(x);
  return with_param_values(spec, v);
}

bool has_location(const MixingSpec& spec) {
  return std::holds_alternative<mix::LM1>(spec) || std::holds_alternative<mix::LM2>(spec) ||
         std::holds_alternative<mix::LSM1>(spec) || std::holds_alternative<mix::LSM2>(spec);
}

bool has_scale(const MixingSpec& spec) {
  return !std::holds_alternative<mix::Gaussian>(spec) && !std::holds_alternative<mix::LM1>(spec) &&
         !std::holds_alternative<mix::LM2>(spec);
}

bool location_positive(const MixingSpec& spec) {
  return std::holds_alternative<mix::LM1>(spec) || std::holds_alternative<mix::LSM1>(spec);
}

int uniform_dim(const MixingSpec& spec) {
  if (std::holds_alternative<mix::Gaussian>(spec)) return 0;
  if (std::holds_alternative<mix::SM4>(spec) || std::holds_alternative<mix::LSM1>(spec) ||
      std::holds_alternative<mix::LSM2>(spec))
    return 2;
  return 1;
}

LatentDraw from_uniforms(const MixingSpec& spec, const double* u) {
  LatentDraw d;
  d.dim = uniform_dim(spec);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::LM1, T>) d.latent[0] = exp_quantile(u[0], v.lambda);
        else if constexpr (is<mix::LM2, T>) d.latent[0] = al_quantile(u[0], v.lambda1, v.lambda2);
        else if constexpr (is<mix::SM1, T>) d.latent[0] = exp_quantile(u[0], 0.5);
        else if constexpr (is<mix::SM2, T>) d.latent[0] = gamma_quantile(u[0], v.alpha, 1.0);
        else if constexpr (is<mix::SM3, T>) d.latent[0] = gamma_quantile(u[0], 0.5 * v.nu, 0.5 * v.nu);
        else if constexpr (is<mix::SM4, T>) {
          d.latent[0] = exp_quantile(u[0], 0.5);
          d.latent[1] = gamma_quantile(u[1], 1.0 / v.gamma, 1.0 / v.gamma);
        } else if constexpr (is<mix::SM5, T>) d.latent[0] = gpd_quantile(u[0], 1.0, v.gamma);
        else if constexpr (is<mix::LSM1, T>) {
          d.latent[0] = exp_quantile(u[0], v.lambda);
          d.latent[1] = exp_quantile(u[1], 0.5);
        } else if constexpr (is<mix::LSM2, T>) {
          d.latent[0] = al_quantile(u[0], v.lambda1, v.lambda2);
          d.latent[1] = exp_quantile(u[1], 0.5);
        }
      },
      spec);
  latent_to_sr(spec, d);
  return d;
}

void latent_to_sr(const MixingSpec& spec, LatentDraw& d) {
  d.dim = uniform_dim(spec);
  const auto& l = d.latent;
  switch (spec.index()) {
    case 0: d.s = 0.0; d.r = 1.0; break;                           // Gaussian
    case 1: case 2: d.s = l[0]; d.r = 1.0; break;                  // LM1, LM2
    case 3: case 4: d.s = 0.0; d.r = std::sqrt(l[0]); break;       // SM1, SM2
    case 5: d.s = 0.0; d.r = 1.0 / std::sqrt(l[0]); break;         // SM3
    case 6: d.s = 0.0; d.r = std::sqrt(l[0]) / l[1]; break;        // SM4
    case 7: d.s = 0.0; d.r = l[0]; break;                          // SM5
    default: d.s = l[0]; d.r = std::sqrt(l[1]); break;             // LSM1, LSM2
  }
}

LatentDraw sample_sr(const MixingSpec& spec, Stream& stream) {
  double u[2];
  const int k = uniform_dim(spec);
  for (int i = 0; i < k; ++i) u[i] = stream.uniform();
  return from_uniforms(spec, u);
}

std::optional<double> logdensity_sr(const MixingSpec& spec, double s, double r) {
  if (!(r > 0.0)) throw InvalidArgument("logdensity_sr: r must be positive");
  return std::visit(
      [&](const auto& v) -> std::optional<double> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::Gaussian, T>) return (s == 0.0 && r == 1.0) ? 0.0 : kNegInf;
        else if constexpr (is<mix::LM1, T>) return exp_logpdf(s, v.lambda);
        else if constexpr (is<mix::LM2, T>) return al_logpdf(s, v.lambda1, v.lambda2);
        else if constexpr (is<mix::SM1, T>) return rayleigh_logpdf(r);
        else if constexpr (is<mix::SM2, T>)
          return std::log(2.0) + (2.0 * v.alpha - 1.0) * std::log(r) - r * r - std::lgamma(v.alpha);
        else if constexpr (is<mix::SM3, T>)
          return gamma_logpdf(1.0 / (r * r), 0.5 * v.nu, 0.5 * v.nu) + std::log(2.0) - 3.0 * std::log(r);
        else if constexpr (is<mix::SM4, T>) return std::nullopt;
        else if constexpr (is<mix::SM5, T>) return gpd_logpdf(r, v.gamma);
        else if constexpr (is<mix::LSM1, T>) return exp_logpdf(s, v.lambda) + rayleigh_logpdf(r);
        else return al_logpdf(s, v.lambda1, v.lambda2) + rayleigh_logpdf(r);
      },
      spec);
}

double logdensity_latent(const MixingSpec& spec, const LatentDraw& d) {
  const auto& l = d.latent;
  if (d.dim != uniform_dim(spec)) throw InvalidArgument("logdensity_latent: wrong latent dimension");
  const double out = std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (is<mix::Gaussian, T>) return 0.0;
        else if constexpr (is<mix::LM1, T>) return exp_logpdf(l[0], v.lambda);
        else if constexpr (is<mix::LM2, T>) return al_logpdf(l[0], v.lambda1, v.lambda2);
        else if constexpr (is<mix::SM1, T>) return exp_logpdf(l[0], 0.5);
        else if constexpr (is<mix::SM2, T>) return gamma_logpdf(l[0], v.alpha, 1.0);
        else if constexpr (is<mix::SM3, T>) return gamma_logpdf(l[0], 0.5 * v.nu, 0.5 * v.nu);
        else if constexpr (is<mix::SM4, T>)
          return exp_logpdf(l[0], 0.5) + gamma_logpdf(l[1], 1.0 / v.gamma, 1.0 / v.gamma);
        else if constexpr (is<mix::SM5, T>) return gpd_logpdf(l[0], v.gamma);
        else if constexpr (is<mix::LSM1, T>) return exp_logpdf(l[0], v.lambda) + exp_logpdf(l[1], 0.5);
        else return al_logpdf(l[0], v.lambda1, v.lambda2) + exp_logpdf(l[1], 0.5);
      },
      spec);
  if (out == kNegInf) throw InvalidArgument("logdensity_latent: component outside support");
  return out;
}

MixingSpec reflect_location(const MixingSpec& spec) {
  if (const auto* v = std::get_if<mix::LM2>(&spec)) return mix::LM2{v->lambda2, v->lambda1};
  if (const auto* v = std::get_if<mix::LSM2>(&spec)) return mix::LSM2{v->lambda2, v->lambda1};
  if (location_positive(spec))
    throw InvalidArgument("reflect_location: -S has no catalogue form for " + model_name(spec));
  return spec;
}

double al_cdf(double x, double lambda1, double lambda2) {
  require_positive(lambda1, "lambda1");
  require_positive(lambda2, "lambda2");
  const double w = lambda1 + lambda2;
  if (x < 0.0) return lambda1 / w * std::exp(lambda2 * x);
  return 1.0 - lambda2 / w * std::exp(-lambda1 * x);
}

double al_quantile(double u, double lambda1, double lambda2) {
  const double w = lambda1 + lambda2;
  const double p0 = lambda1 / w;
  if (u < p0) return std::log(u / p0) / lambda2;
  return -std::log((1.0 - u) * w / lambda2) / lambda1;
}

double al_logpdf(double x, double lambda1, double lambda2) {
  const double c = std::log(lambda1) + std::log(lambda2) - std::log(lambda1 + lambda2);
  return x >= 0.0 ? c - lambda1 * x : c + lambda2 * x;
}

double gpd_quantile(double u, double sigma, double gamma) {
  require_positive(sigma, "sigma");
  if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("gpd_quantile: u must lie in [0, 1]");
  if (u == 1.0) {
    if (gamma >= 0.0) throw InvalidArgument("gpd_quantile: u = 1 is infinite for gamma >= 0");
    return -sigma / gamma;
  }
  if (std::abs(gamma) < 1e-12) return -sigma * std::log1p(-u);
  return sigma * std::expm1(-gamma * std::log1p(-u)) / gamma;
}

}  // namespace glsm
