#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "glsm/random.hpp"

namespace glsm {

namespace mix {

struct Gaussian {};
struct LM1 { double lambda = 1.0; };
struct LM2 { double lambda1 = 1.0, lambda2 = 1.0; };
struct SM1 {};
struct SM2 { double alpha = 1.0; };
struct SM3 { double nu = 2.0; };
struct SM4 { double gamma = 0.5; };
struct SM5 { double gamma = 0.0; };
struct LSM1 { double lambda = 1.0; };
struct LSM2 { double lambda1 = 1.0, lambda2 = 1.0; };

}  // namespace mix

using MixingSpec = std::variant<mix::Gaussian, mix::LM1, mix::LM2, mix::SM1, mix::SM2, mix::SM3,
                                mix::SM4, mix::SM5, mix::LSM1, mix::LSM2>;

// One realisation of (S, R) with the base variables that generated it.
struct LatentDraw {
  double s = 0.0;
  double r = 1.0;
  std::array<double, 2> latent{};
  int dim = 0;
};

// Lower-case catalogue name ("gaussian", "lm1", ..., "lsm2").
std::string model_name(const MixingSpec& spec);
std::vector<std::string> model_names();

// Parameter names and values in a fixed per-variant order.
std::vector<std::string> param_names(const MixingSpec& spec);
std::vector<double> param_values(const MixingSpec& spec);
MixingSpec with_param_values(const MixingSpec& spec, const std::vector<double>& values);

// Builds a spec from a name and a name -> value map. Missing parameters take
// the defaults of the variant struct; unknown names throw InvalidArgument.
MixingSpec make_spec(const std::string& name, const std::map<std::string, double>& params = {});

void validate(const MixingSpec& spec);

// Unconstrained coordinates used by optimisers: log for positive parameters,
// identity for the SM5 shape.
std::vector<double> to_unconstrained(const MixingSpec& spec);
MixingSpec from_unconstrained(const MixingSpec& spec, const std::vector<double>& theta);

// Whether S, respectively R, is random under this variant.
bool has_location(const MixingSpec& spec);
bool has_scale(const MixingSpec& spec);
// S is supported on [0, inf) (LM1, LSM1).
bool location_positive(const MixingSpec& spec);
// Number of open uniforms consumed by from_uniforms.
int uniform_dim(const MixingSpec& spec);

// Deterministic image of open uniforms u[0..uniform_dim) under inverse cdfs.
LatentDraw from_uniforms(const MixingSpec& spec, const double* u);

LatentDraw sample_sr(const MixingSpec& spec, Stream& stream);

// Joint log density of (S, R); nullopt for SM4. Variants with a degenerate
// coordinate return the density of the random one.
std::optional<double> logdensity_sr(const MixingSpec& spec, double s, double r);

// Sum of log densities of the independent base variables in LatentDraw.latent.
double logdensity_latent(const MixingSpec& spec, const LatentDraw& d);

// Maps latent coordinates to (s, r), filling the remaining fields of d.
void latent_to_sr(const MixingSpec& spec, LatentDraw& d);

// Spec of -S + R W: swaps the asymmetric Laplace rates; symmetric variants
// are returned unchanged. LM1/LSM1 have no reflected form in the catalogue
// and throw InvalidArgument.
MixingSpec reflect_location(const MixingSpec& spec);

double al_cdf(double x, double lambda1, double lambda2);
double al_quantile(double u, double lambda1, double lambda2);
double al_logpdf(double x, double lambda1, double lambda2);

double gpd_quantile(double u, double sigma, double gamma);

}  // namespace glsm
