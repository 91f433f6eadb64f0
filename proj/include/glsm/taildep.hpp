#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glsm/mixing.hpp"
#include "glsm/process.hpp"

namespace glsm {

enum class TailSide { Upper, Lower };

struct ChiValue {
  double value = 0.0;
  double std_error = 0.0;  // nonzero only for Monte-Carlo evaluations
};

struct ChiMcOptions {
  std::size_t draws = 1000000;
  std::uint64_t seed = 20240611;
};

// Limiting chi for a pair of sites with latent correlation rho.
ChiValue chi_theory(const MixingSpec& spec, double rho, TailSide side = TailSide::Upper,
                    const ChiMcOptions& mc = {});

// Limiting chi-bar.
double chibar_theory(const MixingSpec& spec, double rho, TailSide side = TailSide::Upper);

// Plug-in estimators at threshold p from paired uniform samples. The upper
// tail uses exceedances of p, the lower tail values below 1 - p. nullopt when
// there are no joint exceedances.
std::optional<double> chi_empirical(const double* u1, const double* u2, std::size_t n, double p,
                                    TailSide side = TailSide::Upper, std::size_t stride = 1);
std::optional<double> chibar_empirical(const double* u1, const double* u2, std::size_t n, double p,
                                       TailSide side = TailSide::Upper, std::size_t stride = 1);

struct ChiBin {
  double center = 0.0;
  double p = 0.0;
  std::size_t pairs = 0;  // pairs with a defined estimate; 0 flags an empty bin
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

struct ChiCurve {
  std::vector<double> thresholds;
  double bin_width = 0.0;
  std::vector<ChiBin> bins;  // ordered by threshold, then distance
};

const std::vector<double>& default_chi_thresholds();

ChiCurve chi_by_distance(const DataMatrix& udata, const std::vector<double>& thresholds, double bin_width,
                         TailSide side = TailSide::Upper, int workers = 1);

void write_chi_curve(const std::string& path, const ChiCurve& curve);

}  // namespace glsm
