#pragma once

#include <functional>
#include <vector>

namespace glsm::opt {

struct Result {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double ftol = 1e-8;   // spread of simplex values
  double xtol = 1e-6;   // simplex diameter
  int max_evaluations = 2000;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Derivative-free simplex minimisation. Non-finite objective values are
// treated as +infinity. `step` sets the initial simplex edge per coordinate.
Result nelder_mead(const Objective& f, std::vector<double> x0, const std::vector<double>& step,
                   const NelderMeadOptions& opts = {});

// Brent's method on [lo, hi].
Result brent(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-6,
             int max_iterations = 200);

// Evaluates f on a uniform grid over [lo, hi], then refines with Brent in
// the cell around the best grid point.
Result grid_brent(const std::function<double(double)>& f, double lo, double hi, int grid_points,
                  double tol = 1e-6, int max_iterations = 200);

}  // namespace glsm::opt
