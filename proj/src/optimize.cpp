#include "glsm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "glsm/error.hpp"

namespace glsm::opt {

namespace {

double finite_or_inf(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Result nelder_mead(const Objective& f, std::vector<double> x0, const std::vector<double>& step,
                   const NelderMeadOptions& opts) {
  const std::size_t d = x0.size();
  if (d == 0 || step.size() != d) throw InvalidArgument("nelder_mead: bad dimensions");
  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> vals(d + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return finite_or_inf(f(x));
  };
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= d; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  bool converged = false;
  while (evals < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[d - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k)
        diameter = std::max(diameter, std::abs(pts[i][k] - pts[best][k]));
    const double spread = vals[worst] - vals[best];
    if (std::isfinite(vals[worst]) && spread <= opts.ftol * (std::abs(vals[best]) + 1e-12) + 1e-300 &&
        diameter <= opts.xtol) {
      converged = true;
      break;
    }
    if (diameter <= 1e-14) {
      converged = std::isfinite(vals[best]);
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / static_cast<double>(d);
    }
    for (std::size_t k = 0; k < d; ++k) xr[k] = centroid[k] + (centroid[k] - pts[worst][k]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      for (std::size_t k = 0; k < d; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    for (std::size_t k = 0; k < d; ++k) {
      xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k])
                      : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
    }
    const double fc = eval(xc);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return Result{pts[best], vals[best], evals, converged};
}

Result brent(const std::function<double(double)>& f, double lo, double hi, double tol,
             int max_iterations) {
  if (!(lo < hi)) throw InvalidArgument("brent: empty bracket");
  int evals = 0;
  auto g = [&](double x) {
    ++evals;
    return finite_or_inf(f(x));
  };
  const int bits = std::clamp(static_cast<int>(-std::log2(tol)), 4, 26);
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iterations);
  const auto [x, v] = boost::math::tools::brent_find_minima(g, lo, hi, bits, iters);
  return Result{{x}, v, evals, iters < static_cast<std::uintmax_t>(max_iterations)};
}

Result grid_brent(const std::function<double(double)>& f, double lo, double hi, int grid_points,
                  double tol, int max_iterations) {
  if (grid_points < 3) throw InvalidArgument("grid_brent: need at least 3 grid points");
  const double h = (hi - lo) / (grid_points - 1);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double v = finite_or_inf(f(lo + i * h));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + std::max(best - 1, 0) * h;
  const double b = lo + std::min(best + 1, grid_points - 1) * h;
  Result r = brent(f, a, b, tol, max_iterations);
  r.evaluations += grid_points;
  if (best_val < r.value) {
    r.x = {lo + best * h};
    r.value = best_val;
  }
  return r;
}

}  // namespace glsm::opt
