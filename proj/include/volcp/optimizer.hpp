#pragma once

// Derivative-free Nelder-Mead simplex minimisation on R^d.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace volcp {

struct NelderMeadOptions {
  double f_tol = 1e-6;         ///< spread of objective values across the simplex
  double x_tol = 1e-6;         ///< max coordinate distance of any vertex from the best one
  int max_evaluations = 2000;
  double initial_step = 0.5;   ///< edge length of the starting simplex along each axis
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
};

/// Non-finite objective values are treated as +inf, so the caller may signal
/// infeasible points that way.
template <class Objective>
NelderMeadResult nelder_mead(Objective&& objective, const std::vector<double>& x0,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t d = x0.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  NelderMeadResult res;

  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : inf;
  };

  std::vector<std::vector<double>> simplex(d + 1, x0);
  for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += opt.initial_step;
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[d - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k) spread = std::max(spread, std::abs(simplex[i][k] - simplex[best][k]));
    const double f_spread = fv[worst] - fv[best];
    if (std::isfinite(fv[best]) && f_spread < opt.f_tol && spread < opt.x_tol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evaluations) break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k] / static_cast<double>(d);
    }
    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t k = 0; k < d; ++k) out[k] = centroid[k] + coef * (simplex[worst][k] - centroid[k]);
    };

    along(-1.0, xr);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      along(-2.0, xe);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    // contraction: outside if the reflected point beats the worst, inside otherwise
    const bool outside = fr < fv[worst];
    along(outside ? -0.5 : 0.5, xc);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      fv[i] = eval(simplex[i]);
    }
  }

  const auto it = std::min_element(fv.begin(), fv.end());
  res.f = *it;
  res.x = simplex[static_cast<std::size_t>(it - fv.begin())];
  return res;
}

}  // namespace volcp
