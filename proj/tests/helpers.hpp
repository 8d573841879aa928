#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "volcp/volcp.hpp"

namespace testutil {

// Integral over the real line, split at the given interior points so kinks sit on
// interval ends. Tanh-sinh handles the infinite outer pieces.
template <class F>
double integrate_line(F f, std::vector<double> cuts = {0.0}) {
  boost::math::quadrature::tanh_sinh<double> q;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::sort(cuts.begin(), cuts.end());
  double total = q.integrate(f, -inf, cuts.front());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += q.integrate(f, cuts[i], cuts[i + 1]);
  total += q.integrate(f, cuts.back(), inf);
  return total;
}

// Composite Simpson on [a, b] with m (even) panels.
template <class F>
double simpson(F f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline std::vector<double> simulate_dgp(std::vector<volcp::ModelParams> regimes, std::vector<std::size_t> lengths,
                                        const volcp::InnovationDist& dist, std::uint64_t seed) {
  std::vector<volcp::DgpSegmentSpec> segs;
  for (std::size_t i = 0; i < regimes.size(); ++i) segs.push_back({regimes[i], lengths[i], dist});
  return volcp::simulate(segs, seed).returns;
}

}  // namespace testutil
