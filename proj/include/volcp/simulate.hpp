#pragma once

// Forward simulation of piecewise GARCH-family return series.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "volcp/changepoints.hpp"
#include "volcp/distributions.hpp"
#include "volcp/model.hpp"

namespace volcp {

struct DgpSegmentSpec {
  ModelParams params;
  std::size_t length = 0;
  InnovationDist dist;
};

struct SimulatedSeries {
  std::vector<double> returns;
  VolatilityPath volatility;
  ChangePointSet truth;
};

struct SimulationOptions {
  std::size_t burn_in = 200;  ///< presample draws from the first segment, discarded
};

namespace detail {

inline double unconditional_variance(const ModelParams& p) {
  switch (p.model) {
    case ModelKind::garch11: return p.omega / (1.0 - p.alpha - p.beta);
    case ModelKind::gjr11: return p.omega / (1.0 - p.alpha - 0.5 * p.gamma - p.beta);
    case ModelKind::egarch11: return std::exp(p.omega / (1.0 - p.beta));
  }
  return 1.0;
}

// One step of the variance recursion given the previous observation and variance.
inline double next_variance(const ModelParams& p, double y_prev, double s2_prev, double e_abs_z) {
  switch (p.model) {
    case ModelKind::garch11:
      return p.omega + p.alpha * y_prev * y_prev + p.beta * s2_prev;
    case ModelKind::gjr11:
      return p.omega + (p.alpha + (y_prev < 0.0 ? p.gamma : 0.0)) * y_prev * y_prev + p.beta * s2_prev;
    case ModelKind::egarch11: {
      const double z = y_prev / std::sqrt(s2_prev);
      return std::exp(p.omega + p.alpha * (std::abs(z) - e_abs_z) + p.gamma * z + p.beta * std::log(s2_prev));
    }
  }
  return s2_prev;
}

}  // namespace detail

/// Segments are generated back to back; the running (y, sigma^2) state is carried
/// across each boundary and only the coefficients switch.
inline SimulatedSeries simulate(const std::vector<DgpSegmentSpec>& segments, std::uint64_t seed,
                                const SimulationOptions& options = {}) {
  require(!segments.empty(), ErrorKind::precondition, "simulation needs at least one segment");
  std::size_t total = 0;
  std::vector<double> e_abs;
  for (const auto& s : segments) {
    require(s.length >= 1, ErrorKind::precondition, "segment length must be >= 1");
    validate(s.params);
    validate(s.dist);
    e_abs.push_back(s.params.model == ModelKind::egarch11 ? mean_abs(s.dist) : 0.0);
    total += s.length;
  }

  std::mt19937_64 rng(seed);
  SimulatedSeries out;
  out.returns.reserve(total);
  out.volatility.sigma_sq.reserve(total);
  out.truth.n = total;

  const auto& first = segments.front();
  double s2 = detail::unconditional_variance(first.params);
  double y = std::sqrt(s2) * draw(first.dist, rng);
  for (std::size_t b = 0; b < options.burn_in; ++b) {
    s2 = detail::next_variance(first.params, y, s2, e_abs[0]);
    y = std::sqrt(s2) * draw(first.dist, rng);
  }

  bool first_obs = true;
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const auto& seg = segments[j];
    for (std::size_t t = 0; t < seg.length; ++t) {
      // Without burn-in the first retained draw above is already observation 1.
      if (!(first_obs && options.burn_in == 0)) {
        s2 = detail::next_variance(seg.params, y, s2, e_abs[j]);
        y = std::sqrt(s2) * draw(seg.dist, rng);
      }
      first_obs = false;
      out.returns.push_back(y);
      out.volatility.sigma_sq.push_back(s2);
    }
    if (j + 1 < segments.size()) out.truth.cps.push_back(out.returns.size());
  }
  return out;
}

}  // namespace volcp
