#pragma once

// Standardized innovation laws (mean 0, variance 1): Gaussian, GED and
// Student-t, each optionally skewed by the Fernandez-Steel inverse scale
// factor construction and then re-centred / re-scaled back to unit variance.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "volcp/error.hpp"

namespace volcp {

enum class Family { gaussian, ged, student_t };

struct InnovationDist {
  Family family = Family::gaussian;
  double shape = 0.0;  ///< GED shape nu, or Student-t degrees of freedom; unused for Gaussian
  double skew = 1.0;   ///< xi; 1 means symmetric, xi > 1 is right-skewed

  static InnovationDist gaussian(double xi = 1.0) { return {Family::gaussian, 0.0, xi}; }
  static InnovationDist ged(double nu, double xi = 1.0) { return {Family::ged, nu, xi}; }
  static InnovationDist student_t(double df, double xi = 1.0) { return {Family::student_t, df, xi}; }

  bool skewed() const { return skew != 1.0; }
  bool operator==(const InnovationDist&) const = default;
};

inline void validate(const InnovationDist& d) {
  require(std::isfinite(d.skew) && d.skew > 0.0, ErrorKind::domain, "skewness xi must be > 0");
  switch (d.family) {
    case Family::gaussian:
      break;
    case Family::ged:
      require(std::isfinite(d.shape) && d.shape > 0.0, ErrorKind::domain, "GED shape must be > 0");
      break;
    case Family::student_t:
      require(std::isfinite(d.shape) && d.shape > 2.0, ErrorKind::domain,
              "Student-t df must exceed 2 for a unit-variance standardization");
      break;
  }
}

namespace detail {

inline double ged_log_lambda(double nu) {
  return 0.5 * (-(2.0 / nu) * std::numbers::ln2 + std::lgamma(1.0 / nu) - std::lgamma(3.0 / nu));
}

inline double base_mean_abs(Family family, double shape) {
  switch (family) {
    case Family::gaussian:
      return std::sqrt(2.0 / std::numbers::pi);
    case Family::ged: {
      const double nu = shape;
      return std::exp(ged_log_lambda(nu) + std::numbers::ln2 / nu + std::lgamma(2.0 / nu) - std::lgamma(1.0 / nu));
    }
    case Family::student_t: {
      const double df = shape;
      const double scale = std::sqrt((df - 2.0) / df);
      return scale * 2.0 * std::sqrt(df) *
             std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) /
             (std::sqrt(std::numbers::pi) * (df - 1.0));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Location and scale that standardize the skewed variable built from the base law.
struct SkewMoments {
  double mu;
  double sigma;
};

inline SkewMoments skew_moments(const InnovationDist& d) {
  const double m1 = base_mean_abs(d.family, d.shape);
  const double xi = d.skew;
  const double mu = m1 * (xi - 1.0 / xi);
  const double var = (1.0 - m1 * m1) * (xi * xi + 1.0 / (xi * xi)) + 2.0 * m1 * m1 - 1.0;
  return {mu, std::sqrt(var)};
}

template <class Rng>
double draw_base(Family family, double shape, Rng& rng) {
  switch (family) {
    case Family::gaussian:
      return std::normal_distribution<double>{}(rng);
    case Family::ged: {
      // 0.5 |x/lambda|^nu ~ Gamma(1/nu, 1)
      const double nu = shape;
      const double w = std::gamma_distribution<double>{1.0 / nu, 1.0}(rng);
      const double mag = std::exp(ged_log_lambda(nu)) * std::pow(2.0 * w, 1.0 / nu);
      return std::uniform_real_distribution<double>{}(rng) < 0.5 ? -mag : mag;
    }
    case Family::student_t: {
      const double df = shape;
      return std::student_t_distribution<double>{df}(rng) * std::sqrt((df - 2.0) / df);
    }
  }
  return 0.0;
}

}  // namespace detail

/// Log density with the family constants resolved once; cheap to call in a loop.
class LogDensity {
 public:
  explicit LogDensity(const InnovationDist& d) : d_(d) {
    validate(d);
    switch (d.family) {
      case Family::gaussian:
        constant_ = -0.5 * std::log(2.0 * std::numbers::pi);
        break;
      case Family::ged: {
        const double nu = d.shape;
        const double log_lambda = detail::ged_log_lambda(nu);
        inv_scale_ = std::exp(-log_lambda);
        constant_ = std::log(nu) - log_lambda - (1.0 + 1.0 / nu) * std::numbers::ln2 - std::lgamma(1.0 / nu);
        break;
      }
      case Family::student_t: {
        const double df = d.shape;
        const double scale = std::sqrt((df - 2.0) / df);
        inv_scale_ = 1.0 / scale;
        constant_ = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi) -
                    std::log(scale);
        break;
      }
    }
    if (d.skewed()) {
      const auto m = detail::skew_moments(d);
      mu_ = m.mu;
      sigma_ = m.sigma;
      constant_ += std::log(2.0 / (d.skew + 1.0 / d.skew)) + std::log(sigma_);
    }
  }

  double operator()(double x) const {
    if (d_.skewed()) {
      const double z = x * sigma_ + mu_;
      return constant_ + base(z >= 0.0 ? z / d_.skew : z * d_.skew);
    }
    return constant_ + base(x);
  }

  const InnovationDist& dist() const { return d_; }

 private:
  double base(double x) const {
    switch (d_.family) {
      case Family::gaussian:
        return -0.5 * x * x;
      case Family::ged:
        return -0.5 * std::pow(std::abs(x) * inv_scale_, d_.shape);
      case Family::student_t: {
        const double t = x * inv_scale_;
        return -0.5 * (d_.shape + 1.0) * std::log1p(t * t / d_.shape);
      }
    }
    return 0.0;
  }

  InnovationDist d_;
  double constant_ = 0.0;
  double inv_scale_ = 1.0;
  double mu_ = 0.0;
  double sigma_ = 1.0;
};

inline double log_pdf(const InnovationDist& d, double x) { return LogDensity(d)(x); }

inline double pdf(const InnovationDist& d, double x) { return std::exp(log_pdf(d, x)); }

/// E|Z| for the standardized law. Closed form when symmetric, quadrature otherwise.
inline double mean_abs(const InnovationDist& d) {
  validate(d);
  if (!d.skewed()) return detail::base_mean_abs(d.family, d.shape);
  const auto [mu, sigma] = detail::skew_moments(d);
  const double kink = -mu / sigma;
  const LogDensity lp(d);
  const auto integrand = [&](double x) { return std::abs(x) * std::exp(lp(x)); };
  using quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  // split at both the kink of the skewed density and at |x|'s kink
  const double a = std::min(kink, 0.0), b = std::max(kink, 0.0);
  double total = quad::integrate(integrand, -inf, a, 15, 1e-12) + quad::integrate(integrand, b, inf, 15, 1e-12);
  if (b > a) total += quad::integrate(integrand, a, b, 15, 1e-12);
  return total;
}

/// One standardized draw; the engine is advanced by a family-dependent amount.
template <class Rng>
double draw(const InnovationDist& d, Rng& rng) {
  if (!d.skewed()) return detail::draw_base(d.family, d.shape, rng);
  const auto [mu, sigma] = detail::skew_moments(d);
  const double xi = d.skew;
  const double weight = xi / (xi + 1.0 / xi);
  const bool right = std::uniform_real_distribution<double>{}(rng) < weight;
  const double b = std::abs(detail::draw_base(d.family, d.shape, rng));
  const double raw = right ? b * xi : -b / xi;
  return (raw - mu) / sigma;
}

inline std::vector<double> sample(const InnovationDist& d, std::size_t n, std::uint64_t seed) {
  validate(d);
  require(n >= 1, ErrorKind::precondition, "sample size must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = draw(d, rng);
  return out;
}

/// Text form used in configs and reports: gaussian, ged:1.5, t:6, with an optional
/// skew suffix, e.g. t:6:skew=4 or gaussian:skew=4.
inline std::string to_string(const InnovationDist& d) {
  std::string s;
  auto num = [](double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  switch (d.family) {
    case Family::gaussian: s = "gaussian"; break;
    case Family::ged: s = "ged:" + num(d.shape); break;
    case Family::student_t: s = "t:" + num(d.shape); break;
  }
  if (d.skewed()) s += ":skew=" + num(d.skew);
  return s;
}

inline InnovationDist parse_dist(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  auto to_num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::config, "bad number '" + s + "' in distribution '" + text + "'");
    }
  };
  InnovationDist d;
  std::size_t next = 1;
  const std::string& name = parts[0];
  if (name == "gaussian" || name == "normal") {
    d.family = Family::gaussian;
  } else if (name == "ged" || name == "t" || name == "std") {
    require(parts.size() >= 2, ErrorKind::config, "distribution '" + text + "' needs a shape parameter");
    d.family = name == "ged" ? Family::ged : Family::student_t;
    d.shape = to_num(parts[1]);
    next = 2;
  } else {
    fail(ErrorKind::config, "unknown distribution '" + text + "'");
  }
  for (; next < parts.size(); ++next) {
    const std::string& p = parts[next];
    require(p.rfind("skew=", 0) == 0, ErrorKind::config, "unexpected token '" + p + "' in '" + text + "'");
    d.skew = to_num(p.substr(5));
  }
  try {
    validate(d);
  } catch (const Error& e) {
    fail(ErrorKind::config, e.what());
  }
  return d;
}

}  // namespace volcp
