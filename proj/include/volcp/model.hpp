#pragma once

// Conditional-variance recursions for GARCH(1,1), GJR-GARCH(1,1),
// EGARCH(1,1) and a general GARCH(p,q) filter.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "volcp/error.hpp"

namespace volcp {

enum class ModelKind { garch11, egarch11, gjr11 };

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::garch11: return "garch";
    case ModelKind::egarch11: return "egarch";
    case ModelKind::gjr11: return "gjr";
  }
  return "?";
}

inline ModelKind parse_model(const std::string& s) {
  if (s == "garch" || s == "garch11") return ModelKind::garch11;
  if (s == "egarch" || s == "egarch11") return ModelKind::egarch11;
  if (s == "gjr" || s == "gjr11") return ModelKind::gjr11;
  fail(ErrorKind::config, "unknown model '" + s + "' (expected garch, egarch or gjr)");
}

/// Number of free volatility coefficients; this is the per-change-point SIC p.
inline int parameter_count(ModelKind m) { return m == ModelKind::garch11 ? 3 : 4; }

struct GarchParams {
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool operator==(const GarchParams&) const = default;
};

struct AsymGarchParams {
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  bool operator==(const AsymGarchParams&) const = default;
};

/// Tagged coefficients for code that handles all three models uniformly.
/// gamma is ignored for GARCH(1,1).
struct ModelParams {
  ModelKind model = ModelKind::garch11;
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  GarchParams garch() const { return {omega, alpha, beta}; }
  AsymGarchParams asym() const { return {omega, alpha, beta, gamma}; }
  bool operator==(const ModelParams&) const = default;
};

struct VolatilityPath {
  std::vector<double> sigma_sq;
};

inline void validate(const GarchParams& p) {
  require(std::isfinite(p.omega) && std::isfinite(p.alpha) && std::isfinite(p.beta), ErrorKind::domain,
          "GARCH coefficients must be finite");
  require(p.omega >= 0.0 && p.alpha >= 0.0 && p.beta >= 0.0, ErrorKind::domain,
          "GARCH coefficients must be non-negative");
  require(p.alpha + p.beta < 1.0, ErrorKind::domain, "GARCH requires alpha + beta < 1");
}

inline void validate_gjr(const AsymGarchParams& p) {
  require(std::isfinite(p.omega) && std::isfinite(p.alpha) && std::isfinite(p.beta) && std::isfinite(p.gamma),
          ErrorKind::domain, "GJR coefficients must be finite");
  require(p.omega >= 0.0 && p.alpha >= 0.0 && p.beta >= 0.0 && p.gamma >= 0.0, ErrorKind::domain,
          "GJR coefficients must be non-negative");
  require(p.alpha + 0.5 * p.gamma + p.beta < 1.0, ErrorKind::domain, "GJR requires alpha + gamma/2 + beta < 1");
}

inline void validate_egarch(const AsymGarchParams& p) {
  require(std::isfinite(p.omega) && std::isfinite(p.alpha) && std::isfinite(p.beta) && std::isfinite(p.gamma),
          ErrorKind::domain, "EGARCH coefficients must be finite");
  require(std::abs(p.beta) < 1.0, ErrorKind::domain, "EGARCH requires |beta| < 1");
}

inline void validate(const ModelParams& p) {
  switch (p.model) {
    case ModelKind::garch11: validate(p.garch()); break;
    case ModelKind::gjr11: validate_gjr(p.asym()); break;
    case ModelKind::egarch11: validate_egarch(p.asym()); break;
  }
}

namespace detail {

inline void check_inputs(std::span<const double> returns, double sigma1_sq) {
  require(!returns.empty(), ErrorKind::invalid_input, "return series is empty");
  for (double y : returns) require(std::isfinite(y), ErrorKind::invalid_input, "return series has non-finite entries");
  require(std::isfinite(sigma1_sq) && sigma1_sq > 0.0, ErrorKind::domain, "initial variance must be > 0");
}

// Unchecked recursions, shared with the likelihood hot path. out.size() == y.size().
inline void garch11_into(const GarchParams& p, std::span<const double> y, double sigma1_sq, std::span<double> out) {
  out[0] = sigma1_sq;
  for (std::size_t t = 1; t < y.size(); ++t) out[t] = p.omega + p.alpha * y[t - 1] * y[t - 1] + p.beta * out[t - 1];
}

inline void gjr11_into(const AsymGarchParams& p, std::span<const double> y, double sigma1_sq, std::span<double> out) {
  out[0] = sigma1_sq;
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double y2 = y[t - 1] * y[t - 1];
    const double a = y[t - 1] < 0.0 ? p.alpha + p.gamma : p.alpha;
    out[t] = p.omega + a * y2 + p.beta * out[t - 1];
  }
}

inline void egarch11_into(const AsymGarchParams& p, std::span<const double> y, double sigma1_sq, double e_abs_z,
                          std::span<double> out) {
  out[0] = sigma1_sq;
  double log_s2 = std::log(sigma1_sq);
  for (std::size_t t = 1; t < y.size(); ++t) {
    const double z = y[t - 1] / std::sqrt(out[t - 1]);
    log_s2 = p.omega + p.alpha * (std::abs(z) - e_abs_z) + p.gamma * z + p.beta * log_s2;
    // keep exp() inside the normal double range so sigma^2 stays positive and finite
    log_s2 = std::clamp(log_s2, -700.0, 700.0);
    out[t] = std::exp(log_s2);
  }
}

}  // namespace detail

/// sigma_1^2 = sigma1_sq; sigma_t^2 = omega + alpha y_{t-1}^2 + beta sigma_{t-1}^2.
inline VolatilityPath garch11_filter(const GarchParams& params, std::span<const double> returns, double sigma1_sq) {
  validate(params);
  detail::check_inputs(returns, sigma1_sq);
  VolatilityPath v{std::vector<double>(returns.size())};
  detail::garch11_into(params, returns, sigma1_sq, v.sigma_sq);
  return v;
}

/// Adds gamma y_{t-1}^2 to the GARCH recursion when y_{t-1} < 0.
inline VolatilityPath gjr11_filter(const AsymGarchParams& params, std::span<const double> returns, double sigma1_sq) {
  validate_gjr(params);
  detail::check_inputs(returns, sigma1_sq);
  VolatilityPath v{std::vector<double>(returns.size())};
  detail::gjr11_into(params, returns, sigma1_sq, v.sigma_sq);
  return v;
}

/// Nelson form: log s_t^2 = omega + alpha(|z| - E|z|) + gamma z + beta log s_{t-1}^2, z = y_{t-1}/s_{t-1}.
inline VolatilityPath egarch11_filter(const AsymGarchParams& params, std::span<const double> returns,
                                      double sigma1_sq, double e_abs_z) {
  validate_egarch(params);
  detail::check_inputs(returns, sigma1_sq);
  require(std::isfinite(e_abs_z) && e_abs_z > 0.0, ErrorKind::domain, "E|z| must be > 0");
  VolatilityPath v{std::vector<double>(returns.size())};
  detail::egarch11_into(params, returns, sigma1_sq, e_abs_z, v.sigma_sq);
  return v;
}

/// GARCH(p,q) with p ARCH lags (alphas) and q GARCH lags (betas).
/// Pre-sample y^2 and sigma^2 terms are backcast flat at sigma1_sq.
inline VolatilityPath garch_pq_filter(double omega, std::span<const double> alphas, std::span<const double> betas,
                                      std::span<const double> returns, double sigma1_sq) {
  double persistence = 0.0;
  require(std::isfinite(omega) && omega >= 0.0, ErrorKind::domain, "omega must be >= 0");
  for (double a : alphas) {
    require(std::isfinite(a) && a >= 0.0, ErrorKind::domain, "ARCH coefficients must be >= 0");
    persistence += a;
  }
  for (double b : betas) {
    require(std::isfinite(b) && b >= 0.0, ErrorKind::domain, "GARCH coefficients must be >= 0");
    persistence += b;
  }
  require(persistence < 1.0, ErrorKind::domain, "GARCH(p,q) requires sum(alpha) + sum(beta) < 1");
  detail::check_inputs(returns, sigma1_sq);

  const std::size_t n = returns.size();
  VolatilityPath v{std::vector<double>(n)};
  auto& s2 = v.sigma_sq;
  s2[0] = sigma1_sq;
  for (std::size_t t = 1; t < n; ++t) {
    double acc = omega;
    for (std::size_t i = 1; i <= alphas.size(); ++i) {
      const double y2 = t >= i ? returns[t - i] * returns[t - i] : sigma1_sq;
      acc += alphas[i - 1] * y2;
    }
    for (std::size_t j = 1; j <= betas.size(); ++j) acc += betas[j - 1] * (t >= j ? s2[t - j] : sigma1_sq);
    s2[t] = acc;
  }
  return v;
}

/// Dispatches to the model's filter. e_abs_z is only read for EGARCH.
inline VolatilityPath filter(const ModelParams& p, std::span<const double> returns, double sigma1_sq,
                             double e_abs_z = 0.0) {
  switch (p.model) {
    case ModelKind::garch11: return garch11_filter(p.garch(), returns, sigma1_sq);
    case ModelKind::gjr11: return gjr11_filter(p.asym(), returns, sigma1_sq);
    case ModelKind::egarch11: return egarch11_filter(p.asym(), returns, sigma1_sq, e_abs_z);
  }
  fail(ErrorKind::domain, "unknown model");
}

}  // namespace volcp
