#pragma once

// Likelihood objectives and fitting: parametric QMLE and the one-step
// semiparametric MLE, whose innovation density is a kernel estimate built
// from the residuals of the very parameter being evaluated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "volcp/distributions.hpp"
#include "volcp/error.hpp"
#include "volcp/kde.hpp"
#include "volcp/model.hpp"
#include "volcp/optimizer.hpp"
#include "volcp/stats.hpp"

namespace volcp {

enum class Method { qmle, smle };

inline std::string to_string(Method m) { return m == Method::qmle ? "qmle" : "smle"; }

inline Method parse_method(const std::string& s) {
  if (s == "qmle") return Method::qmle;
  if (s == "smle") return Method::smle;
  fail(ErrorKind::config, "unknown estimator '" + s + "' (expected qmle or smle)");
}

struct FitOptions {
  std::size_t min_length = 100;
  int restarts = 5;                  ///< max extra local searches started around the incumbent
  double restart_min_gain = 1e-6;    ///< restarting stops once a restart improves less than this
  double restart_spread = 0.3;       ///< sd of restart perturbations, transformed coordinates
  double f_tol = 1e-6;
  double x_tol = 1e-6;
  int max_evaluations = 2000;        ///< per local search
  double initial_step = 0.5;
  double stationarity_margin = 1e-4; ///< fitted persistence stays below 1 - margin
  double nrd_constant = 1.06;
  std::optional<double> bandwidth;   ///< fixed SMLE bandwidth instead of the nrd rule
  double density_floor = 1e-300;
  double max_floored_fraction = 0.1;
  std::uint64_t seed = 20240601;     ///< drives the restart perturbations only

  bool operator==(const FitOptions&) const = default;
};

struct EstimatorSpec {
  Method method = Method::smle;
  ModelKind model = ModelKind::garch11;
  InnovationDist qmle_dist = InnovationDist::gaussian();
  FitOptions options;

  static EstimatorSpec smle() { return {}; }
  static EstimatorSpec qmle(ModelKind model = ModelKind::garch11, InnovationDist d = InnovationDist::gaussian()) {
    return {Method::qmle, model, d, {}};
  }
  /// Short label used in study records, e.g. "smle-garch" or "qmle-gjr-t:6".
  std::string label() const {
    std::string s = to_string(method) + "-" + to_string(model);
    if (method == Method::qmle && !(qmle_dist == InnovationDist::gaussian())) s += "-" + to_string(qmle_dist);
    return s;
  }
};

inline void validate(const EstimatorSpec& spec) {
  require(!(spec.method == Method::smle && spec.model != ModelKind::garch11), ErrorKind::config,
          "the semiparametric estimator is defined for GARCH(1,1) only");
  if (spec.method == Method::qmle) validate(spec.qmle_dist);
  const auto& o = spec.options;
  require(o.restarts >= 0 && o.max_evaluations > 0, ErrorKind::config, "invalid optimizer budget");
  require(o.stationarity_margin > 0.0 && o.stationarity_margin < 1.0, ErrorKind::config,
          "stationarity margin must lie in (0, 1)");
  require(!o.bandwidth || *o.bandwidth > 0.0, ErrorKind::config, "bandwidth override must be > 0");
}

struct FitResult {
  ModelParams params;
  double neg2ll = std::numeric_limits<double>::infinity();  ///< -2 * sum_t log-likelihood at params
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  std::size_t n = 0;
  std::size_t floored = 0;  ///< density terms clamped at the floor at the optimum
  /// SMLE only: the standardized likelihood is nearly flat along (k omega, k alpha, beta),
  /// so this reports the member of that ray whose residuals have unit variance.
  /// Empty for QMLE, or when the rescaled point leaves the stationary region.
  std::optional<ModelParams> unit_variance_params;
};

struct ResidualSeries {
  std::vector<double> values;
  bool standardized = false;
};

namespace detail {

struct LikelihoodScratch {
  std::vector<double> sigma_sq;
  std::vector<double> work;
  std::vector<double> dens;
};

inline void run_filter(const ModelParams& p, std::span<const double> y, double sigma1_sq, double e_abs_z,
                       std::span<double> out) {
  switch (p.model) {
    case ModelKind::garch11: garch11_into(p.garch(), y, sigma1_sq, out); break;
    case ModelKind::gjr11: gjr11_into(p.asym(), y, sigma1_sq, out); break;
    case ModelKind::egarch11: egarch11_into(p.asym(), y, sigma1_sq, e_abs_z, out); break;
  }
}

}  // namespace detail

/// Sum over t of the residual log density, plus how many terms were floored.
struct ResidualLogLik {
  double value = 0.0;
  std::size_t floored = 0;
};

/// -2 * sum_t [log g(eps_t) - log sigma_t] with eps_t = y_t / sigma_t, where
/// residual_density(eps, scratch) returns sum_t log g(eps_t) on the residual scale.
/// Both estimators are assembled from this. Returns +inf for non-finite results
/// or when more than the allowed fraction of density terms hit the floor. The
/// parameters are not validated here.
template <class ResidualDensity>
double neg2ll_from_residual_density(const ModelParams& params, std::span<const double> y, double sigma1_sq,
                                    double e_abs_z, ResidualDensity&& residual_density,
                                    const FitOptions& options, std::size_t* floored_out = nullptr,
                                    detail::LikelihoodScratch* scratch = nullptr) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  detail::LikelihoodScratch local;
  auto& sc = scratch ? *scratch : local;
  const std::size_t n = y.size();
  sc.sigma_sq.resize(n);
  sc.work.resize(n);
  detail::run_filter(params, y, sigma1_sq, e_abs_z, sc.sigma_sq);

  double log_sigma_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double s2 = sc.sigma_sq[t];
    if (!(s2 > 0.0) || !std::isfinite(s2)) return inf;
    log_sigma_sum += 0.5 * std::log(s2);
    sc.work[t] = y[t] / std::sqrt(s2);
  }
  const ResidualLogLik r = residual_density(std::span<double>(sc.work), sc);
  if (floored_out) *floored_out = r.floored;
  if (static_cast<double>(r.floored) > options.max_floored_fraction * static_cast<double>(n)) return inf;
  const double v = -2.0 * (r.value - log_sigma_sum);
  return std::isfinite(v) ? v : inf;
}

namespace detail {

// Parametric residual density.
struct ParametricResidualDensity {
  LogDensity log_density;
  double log_floor;

  ResidualLogLik operator()(std::span<double> eps, LikelihoodScratch&) const {
    ResidualLogLik r;
    for (double e : eps) {
      double l = log_density(e);
      if (!(l > log_floor)) {
        l = log_floor;
        ++r.floored;
      }
      r.value += l;
    }
    return r;
  }
};

// Kernel estimate built on the standardized residuals eps* = (eps - m)/s and
// evaluated at eps*; on the eps scale this is the density (1/s) fhat((eps - m)/s).
// eps is overwritten.
struct KernelResidualDensity {
  double nrd_constant;
  std::optional<double> bandwidth;
  double floor;

  ResidualLogLik operator()(std::span<double> eps, LikelihoodScratch& sc) const {
    const std::size_t n = eps.size();
    const double m = stats::mean(eps);
    double ss = 0.0;
    for (double e : eps) ss += (e - m) * (e - m);
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    require(s > 0.0 && std::isfinite(s), ErrorKind::degenerate_data, "residuals have zero spread");
    for (double& e : eps) e = (e - m) / s;
    std::sort(eps.begin(), eps.end());
    const double h = bandwidth ? *bandwidth : nrd_bandwidth_sorted(eps, nrd_constant);
    sc.dens.resize(n);
    self_density_sorted(eps, h, sc.dens);
    ResidualLogLik r;
    for (double f : sc.dens) {
      if (!(f > floor)) {
        f = floor;
        ++r.floored;
      }
      r.value += std::log(f);
    }
    r.value -= static_cast<double>(n) * std::log(s);
    return r;
  }
};

}  // namespace detail

/// -2 sum_t log[(1/sigma_t) f(y_t/sigma_t)] with f the density of dist.
/// For EGARCH the centring term E|z| is taken from dist.
inline double qmle_neg2ll(const ModelParams& params, std::span<const double> returns, const InnovationDist& dist,
                          double sigma1_sq, const FitOptions& options = {}) {
  validate(params);
  detail::check_inputs(returns, sigma1_sq);
  const double e_abs = params.model == ModelKind::egarch11 ? mean_abs(dist) : 0.0;
  return neg2ll_from_residual_density(params, returns, sigma1_sq, e_abs,
                                      detail::ParametricResidualDensity{LogDensity(dist), std::log(options.density_floor)},
                                      options);
}

inline double qmle_neg2ll(const GarchParams& params, std::span<const double> returns, const InnovationDist& dist,
                          double sigma1_sq, const FitOptions& options = {}) {
  return qmle_neg2ll(ModelParams{ModelKind::garch11, params.omega, params.alpha, params.beta, 0.0}, returns, dist,
                     sigma1_sq, options);
}

/// One-step semiparametric objective: sigma_1 = sd(y), filter, residuals,
/// standardize, nrd bandwidth, kernel estimate, likelihood.
inline double smle_neg2ll(const GarchParams& params, std::span<const double> returns, const FitOptions& options = {},
                          std::size_t* floored = nullptr) {
  validate(params);
  require(returns.size() >= 10, ErrorKind::precondition, "semiparametric likelihood needs at least 10 observations");
  const double sigma1_sq = stats::variance(returns);
  require(sigma1_sq > 0.0, ErrorKind::degenerate_data, "return series is constant");
  detail::check_inputs(returns, sigma1_sq);
  return neg2ll_from_residual_density(
      ModelParams{ModelKind::garch11, params.omega, params.alpha, params.beta, 0.0}, returns, sigma1_sq, 0.0,
      detail::KernelResidualDensity{options.nrd_constant, options.bandwidth, options.density_floor}, options, floored);
}

/// eps_t = y_t / sigma_t from the model filter.
inline ResidualSeries residuals(const ModelParams& params, std::span<const double> returns, double sigma1_sq,
                                double e_abs_z = std::sqrt(2.0 / std::numbers::pi)) {
  const VolatilityPath v = filter(params, returns, sigma1_sq, e_abs_z);
  ResidualSeries r;
  r.values.resize(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) r.values[t] = returns[t] / std::sqrt(v.sigma_sq[t]);
  return r;
}

inline ResidualSeries standardized(const ResidualSeries& r) {
  const double m = stats::mean(r.values);
  const double s = stats::sd(r.values);
  require(s > 0.0, ErrorKind::degenerate_data, "residuals have zero spread");
  ResidualSeries out{r.values, true};
  for (double& v : out.values) v = (v - m) / s;
  return out;
}

namespace detail {

// Maps unconstrained coordinates onto the admissible parameter set.
//   GARCH:  (log omega, a, b) -> alpha, beta = (1-d) softmax weights with a free third slot
//   GJR:    as GARCH with gamma/2 taking its own slot
//   EGARCH: (omega, alpha, gamma, atanh(beta/(1-d)))
struct ParamTransform {
  ModelKind model;
  double margin;

  std::size_t dim() const { return model == ModelKind::garch11 ? 3 : 4; }

  ModelParams to_params(std::span<const double> u) const {
    ModelParams p;
    p.model = model;
    const double cap = 1.0 - margin;
    if (model == ModelKind::egarch11) {
      p.omega = u[0];
      p.alpha = u[1];
      p.gamma = u[2];
      p.beta = cap * std::tanh(u[3]);
      return p;
    }
    p.omega = std::exp(u[0]);
    const std::size_t k = dim() - 1;
    double mx = 0.0;
    for (std::size_t i = 0; i < k; ++i) mx = std::max(mx, u[1 + i]);
    double w[3];
    double denom = std::exp(-mx);
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = std::exp(u[1 + i] - mx);
      denom += w[i];
    }
    p.alpha = cap * w[0] / denom;
    p.beta = cap * w[1] / denom;
    if (model == ModelKind::gjr11) p.gamma = 2.0 * cap * w[2] / denom;
    return p;
  }

  std::vector<double> from_params(const ModelParams& p) const {
    const double cap = 1.0 - margin;
    if (model == ModelKind::egarch11) return {p.omega, p.alpha, p.gamma, std::atanh(p.beta / cap)};
    const double rest = 1.0 - (p.alpha + p.beta + 0.5 * p.gamma) / cap;  // weight of the free slot
    std::vector<double> u{std::log(p.omega), std::log(p.alpha / (cap * rest)), std::log(p.beta / (cap * rest))};
    if (model == ModelKind::gjr11) u.push_back(std::log(0.5 * p.gamma / (cap * rest)));
    return u;
  }
};

inline ModelParams starting_point(ModelKind model, double var_y) {
  switch (model) {
    case ModelKind::garch11: return {model, (1.0 - 0.05 - 0.9) * var_y, 0.05, 0.9, 0.0};
    case ModelKind::gjr11: return {model, (1.0 - 0.05 - 0.025 - 0.9) * var_y, 0.05, 0.9, 0.05};
    case ModelKind::egarch11: return {model, (1.0 - 0.9) * std::log(var_y), 0.1, 0.9, 0.0};
  }
  return {};
}

// Rescales (omega, alpha) until the filtered residuals have unit sample variance.
inline std::optional<ModelParams> unit_variance_representative(ModelParams p, std::span<const double> y,
                                                               double sigma1_sq, const FitOptions& opt) {
  std::vector<double> s2(y.size()), eps(y.size());
  for (int it = 0; it < 8; ++it) {
    garch11_into(p.garch(), y, sigma1_sq, s2);
    for (std::size_t t = 0; t < y.size(); ++t) eps[t] = y[t] / std::sqrt(s2[t]);
    const double k = stats::variance(eps);
    if (!std::isfinite(k) || !(k > 0.0)) return std::nullopt;
    p.omega *= k;
    p.alpha *= k;
    if (std::abs(k - 1.0) < 1e-10) break;
  }
  if (!(p.alpha + p.beta < 1.0 - opt.stationarity_margin)) return std::nullopt;
  return p;
}

}  // namespace detail

/// Minimises the estimator's -2 log-likelihood over the admissible parameter
/// set. One local search from the canonical start, then up to `restarts` more
/// from random perturbations of the incumbent, stopping at the first restart
/// that fails to improve it. sigma_1 = sd(y) for every method.
inline FitResult fit(const EstimatorSpec& spec, std::span<const double> returns) {
  validate(spec);
  const FitOptions& opt = spec.options;
  require(returns.size() >= opt.min_length, ErrorKind::precondition,
          "series of length " + std::to_string(returns.size()) + " is below the minimum fit length " +
              std::to_string(opt.min_length));
  const double var_y = stats::variance(returns);
  require(var_y > 0.0, ErrorKind::degenerate_data, "return series is constant");
  detail::check_inputs(returns, var_y);

  const detail::ParamTransform tr{spec.model, opt.stationarity_margin};
  detail::LikelihoodScratch scratch;
  const double log_floor = std::log(opt.density_floor);
  const double e_abs =
      spec.method == Method::qmle && spec.model == ModelKind::egarch11 ? mean_abs(spec.qmle_dist) : 0.0;
  const detail::ParametricResidualDensity parametric{LogDensity(spec.qmle_dist), log_floor};
  const detail::KernelResidualDensity kernel{opt.nrd_constant, opt.bandwidth, opt.density_floor};

  auto objective_at = [&](const ModelParams& p, std::size_t* floored) {
    try {
      if (spec.method == Method::qmle)
        return neg2ll_from_residual_density(p, returns, var_y, e_abs, parametric, opt, floored, &scratch);
      return neg2ll_from_residual_density(p, returns, var_y, 0.0, kernel, opt, floored, &scratch);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto objective = [&](const std::vector<double>& u) { return objective_at(tr.to_params(u), nullptr); };

  const NelderMeadOptions nm{opt.f_tol, opt.x_tol, opt.max_evaluations, opt.initial_step};
  NelderMeadResult best = nelder_mead(objective, tr.from_params(detail::starting_point(spec.model, var_y)), nm);
  int iterations = best.iterations, evaluations = best.evaluations;

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> jitter(0.0, opt.restart_spread);
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<double> start = best.x;
    for (double& v : start) v += jitter(rng);
    NelderMeadResult run = nelder_mead(objective, start, nm);
    iterations += run.iterations;
    evaluations += run.evaluations;
    const bool improved = run.f < best.f - opt.restart_min_gain;
    if (run.f < best.f) best = std::move(run);
    if (!improved) break;
  }

  FitResult out;
  out.params = tr.to_params(best.x);
  out.n = returns.size();
  out.neg2ll = objective_at(out.params, &out.floored);
  out.converged = best.converged && std::isfinite(out.neg2ll);
  out.iterations = iterations;
  out.evaluations = evaluations;
  if (spec.method == Method::smle) out.unit_variance_params = detail::unit_variance_representative(out.params, returns, var_y, opt);
  return out;
}

}  // namespace volcp
