#pragma once

// Penalised-cost change-point search: segment cost = -2 log-likelihood at the
// segment's own fit, best single split by cost reduction, and greedy binary
// segmentation with a constant rejection threshold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "volcp/changepoints.hpp"
#include "volcp/estimators.hpp"

namespace volcp {

enum class PenaltyKind { sic, aic, custom };

inline std::string to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::sic: return "sic";
    case PenaltyKind::aic: return "aic";
    case PenaltyKind::custom: return "custom";
  }
  return "?";
}

inline PenaltyKind parse_penalty(const std::string& s) {
  if (s == "sic" || s == "bic") return PenaltyKind::sic;
  if (s == "aic") return PenaltyKind::aic;
  if (s == "custom") return PenaltyKind::custom;
  fail(ErrorKind::config, "unknown penalty '" + s + "' (expected sic, aic or custom)");
}

/// Cost added per change-point. p counts the parameters one more segment
/// brings; 0 means "take it from the fitted model" (3 for GARCH, 4 otherwise).
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::sic;
  int p = 0;
  double custom_value = 0.0;  ///< used when kind == custom
  double multiplier = 1.0;    ///< scales whatever the kind yields

  static PenaltySpec sic_for(ModelKind m) { return {PenaltyKind::sic, parameter_count(m), 0.0, 1.0}; }

  bool operator==(const PenaltySpec&) const = default;
};

/// SIC: p ln n, AIC: 2p, custom: the configured constant; all times the multiplier.
inline double penalty_value(const PenaltySpec& spec, std::size_t n) {
  require(n >= 2, ErrorKind::domain, "penalty needs n >= 2");
  require(spec.p >= 1, ErrorKind::domain, "penalty parameter count must be >= 1");
  double v = 0.0;
  switch (spec.kind) {
    case PenaltyKind::sic: v = spec.p * std::log(static_cast<double>(n)); break;
    case PenaltyKind::aic: v = 2.0 * spec.p; break;
    case PenaltyKind::custom: v = spec.custom_value; break;
  }
  v *= spec.multiplier;
  require(v > 0.0 && std::isfinite(v), ErrorKind::domain, "penalty value must be > 0");
  return v;
}

struct SegmentationConfig {
  EstimatorSpec estimator;
  PenaltySpec penalty;
  std::size_t step_length = 200;
  std::size_t min_seg = 100;
  std::optional<std::size_t> candidate_stride;  ///< empty: chosen from the series length
  bool cache_costs = true;
};

inline void validate(const SegmentationConfig& c) {
  validate(c.estimator);
  require(c.min_seg >= 50, ErrorKind::config, "min_seg must be >= 50");
  require(c.step_length >= c.min_seg, ErrorKind::config, "step_length must be >= min_seg");
  require(!c.candidate_stride || *c.candidate_stride >= 1, ErrorKind::config, "candidate stride must be >= 1");
  require(c.penalty.p >= 0, ErrorKind::config, "penalty parameter count must be >= 0");
  require(c.penalty.multiplier > 0.0, ErrorKind::config, "penalty multiplier must be > 0");
  require(c.penalty.kind != PenaltyKind::custom || c.penalty.custom_value > 0.0, ErrorKind::config,
          "custom penalty must be > 0");
  require(c.estimator.options.min_length <= c.min_seg, ErrorKind::config,
          "estimator minimum fit length exceeds min_seg");
}

/// The configured penalty with an automatic p resolved from the estimator's model.
inline PenaltySpec effective_penalty(const SegmentationConfig& c) {
  PenaltySpec p = c.penalty;
  if (p.p == 0) p.p = parameter_count(c.estimator.model);
  return p;
}

/// 25 for series up to 2000 points, max(10, n/100) beyond that.
inline std::size_t resolved_stride(const SegmentationConfig& c, std::size_t n) {
  if (c.candidate_stride) return *c.candidate_stride;
  return n <= 2000 ? 25 : std::max<std::size_t>(10, n / 100);
}

/// Outcome of the best-single-split search on one interval. tau is local and
/// 1-based: the left piece is observations 1..tau of the interval.
struct SplitDecision {
  std::size_t tau = 0;
  double lambda = -std::numeric_limits<double>::infinity();
  bool accepted = false;
  double threshold = 0.0;
  double full_cost = std::numeric_limits<double>::quiet_NaN();
  double left_cost = std::numeric_limits<double>::quiet_NaN();
  double right_cost = std::numeric_limits<double>::quiet_NaN();
  std::size_t candidates = 0;

  bool has_candidate() const { return candidates > 0; }
};

/// Fits segments of one series and memoises them by bounds, so overlapping
/// searches reuse work. Fits are pure, so the memo never changes a result.
class SegmentCostEvaluator {
 public:
  SegmentCostEvaluator(std::span<const double> series, EstimatorSpec estimator, bool cache = true)
      : series_(series), estimator_(std::move(estimator)), cache_(cache) {}

  /// Fit of observations first..last (1-based, inclusive).
  FitResult fit(std::size_t first, std::size_t last) {
    require(first >= 1 && last >= first && last <= series_.size(), ErrorKind::precondition,
            "segment bounds out of range");
    const auto key = std::make_pair(first, last);
    if (cache_) {
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    ++fits_;
    FitResult r = volcp::fit(estimator_, series_.subspan(first - 1, last - first + 1));
    if (!r.converged) ++unconverged_;
    if (cache_) memo_.emplace(key, r);
    return r;
  }

  double cost(std::size_t first, std::size_t last) { return fit(first, last).neg2ll; }

  std::span<const double> series() const { return series_; }
  const EstimatorSpec& estimator() const { return estimator_; }
  std::size_t fits_performed() const { return fits_; }
  std::size_t unconverged_fits() const { return unconverged_; }

 private:
  std::span<const double> series_;
  EstimatorSpec estimator_;
  bool cache_;
  std::map<std::pair<std::size_t, std::size_t>, FitResult> memo_;
  std::size_t fits_ = 0;
  std::size_t unconverged_ = 0;
};

/// Scans tau in {min_seg, min_seg + stride, ...} up to length - min_seg and
/// keeps the largest cost reduction, preferring the smaller tau on ties.
/// `cost(first, last)` prices a 1-based inclusive segment.
template <class Cost>
SplitDecision best_split_by(Cost&& cost, std::size_t first, std::size_t last, std::size_t min_seg,
                            std::size_t stride, double threshold) {
  SplitDecision d;
  d.threshold = threshold;
  const std::size_t len = last - first + 1;
  if (len < 2 * min_seg) return d;
  d.full_cost = cost(first, last);
  for (std::size_t tau = min_seg; tau + min_seg <= len; tau += stride) {
    const double left = cost(first, first + tau - 1);
    const double right = cost(first + tau, last);
    const double lambda = d.full_cost - (left + right);
    ++d.candidates;
    if (lambda > d.lambda || d.tau == 0) {
      d.tau = tau;
      d.lambda = lambda;
      d.left_cost = left;
      d.right_cost = right;
    }
  }
  d.accepted = d.lambda > threshold;
  return d;
}

inline SplitDecision best_split(SegmentCostEvaluator& eval, std::size_t first, std::size_t last, std::size_t min_seg,
                                std::size_t stride, double threshold) {
  return best_split_by([&](std::size_t a, std::size_t b) { return eval.cost(a, b); }, first, last, min_seg, stride,
                       threshold);
}

/// C(y) of a whole segment under a fresh fit.
inline double segment_cost(std::span<const double> segment, const EstimatorSpec& estimator) {
  return fit(estimator, segment).neg2ll;
}

/// Best single split of `segment`. The split is accepted when its cost
/// reduction exceeds `threshold`, which defaults to the penalty at the
/// segment length.
inline SplitDecision single_cp_search(std::span<const double> segment, const SegmentationConfig& config,
                                      std::optional<double> threshold = std::nullopt) {
  validate(config);
  const double rt = threshold ? *threshold : penalty_value(effective_penalty(config), std::max<std::size_t>(segment.size(), 2));
  if (segment.size() < 2 * config.min_seg) {
    SplitDecision d;
    d.threshold = rt;
    return d;
  }
  SegmentCostEvaluator eval(segment, config.estimator, config.cache_costs);
  return best_split(eval, 1, segment.size(), config.min_seg, resolved_stride(config, segment.size()), rt);
}

/// One examined interval of a binary segmentation run, in global 1-based indices.
struct SplitRecord {
  std::size_t first = 0;
  std::size_t last = 0;
  SplitDecision decision;
  std::size_t change_point = 0;  ///< global index when accepted, else 0
};

struct SegmentationResult {
  ChangePointSet change_points;
  double threshold = 0.0;
  std::vector<SplitRecord> trace;                ///< in processing order
  std::vector<FitResult> segment_fits;           ///< one per final segment
  double total_penalized_cost = 0.0;             ///< sum of segment costs + threshold * k
  std::size_t fits_performed = 0;
  std::size_t unconverged_fits = 0;
};

/// Worklist binary segmentation. An interval [s, t] is split at its best
/// candidate when the cost reduction exceeds RT = penalty(n) for the full n;
/// the pieces [s, r] and [r+1, t] are revisited only when r - s and t - r
/// exceed step_length.
inline SegmentationResult binary_segmentation_detailed(std::span<const double> returns,
                                                       const SegmentationConfig& config) {
  validate(config);
  const std::size_t n = returns.size();
  SegmentationResult out;
  out.change_points.n = n;
  if (n < 2 * config.min_seg) return out;

  out.threshold = penalty_value(effective_penalty(config), n);
  const std::size_t stride = resolved_stride(config, n);
  SegmentCostEvaluator eval(returns, config.estimator, config.cache_costs);

  std::vector<std::pair<std::size_t, std::size_t>> work{{1, n}};
  std::vector<std::size_t> cps;
  while (!work.empty()) {
    const auto [s, t] = work.back();
    work.pop_back();
    SplitRecord rec{s, t, best_split(eval, s, t, config.min_seg, stride, out.threshold), 0};
    if (rec.decision.accepted) {
      const std::size_t r = rec.decision.tau + s - 1;
      rec.change_point = r;
      cps.push_back(r);
      // pushed right first so the left piece is examined next
      if (t - r > config.step_length) work.emplace_back(r + 1, t);
      if (r - s > config.step_length) work.emplace_back(s, r);
    }
    out.trace.push_back(rec);
  }

  out.change_points = make_change_points(n, std::move(cps));
  double total = 0.0;
  for (const auto& [first, last] : out.change_points.segments()) {
    out.segment_fits.push_back(eval.fit(first, last));
    total += out.segment_fits.back().neg2ll;
  }
  out.total_penalized_cost = total + out.threshold * static_cast<double>(out.change_points.k());
  out.fits_performed = eval.fits_performed();
  out.unconverged_fits = eval.unconverged_fits();
  return out;
}

inline ChangePointSet binary_segmentation(std::span<const double> returns, const SegmentationConfig& config) {
  return binary_segmentation_detailed(returns, config).change_points;
}

}  // namespace volcp
