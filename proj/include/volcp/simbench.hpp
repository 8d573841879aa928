#pragma once

// Monte-Carlo studies: simulate a piecewise design B times, run each estimator's
// change-point search on every replication, and summarise the estimates.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "volcp/changepoints.hpp"
#include "volcp/segmentation.hpp"
#include "volcp/simulate.hpp"
#include "volcp/stats.hpp"

namespace volcp {

/// The three GARCH(1,1) regimes of the reference studies.
inline ModelParams dgp1() { return {ModelKind::garch11, 0.1, 0.05, 0.9, 0.0}; }
inline ModelParams dgp2() { return {ModelKind::garch11, 0.15, 0.2, 0.7, 0.0}; }
inline ModelParams dgp3() { return {ModelKind::garch11, 0.2, 0.075, 0.85, 0.0}; }

enum class StudyKind { single_cp, multi_cp };

inline std::string to_string(StudyKind k) { return k == StudyKind::single_cp ? "single_cp" : "multi_cp"; }

struct StudyConfig {
  std::vector<DgpSegmentSpec> dgp;
  /// When set, replaces every segment's innovation distribution.
  std::optional<InnovationDist> dist;
  std::vector<EstimatorSpec> estimators;
  /// Search settings shared by all estimators; its own estimator field is ignored.
  SegmentationConfig seg_config;
  std::size_t replications = 1;
  std::uint64_t base_seed = 1;
  /// 1 selects the single change-point study (no penalty, best split always kept).
  std::optional<std::size_t> fixed_k;
  std::vector<std::size_t> accuracy_bands{10, 25, 50};
  /// Interior edges of the position bins; bin i covers [edge_{i-1}, edge_i).
  std::vector<std::size_t> bin_edges{750, 1250, 1750};
  SimulationOptions simulation;
  unsigned workers = 0;  ///< 0: one per hardware thread
};

inline std::size_t total_length(const StudyConfig& c) {
  std::size_t n = 0;
  for (const auto& s : c.dgp) n += s.length;
  return n;
}

inline std::vector<DgpSegmentSpec> effective_dgp(const StudyConfig& c) {
  auto segs = c.dgp;
  if (c.dist)
    for (auto& s : segs) s.dist = *c.dist;
  return segs;
}

inline SegmentationConfig segmentation_for(const StudyConfig& c, const EstimatorSpec& e) {
  SegmentationConfig s = c.seg_config;
  s.estimator = e;
  return s;
}

inline void validate(const StudyConfig& c) {
  require(!c.dgp.empty(), ErrorKind::config, "study needs at least one DGP segment");
  require(c.replications >= 1, ErrorKind::config, "replications must be >= 1");
  require(!c.estimators.empty(), ErrorKind::config, "study needs at least one estimator");
  require(!c.fixed_k || *c.fixed_k == 1, ErrorKind::config, "only fixed_k = 1 is supported");
  for (std::size_t m : c.accuracy_bands) require(m >= 1, ErrorKind::config, "accuracy bands must be >= 1");
  require(std::is_sorted(c.bin_edges.begin(), c.bin_edges.end()) &&
              std::adjacent_find(c.bin_edges.begin(), c.bin_edges.end()) == c.bin_edges.end(),
          ErrorKind::config, "bin edges must be strictly increasing");
  for (const auto& s : effective_dgp(c)) {
    require(s.length >= 1, ErrorKind::config, "DGP segment length must be >= 1");
    validate(s.params);
    validate(s.dist);
  }
  for (const auto& e : c.estimators) validate(segmentation_for(c, e));
}

/// Fraction of true change-points matched by an estimate within +-m. Pairs are
/// matched greedily by distance, each estimate serving at most one truth.
inline double accuracy_band(const ChangePointSet& estimates, const ChangePointSet& truth, std::size_t m) {
  require(!truth.empty(), ErrorKind::domain, "accuracy needs at least one true change-point");
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs;  // distance, truth, estimate
  for (std::size_t i = 0; i < truth.cps.size(); ++i)
    for (std::size_t j = 0; j < estimates.cps.size(); ++j) {
      const std::size_t a = truth.cps[i], b = estimates.cps[j];
      const std::size_t d = a > b ? a - b : b - a;
      if (d <= m) pairs.emplace_back(d, i, j);
    }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> t_used(truth.cps.size()), e_used(estimates.cps.size());
  std::size_t matched = 0;
  for (const auto& [d, i, j] : pairs) {
    if (t_used[i] || e_used[j]) continue;
    t_used[i] = e_used[j] = true;
    ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(truth.cps.size());
}

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
};

/// bias = mean(x) - q, variance with divisor n-1 (0 for a single value).
inline BiasVariance bias_variance(std::span<const double> scaled_positions, double q) {
  require(!scaled_positions.empty(), ErrorKind::domain, "bias/variance needs at least one position");
  return {stats::mean(scaled_positions) - q, stats::variance(scaled_positions)};
}

struct EstimateRecord {
  std::string estimator;  ///< EstimatorSpec::label()
  ChangePointSet detected;
  double lambda = 0.0;    ///< cost reduction of the best first split (-inf when none)
  std::size_t fits = 0;
  std::size_t unconverged_fits = 0;

  bool operator==(const EstimateRecord&) const = default;
};

struct ReplicationRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  ChangePointSet truth;
  std::vector<EstimateRecord> estimates;  ///< in StudyConfig::estimators order

  bool operator==(const ReplicationRecord&) const = default;
};

struct PositionBin {
  std::size_t lo = 0;
  std::optional<std::size_t> hi;  ///< empty for the last, open-ended bin
  std::vector<double> positions;
  std::optional<stats::FiveNumber> summary;
};

struct EstimatorSummary {
  std::string estimator;
  // single change-point study
  std::optional<double> bias;
  std::optional<double> variance;
  std::optional<double> mean_scaled_position;
  // both studies
  std::map<std::size_t, std::size_t> k_histogram;
  std::size_t modal_k = 0;  ///< smallest k among the most frequent
  double mean_k = 0.0;
  std::vector<std::pair<std::size_t, double>> accuracy;  ///< (m, pooled fraction); empty without truth
  std::vector<PositionBin> bins;
  std::size_t unconverged_fits = 0;
};

struct StudyResult {
  StudyKind kind = StudyKind::multi_cp;
  std::vector<ReplicationRecord> records;  ///< ordered by replication index
  std::vector<EstimatorSummary> summaries;
};

/// Study summaries from per-replication records alone, so persisted records
/// reproduce the aggregates exactly.
inline std::vector<EstimatorSummary> aggregate(StudyKind kind, const std::vector<ReplicationRecord>& records,
                                               const std::vector<std::string>& labels,
                                               const std::vector<std::size_t>& accuracy_bands,
                                               const std::vector<std::size_t>& bin_edges) {
  std::vector<EstimatorSummary> out;
  for (std::size_t e = 0; e < labels.size(); ++e) {
    EstimatorSummary s;
    s.estimator = labels[e];
    std::vector<double> scaled;
    double truth_total = 0.0;
    std::vector<double> matched(accuracy_bands.size(), 0.0);
    s.bins.resize(bin_edges.size() + 1);
    for (std::size_t b = 0; b < s.bins.size(); ++b) {
      s.bins[b].lo = b == 0 ? 0 : bin_edges[b - 1];
      if (b < bin_edges.size()) s.bins[b].hi = bin_edges[b];
    }
    double k_sum = 0.0;
    for (const auto& rec : records) {
      require(e < rec.estimates.size() && rec.estimates[e].estimator == labels[e], ErrorKind::invalid_input,
              "replication record does not match the estimator list");
      const auto& est = rec.estimates[e];
      ++s.k_histogram[est.detected.k()];
      k_sum += static_cast<double>(est.detected.k());
      s.unconverged_fits += est.unconverged_fits;
      for (std::size_t cp : est.detected.cps) {
        const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), cp);
        s.bins[static_cast<std::size_t>(it - bin_edges.begin())].positions.push_back(static_cast<double>(cp));
      }
      if (kind == StudyKind::single_cp && !est.detected.empty())
        scaled.push_back(static_cast<double>(est.detected.cps.front()) / static_cast<double>(rec.truth.n));
      if (!rec.truth.empty()) {
        const double nt = static_cast<double>(rec.truth.k());
        truth_total += nt;
        for (std::size_t i = 0; i < accuracy_bands.size(); ++i)
          matched[i] += accuracy_band(est.detected, rec.truth, accuracy_bands[i]) * nt;
      }
    }
    if (!records.empty()) s.mean_k = k_sum / static_cast<double>(records.size());
    std::size_t best = 0;
    for (const auto& [k, count] : s.k_histogram)
      if (count > best) {
        best = count;
        s.modal_k = k;
      }
    if (truth_total > 0.0)
      for (std::size_t i = 0; i < accuracy_bands.size(); ++i)
        s.accuracy.emplace_back(accuracy_bands[i], matched[i] / truth_total);
    for (auto& bin : s.bins)
      if (!bin.positions.empty()) bin.summary = stats::five_number(bin.positions);
    if (kind == StudyKind::single_cp && !scaled.empty() && !records.front().truth.empty()) {
      const double q = static_cast<double>(records.front().truth.cps.front()) /
                       static_cast<double>(records.front().truth.n);
      const auto bv = bias_variance(scaled, q);
      s.bias = bv.bias;
      s.variance = bv.variance;
      s.mean_scaled_position = stats::mean(scaled);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::string> estimator_labels(const StudyConfig& c) {
  std::vector<std::string> labels;
  for (const auto& e : c.estimators) labels.push_back(e.label());
  return labels;
}

/// Simulates replication r with seed base_seed + r and runs every estimator on it.
inline ReplicationRecord run_replication(const StudyConfig& c, std::size_t r) {
  ReplicationRecord rec;
  rec.replication = r;
  rec.seed = c.base_seed + r;
  const auto sim = simulate(effective_dgp(c), rec.seed, c.simulation);
  rec.truth = sim.truth;
  for (const auto& e : c.estimators) {
    EstimateRecord er;
    er.estimator = e.label();
    const auto sc = segmentation_for(c, e);
    if (c.fixed_k) {
      SegmentCostEvaluator eval(sim.returns, e, sc.cache_costs);
      const auto d = best_split(eval, 1, sim.returns.size(), sc.min_seg, resolved_stride(sc, sim.returns.size()),
                                -std::numeric_limits<double>::infinity());
      er.detected.n = sim.returns.size();
      if (d.has_candidate()) er.detected.cps.push_back(d.tau);
      er.lambda = d.lambda;
      er.fits = eval.fits_performed();
      er.unconverged_fits = eval.unconverged_fits();
    } else {
      const auto res = binary_segmentation_detailed(sim.returns, sc);
      er.detected = res.change_points;
      er.lambda = res.trace.empty() ? -std::numeric_limits<double>::infinity() : res.trace.front().decision.lambda;
      er.fits = res.fits_performed;
      er.unconverged_fits = res.unconverged_fits;
    }
    rec.estimates.push_back(std::move(er));
  }
  return rec;
}

/// Runs all replications on a pool of workers. Each record lands at its own
/// index, so the result does not depend on scheduling or worker count.
/// `on_done` (optional) is called under a lock after each replication.
template <class Callback>
std::vector<ReplicationRecord> run_replications(const StudyConfig& c, Callback&& on_done) {
  std::vector<ReplicationRecord> records(c.replications);
  unsigned workers = c.workers ? c.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, c.replications));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto work = [&] {
    while (true) {
      const std::size_t r = next.fetch_add(1);
      if (r >= c.replications) return;
      {
        std::lock_guard lock(mu);
        if (error) return;
      }
      try {
        records[r] = run_replication(c, r);
        std::lock_guard lock(mu);
        on_done(records[r]);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return records;
}

inline StudyResult run_study(const StudyConfig& c, StudyKind kind) {
  validate(c);
  StudyResult out;
  out.kind = kind;
  out.records = run_replications(c, [](const ReplicationRecord&) {});
  out.summaries = aggregate(kind, out.records, estimator_labels(c), c.accuracy_bands, c.bin_edges);
  return out;
}

/// Position of one forced split per replication; bias and variance of tau/n.
inline StudyResult run_single_cp_study(const StudyConfig& c) {
  require(c.dgp.size() == 2, ErrorKind::config, "the single change-point study needs exactly two DGP segments");
  require(c.fixed_k && *c.fixed_k == 1, ErrorKind::config, "the single change-point study needs fixed_k = 1");
  return run_study(c, StudyKind::single_cp);
}

/// Binary segmentation with the configured penalty per replication.
inline StudyResult run_multi_cp_study(const StudyConfig& c) {
  require(!c.fixed_k, ErrorKind::config, "the multiple change-point study must not fix k");
  return run_study(c, StudyKind::multi_cp);
}

}  // namespace volcp
