#pragma once

// JSON forms of configurations, fits and study results, plus atomic file output.
// Readers start from the defaults and override the keys present; unknown keys
// are configuration errors so a typo cannot silently fall back to a default.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "volcp/prices.hpp"
#include "volcp/segmentation.hpp"
#include "volcp/simbench.hpp"

namespace volcp {

using json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

// ---------------------------------------------------------------- file output

/// Writes `content` to a sibling temporary file and renames it over `path`, so
/// readers only ever see the old file or the complete new one.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::ingestion, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      fail(ErrorKind::ingestion, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::ingestion, "cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::config, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, what + ": " + e.what());
  }
}

/// Shortest round-trip decimal form, as used throughout the CSV outputs.
inline std::string format_double(double v) { return json(v).dump(); }

// ---------------------------------------------------------------- helpers

namespace detail {

/// Non-finite numbers are written as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double num_or(const json& j, double if_null) { return j.is_null() ? if_null : j.get<double>(); }

/// Reads keys of one JSON object, rejecting any key it was not asked about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
    require(j_.is_object(), ErrorKind::config, ctx_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) { return j_.at(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config, ctx_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    if (!has(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      require(seen_.count(k) != 0, ErrorKind::config, ctx_ + ": unknown key '" + k + "'");
  }

  const std::string& context() const { return ctx_; }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

}  // namespace detail

// ---------------------------------------------------------------- model and estimator

inline json to_json(const ModelParams& p) {
  json j{{"model", to_string(p.model)}, {"omega", p.omega}, {"alpha", p.alpha}, {"beta", p.beta}};
  if (p.model != ModelKind::garch11) j["gamma"] = p.gamma;
  return j;
}

inline ModelParams model_params_from_json(const json& j, const std::string& ctx) {
  detail::ObjectReader r(j, ctx);
  ModelParams p;
  std::string model = "garch";
  r.get("model", model);
  p.model = parse_model(model);
  r.get("omega", p.omega);
  r.get("alpha", p.alpha);
  r.get("beta", p.beta);
  r.get("gamma", p.gamma);
  r.finish();
  return p;
}

inline json to_json(const DgpSegmentSpec& s) {
  json j = to_json(s.params);
  j["length"] = s.length;
  j["dist"] = to_string(s.dist);
  return j;
}

/// {"preset": "dgp1", "length": 1000} or explicit coefficients.
inline DgpSegmentSpec dgp_segment_from_json(const json& j, const std::string& ctx) {
  DgpSegmentSpec s;
  json coef = json::object();
  detail::ObjectReader r(j, ctx);
  if (r.has("preset")) {
    const auto name = r.at("preset").get<std::string>();
    if (name == "dgp1") s.params = dgp1();
    else if (name == "dgp2") s.params = dgp2();
    else if (name == "dgp3") s.params = dgp3();
    else fail(ErrorKind::config, ctx + ": unknown preset '" + name + "' (expected dgp1, dgp2 or dgp3)");
  }
  for (const char* k : {"model", "omega", "alpha", "beta", "gamma"})
    if (r.has(k)) coef[k] = r.at(k);
  if (!coef.empty()) {
    json base = to_json(s.params);
    base["gamma"] = s.params.gamma;
    base.update(coef);
    s.params = model_params_from_json(base, ctx);
  }
  r.get("length", s.length);
  std::string dist = "gaussian";
  r.get("dist", dist);
  s.dist = parse_dist(dist);
  r.finish();
  require(s.length >= 1, ErrorKind::config, ctx + ".length must be >= 1");
  return s;
}

inline json to_json(const FitOptions& o) {
  return {{"min_length", o.min_length},
          {"restarts", o.restarts},
          {"restart_min_gain", o.restart_min_gain},
          {"restart_spread", o.restart_spread},
          {"f_tol", o.f_tol},
          {"x_tol", o.x_tol},
          {"max_evaluations", o.max_evaluations},
          {"initial_step", o.initial_step},
          {"stationarity_margin", o.stationarity_margin},
          {"nrd_constant", o.nrd_constant},
          {"bandwidth", o.bandwidth ? json(*o.bandwidth) : json(nullptr)},
          {"density_floor", o.density_floor},
          {"max_floored_fraction", o.max_floored_fraction},
          {"seed", o.seed}};
}

inline FitOptions fit_options_from_json(const json& j, const std::string& ctx, FitOptions o = {}) {
  detail::ObjectReader r(j, ctx);
  r.get("min_length", o.min_length);
  r.get("restarts", o.restarts);
  r.get("restart_min_gain", o.restart_min_gain);
  r.get("restart_spread", o.restart_spread);
  r.get("f_tol", o.f_tol);
  r.get("x_tol", o.x_tol);
  r.get("max_evaluations", o.max_evaluations);
  r.get("initial_step", o.initial_step);
  r.get("stationarity_margin", o.stationarity_margin);
  r.get("nrd_constant", o.nrd_constant);
  r.get("bandwidth", o.bandwidth);
  r.get("density_floor", o.density_floor);
  r.get("max_floored_fraction", o.max_floored_fraction);
  r.get("seed", o.seed);
  r.finish();
  return o;
}

inline json to_json(const EstimatorSpec& e) {
  json j{{"method", to_string(e.method)}, {"model", to_string(e.model)}};
  if (e.method == Method::qmle) j["dist"] = to_string(e.qmle_dist);
  j["options"] = to_json(e.options);
  return j;
}

inline EstimatorSpec estimator_from_json(const json& j, const std::string& ctx, EstimatorSpec e = {}) {
  detail::ObjectReader r(j, ctx);
  std::string s;
  if (r.has("method")) e.method = parse_method(r.at("method").get<std::string>());
  if (r.has("model")) e.model = parse_model(r.at("model").get<std::string>());
  if (r.has("dist")) e.qmle_dist = parse_dist(r.at("dist").get<std::string>());
  if (r.has("options")) e.options = fit_options_from_json(r.at("options"), ctx + ".options", e.options);
  r.finish();
  return e;
}

// ---------------------------------------------------------------- segmentation

inline json to_json(const PenaltySpec& p) {
  json j{{"kind", to_string(p.kind)}, {"p", p.p}, {"multiplier", p.multiplier}};
  if (p.kind == PenaltyKind::custom) j["value"] = p.custom_value;
  return j;
}

inline PenaltySpec penalty_from_json(const json& j, const std::string& ctx, PenaltySpec p = {}) {
  detail::ObjectReader r(j, ctx);
  if (r.has("kind")) p.kind = parse_penalty(r.at("kind").get<std::string>());
  r.get("p", p.p);
  r.get("multiplier", p.multiplier);
  r.get("value", p.custom_value);
  r.finish();
  return p;
}

/// The effective configuration for a series of length n: automatic choices resolved.
inline json to_json(const SegmentationConfig& c, std::optional<std::size_t> n = std::nullopt) {
  json j{{"estimator", to_json(c.estimator)},
         {"penalty", to_json(n ? effective_penalty(c) : c.penalty)},
         {"step_length", c.step_length},
         {"min_seg", c.min_seg}};
  if (n) j["candidate_stride"] = resolved_stride(c, *n);
  else j["candidate_stride"] = c.candidate_stride ? json(*c.candidate_stride) : json("auto");
  j["cache_costs"] = c.cache_costs;
  return j;
}

inline SegmentationConfig segmentation_from_json(const json& j, const std::string& ctx, SegmentationConfig c = {}) {
  detail::ObjectReader r(j, ctx);
  if (r.has("estimator")) c.estimator = estimator_from_json(r.at("estimator"), ctx + ".estimator", c.estimator);
  if (r.has("penalty")) c.penalty = penalty_from_json(r.at("penalty"), ctx + ".penalty", c.penalty);
  r.get("step_length", c.step_length);
  r.get("min_seg", c.min_seg);
  if (r.has("candidate_stride")) {
    const auto& v = r.at("candidate_stride");
    if (v.is_null() || v == "auto") c.candidate_stride.reset();
    else c.candidate_stride = v.get<std::size_t>();
  }
  r.get("cache_costs", c.cache_costs);
  r.finish();
  return c;
}

inline json to_json(const ChangePointSet& c) { return {{"n", c.n}, {"change_points", c.cps}}; }

inline ChangePointSet change_points_from_json(const json& j) {
  ChangePointSet c;
  c.n = j.at("n").get<std::size_t>();
  c.cps = j.at("change_points").get<std::vector<std::size_t>>();
  return c;
}

inline json to_json(const FitResult& f) {
  json j{{"params", to_json(f.params)},
         {"neg2ll", detail::num(f.neg2ll)},
         {"converged", f.converged},
         {"iterations", f.iterations},
         {"evaluations", f.evaluations},
         {"n", f.n},
         {"floored", f.floored}};
  if (f.unit_variance_params) j["unit_variance_params"] = to_json(*f.unit_variance_params);
  return j;
}

// ---------------------------------------------------------------- detection config

struct DetectConfig {
  IngestOptions ingest;
  /// When set, this column already holds returns and price conversion is skipped.
  std::optional<std::string> return_column;
  ReturnMode returns = ReturnMode::log_pct;
  bool center = true;
  SegmentationConfig segmentation;
};

inline json to_json(const DetectConfig& c, std::optional<std::size_t> n = std::nullopt) {
  return {{"input",
           {{"date_column", c.ingest.date_column},
            {"price_column", c.ingest.price_column},
            {"delimiter", std::string(1, c.ingest.delimiter)},
            {"date_format", c.ingest.date_format},
            {"return_column", c.return_column ? json(*c.return_column) : json(nullptr)}}},
          {"returns", {{"mode", to_string(c.returns)}, {"center", c.center}}},
          {"segmentation", to_json(c.segmentation, n)}};
}

inline DetectConfig detect_config_from_json(const json& j, DetectConfig c = {}) {
  detail::ObjectReader r(j, "config");
  if (r.has("input")) {
    detail::ObjectReader in(r.at("input"), "config.input");
    in.get("date_column", c.ingest.date_column);
    in.get("price_column", c.ingest.price_column);
    if (in.has("delimiter")) {
      const auto d = in.at("delimiter").get<std::string>();
      require(d.size() == 1, ErrorKind::config, "config.input.delimiter must be a single character");
      c.ingest.delimiter = d[0];
    }
    in.get("date_format", c.ingest.date_format);
    in.get("return_column", c.return_column);
    in.finish();
  }
  if (r.has("returns")) {
    detail::ObjectReader rr(r.at("returns"), "config.returns");
    if (rr.has("mode")) c.returns = parse_return_mode(rr.at("mode").get<std::string>());
    rr.get("center", c.center);
    rr.finish();
  }
  if (r.has("segmentation")) c.segmentation = segmentation_from_json(r.at("segmentation"), "config.segmentation", c.segmentation);
  r.finish();
  return c;
}

// ---------------------------------------------------------------- simulation config

struct SimulateConfig {
  std::vector<DgpSegmentSpec> dgp{{dgp1(), 1000, InnovationDist::gaussian()}};
  std::optional<InnovationDist> dist;  ///< overrides every segment's dist when set
  std::uint64_t seed = 1;
  SimulationOptions simulation;
};

inline std::vector<DgpSegmentSpec> effective_dgp(const SimulateConfig& c) {
  auto segs = c.dgp;
  if (c.dist)
    for (auto& s : segs) s.dist = *c.dist;
  return segs;
}

inline json dgp_to_json(const std::vector<DgpSegmentSpec>& segs) {
  json a = json::array();
  for (const auto& s : segs) a.push_back(to_json(s));
  return a;
}

inline std::vector<DgpSegmentSpec> dgp_from_json(const json& j, const std::string& ctx) {
  require(j.is_array() && !j.empty(), ErrorKind::config, ctx + ": expected a non-empty array of segments");
  std::vector<DgpSegmentSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(dgp_segment_from_json(j[i], ctx + "[" + std::to_string(i) + "]"));
  return out;
}

inline json to_json(const SimulateConfig& c) {
  return {{"dgp", dgp_to_json(effective_dgp(c))}, {"seed", c.seed}, {"burn_in", c.simulation.burn_in}};
}

inline SimulateConfig simulate_config_from_json(const json& j, SimulateConfig c = {}) {
  detail::ObjectReader r(j, "config");
  if (r.has("dgp")) c.dgp = dgp_from_json(r.at("dgp"), "config.dgp");
  if (r.has("dist")) c.dist = parse_dist(r.at("dist").get<std::string>());
  r.get("seed", c.seed);
  r.get("burn_in", c.simulation.burn_in);
  r.finish();
  return c;
}

// ---------------------------------------------------------------- study config

struct BenchConfig {
  StudyKind kind = StudyKind::multi_cp;
  StudyConfig study;
};

inline BenchConfig default_bench_config() {
  BenchConfig b;
  b.study.dgp = {{dgp1(), 1000, InnovationDist::gaussian()},
                 {dgp2(), 500, InnovationDist::gaussian()},
                 {dgp3(), 500, InnovationDist::gaussian()}};
  b.study.estimators = {EstimatorSpec::smle(), EstimatorSpec::qmle()};
  b.study.replications = 20;
  return b;
}

inline json to_json(const BenchConfig& b) {
  const auto& s = b.study;
  json est = json::array();
  for (const auto& e : s.estimators) est.push_back(to_json(e));
  json seg = to_json(s.seg_config, total_length(s));
  seg.erase("estimator");
  return {{"study", to_string(b.kind)},
          {"dgp", dgp_to_json(effective_dgp(s))},
          {"estimators", est},
          {"segmentation", seg},
          {"replications", s.replications},
          {"base_seed", s.base_seed},
          {"fixed_k", s.fixed_k ? json(*s.fixed_k) : json(nullptr)},
          {"accuracy_bands", s.accuracy_bands},
          {"bin_edges", s.bin_edges},
          {"burn_in", s.simulation.burn_in},
          {"workers", s.workers}};
}

inline BenchConfig bench_config_from_json(const json& j, BenchConfig b = default_bench_config()) {
  detail::ObjectReader r(j, "config");
  auto& s = b.study;
  if (r.has("study")) {
    const auto k = r.at("study").get<std::string>();
    if (k == "single_cp") b.kind = StudyKind::single_cp;
    else if (k == "multi_cp") b.kind = StudyKind::multi_cp;
    else fail(ErrorKind::config, "config.study must be single_cp or multi_cp");
    if (b.kind == StudyKind::single_cp && !r.has("fixed_k")) s.fixed_k = 1;
  }
  if (r.has("dgp")) s.dgp = dgp_from_json(r.at("dgp"), "config.dgp");
  if (r.has("dist")) s.dist = parse_dist(r.at("dist").get<std::string>());
  if (r.has("estimators")) {
    const auto& a = r.at("estimators");
    require(a.is_array() && !a.empty(), ErrorKind::config, "config.estimators: expected a non-empty array");
    s.estimators.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      s.estimators.push_back(estimator_from_json(a[i], "config.estimators[" + std::to_string(i) + "]"));
  }
  if (r.has("segmentation")) {
    require(!r.at("segmentation").contains("estimator"), ErrorKind::config,
            "config.segmentation: estimators are listed under config.estimators");
    s.seg_config = segmentation_from_json(r.at("segmentation"), "config.segmentation", s.seg_config);
  }
  r.get("replications", s.replications);
  r.get("base_seed", s.base_seed);
  r.get("fixed_k", s.fixed_k);
  r.get("accuracy_bands", s.accuracy_bands);
  r.get("bin_edges", s.bin_edges);
  r.get("burn_in", s.simulation.burn_in);
  r.get("workers", s.workers);
  r.finish();
  require(b.kind != StudyKind::single_cp || s.fixed_k, ErrorKind::config, "single_cp study needs fixed_k = 1");
  require(b.kind != StudyKind::multi_cp || !s.fixed_k, ErrorKind::config, "multi_cp study must not set fixed_k");
  return b;
}

// ---------------------------------------------------------------- study results

inline json to_json(const ReplicationRecord& rec) {
  json est = json::array();
  for (const auto& e : rec.estimates)
    est.push_back({{"estimator", e.estimator},
                   {"change_points", e.detected.cps},
                   {"lambda", detail::num(e.lambda)},
                   {"fits", e.fits},
                   {"unconverged_fits", e.unconverged_fits}});
  return {{"replication", rec.replication},
          {"seed", rec.seed},
          {"n", rec.truth.n},
          {"truth", rec.truth.cps},
          {"estimates", est}};
}

inline ReplicationRecord replication_from_json(const json& j) {
  ReplicationRecord rec;
  rec.replication = j.at("replication").get<std::size_t>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.truth.n = j.at("n").get<std::size_t>();
  rec.truth.cps = j.at("truth").get<std::vector<std::size_t>>();
  for (const auto& e : j.at("estimates")) {
    EstimateRecord er;
    er.estimator = e.at("estimator").get<std::string>();
    er.detected.n = rec.truth.n;
    er.detected.cps = e.at("change_points").get<std::vector<std::size_t>>();
    er.lambda = detail::num_or(e.at("lambda"), -std::numeric_limits<double>::infinity());
    er.fits = e.at("fits").get<std::size_t>();
    er.unconverged_fits = e.at("unconverged_fits").get<std::size_t>();
    rec.estimates.push_back(std::move(er));
  }
  return rec;
}

inline std::string records_to_jsonl(const std::vector<ReplicationRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

inline std::vector<ReplicationRecord> records_from_jsonl(const std::string& text) {
  std::vector<ReplicationRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(replication_from_json(parse_json(line, "replication record")));
  return out;
}

inline json to_json(const stats::FiveNumber& f) {
  return {{"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
}

inline json to_json(const EstimatorSummary& s) {
  json j{{"estimator", s.estimator}};
  if (s.bias) {
    j["bias"] = *s.bias;
    j["variance"] = *s.variance;
    j["mean_scaled_position"] = *s.mean_scaled_position;
  }
  json hist = json::object();
  for (const auto& [k, c] : s.k_histogram) hist[std::to_string(k)] = c;
  j["k_histogram"] = hist;
  j["modal_k"] = s.modal_k;
  j["mean_k"] = s.mean_k;
  json acc = json::object();
  for (const auto& [m, v] : s.accuracy) acc[std::to_string(m)] = v;
  j["accuracy"] = acc;
  json bins = json::array();
  for (const auto& b : s.bins)
    bins.push_back({{"lo", b.lo},
                    {"hi", b.hi ? json(*b.hi) : json(nullptr)},
                    {"count", b.positions.size()},
                    {"summary", b.summary ? to_json(*b.summary) : json(nullptr)}});
  j["position_bins"] = bins;
  j["unconverged_fits"] = s.unconverged_fits;
  return j;
}

inline json summary_to_json(StudyKind kind, std::size_t replications, const std::vector<EstimatorSummary>& sums) {
  json a = json::array();
  for (const auto& s : sums) a.push_back(to_json(s));
  return {{"schema_version", schema_version}, {"study", to_string(kind)}, {"replications", replications},
          {"estimators", a}};
}

}  // namespace volcp
