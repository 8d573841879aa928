// volcp: volatility change-point detection, simulation and Monte-Carlo studies.
//
//   volcp detect   --input prices.csv --output report.json [options]
//   volcp simulate --output returns.csv [--truth truth.json] [options]
//   volcp bench    --config study.json --output-dir results/ [options]
//   volcp config show [detect|simulate|bench] [--config file]
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "volcp/serialize.hpp"
#include "volcp/volcp.hpp"

namespace fs = std::filesystem;
using namespace volcp;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, numerical = 3 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return usage;
    case ErrorKind::numerical: return numerical;
    default: return data;
  }
}

// Rethrows any library error raised while validating user configuration as a config error.
template <class F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    fail(ErrorKind::config, e.what());
  }
}

json load_json_file(const std::string& path) { return parse_json(read_file(path), path); }

// ---------------------------------------------------------------- shared estimator flags

struct EstimatorFlags {
  std::optional<std::string> estimator, dist, model, penalty;
  std::optional<double> penalty_value, penalty_multiplier, bandwidth;
  std::optional<std::size_t> min_seg, step_length, stride;
  std::optional<std::uint64_t> seed;
  bool no_cache = false;

  void add(CLI::App& app) {
    app.add_option("--estimator", estimator, "qmle or smle")->check(CLI::IsMember({"qmle", "smle"}));
    app.add_option("--dist", dist, "QMLE innovation density: gaussian, ged:<nu>, t:<df>, optional :skew=<xi>");
    app.add_option("--model", model, "garch, egarch or gjr")->check(CLI::IsMember({"garch", "egarch", "gjr"}));
    app.add_option("--penalty", penalty, "sic, aic or custom")->check(CLI::IsMember({"sic", "aic", "custom"}));
    app.add_option("--penalty-value", penalty_value, "threshold for --penalty custom");
    app.add_option("--penalty-multiplier", penalty_multiplier, "scales the penalty");
    app.add_option("--min-seg", min_seg, "minimum segment length");
    app.add_option("--step-length", step_length, "sub-intervals at most this long are not split further");
    app.add_option("--stride", stride, "candidate split spacing (default depends on n)");
    app.add_option("--bandwidth", bandwidth, "fixed SMLE kernel bandwidth instead of the nrd rule");
    app.add_option("--seed", seed, "seed of the optimizer restart perturbations");
    app.add_flag("--no-cache", no_cache, "refit every segment instead of reusing fits");
  }

  void apply_estimator(EstimatorSpec& e) const {
    if (estimator) e.method = parse_method(*estimator);
    if (model) e.model = parse_model(*model);
    if (dist) e.qmle_dist = parse_dist(*dist);
    if (bandwidth) e.options.bandwidth = *bandwidth;
    if (seed) e.options.seed = *seed;
  }

  void apply_search(SegmentationConfig& c) const {
    if (penalty) c.penalty.kind = parse_penalty(*penalty);
    if (penalty_value) c.penalty.custom_value = *penalty_value;
    if (penalty_multiplier) c.penalty.multiplier = *penalty_multiplier;
    if (min_seg) c.min_seg = *min_seg;
    if (step_length) c.step_length = *step_length;
    if (stride) c.candidate_stride = *stride;
    if (no_cache) c.cache_costs = false;
  }
};

// ---------------------------------------------------------------- detect

struct DetectFlags {
  std::string input, output = "volcp_report.json", config;
  std::optional<std::string> date_column, price_column, return_column, delimiter, date_format, returns_mode;
  bool no_center = false;
  EstimatorFlags est;
};

DetectConfig detect_config(const DetectFlags& f) {
  return as_config([&] {
    DetectConfig c = f.config.empty() ? DetectConfig{} : detect_config_from_json(load_json_file(f.config));
    if (f.date_column) c.ingest.date_column = *f.date_column;
    if (f.price_column) c.ingest.price_column = *f.price_column;
    if (f.return_column) c.return_column = *f.return_column;
    if (f.delimiter) {
      require(f.delimiter->size() == 1 || *f.delimiter == "\\t", ErrorKind::config,
              "--delimiter must be a single character");
      c.ingest.delimiter = *f.delimiter == "\\t" ? '\t' : (*f.delimiter)[0];
    }
    if (f.date_format) c.ingest.date_format = *f.date_format;
    if (f.returns_mode) c.returns = parse_return_mode(*f.returns_mode);
    if (f.no_center) c.center = false;
    f.est.apply_estimator(c.segmentation.estimator);
    f.est.apply_search(c.segmentation);
    validate(c.segmentation);
    return c;
  });
}

int run_detect(const DetectFlags& f) {
  const DetectConfig cfg = detect_config(f);

  std::vector<double> returns;
  std::vector<std::string> dates;  // dates[t-1] is the date of return t
  std::vector<std::string> warnings;
  std::size_t rows = 0;
  if (cfg.return_column) {
    auto r = ingest_returns(f.input, cfg.ingest, *cfg.return_column);
    rows = r.returns.size();
    returns = std::move(r.returns);
    if (cfg.center) {
      const double m = stats::mean(returns);
      for (double& v : returns) v -= m;
    }
    dates = std::move(r.dates);
    warnings = std::move(r.warnings);
  } else {
    auto p = ingest_prices(f.input, cfg.ingest);
    rows = p.size();
    returns = to_returns(p.prices, cfg.returns, cfg.center);
    dates.assign(p.dates.begin() + 1, p.dates.end());
    warnings = std::move(p.warnings);
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  const std::size_t n = returns.size();
  const auto res = binary_segmentation_detailed(returns, cfg.segmentation);

  json cps = json::array();
  for (std::size_t cp : res.change_points.cps) cps.push_back({{"index", cp}, {"date", dates[cp - 1]}});
  json segs = json::array();
  const auto bounds = res.change_points.segments();
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const auto [a, b] = bounds[i];
    json s{{"first", a}, {"last", b}, {"first_date", dates[a - 1]}, {"last_date", dates[b - 1]}};
    if (i < res.segment_fits.size()) s["fit"] = to_json(res.segment_fits[i]);
    segs.push_back(s);
  }
  json trace = json::array();
  for (const auto& rec : res.trace) {
    json t{{"first", rec.first}, {"last", rec.last}, {"candidates", rec.decision.candidates},
           {"lambda", detail::num(rec.decision.lambda)}, {"accepted", rec.decision.accepted}};
    if (rec.decision.has_candidate()) t["best_split"] = rec.first + rec.decision.tau - 1;
    trace.push_back(t);
  }

  json report{
      {"schema_version", schema_version},
      {"command", "detect"},
      {"input",
       {{"file", f.input},
        {"rows", rows},
        {"n_returns", n},
        {"first_date", dates.empty() ? json(nullptr) : json(dates.front())},
        {"last_date", dates.empty() ? json(nullptr) : json(dates.back())},
        {"warnings", warnings}}},
      {"config", to_json(cfg, n)},
      {"conventions",
       {{"indices", "1-based positions in the return series"},
        {"change_point", "last observation of the left segment"},
        {"date", cfg.return_column ? "date of the return's row" : "date of the later price of each return"}}},
      {"rejection_threshold", res.threshold},
      {"change_points", cps},
      {"segments", segs},
      {"total_penalized_cost", detail::num(res.total_penalized_cost)},
      {"search", {{"fits", res.fits_performed}, {"unconverged_fits", res.unconverged_fits}, {"splits", trace}}}};
  atomic_write(f.output, report.dump(2) + "\n");

  std::cout << "n = " << n << " returns";
  if (!dates.empty()) std::cout << " (" << dates.front() << " .. " << dates.back() << ")";
  std::cout << ", estimator " << cfg.segmentation.estimator.label() << ", threshold "
            << format_double(res.threshold) << "\n";
  std::cout << res.change_points.k() << " change-point(s)";
  for (std::size_t cp : res.change_points.cps) std::cout << "  " << cp << " (" << dates[cp - 1] << ")";
  std::cout << "\nreport written to " << f.output << "\n";
  if (res.unconverged_fits)
    std::cerr << "warning: " << res.unconverged_fits << " segment fit(s) stopped before converging\n";
  return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string output, truth, config, design = "null";
  std::optional<std::size_t> n, burn_in;
  std::optional<std::string> dist;
  std::optional<std::uint64_t> seed;
};

std::vector<DgpSegmentSpec> design_segments(const std::string& design, std::size_t n) {
  const auto g = InnovationDist::gaussian();
  if (design == "null") return {{dgp1(), n, g}};
  if (design == "single") return {{dgp1(), n / 2, g}, {dgp2(), n - n / 2, g}};
  if (design == "multi") return {{dgp1(), n / 2, g}, {dgp2(), n / 4, g}, {dgp3(), n - n / 2 - n / 4, g}};
  fail(ErrorKind::config, "unknown design '" + design + "'");
}

SimulateConfig simulate_config(const SimulateFlags& f) {
  return as_config([&] {
    SimulateConfig c;
    if (!f.config.empty()) {
      c = simulate_config_from_json(load_json_file(f.config));
    } else {
      const std::size_t n = f.n.value_or(f.design == "null" ? 1000 : 2000);
      c.dgp = design_segments(f.design, n);
    }
    if (f.dist) c.dist = parse_dist(*f.dist);
    if (f.seed) c.seed = *f.seed;
    if (f.burn_in) c.simulation.burn_in = *f.burn_in;
    for (const auto& s : effective_dgp(c)) {
      require(s.length >= 1, ErrorKind::config, "every segment needs length >= 1");
      validate(s.params);
      validate(s.dist);
    }
    return c;
  });
}

int run_simulate(SimulateFlags f) {
  if (!f.config.empty() && f.n) fail(ErrorKind::config, "--n cannot be combined with --config");
  const SimulateConfig cfg = simulate_config(f);
  const auto segs = effective_dgp(cfg);
  const auto sim = simulate(segs, cfg.seed, cfg.simulation);
  const auto dates = weekday_dates(sim.returns.size());

  std::string csv = "date,index,return,price,sigma_sq\n";
  double log_price = std::log(100.0);
  for (std::size_t t = 0; t < sim.returns.size(); ++t) {
    log_price += sim.returns[t] / 100.0;
    csv += dates[t] + "," + std::to_string(t + 1) + "," + format_double(sim.returns[t]) + "," +
           format_double(std::exp(log_price)) + "," + format_double(sim.volatility.sigma_sq[t]) + "\n";
  }

  json seg = json::array();
  std::size_t first = 1;
  for (const auto& s : segs) {
    json j = to_json(s);
    j["first"] = first;
    j["last"] = first + s.length - 1;
    first += s.length;
    seg.push_back(j);
  }
  json truth{{"schema_version", schema_version},
             {"command", "simulate"},
             {"seed", cfg.seed},
             {"burn_in", cfg.simulation.burn_in},
             {"n", sim.truth.n},
             {"change_points", sim.truth.cps},
             {"segments", seg},
             {"config", to_json(cfg)}};

  if (f.truth.empty()) f.truth = fs::path(f.output).replace_extension(".truth.json").string();
  atomic_write(f.output, csv);
  atomic_write(f.truth, truth.dump(2) + "\n");
  std::cout << "simulated " << sim.returns.size() << " returns (seed " << cfg.seed << "), true change-points:";
  for (std::size_t cp : sim.truth.cps) std::cout << " " << cp;
  std::cout << "\nwrote " << f.output << " and " << f.truth << "\n";
  return ok;
}

// ---------------------------------------------------------------- bench

struct BenchFlags {
  std::string config, output_dir;
  std::optional<std::size_t> replications, stride;
  std::optional<std::uint64_t> base_seed;
  std::optional<unsigned> workers;
  bool quiet = false;
};

BenchConfig bench_config(const BenchFlags& f) {
  return as_config([&] {
    BenchConfig b = f.config.empty() ? default_bench_config() : bench_config_from_json(load_json_file(f.config));
    if (f.replications) b.study.replications = *f.replications;
    if (f.base_seed) b.study.base_seed = *f.base_seed;
    if (f.workers) b.study.workers = *f.workers;
    if (f.stride) b.study.seg_config.candidate_stride = *f.stride;
    validate(b.study);
    if (b.kind == StudyKind::single_cp)
      require(b.study.dgp.size() == 2, ErrorKind::config, "single_cp study needs exactly two DGP segments");
    return b;
  });
}

std::string opt_num(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

int run_bench(const BenchFlags& f) {
  const BenchConfig cfg = bench_config(f);
  const auto& study = cfg.study;
  const auto start = std::chrono::steady_clock::now();
  std::size_t done = 0;
  auto records = run_replications(study, [&](const ReplicationRecord& r) {
    ++done;
    if (f.quiet) return;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "[" << done << "/" << study.replications << "] replication " << r.replication;
    for (const auto& e : r.estimates) {
      std::cerr << "  " << e.estimator << ":";
      for (std::size_t cp : e.detected.cps) std::cerr << " " << cp;
      if (e.detected.empty()) std::cerr << " -";
    }
    std::cerr << "  (" << static_cast<long>(secs) << " s)\n";
  });
  const auto summaries =
      aggregate(cfg.kind, records, estimator_labels(study), study.accuracy_bands, study.bin_edges);

  const fs::path dir = f.output_dir;
  std::string hist = "estimator,k,count\n";
  std::string bins = "estimator,bin_lo,bin_hi,count,min,q1,median,q3,max\n";
  for (const auto& s : summaries) {
    for (const auto& [k, c] : s.k_histogram) hist += s.estimator + "," + std::to_string(k) + "," + std::to_string(c) + "\n";
    for (const auto& b : s.bins) {
      bins += s.estimator + "," + std::to_string(b.lo) + "," + (b.hi ? std::to_string(*b.hi) : "") + "," +
              std::to_string(b.positions.size());
      if (b.summary)
        bins += "," + format_double(b.summary->min) + "," + format_double(b.summary->q1) + "," +
                format_double(b.summary->median) + "," + format_double(b.summary->q3) + "," +
                format_double(b.summary->max);
      else
        bins += ",,,,,";
      bins += "\n";
    }
  }
  std::string positions = "replication,estimator,change_point,scaled_position\n";
  for (const auto& r : records)
    for (const auto& e : r.estimates)
      for (std::size_t cp : e.detected.cps)
        positions += std::to_string(r.replication) + "," + e.estimator + "," + std::to_string(cp) + "," +
                     format_double(static_cast<double>(cp) / static_cast<double>(r.truth.n)) + "\n";

  atomic_write(dir / "config.json", to_json(cfg).dump(2) + "\n");
  atomic_write(dir / "replications.jsonl", records_to_jsonl(records));
  atomic_write(dir / "summary.json", summary_to_json(cfg.kind, records.size(), summaries).dump(2) + "\n");
  atomic_write(dir / "k_histogram.csv", hist);
  atomic_write(dir / "position_bins.csv", bins);
  atomic_write(dir / "positions.csv", positions);

  std::cout << to_string(cfg.kind) << " study, " << records.size() << " replication(s), n = " << total_length(study)
            << "\n";
  for (const auto& s : summaries) {
    std::cout << "  " << s.estimator << ":";
    if (s.bias)
      std::cout << " bias " << format_double(*s.bias) << ", variance " << format_double(*s.variance) << ";";
    std::cout << " modal k " << s.modal_k << " [";
    bool first = true;
    for (const auto& [k, c] : s.k_histogram) {
      std::cout << (first ? "" : " ") << "k=" << k << ":" << c;
      first = false;
    }
    std::cout << "]";
    for (const auto& [m, v] : s.accuracy) std::cout << " acc" << m << " " << format_double(v);
    std::cout << "\n";
  }
  std::cout << "results written to " << dir.string() << "\n";
  return ok;
}

// ---------------------------------------------------------------- config show

int run_config_show(const std::string& what, const std::string& path) {
  json out;
  if (what == "detect") {
    DetectFlags f;
    f.config = path;
    out = to_json(detect_config(f));
  } else if (what == "simulate") {
    SimulateFlags f;
    f.config = path;
    out = to_json(simulate_config(f));
  } else if (what == "bench") {
    BenchFlags f;
    f.config = path;
    out = to_json(bench_config(f));
  } else {
    require(path.empty(), ErrorKind::config, "--config needs a command name (detect, simulate or bench)");
    out = {{"detect", to_json(DetectConfig{})},
           {"simulate", to_json(SimulateConfig{})},
           {"bench", to_json(default_bench_config())}};
  }
  std::cout << out.dump(2) << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volatility change-point detection with semiparametric GARCH likelihoods"};
  app.require_subcommand(1);

  DetectFlags df;
  auto* detect = app.add_subcommand("detect", "detect volatility change-points in a price or return series");
  detect->add_option("-i,--input", df.input, "delimited text file with a header row")->required();
  detect->add_option("-o,--output", df.output, "report path (JSON)");
  detect->add_option("-c,--config", df.config, "JSON configuration; flags override it");
  detect->add_option("--date-column", df.date_column, "date column name (default date)");
  detect->add_option("--price-column", df.price_column, "price column name (default price)");
  detect->add_option("--return-column", df.return_column, "read returns from this column instead of prices");
  detect->add_option("--delimiter", df.delimiter, "field delimiter (default ,; \\t for tab)");
  detect->add_option("--date-format", df.date_format, "strptime-style date format (default %Y-%m-%d)");
  detect->add_option("--returns", df.returns_mode, "log_pct or simple_pct")
      ->check(CLI::IsMember({"log_pct", "simple_pct"}));
  detect->add_flag("--no-center", df.no_center, "keep the sample mean in the returns");
  df.est.add(*detect);

  SimulateFlags sf;
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate a piecewise GARCH return series");
  simulate_cmd->add_option("-o,--output", sf.output, "returns CSV path")->required();
  simulate_cmd->add_option("--truth", sf.truth, "truth sidecar path (default <output>.truth.json)");
  simulate_cmd->add_option("-c,--config", sf.config, "JSON configuration with a dgp segment list");
  simulate_cmd->add_option("--design", sf.design, "null, single or multi (ignored with --config)")
      ->check(CLI::IsMember({"null", "single", "multi"}));
  simulate_cmd->add_option("-n,--n", sf.n, "total length for --design");
  simulate_cmd->add_option("--dist", sf.dist, "innovation distribution for every segment");
  simulate_cmd->add_option("--seed", sf.seed, "random seed");
  simulate_cmd->add_option("--burn-in", sf.burn_in, "presample draws discarded");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "run a Monte-Carlo change-point study");
  bench->add_option("-c,--config", bf.config, "JSON study configuration");
  bench->add_option("-o,--output-dir", bf.output_dir, "directory for result files")->required();
  bench->add_option("-B,--replications", bf.replications, "number of replications");
  bench->add_option("--base-seed", bf.base_seed, "replication r uses seed base_seed + r");
  bench->add_option("--workers", bf.workers, "parallel workers (0: one per hardware thread)");
  bench->add_option("--stride", bf.stride, "candidate split spacing");
  bench->add_flag("-q,--quiet", bf.quiet, "no per-replication progress");

  std::string show_what, show_config;
  auto* config = app.add_subcommand("config", "configuration utilities");
  config->require_subcommand(1);
  auto* show = config->add_subcommand("show", "print the effective configuration with all defaults");
  show->add_option("command", show_what, "detect, simulate or bench (default: all)")
      ->check(CLI::IsMember({"detect", "simulate", "bench"}));
  show->add_option("-c,--config", show_config, "configuration file to resolve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (detect->parsed()) return run_detect(df);
    if (simulate_cmd->parsed()) return run_simulate(sf);
    if (bench->parsed()) return run_bench(bf);
    if (show->parsed()) return run_config_show(show_what, show_config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: configuration: " << e.what() << "\n";
    return usage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return data;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical;
  }
  return usage;
}
