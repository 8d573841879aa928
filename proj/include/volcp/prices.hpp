#pragma once

// Price-series ingestion from delimited text and conversion to returns.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "volcp/error.hpp"
#include "volcp/stats.hpp"

namespace volcp {

struct PriceSeries {
  std::vector<std::string> dates;  ///< as written in the source, ascending
  std::vector<double> prices;
  std::vector<std::string> warnings;

  std::size_t size() const { return prices.size(); }
};

struct IngestOptions {
  std::string date_column = "date";
  std::string price_column = "price";
  char delimiter = ',';
  std::string date_format = "%Y-%m-%d";
};

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == delim && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

/// Days since the civil epoch for a date in `format`; false when it does not parse.
inline bool parse_date(const std::string& text, const std::string& format, long long& key) {
  std::tm tm{};
  std::istringstream in(text);
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return false;
  in >> std::ws;
  if (!in.eof()) return false;
  // days_from_civil
  long long y = tm.tm_year + 1900;
  const unsigned m = static_cast<unsigned>(tm.tm_mon + 1), d = static_cast<unsigned>(tm.tm_mday);
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  key = era * 146097 + static_cast<long long>(doe) - 719468;
  key = key * 86400 + tm.tm_hour * 3600 + tm.tm_min * 60 + tm.tm_sec;
  return true;
}

inline bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc{} && p == e && std::isfinite(v);
}

}  // namespace detail

namespace detail {

struct DatedValue {
  long long key;
  std::string date;
  double value;
  std::size_t line;
};

// Reads the date column and one numeric column; sorts by date, rejects duplicates.
inline std::vector<DatedValue> read_dated_column(std::istream& in, const IngestOptions& opt,
                                                 const std::string& value_column, bool positive,
                                                 std::vector<std::string>& warnings) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) break;
  }
  require(!trim(line).empty(), ErrorKind::ingestion, "input is empty");
  if (line.starts_with("\xEF\xBB\xBF")) line = line.substr(3);
  const auto header = split_row(line, opt.delimiter);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::ingestion, "missing column '" + name + "' in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t dc = col(opt.date_column), vc = col(value_column);

  std::vector<DatedValue> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_row(line, opt.delimiter);
    const std::string where = "line " + std::to_string(line_no);
    require(cells.size() > std::max(dc, vc), ErrorKind::ingestion, where + ": too few columns");
    DatedValue r{0, cells[dc], 0.0, line_no};
    require(parse_date(r.date, opt.date_format, r.key), ErrorKind::ingestion,
            where + ": cannot parse date '" + r.date + "' with format '" + opt.date_format + "'");
    require(parse_number(cells[vc], r.value), ErrorKind::ingestion,
            where + ": " + value_column + " '" + cells[vc] + "' is not a number");
    require(!positive || r.value > 0.0, ErrorKind::ingestion, where + ": " + value_column + " must be > 0");
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), ErrorKind::ingestion, "input has a header but no data rows");

  const auto by_key = [](const DatedValue& a, const DatedValue& b) { return a.key < b.key; };
  if (!std::is_sorted(rows.begin(), rows.end(), by_key)) {
    std::stable_sort(rows.begin(), rows.end(), by_key);
    warnings.push_back("dates were not in ascending order; rows were sorted");
  }
  for (std::size_t i = 1; i < rows.size(); ++i)
    require(rows[i].key != rows[i - 1].key, ErrorKind::ingestion,
            "line " + std::to_string(rows[i].line) + ": duplicate date '" + rows[i].date + "'");
  return rows;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::ingestion, "cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// Reads the date and price columns of a delimited file with a header row.
/// Rows are sorted by date (with a warning when the file was not); bad cells
/// are reported with their 1-based line number.
inline PriceSeries ingest_prices(std::istream& in, const IngestOptions& opt = {}) {
  PriceSeries out;
  for (auto& r : detail::read_dated_column(in, opt, opt.price_column, true, out.warnings)) {
    out.dates.push_back(std::move(r.date));
    out.prices.push_back(r.value);
  }
  return out;
}

inline PriceSeries ingest_prices(const std::string& path, const IngestOptions& opt = {}) {
  auto in = detail::open_input(path);
  return ingest_prices(in, opt);
}

/// A dated return column read as is (values may be of any sign).
struct DatedReturns {
  std::vector<std::string> dates;
  std::vector<double> returns;
  std::vector<std::string> warnings;
};

inline DatedReturns ingest_returns(std::istream& in, const IngestOptions& opt, const std::string& return_column) {
  DatedReturns out;
  for (auto& r : detail::read_dated_column(in, opt, return_column, false, out.warnings)) {
    out.dates.push_back(std::move(r.date));
    out.returns.push_back(r.value);
  }
  return out;
}

inline DatedReturns ingest_returns(const std::string& path, const IngestOptions& opt,
                                   const std::string& return_column) {
  auto in = detail::open_input(path);
  return ingest_returns(in, opt, return_column);
}

/// Consecutive weekdays from 2000-01-03 (a Monday) as ISO dates; used to label
/// synthetic series.
inline std::vector<std::string> weekday_dates(std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  long long z = 10959;  // days from 1970-01-01 to 2000-01-03
  int weekday = 0;      // 0 = Monday
  while (out.size() < count) {
    if (weekday < 5) {
      // civil_from_days
      const long long zz = z + 719468;
      const long long era = (zz >= 0 ? zz : zz - 146096) / 146097;
      const unsigned doe = static_cast<unsigned>(zz - era * 146097);
      const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
      const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
      const unsigned mp = (5 * doy + 2) / 153;
      const unsigned d = doy - (153 * mp + 2) / 5 + 1;
      const unsigned m = mp < 10 ? mp + 3 : mp - 9;
      const long long y = static_cast<long long>(yoe) + era * 400 + (m <= 2);
      char buf[32];
      std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", y, m, d);
      out.emplace_back(buf);
    }
    ++z;
    weekday = (weekday + 1) % 7;
  }
  return out;
}

enum class ReturnMode { log_pct, simple_pct };

inline std::string to_string(ReturnMode m) { return m == ReturnMode::log_pct ? "log_pct" : "simple_pct"; }

inline ReturnMode parse_return_mode(const std::string& s) {
  if (s == "log_pct") return ReturnMode::log_pct;
  if (s == "simple_pct") return ReturnMode::simple_pct;
  fail(ErrorKind::config, "unknown return mode '" + s + "' (expected log_pct or simple_pct)");
}

/// Percent returns r_t = 100 ln(P_t/P_{t-1}) or 100 (P_t/P_{t-1} - 1); return t
/// belongs to the date of P_t. Centering subtracts the sample mean.
inline std::vector<double> to_returns(std::span<const double> prices, ReturnMode mode, bool center) {
  require(prices.size() >= 2, ErrorKind::domain, "returns need at least two prices");
  std::vector<double> r(prices.size() - 1);
  for (std::size_t t = 1; t < prices.size(); ++t) {
    require(prices[t] > 0.0 && prices[t - 1] > 0.0, ErrorKind::domain, "prices must be > 0");
    r[t - 1] = mode == ReturnMode::log_pct ? 100.0 * std::log(prices[t] / prices[t - 1])
                                           : 100.0 * (prices[t] / prices[t - 1] - 1.0);
  }
  if (center) {
    const double m = stats::mean(r);
    for (double& v : r) v -= m;
  }
  return r;
}

}  // namespace volcp
