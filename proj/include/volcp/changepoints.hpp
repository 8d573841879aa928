#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "volcp/error.hpp"

namespace volcp {

/// Interior change-points of a series of length n. Segment j covers the
/// 1-based observations cps[j-1]+1 .. cps[j], with cps[-1] = 0 and cps[k] = n.
struct ChangePointSet {
  std::size_t n = 0;
  std::vector<std::size_t> cps;

  std::size_t k() const { return cps.size(); }
  bool empty() const { return cps.empty(); }

  /// Segment bounds as 1-based inclusive [first, last] pairs tiling [1, n].
  std::vector<std::pair<std::size_t, std::size_t>> segments() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t start = 1;
    for (std::size_t c : cps) {
      out.emplace_back(start, c);
      start = c + 1;
    }
    out.emplace_back(start, n);
    return out;
  }

  bool operator==(const ChangePointSet&) const = default;
};

/// Throws unless cps is strictly increasing, interior, and every segment has at least min_seg points.
inline void validate(const ChangePointSet& c, std::size_t min_seg = 1) {
  std::size_t prev = 0;
  for (std::size_t cp : c.cps) {
    require(cp > prev, ErrorKind::invalid_input, "change-points must be strictly increasing and > 0");
    require(cp - prev >= min_seg, ErrorKind::invalid_input, "segment shorter than the minimum length");
    prev = cp;
  }
  require(c.cps.empty() || c.cps.back() < c.n, ErrorKind::invalid_input, "change-point must be < n");
  require(c.n - prev >= min_seg, ErrorKind::invalid_input, "final segment shorter than the minimum length");
}

inline ChangePointSet make_change_points(std::size_t n, std::vector<std::size_t> cps) {
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  ChangePointSet out{n, std::move(cps)};
  validate(out);
  return out;
}

}  // namespace volcp
