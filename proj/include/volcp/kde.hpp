#pragma once

// Gaussian kernel density estimation with the normal-reference (nrd) bandwidth.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "volcp/error.hpp"
#include "volcp/stats.hpp"

namespace volcp {

/// h = c * min(sd, IQR/1.34) * n^(-1/5), c = 1.06 by default. IQR uses type-7 quantiles.
/// When the IQR collapses to zero but sd does not, sd alone is used.
inline double nrd_bandwidth_sorted(std::span<const double> sorted, double constant = 1.06) {
  const std::size_t n = sorted.size();
  require(n >= 2, ErrorKind::precondition, "bandwidth needs at least two observations");
  const double sd = stats::sd(sorted);
  const double iqr = stats::iqr_sorted(sorted);
  require(sd > 0.0 && std::isfinite(sd), ErrorKind::degenerate_data, "bandwidth undefined for constant data");
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return constant * spread * std::pow(static_cast<double>(n), -0.2);
}

inline double nrd_bandwidth(std::span<const double> data, double constant = 1.06) {
  std::vector<double> s(data.begin(), data.end());
  std::sort(s.begin(), s.end());
  return nrd_bandwidth_sorted(s, constant);
}

class KernelDensity {
 public:
  KernelDensity(std::vector<double> points, double bandwidth) : points_(std::move(points)), h_(bandwidth) {
    require(!points_.empty(), ErrorKind::precondition, "kernel density needs at least one point");
    require(std::isfinite(h_) && h_ > 0.0, ErrorKind::domain, "bandwidth must be > 0");
    for (double p : points_) require(std::isfinite(p), ErrorKind::invalid_input, "kernel centres must be finite");
  }

  /// Bandwidth from the nrd rule.
  static KernelDensity with_nrd(std::vector<double> points, double constant = 1.06) {
    const double h = nrd_bandwidth(points, constant);
    return KernelDensity(std::move(points), h);
  }

  double operator()(double x) const {
    double s = 0.0;
    for (double p : points_) {
      const double u = (x - p) / h_;
      s += std::exp(-0.5 * u * u);
    }
    return s / (static_cast<double>(points_.size()) * h_ * std::sqrt(2.0 * std::numbers::pi));
  }

  std::vector<double> evaluate(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return (*this)(x); });
    return out;
  }

  std::span<const double> points() const { return points_; }
  double bandwidth() const { return h_; }

 private:
  std::vector<double> points_;
  double h_;
};

inline double kde_pdf(const KernelDensity& kd, double x) { return kd(x); }

namespace detail {

// exp(x) for x in [-60, 0]: Cody-Waite reduction by ln2 and a degree-12 Taylor
// polynomial, written branch-free so the caller's loop vectorises. Relative
// error stays within a few ulp.
inline double exp_nonpositive(double x) {
  constexpr double log2e = 1.4426950408889634;
  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  constexpr double shifter = 0x1.8p52;
  const double t = x * log2e + shifter;
  const double k = t - shifter;
  const std::int64_t ki = std::bit_cast<std::int64_t>(t) - std::bit_cast<std::int64_t>(shifter);
  double r = x - k * ln2_hi;
  r = r - k * ln2_lo;
  double p = 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  return std::bit_cast<double>(std::bit_cast<std::int64_t>(p) + (ki << 52));
}

}  // namespace detail

/// Kernel density of the sample evaluated at each of its own (sorted) points:
/// out[i] = (1/(n h)) sum_j phi((x_i - x_j)/h). Pairs further apart than
/// 10 h are skipped; each such term is below e^-50 times the self term, so the
/// result matches full summation to double rounding. Cost O(n * window).
inline void self_density_sorted(std::span<const double> sorted, double h, std::span<double> out) {
  const std::size_t n = sorted.size();
  require(out.size() == n, ErrorKind::precondition, "output span size mismatch");
  require(h > 0.0 && std::isfinite(h), ErrorKind::domain, "bandwidth must be > 0");
  const double* __restrict x = sorted.data();
  double* __restrict s = out.data();
  const double c = -0.5 / (h * h);
  const double cut = 10.0 * h;
  std::fill(s, s + n, 1.0);
  std::size_t end = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    if (end < i + 1) end = i + 1;
    while (end < n && x[end] - xi < cut) ++end;
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t j = i + 1; j < end; ++j) {
      const double d = x[j] - xi;
      const double e = detail::exp_nonpositive(c * d * d);
      acc += e;
      s[j] += e;
    }
    s[i] += acc;
  }
  const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < n; ++i) s[i] *= norm;
}

}  // namespace volcp
