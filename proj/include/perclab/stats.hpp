#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace perclab {

/// Monte Carlo estimate of a mean.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::string method;

  double z_score(double reference) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit on (log n, log P) over [n_min, n_max].
struct ExponentFit {
  LinearFit fit;
  double n_min = 0.0;
  double n_max = 0.0;
  std::vector<std::pair<double, double>> series;  // (n, P) inside the window
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with weights 1/sigma^2; slope_stderr comes from the
/// weights, not the residual scatter.
LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> sigma);

/// Fits log P against log n for the points with n in [n_min, n_max] and P > 0.
/// Throws std::domain_error when fewer than `min_points` usable points remain.
ExponentFit fit_power_law(std::span<const double> n, std::span<const double> prob,
                          double n_min, double n_max, std::size_t min_points = 4);

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.96);

/// Streaming mean / variance (Welford). Merge is order-sensitive in the last
/// bits, so callers merge in a fixed order.
class RunningStats {
 public:
  void add(double x) noexcept;
  void merge(const RunningStats& other) noexcept;
  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;
  double std_error_of_mean() const noexcept;
  Estimate estimate(std::string method = "sample mean") const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Pairwise (cascade) summation; deterministic for a fixed input order.
double pairwise_sum(std::span<const double> values);

}  // namespace perclab
