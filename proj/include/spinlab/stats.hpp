#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spinlab {

struct Estimate {
  double mean = 0.0;
  double error = 0.0;  // one standard error
  std::size_t count = 0;

  double lo(double z = 1.96) const { return mean - z * error; }
  double hi(double z = 1.96) const { return mean + z * error; }
};

// Mean with standard error for independent samples.
Estimate mean_estimate(std::span<const double> xs);

// Batch-means estimate for a correlated trace; uses `batches` equal blocks
// (the tail that does not fill a block is dropped).
Estimate batch_means(std::span<const double> trace, std::size_t batches = 32);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

// Weighted least squares fit y = a + b x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_error = 0.0;
  double slope_error = 0.0;
  double chi2 = 0.0;
};

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma);

}  // namespace spinlab
