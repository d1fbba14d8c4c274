#include "spinlab/stats.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spinlab {

Estimate mean_estimate(std::span<const double> xs) {
  Estimate e;
  e.count = xs.size();
  if (xs.empty()) return e;
  e.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return e;
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  const double n = static_cast<double>(xs.size());
  e.error = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

Estimate batch_means(std::span<const double> trace, std::size_t batches) {
  if (batches < 2) throw std::invalid_argument("batch_means: need at least two batches");
  const std::size_t len = trace.size() / batches;
  if (len == 0) throw std::invalid_argument("batch_means: trace shorter than batch count");
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += trace[b * len + i];
    means[b] = s / static_cast<double>(len);
  }
  Estimate e = mean_estimate(means);
  e.count = len * batches;
  return e;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma) {
  if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
    throw std::invalid_argument("weighted_line_fit: need >= 2 matched points");
  double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(sigma[i] > 0.0)) throw std::invalid_argument("weighted_line_fit: sigma must be positive");
    const double w = 1.0 / (sigma[i] * sigma[i]);
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  if (det <= 0.0) throw std::invalid_argument("weighted_line_fit: degenerate abscissae");
  LineFit f;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.slope = (s * sxy - sx * sy) / det;
  f.intercept_error = std::sqrt(sxx / det);
  f.slope_error = std::sqrt(s / det);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - f.intercept - f.slope * x[i]) / sigma[i];
    f.chi2 += r * r;
  }
  return f;
}

}  // namespace spinlab
