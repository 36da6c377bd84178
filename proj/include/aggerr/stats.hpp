#pragma once

#include <aggerr/error.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace aggerr {

struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double p5 = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

// Quantile of ascending data by linear interpolation between order
// statistics at position q * (N - 1).
inline double quantileSorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw UndefinedValue("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline DistributionSummary summarize(std::vector<double> values) {
  if (values.empty()) throw UndefinedValue("summary of an empty sample");
  std::sort(values.begin(), values.end());
  DistributionSummary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  s.p5 = quantileSorted(values, 0.05);
  s.p25 = quantileSorted(values, 0.25);
  s.p50 = quantileSorted(values, 0.50);
  s.p75 = quantileSorted(values, 0.75);
  s.p95 = quantileSorted(values, 0.95);
  return s;
}

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

// Fixed-width bins over [min, max]; the maximum lands in the last bin.
// A constant sample yields one zero-width bin.
inline std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t binCount) {
  if (values.empty()) return {};
  if (binCount == 0) throw ConfigError("histogram needs at least one bin");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  if (hi == lo) return {HistogramBin{lo, hi, values.size()}};
  const double width = (hi - lo) / static_cast<double>(binCount);
  std::vector<HistogramBin> bins(binCount);
  for (std::size_t b = 0; b < binCount; ++b) {
    bins[b].lower = lo + width * static_cast<double>(b);
    bins[b].upper = b + 1 == binCount ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= binCount) b = binCount - 1;
    ++bins[b].count;
  }
  return bins;
}

}  // namespace aggerr
