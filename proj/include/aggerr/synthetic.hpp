#pragma once

#include <aggerr/network.hpp>
#include <aggerr/rng.hpp>
#include <aggerr/shock.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace aggerr {

enum class Topology { PowerLaw, Chain };

struct SyntheticNetworkSpec {
  std::size_t n = 1000;
  std::size_t m = 20;
  Topology topology = Topology::PowerLaw;
  double degreeExponent = 2.1;  // out-degree tail, P(d) ~ d^-exponent
  std::size_t minDegree = 1;
  double weightLogMean = 0.0;
  double weightLogSd = 1.5;
  double industrySizeExponent = 1.0;  // industry k has share ~ (k+1)^-exponent
  double sinkFraction = 0.3;          // firms without business buyers
  std::uint64_t seed = 1;
};

namespace detail {

// Index drawn with probability proportional to weights, given their prefix sums.
inline std::size_t drawWeighted(const std::vector<double>& cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

inline std::vector<double> prefixSums(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = (s += w[i]);
  return c;
}

// Pareto-tailed integer >= lower.
inline std::size_t paretoInteger(Rng& rng, double lower, double exponent) {
  const double u = uniform01(rng);
  const double x = lower * std::pow(1.0 - u, -1.0 / (exponent - 1.0));
  return x >= 1e15 ? static_cast<std::size_t>(1e15) : static_cast<std::size_t>(std::floor(x));
}

}  // namespace detail

// Random firm network with heavy-tailed out-degrees, heavy-tailed buyer
// popularity and log-normal weights. A share of firms (sinks) sells to no
// other firm. Every industry gets at least one firm.
inline FirmNetwork generateNetwork(const SyntheticNetworkSpec& spec) {
  if (spec.m == 0 || spec.n < spec.m) throw ConfigError("synthetic network needs n >= m >= 1");
  if (spec.topology == Topology::PowerLaw) {
    if (spec.minDegree == 0) throw ConfigError("minimum degree must be at least 1");
    if (spec.minDegree >= spec.n) throw ConfigError("minimum degree must be below n");
    if (!(spec.degreeExponent > 1.0)) throw ConfigError("degree exponent must exceed 1");
  }
  if (!(spec.weightLogSd >= 0.0)) throw ConfigError("weight log-sd must be non-negative");
  if (!(spec.sinkFraction >= 0.0 && spec.sinkFraction < 1.0)) throw ConfigError("sink fraction must be in [0,1)");

  const std::size_t n = spec.n;
  Rng rng = makeRng(spec.seed, {0});
  std::lognormal_distribution<double> weight(spec.weightLogMean, spec.weightLogSd);

  std::vector<IndustryIndex> industry(n);
  std::vector<Edge> edges;
  if (spec.topology == Topology::Chain) {
    for (NodeIndex i = 0; i < n; ++i) industry[i] = i % spec.m;
    for (NodeIndex i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, weight(rng)});
    return FirmNetwork::fromIndices(spec.m, std::move(industry), std::move(edges));
  }

  std::vector<double> share(spec.m);
  for (std::size_t k = 0; k < spec.m; ++k) share[k] = std::pow(static_cast<double>(k + 1), -spec.industrySizeExponent);
  const auto shareCum = detail::prefixSums(share);
  for (NodeIndex i = 0; i < n; ++i) industry[i] = i < spec.m ? i : detail::drawWeighted(shareCum, rng);

  std::vector<double> popularity(n);
  for (NodeIndex j = 0; j < n; ++j)
    popularity[j] = static_cast<double>(std::min<std::size_t>(detail::paretoInteger(rng, 1.0, spec.degreeExponent), n));
  const auto popCum = detail::prefixSums(popularity);

  Rng sinkRng = makeRng(spec.seed, {3});
  std::vector<unsigned char> used(n, 0);
  std::vector<NodeIndex> buyers;
  for (NodeIndex i = 0; i < n; ++i) {
    if (uniform01(sinkRng) < spec.sinkFraction) continue;
    const std::size_t d = std::min(detail::paretoInteger(rng, static_cast<double>(spec.minDegree), spec.degreeExponent), n - 1);
    buyers.clear();
    used[i] = 1;
    for (std::size_t attempt = 0; buyers.size() < d && attempt < 20 * d; ++attempt) {
      const NodeIndex j = detail::drawWeighted(popCum, rng);
      if (used[j]) continue;
      used[j] = 1;
      buyers.push_back(j);
    }
    for (NodeIndex j = 0; buyers.size() < d && j < n; ++j) {
      const NodeIndex c = (i + 1 + j) % n;
      if (used[c]) continue;
      used[c] = 1;
      buyers.push_back(c);
    }
    used[i] = 0;
    std::sort(buyers.begin(), buyers.end());
    for (NodeIndex j : buyers) {
      used[j] = 0;
      edges.push_back({i, j, weight(rng)});
    }
  }
  return FirmNetwork::fromIndices(spec.m, std::move(industry), std::move(edges));
}

struct SyntheticEmploymentSpec {
  double unshockedFraction = 0.4;
  double missingFraction = 0.0;
  std::uint64_t seed = 1;
};

// January / May head counts for every firm. Shocked firms lose a skewed
// fraction of staff; a share of firms has May missing.
inline std::vector<EmploymentRecord> generateEmployment(const FirmNetwork& net, const SyntheticEmploymentSpec& spec) {
  Rng rng = makeRng(spec.seed, {1});
  std::lognormal_distribution<double> size(3.0, 1.0);
  std::vector<EmploymentRecord> out;
  out.reserve(net.nodeCount());
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    const auto jan = static_cast<std::int64_t>(1.0 + std::floor(size(rng)));
    const double u = uniform01(rng);
    const double zeta = u < spec.unshockedFraction ? 0.0 : std::pow(uniform01(rng), 2.0);
    const auto may = static_cast<std::int64_t>(std::llround(static_cast<double>(jan) * (1.0 - zeta)));
    EmploymentRecord r{net.firmId(i), jan, may};
    if (uniform01(rng) < spec.missingFraction) r.eMay.reset();
    out.push_back(std::move(r));
  }
  return out;
}

// Firm shock with a share of unshocked firms and skewed zeta elsewhere.
inline FirmShock randomShock(std::size_t n, std::uint64_t seed, double unshockedFraction = 0.4) {
  Rng rng = makeRng(seed, {2});
  std::vector<double> zeta(n, 0.0);
  for (auto& z : zeta)
    if (uniform01(rng) >= unshockedFraction) z = std::pow(uniform01(rng), 2.0);
  return FirmShock::fromZeta(std::move(zeta));
}

}  // namespace aggerr
