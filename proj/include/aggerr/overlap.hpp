#pragma once

#include <aggerr/network.hpp>
#include <aggerr/stats.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aggerr {

enum class Measure { OverlapCoefficient, Jaccard };

inline const char* toString(Measure m) { return m == Measure::OverlapCoefficient ? "oc" : "jaccard"; }

struct ShareEntry {
  IndustryIndex industry = 0;
  double share = 0.0;
};

// A firm's purchases (In) or sales (Out) broken down by the industry of the
// counterpart and normalized to sum to one. Stored sparsely; entries are
// sorted by industry and strictly positive.
class NormalizedIoVector {
 public:
  NormalizedIoVector(NodeIndex firm, Direction direction, std::size_t m, std::vector<ShareEntry> entries)
      : firm_(firm), direction_(direction), m_(m), entries_(std::move(entries)) {}

  NodeIndex firm() const noexcept { return firm_; }
  Direction direction() const noexcept { return direction_; }
  std::size_t industryCount() const noexcept { return m_; }
  const std::vector<ShareEntry>& entries() const noexcept { return entries_; }

  double operator[](IndustryIndex k) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), k,
                               [](const ShareEntry& e, IndustryIndex key) { return e.industry < key; });
    return it != entries_.end() && it->industry == k ? it->share : 0.0;
  }

  std::vector<double> dense() const {
    std::vector<double> v(m_, 0.0);
    for (const auto& e : entries_) v[e.industry] = e.share;
    return v;
  }

  double total() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.share;
    return s;
  }

 private:
  NodeIndex firm_;
  Direction direction_;
  std::size_t m_;
  std::vector<ShareEntry> entries_;
};

// Active-industry mask of a firm; stored as the sorted list of active industries.
class BinaryIoVector {
 public:
  BinaryIoVector(NodeIndex firm, Direction direction, std::size_t m, std::vector<IndustryIndex> active)
      : firm_(firm), direction_(direction), m_(m), active_(std::move(active)) {
    std::sort(active_.begin(), active_.end());
    active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
  }

  NodeIndex firm() const noexcept { return firm_; }
  Direction direction() const noexcept { return direction_; }
  std::size_t industryCount() const noexcept { return m_; }
  const std::vector<IndustryIndex>& active() const noexcept { return active_; }
  bool operator[](IndustryIndex k) const { return std::binary_search(active_.begin(), active_.end(), k); }

 private:
  NodeIndex firm_;
  Direction direction_;
  std::size_t m_;
  std::vector<IndustryIndex> active_;
};

inline NormalizedIoVector normalizedVector(const FirmNetwork& net, NodeIndex i, Direction dir) {
  const auto arcs = dir == Direction::In ? net.graph().inArcs(i) : net.graph().outArcs(i);
  double strength = 0.0;
  for (const Arc& a : arcs) strength += a.weight;
  if (!(strength > 0.0))
    throw UndefinedValue("firm " + net.firmId(i) + " has zero " + toString(dir) + "-strength");

  std::vector<ShareEntry> byIndustry;
  byIndustry.reserve(arcs.size());
  for (const Arc& a : arcs) byIndustry.push_back({net.industryOf(a.node), a.weight});
  std::stable_sort(byIndustry.begin(), byIndustry.end(),
                   [](const ShareEntry& a, const ShareEntry& b) { return a.industry < b.industry; });
  std::vector<ShareEntry> merged;
  for (const auto& e : byIndustry) {
    if (!merged.empty() && merged.back().industry == e.industry)
      merged.back().share += e.share;
    else
      merged.push_back(e);
  }
  for (auto& e : merged) e.share /= strength;
  return NormalizedIoVector(i, dir, net.industryCount(), std::move(merged));
}

inline BinaryIoVector binaryVector(const NormalizedIoVector& v) {
  std::vector<IndustryIndex> active;
  for (const auto& e : v.entries())
    if (e.share > 0.0) active.push_back(e.industry);
  return BinaryIoVector(v.firm(), v.direction(), v.industryCount(), std::move(active));
}

inline BinaryIoVector binaryVector(const FirmNetwork& net, NodeIndex i, Direction dir) {
  return binaryVector(normalizedVector(net, i, dir));
}

namespace detail {

inline void requireNormalized(const NormalizedIoVector& v) {
  if (std::abs(v.total() - 1.0) > 1e-9)
    throw InvalidArgument("overlap coefficient needs 1-normalized vectors (sum=" + std::to_string(v.total()) + ")");
}

// Sum of min over two sorted sparse vectors.
inline double sumOfMins(const std::vector<ShareEntry>& a, const std::vector<ShareEntry>& b) {
  double s = 0.0;
  std::size_t x = 0, y = 0;
  while (x < a.size() && y < b.size()) {
    if (a[x].industry < b[y].industry) {
      ++x;
    } else if (b[y].industry < a[x].industry) {
      ++y;
    } else {
      s += std::min(a[x].share, b[y].share);
      ++x;
      ++y;
    }
  }
  return s;
}

inline std::size_t intersectionSize(const std::vector<IndustryIndex>& a, const std::vector<IndustryIndex>& b) {
  std::size_t n = 0, x = 0, y = 0;
  while (x < a.size() && y < b.size()) {
    if (a[x] < b[y]) {
      ++x;
    } else if (b[y] < a[x]) {
      ++y;
    } else {
      ++n;
      ++x;
      ++y;
    }
  }
  return n;
}

}  // namespace detail

// Shared fraction of two normalized vectors: sum_k min(a_k, b_k). Both
// vectors sum to one, so no denominator is needed.
inline double overlapCoefficient(const NormalizedIoVector& a, const NormalizedIoVector& b) {
  if (a.direction() != b.direction()) throw InvalidArgument("overlap coefficient across directions");
  if (a.industryCount() != b.industryCount()) throw InvalidArgument("overlap coefficient across industry spaces");
  detail::requireNormalized(a);
  detail::requireNormalized(b);
  return std::min(1.0, detail::sumOfMins(a.entries(), b.entries()));
}

inline double jaccardIndex(const BinaryIoVector& a, const BinaryIoVector& b) {
  if (a.direction() != b.direction()) throw InvalidArgument("Jaccard index across directions");
  if (a.industryCount() != b.industryCount()) throw InvalidArgument("Jaccard index across industry spaces");
  if (a.active().empty() && b.active().empty()) throw UndefinedValue("Jaccard index of two empty masks");
  const std::size_t inter = detail::intersectionSize(a.active(), b.active());
  const std::size_t uni = a.active().size() + b.active().size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// Firms of industry k whose degree in the given direction falls in the bin.
inline std::vector<NodeIndex> eligibleFirms(const FirmNetwork& net, const StrengthProfile& s, IndustryIndex k,
                                            const DegreeBin& bin, Direction dir) {
  std::vector<NodeIndex> out;
  const auto& deg = s.degree(dir);
  for (NodeIndex i : net.members(k))
    if (deg[i] > 0 && bin.contains(deg[i])) out.push_back(i);
  return out;
}

// Similarity of every unordered pair {i, j}, i < j, of same-industry,
// same-bin firms, in (i, j) lexicographic order.
inline std::vector<double> pairwiseValues(const FirmNetwork& net, const StrengthProfile& s, IndustryIndex k,
                                          const DegreeBin& bin, Measure measure, Direction dir) {
  const auto firms = eligibleFirms(net, s, k, bin, dir);
  std::vector<NormalizedIoVector> vecs;
  vecs.reserve(firms.size());
  for (NodeIndex i : firms) vecs.push_back(normalizedVector(net, i, dir));
  std::vector<BinaryIoVector> masks;
  if (measure == Measure::Jaccard)
    for (const auto& v : vecs) masks.push_back(binaryVector(v));

  std::vector<double> values;
  values.reserve(firms.size() * (firms.size() > 0 ? firms.size() - 1 : 0) / 2);
  for (std::size_t a = 0; a < firms.size(); ++a)
    for (std::size_t b = a + 1; b < firms.size(); ++b)
      values.push_back(measure == Measure::OverlapCoefficient ? overlapCoefficient(vecs[a], vecs[b])
                                                              : jaccardIndex(masks[a], masks[b]));
  return values;
}

// Summary of pairwise similarities within industry k and one degree bin;
// nullopt marks an industry/bin with fewer than two eligible firms.
inline std::optional<DistributionSummary> pairwiseDistribution(const FirmNetwork& net, IndustryIndex k,
                                                               const DegreeBin& bin, Measure measure, Direction dir) {
  const StrengthProfile s = strengths(net);
  auto values = pairwiseValues(net, s, k, bin, measure, dir);
  if (values.empty()) return std::nullopt;
  return summarize(std::move(values));
}

namespace detail {

using LabelShares = std::vector<std::pair<std::string, double>>;

inline std::optional<LabelShares> sharesByLabel(const FirmNetwork& net, const std::string& firmId, Direction dir) {
  auto i = net.findFirm(firmId);
  if (!i) return std::nullopt;
  const auto arcs = dir == Direction::In ? net.graph().inArcs(*i) : net.graph().outArcs(*i);
  if (arcs.empty()) return std::nullopt;
  auto v = normalizedVector(net, *i, dir);
  LabelShares out;
  for (const auto& e : v.entries()) out.emplace_back(net.industryLabel(e.industry), e.share);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Overlap coefficient between a firm's own normalized vectors in two years.
// Firms are matched by external id, industries by label.
inline double temporalOverlap(const FirmNetwork& current, const FirmNetwork& previous, const std::string& firmId,
                              Direction dir) {
  auto now = detail::sharesByLabel(current, firmId, dir);
  auto before = detail::sharesByLabel(previous, firmId, dir);
  if (!now || !before)
    throw UndefinedValue("firm " + firmId + " lacks a positive " + toString(dir) + "-strength in one of the years");
  double s = 0.0;
  std::size_t x = 0, y = 0;
  while (x < now->size() && y < before->size()) {
    const auto& a = (*now)[x];
    const auto& b = (*before)[y];
    if (a.first < b.first) {
      ++x;
    } else if (b.first < a.first) {
      ++y;
    } else {
      s += std::min(a.second, b.second);
      ++x;
      ++y;
    }
  }
  return std::min(1.0, s);
}

// Fraction of the firm's previous-year active industries still active now.
// A firm missing from the current year has an empty current mask.
inline double retentionProbability(const FirmNetwork& current, const FirmNetwork& previous,
                                   const std::string& firmId, Direction dir) {
  auto before = detail::sharesByLabel(previous, firmId, dir);
  if (!before || before->empty())
    throw UndefinedValue("firm " + firmId + " has no active " + toString(dir) + "-industries in the previous year");
  auto now = detail::sharesByLabel(current, firmId, dir);
  if (!now) return 0.0;
  std::size_t kept = 0, x = 0, y = 0;
  while (x < now->size() && y < before->size()) {
    if ((*now)[x].first < (*before)[y].first) {
      ++x;
    } else if ((*before)[y].first < (*now)[x].first) {
      ++y;
    } else {
      ++kept;
      ++x;
      ++y;
    }
  }
  return static_cast<double>(kept) / static_cast<double>(before->size());
}

}  // namespace aggerr
