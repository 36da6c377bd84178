#pragma once

#include <aggerr/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace aggerr {

using NodeIndex = std::size_t;
using IndustryIndex = std::size_t;

enum class Direction { In, Out };

inline const char* toString(Direction d) { return d == Direction::In ? "in" : "out"; }

// Monetary flow from supplier to buyer over one period.
struct Edge {
  NodeIndex supplier = 0;
  NodeIndex buyer = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Arc {
  NodeIndex node = 0;
  double weight = 0.0;
};

// Immutable weighted digraph with supplier-major and buyer-major CSR views.
// Edges are kept sorted by (supplier, buyer); the in-arcs of every node are
// therefore sorted by supplier.
class Digraph {
 public:
  Digraph() = default;

  Digraph(std::size_t n, std::vector<Edge> edges, bool allowSelfLoops = false) : n_(n), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return a.supplier != b.supplier ? a.supplier < b.supplier : a.buyer < b.buyer;
    });
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& ed = edges_[e];
      if (ed.supplier >= n_ || ed.buyer >= n_)
        throw InvalidArgument("edge endpoint out of range: (" + std::to_string(ed.supplier) + "," +
                              std::to_string(ed.buyer) + ") with n=" + std::to_string(n_));
      if (!(ed.weight > 0.0) || !std::isfinite(ed.weight))
        throw InvalidArgument("edge weight must be positive and finite: (" + std::to_string(ed.supplier) + "," +
                              std::to_string(ed.buyer) + ")");
      if (!allowSelfLoops && ed.supplier == ed.buyer)
        throw InvalidArgument("self-loop on node " + std::to_string(ed.supplier));
      if (e > 0 && edges_[e - 1].supplier == ed.supplier && edges_[e - 1].buyer == ed.buyer)
        throw InvalidArgument("duplicate edge (" + std::to_string(ed.supplier) + "," + std::to_string(ed.buyer) + ")");
    }

    outOffsets_.assign(n_ + 1, 0);
    inOffsets_.assign(n_ + 1, 0);
    for (const Edge& ed : edges_) {
      ++outOffsets_[ed.supplier + 1];
      ++inOffsets_[ed.buyer + 1];
    }
    for (std::size_t i = 0; i < n_; ++i) {
      outOffsets_[i + 1] += outOffsets_[i];
      inOffsets_[i + 1] += inOffsets_[i];
    }
    outArcs_.resize(edges_.size());
    inArcs_.resize(edges_.size());
    std::vector<std::size_t> outPos(outOffsets_.begin(), outOffsets_.end() - 1);
    std::vector<std::size_t> inPos(inOffsets_.begin(), inOffsets_.end() - 1);
    for (const Edge& ed : edges_) {
      outArcs_[outPos[ed.supplier]++] = Arc{ed.buyer, ed.weight};
      inArcs_[inPos[ed.buyer]++] = Arc{ed.supplier, ed.weight};
    }
  }

  std::size_t nodeCount() const noexcept { return n_; }
  std::size_t edgeCount() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Buyers of i.
  std::span<const Arc> outArcs(NodeIndex i) const {
    return {outArcs_.data() + outOffsets_[i], outOffsets_[i + 1] - outOffsets_[i]};
  }
  // Suppliers of i.
  std::span<const Arc> inArcs(NodeIndex i) const {
    return {inArcs_.data() + inOffsets_[i], inOffsets_[i + 1] - inOffsets_[i]};
  }

  double totalWeight() const noexcept {
    double s = 0.0;
    for (const Edge& e : edges_) s += e.weight;
    return s;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> outOffsets_{0};
  std::vector<std::size_t> inOffsets_{0};
  std::vector<Arc> outArcs_;
  std::vector<Arc> inArcs_;
};

// Firm-level production network: a digraph without self-loops plus one
// industry label per firm and external string ids for firms and industries.
class FirmNetwork {
 public:
  FirmNetwork() = default;

  FirmNetwork(std::vector<std::string> firmIds, std::vector<std::string> industryLabels,
              std::vector<IndustryIndex> industry, std::vector<Edge> edges,
              std::optional<IndustryIndex> residualIndustry = std::nullopt)
      : graph_(firmIds.size(), std::move(edges), /*allowSelfLoops=*/false),
        industry_(std::move(industry)),
        firmIds_(std::move(firmIds)),
        industryLabels_(std::move(industryLabels)),
        residual_(residualIndustry) {
    const std::size_t n = firmIds_.size();
    const std::size_t m = industryLabels_.size();
    if (industry_.size() != n)
      throw InvalidArgument("industry vector has length " + std::to_string(industry_.size()) + ", expected " +
                            std::to_string(n));
    if (m == 0 && n > 0) throw InvalidArgument("network has firms but no industries");
    if (residual_ && *residual_ >= m) throw InvalidArgument("residual industry index out of range");
    members_.assign(m, {});
    for (NodeIndex i = 0; i < n; ++i) {
      if (industry_[i] >= m)
        throw InvalidArgument("firm " + firmIds_[i] + " has industry index " + std::to_string(industry_[i]) +
                              " outside [0," + std::to_string(m) + ")");
      members_[industry_[i]].push_back(i);
    }
    for (NodeIndex i = 0; i < n; ++i) {
      if (!firmIndex_.emplace(firmIds_[i], i).second) throw InvalidArgument("duplicate firm id " + firmIds_[i]);
    }
    for (IndustryIndex k = 0; k < m; ++k) {
      if (!industryIndex_.emplace(industryLabels_[k], k).second)
        throw InvalidArgument("duplicate industry label " + industryLabels_[k]);
    }
  }

  // Firms named "0".."n-1", industries labelled "1".."m".
  static FirmNetwork fromIndices(std::size_t m, std::vector<IndustryIndex> industry, std::vector<Edge> edges) {
    std::vector<std::string> ids(industry.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = std::to_string(i);
    std::vector<std::string> labels(m);
    for (std::size_t k = 0; k < m; ++k) labels[k] = std::to_string(k + 1);
    return FirmNetwork(std::move(ids), std::move(labels), std::move(industry), std::move(edges));
  }

  std::size_t nodeCount() const noexcept { return firmIds_.size(); }
  std::size_t industryCount() const noexcept { return industryLabels_.size(); }
  const Digraph& graph() const noexcept { return graph_; }
  const std::vector<Edge>& edges() const noexcept { return graph_.edges(); }

  IndustryIndex industryOf(NodeIndex i) const { return industry_.at(i); }
  const std::vector<IndustryIndex>& industries() const noexcept { return industry_; }
  const std::vector<NodeIndex>& members(IndustryIndex k) const { return members_.at(k); }

  const std::string& firmId(NodeIndex i) const { return firmIds_.at(i); }
  const std::vector<std::string>& firmIds() const noexcept { return firmIds_; }
  const std::string& industryLabel(IndustryIndex k) const { return industryLabels_.at(k); }
  const std::vector<std::string>& industryLabels() const noexcept { return industryLabels_; }
  std::optional<IndustryIndex> residualIndustry() const noexcept { return residual_; }

  std::optional<NodeIndex> findFirm(const std::string& id) const {
    auto it = firmIndex_.find(id);
    if (it == firmIndex_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<IndustryIndex> findIndustry(const std::string& label) const {
    auto it = industryIndex_.find(label);
    if (it == industryIndex_.end()) return std::nullopt;
    return it->second;
  }

  // Same firms and edges, different industry labelling (e.g. a finer
  // classification used for sampling).
  FirmNetwork relabelled(std::vector<std::string> industryLabels, std::vector<IndustryIndex> industry,
                         std::optional<IndustryIndex> residualIndustry = std::nullopt) const {
    return FirmNetwork(firmIds_, std::move(industryLabels), std::move(industry), graph_.edges(), residualIndustry);
  }

 private:
  Digraph graph_;
  std::vector<IndustryIndex> industry_;
  std::vector<std::string> firmIds_;
  std::vector<std::string> industryLabels_;
  std::optional<IndustryIndex> residual_;
  std::vector<std::vector<NodeIndex>> members_;
  std::unordered_map<std::string, NodeIndex> firmIndex_;
  std::unordered_map<std::string, IndustryIndex> industryIndex_;
};

struct StrengthProfile {
  std::vector<double> sIn;
  std::vector<double> sOut;
  std::vector<std::size_t> kIn;
  std::vector<std::size_t> kOut;

  const std::vector<double>& strength(Direction d) const { return d == Direction::In ? sIn : sOut; }
  const std::vector<std::size_t>& degree(Direction d) const { return d == Direction::In ? kIn : kOut; }
};

inline StrengthProfile strengths(const Digraph& g) {
  const std::size_t n = g.nodeCount();
  StrengthProfile p{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<std::size_t>(n, 0),
                    std::vector<std::size_t>(n, 0)};
  for (NodeIndex i = 0; i < n; ++i) {
    for (const Arc& a : g.outArcs(i)) p.sOut[i] += a.weight;
    for (const Arc& a : g.inArcs(i)) p.sIn[i] += a.weight;
    p.kOut[i] = g.outArcs(i).size();
    p.kIn[i] = g.inArcs(i).size();
  }
  return p;
}

inline StrengthProfile strengths(const FirmNetwork& net) { return strengths(net.graph()); }

// Industry-level production network: dense m x m flow matrix.
class IndustryNetwork {
 public:
  IndustryNetwork() = default;
  IndustryNetwork(std::vector<std::string> labels, std::vector<double> flows, std::vector<double> sIn,
                  std::vector<double> sOut)
      : labels_(std::move(labels)), flows_(std::move(flows)), sIn_(std::move(sIn)), sOut_(std::move(sOut)) {
    const std::size_t m = labels_.size();
    if (flows_.size() != m * m || sIn_.size() != m || sOut_.size() != m)
      throw InvalidArgument("industry network dimensions disagree");
    for (double z : flows_)
      if (z < 0.0 || !std::isfinite(z)) throw InvalidArgument("industry flows must be finite and non-negative");
  }

  std::size_t industryCount() const noexcept { return labels_.size(); }
  double flow(IndustryIndex k, IndustryIndex l) const { return flows_.at(k * labels_.size() + l); }
  const std::vector<double>& flows() const noexcept { return flows_; }
  const std::vector<double>& inStrength() const noexcept { return sIn_; }
  const std::vector<double>& outStrength() const noexcept { return sOut_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  // Sparse view with self-flows kept as self-loops.
  Digraph toDigraph() const {
    const std::size_t m = labels_.size();
    std::vector<Edge> edges;
    for (IndustryIndex k = 0; k < m; ++k)
      for (IndustryIndex l = 0; l < m; ++l)
        if (flow(k, l) > 0.0) edges.push_back({k, l, flow(k, l)});
    return Digraph(m, std::move(edges), /*allowSelfLoops=*/true);
  }

 private:
  std::vector<std::string> labels_;
  std::vector<double> flows_;
  std::vector<double> sIn_;
  std::vector<double> sOut_;
};

inline IndustryNetwork aggregateToIndustry(const FirmNetwork& net) {
  const std::size_t m = net.industryCount();
  std::vector<double> z(m * m, 0.0);
  for (const Edge& e : net.edges()) z[net.industryOf(e.supplier) * m + net.industryOf(e.buyer)] += e.weight;
  const StrengthProfile s = strengths(net);
  std::vector<double> sIn(m, 0.0), sOut(m, 0.0);
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    sIn[net.industryOf(i)] += s.sIn[i];
    sOut[net.industryOf(i)] += s.sOut[i];
  }
  return IndustryNetwork(net.industryLabels(), std::move(z), std::move(sIn), std::move(sOut));
}

// Inclusive degree range; upper == unbounded means [lower, inf).
struct DegreeBin {
  static constexpr std::size_t unbounded = std::numeric_limits<std::size_t>::max();

  std::size_t lower = 1;
  std::size_t upper = unbounded;

  bool contains(std::size_t k) const noexcept { return k >= lower && k <= upper; }

  std::string label() const {
    if (upper == unbounded) return std::to_string(lower) + "+";
    return std::to_string(lower) + "-" + std::to_string(upper);
  }
};

// [1,5], [6,15], [16,35], [36,inf)
inline std::vector<DegreeBin> canonicalDegreeBins() { return {{1, 5}, {6, 15}, {16, 35}, {36, DegreeBin::unbounded}}; }

inline void validateDegreeBins(std::span<const DegreeBin> bins) {
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].lower < 1) throw ConfigError("degree bin " + bins[b].label() + " has lower bound < 1");
    if (bins[b].upper < bins[b].lower) throw ConfigError("degree bin with upper < lower");
    if (b > 0 && bins[b].lower <= bins[b - 1].upper)
      throw ConfigError("degree bins " + bins[b - 1].label() + " and " + bins[b].label() +
                        " overlap or are not sorted");
  }
}

// Index of the bin containing k; none for k = 0 or uncovered k.
inline std::optional<std::size_t> assignDegreeBin(std::size_t k, std::span<const DegreeBin> bins) {
  validateDegreeBins(bins);
  if (k == 0) return std::nullopt;
  for (std::size_t b = 0; b < bins.size(); ++b)
    if (bins[b].contains(k)) return b;
  return std::nullopt;
}

}  // namespace aggerr
