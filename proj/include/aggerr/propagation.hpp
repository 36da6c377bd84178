#pragma once

#include <aggerr/network.hpp>
#include <aggerr/shock.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace aggerr {

enum class InputClass { Essential, NonEssential };
enum class ProductionMode { Glpf, Linear };

inline const char* toString(ProductionMode m) { return m == ProductionMode::Glpf ? "glpf" : "linear"; }

// Essential / non-essential class of every (producer industry, input
// industry) pair; pairs not listed fall back to the default class.
class EssentialityTable {
 public:
  explicit EssentialityTable(InputClass defaultClass = InputClass::Essential) : default_(defaultClass) {}

  void set(IndustryIndex producer, IndustryIndex input, InputClass c) { entries_[{producer, input}] = c; }

  InputClass classify(IndustryIndex producer, IndustryIndex input) const {
    auto it = entries_.find({producer, input});
    return it == entries_.end() ? default_ : it->second;
  }

  InputClass defaultClass() const noexcept { return default_; }
  std::size_t size() const noexcept { return entries_.size(); }

  bool allEssential() const {
    if (default_ != InputClass::Essential) return false;
    for (const auto& [key, c] : entries_)
      if (c != InputClass::Essential) return false;
    return true;
  }

 private:
  InputClass default_;
  std::map<std::pair<IndustryIndex, IndustryIndex>, InputClass> entries_;
};

// Inputs of one node bought from one supplier industry.
struct InputGroup {
  IndustryIndex industry = 0;
  bool essential = true;
  double flow = 0.0;  // Pi_ik, baseline purchases from that industry
  std::size_t arcBegin = 0;
  std::size_t arcEnd = 0;
};

// Generalized Leontief production functions calibrated on a network at its
// baseline: x0 = out-strength, essential coefficients alpha_ik = Pi_ik / x0,
// beta = max(0, 1 - sum_ne Pi_ik / x0) and the linear slope chosen so that
// full non-essential inputs restore x0. Nodes with x0 = 0 are pass-through.
class GlpfCalibration {
 public:
  std::size_t nodeCount() const noexcept { return x0_.size(); }
  ProductionMode mode() const noexcept { return mode_; }

  double baselineOutput(NodeIndex i) const { return x0_[i]; }
  const std::vector<double>& baselineOutputs() const noexcept { return x0_; }
  bool passThrough(NodeIndex i) const { return !(x0_[i] > 0.0); }
  double beta(NodeIndex i) const { return 1.0 - nonEssentialShare_[i]; }

  // Slope normalizer of the non-essential term; 0 when there is none.
  double alphaLinear(NodeIndex i) const {
    if (nonEssentialFlow_[i] == 0.0 || passThrough(i)) return 0.0;
    return nonEssentialFlow_[i] / (nonEssentialShare_[i] * x0_[i]);
  }
  double nonEssentialFlow(NodeIndex i) const { return nonEssentialFlow_[i]; }

  std::span<const InputGroup> inputGroups(NodeIndex i) const {
    return {groups_.data() + groupOffsets_[i], groupOffsets_[i + 1] - groupOffsets_[i]};
  }
  std::span<const Arc> inputArcs(const InputGroup& g) const { return {inArcs_.data() + g.arcBegin, g.arcEnd - g.arcBegin}; }
  std::span<const Arc> outputArcs(NodeIndex i) const {
    return {outArcs_.data() + outOffsets_[i], outOffsets_[i + 1] - outOffsets_[i]};
  }

  // alpha_ik for an essential input industry, nullopt when k is not an
  // essential input of i.
  std::optional<double> essentialCoefficient(NodeIndex i, IndustryIndex k) const {
    if (passThrough(i)) return std::nullopt;
    for (const auto& g : inputGroups(i))
      if (g.industry == k && g.essential) return g.flow / x0_[i];
    return std::nullopt;
  }

 private:
  friend GlpfCalibration calibrateGlpf(const Digraph&, std::span<const IndustryIndex>, const EssentialityTable&,
                                       ProductionMode);

  ProductionMode mode_ = ProductionMode::Glpf;
  std::vector<double> x0_;
  std::vector<double> nonEssentialFlow_;
  std::vector<double> nonEssentialShare_;  // 1 - beta
  std::vector<std::size_t> groupOffsets_{0};
  std::vector<InputGroup> groups_;
  std::vector<Arc> inArcs_;
  std::vector<std::size_t> outOffsets_{0};
  std::vector<Arc> outArcs_;
};

// `labels` assigns each node the industry used for essentiality lookups.
inline GlpfCalibration calibrateGlpf(const Digraph& g, std::span<const IndustryIndex> labels,
                                     const EssentialityTable& ess, ProductionMode mode) {
  const std::size_t n = g.nodeCount();
  if (labels.size() != n) throw InvalidArgument("label vector does not match the network");
  GlpfCalibration cal;
  cal.mode_ = mode;
  cal.x0_.assign(n, 0.0);
  cal.nonEssentialFlow_.assign(n, 0.0);
  cal.nonEssentialShare_.assign(n, 0.0);
  cal.groupOffsets_.assign(1, 0);
  cal.outOffsets_.assign(1, 0);

  std::vector<Arc> scratch;
  for (NodeIndex i = 0; i < n; ++i) {
    double x0 = 0.0;
    for (const Arc& a : g.outArcs(i)) {
      x0 += a.weight;
      cal.outArcs_.push_back(a);
    }
    cal.outOffsets_.push_back(cal.outArcs_.size());
    cal.x0_[i] = x0;

    scratch.assign(g.inArcs(i).begin(), g.inArcs(i).end());
    std::stable_sort(scratch.begin(), scratch.end(),
                     [&](const Arc& a, const Arc& b) { return labels[a.node] < labels[b.node]; });
    for (std::size_t a = 0; a < scratch.size();) {
      InputGroup grp;
      grp.industry = labels[scratch[a].node];
      grp.arcBegin = cal.inArcs_.size();
      while (a < scratch.size() && labels[scratch[a].node] == grp.industry) {
        grp.flow += scratch[a].weight;
        cal.inArcs_.push_back(scratch[a]);
        ++a;
      }
      grp.arcEnd = cal.inArcs_.size();
      grp.essential = mode == ProductionMode::Glpf && ess.classify(labels[i], grp.industry) == InputClass::Essential;
      if (!grp.essential) cal.nonEssentialFlow_[i] += grp.flow;
      cal.groups_.push_back(grp);
    }
    cal.groupOffsets_.push_back(cal.groups_.size());
    if (x0 > 0.0) cal.nonEssentialShare_[i] = std::min(1.0, cal.nonEssentialFlow_[i] / x0);
  }
  return cal;
}

inline GlpfCalibration calibrateGlpf(const FirmNetwork& net, const EssentialityTable& ess, ProductionMode mode) {
  return calibrateGlpf(net.graph(), net.industries(), ess, mode);
}

inline GlpfCalibration calibrateGlpf(const IndustryNetwork& ind, const EssentialityTable& ess, ProductionMode mode) {
  std::vector<IndustryIndex> labels(ind.industryCount());
  for (IndustryIndex k = 0; k < labels.size(); ++k) labels[k] = k;
  return calibrateGlpf(ind.toDigraph(), labels, ess, mode);
}

// One synchronous downstream update: every node's level is limited by its
// essential input industries (Leontief), by its non-essential inputs
// (linear, floor beta) and by its capacity cap.
inline std::vector<double> downstreamStep(const GlpfCalibration& cal, std::span<const double> level,
                                          std::span<const double> cap) {
  const std::size_t n = cal.nodeCount();
  std::vector<double> next(n);
  for (NodeIndex i = 0; i < n; ++i) {
    if (cal.passThrough(i)) {
      next[i] = cap[i];
      continue;
    }
    double h = cap[i];
    double nonEssential = 0.0;
    for (const InputGroup& g : cal.inputGroups(i)) {
      double received = 0.0;
      for (const Arc& a : cal.inputArcs(g)) received += a.weight * level[a.node];
      if (g.essential)
        h = std::min(h, received / g.flow);
      else
        nonEssential += received;
    }
    const double neFlow = cal.nonEssentialFlow(i);
    if (neFlow > 0.0) h = std::min(h, 1.0 - (1.0 - cal.beta(i)) * (1.0 - nonEssential / neFlow));
    next[i] = std::clamp(h, 0.0, cap[i]);
  }
  return next;
}

// One synchronous upstream update: demand from customers passes through
// linearly in their revenue shares, capped by capacity.
inline std::vector<double> upstreamStep(const GlpfCalibration& cal, std::span<const double> level,
                                        std::span<const double> cap) {
  const std::size_t n = cal.nodeCount();
  std::vector<double> next(n);
  for (NodeIndex i = 0; i < n; ++i) {
    if (cal.passThrough(i)) {
      next[i] = cap[i];
      continue;
    }
    double demand = 0.0;
    for (const Arc& a : cal.outputArcs(i)) demand += a.weight * level[a.node];
    next[i] = std::clamp(demand / cal.baselineOutput(i), 0.0, cap[i]);
  }
  return next;
}

// A node produces no more than either the supply-side or the demand-side
// constraint permits.
inline std::vector<double> combineLevels(std::span<const double> down, std::span<const double> up) {
  std::vector<double> out(down.size());
  for (std::size_t i = 0; i < down.size(); ++i) out[i] = std::min(down[i], up[i]);
  return out;
}

struct PropagationOptions {
  double tolerance = 1e-9;
  std::size_t maxIterations = 100000;
  bool recordTrace = false;
};

struct PropagationResult {
  std::vector<double> hFinal;
  std::vector<double> hDown;
  std::vector<double> hUp;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // max |dh| per sweep when recorded
};

// Iterates downstream and upstream updates from h(1) = cap until the largest
// change of a sweep drops below the tolerance.
inline PropagationResult propagate(const GlpfCalibration& cal, std::span<const double> capDown,
                                   std::span<const double> capUp, const PropagationOptions& opt = {}) {
  const std::size_t n = cal.nodeCount();
  if (capDown.size() != n || capUp.size() != n) throw InvalidArgument("shock length does not match the network");
  if (!(opt.tolerance > 0.0)) throw InvalidArgument("propagation tolerance must be positive");
  for (std::size_t i = 0; i < n; ++i)
    if (!(capDown[i] >= 0.0 && capDown[i] <= 1.0 && capUp[i] >= 0.0 && capUp[i] <= 1.0))
      throw InvalidArgument("capacity outside [0,1] at node " + std::to_string(i));

  PropagationResult r;
  r.hDown.assign(capDown.begin(), capDown.end());
  r.hUp.assign(capUp.begin(), capUp.end());
  while (r.iterations < opt.maxIterations) {
    auto down = downstreamStep(cal, r.hDown, capDown);
    auto up = upstreamStep(cal, r.hUp, capUp);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      change = std::max({change, std::abs(down[i] - r.hDown[i]), std::abs(up[i] - r.hUp[i])});
    r.hDown = std::move(down);
    r.hUp = std::move(up);
    ++r.iterations;
    if (opt.recordTrace) r.trace.push_back(change);
    if (change < opt.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.hFinal = combineLevels(r.hDown, r.hUp);
  return r;
}

inline PropagationResult propagate(const GlpfCalibration& cal, std::span<const double> psi,
                                   const PropagationOptions& opt = {}) {
  return propagate(cal, psi, psi, opt);
}

// Industry-level run: phiD caps the downstream update, phiU the upstream one.
inline PropagationResult propagateIndustry(const GlpfCalibration& calZ, const IndustryShock& shock,
                                           const PropagationOptions& opt = {}) {
  return propagate(calZ, shock.phiD, shock.phiU, opt);
}

// Out-strength-weighted mean of (1 - h).
inline double economyLoss(std::span<const double> level, std::span<const double> outStrength) {
  if (level.size() != outStrength.size()) throw InvalidArgument("level and strength vectors differ in length");
  double total = 0.0, lost = 0.0;
  for (std::size_t i = 0; i < level.size(); ++i) {
    total += outStrength[i];
    lost += outStrength[i] * (1.0 - level[i]);
  }
  if (!(total > 0.0)) throw UndefinedValue("economy loss with zero total out-strength");
  return std::clamp(lost / total, 0.0, 1.0);
}

inline double economyLoss(const PropagationResult& r, const StrengthProfile& s) { return economyLoss(r.hFinal, s.sOut); }

// Loss of every group (industry) in `groupOf`; nullopt where the group has no
// out-strength.
inline std::vector<std::optional<double>> groupLosses(std::span<const double> level,
                                                      std::span<const double> outStrength,
                                                      std::span<const IndustryIndex> groupOf, std::size_t groups) {
  std::vector<double> total(groups, 0.0), lost(groups, 0.0);
  for (std::size_t i = 0; i < level.size(); ++i) {
    total[groupOf[i]] += outStrength[i];
    lost[groupOf[i]] += outStrength[i] * (1.0 - level[i]);
  }
  std::vector<std::optional<double>> out(groups);
  for (std::size_t k = 0; k < groups; ++k)
    if (total[k] > 0.0) out[k] = std::clamp(lost[k] / total[k], 0.0, 1.0);
  return out;
}

inline std::vector<std::optional<double>> industryLosses(const PropagationResult& r, const FirmNetwork& net,
                                                         const StrengthProfile& s) {
  return groupLosses(r.hFinal, s.sOut, net.industries(), net.industryCount());
}

inline std::optional<double> industryLoss(const PropagationResult& r, const FirmNetwork& net,
                                          const StrengthProfile& s, IndustryIndex k) {
  return industryLosses(r, net, s).at(k);
}

// Industry-level run: each node is its own industry.
inline std::vector<std::optional<double>> industryLosses(const PropagationResult& r, const IndustryNetwork& ind) {
  std::vector<std::optional<double>> out(ind.industryCount());
  for (IndustryIndex k = 0; k < out.size(); ++k)
    if (ind.outStrength()[k] > 0.0) out[k] = std::clamp(1.0 - r.hFinal[k], 0.0, 1.0);
  return out;
}

}  // namespace aggerr
