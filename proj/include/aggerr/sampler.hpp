#pragma once

#include <aggerr/network.hpp>
#include <aggerr/parallel.hpp>
#include <aggerr/rng.hpp>
#include <aggerr/shock.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace aggerr {

// Absolute (currency) shock targets of one industry: the zeta-weighted
// in- and out-strength the sampled shock has to reproduce.
struct IndustryTarget {
  double in = 0.0;
  double out = 0.0;
};

struct SamplingTarget {
  std::vector<IndustryTarget> industries;
  double epsilon = 0.01;
};

// Targets of a firm-level base shock: sum_i zeta_i s_i over each industry.
inline SamplingTarget samplingTarget(const FirmNetwork& net, const StrengthProfile& s, const FirmShock& base,
                                     double epsilon) {
  if (base.size() != net.nodeCount()) throw InvalidArgument("base shock does not match the network");
  SamplingTarget t{std::vector<IndustryTarget>(net.industryCount()), epsilon};
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    t.industries[net.industryOf(i)].in += base.zeta()[i] * s.sIn[i];
    t.industries[net.industryOf(i)].out += base.zeta()[i] * s.sOut[i];
  }
  return t;
}

// Targets of a prescribed industry-level shock: xi^u_k s^{in,k}, xi^d_k s^{out,k}.
inline SamplingTarget samplingTarget(const FirmNetwork& net, const StrengthProfile& s, const IndustryShock& shock,
                                     double epsilon) {
  const std::size_t m = net.industryCount();
  if (shock.phiU.size() != m || shock.phiD.size() != m) throw InvalidArgument("industry shock has wrong length");
  std::vector<double> sIn(m, 0.0), sOut(m, 0.0);
  for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
    sIn[net.industryOf(i)] += s.sIn[i];
    sOut[net.industryOf(i)] += s.sOut[i];
  }
  SamplingTarget t{std::vector<IndustryTarget>(m), epsilon};
  for (IndustryIndex k = 0; k < m; ++k) t.industries[k] = {(1.0 - shock.phiU[k]) * sIn[k], (1.0 - shock.phiD[k]) * sOut[k]};
  return t;
}

// Source of shock increments in [0,1]: an empirical value list or Beta(a,b).
class DonorDistribution {
 public:
  static DonorDistribution empirical(std::vector<double> values) {
    for (double v : values)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("donor value outside [0,1]");
    DonorDistribution d;
    d.values_ = std::move(values);
    return d;
  }
  static DonorDistribution beta(double a, double b) {
    if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("Beta donor needs a, b > 0");
    DonorDistribution d;
    d.isBeta_ = true;
    d.a_ = a;
    d.b_ = b;
    return d;
  }

  bool isBeta() const noexcept { return isBeta_; }
  bool hasPositiveMass() const {
    if (isBeta_) return true;
    return std::any_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
  }

  double sample(Rng& rng) const {
    if (isBeta_) {
      std::gamma_distribution<double> ga(a_, 1.0), gb(b_, 1.0);
      const double x = ga(rng), y = gb(rng);
      return x + y > 0.0 ? x / (x + y) : 0.0;
    }
    if (values_.empty()) throw InvalidArgument("empty donor distribution");
    return values_[uniformIndex(rng, values_.size())];
  }

 private:
  bool isBeta_ = false;
  double a_ = 1.0, b_ = 1.0;
  std::vector<double> values_;
};

// The firms of one industry with their strengths, in index order.
struct IndustrySlice {
  std::vector<NodeIndex> firms;
  std::vector<double> sIn;
  std::vector<double> sOut;

  std::size_t size() const noexcept { return firms.size(); }
};

inline IndustrySlice industrySlice(const FirmNetwork& net, const StrengthProfile& s, IndustryIndex k) {
  IndustrySlice slice;
  slice.firms = net.members(k);
  for (NodeIndex i : slice.firms) {
    slice.sIn.push_back(s.sIn[i]);
    slice.sOut.push_back(s.sOut[i]);
  }
  return slice;
}

struct AggregateSums {
  double in = 0.0;
  double out = 0.0;
};

inline AggregateSums aggregateSums(const IndustrySlice& slice, const std::vector<double>& zeta) {
  AggregateSums s;
  for (std::size_t j = 0; j < slice.size(); ++j) {
    s.in += zeta[j] * slice.sIn[j];
    s.out += zeta[j] * slice.sOut[j];
  }
  return s;
}

// Draft shocks for one industry: starting from zero, draw firms without
// replacement (refilling the pool when exhausted) and add a donor draw,
// capped at 1, while both aggregate sums are still below their targets.
inline std::vector<double> drawShocks(const IndustrySlice& slice, const DonorDistribution& donor,
                                      const IndustryTarget& target, Rng& rng, std::size_t maxDrawsPerFirm = 10000) {
  const std::size_t nk = slice.size();
  std::vector<double> zeta(nk, 0.0);
  if (!(target.in > 0.0 && target.out > 0.0)) return zeta;
  if (nk == 0) throw InvalidArgument("drawing shocks for an empty industry");
  if (!donor.hasPositiveMass()) throw InfeasibleTarget("donor distribution has no positive values");

  double sumIn = 0.0, sumOut = 0.0;
  std::size_t saturated = 0;
  std::vector<std::size_t> pool;
  const std::size_t maxDraws = maxDrawsPerFirm * nk;
  for (std::size_t draws = 0; sumIn < target.in && sumOut < target.out; ++draws) {
    if (saturated == nk)
      throw InfeasibleTarget("every firm is fully shocked but the targets are not reached (target exceeds capacity)");
    if (draws == maxDraws) throw InfeasibleTarget("draw limit reached before the targets");
    if (pool.empty()) {
      pool.resize(nk);
      for (std::size_t j = 0; j < nk; ++j) pool[j] = j;
    }
    const std::size_t pick = uniformIndex(rng, pool.size());
    const std::size_t j = pool[pick];
    pool[pick] = pool.back();
    pool.pop_back();

    const double eta = donor.sample(rng);
    const double before = zeta[j];
    zeta[j] = std::min(1.0, zeta[j] + eta);
    if (before < 1.0 && zeta[j] == 1.0) ++saturated;
    sumIn += (zeta[j] - before) * slice.sIn[j];
    sumOut += (zeta[j] - before) * slice.sOut[j];
  }
  return zeta;
}

inline std::vector<double> drawShocks(const FirmNetwork& net, IndustryIndex k, const DonorDistribution& donor,
                                      const IndustryTarget& target, Rng& rng) {
  return drawShocks(industrySlice(net, strengths(net), k), donor, target, rng);
}

// Which rescaled firms leave the rescalable set.
enum class LockRule {
  ClampedOnly,  // only firms scaled above 1 (and clamped)
  AnyPositive,  // every firm with a positive shock after scaling
};

inline bool shouldLock(double zetaAfterScaling, LockRule rule) {
  return rule == LockRule::ClampedOnly ? zetaAfterScaling > 1.0 : zetaAfterScaling > 0.0;
}

struct SamplerOptions {
  double epsilon = 0.01;
  std::size_t maxRescaleIterations = 1000;
  std::size_t maxScenarioRetries = 10;
  std::size_t maxDrawsPerFirm = 10000;
  LockRule lockRule = LockRule::ClampedOnly;
  std::size_t threads = 1;
};

struct Vec2 {
  double first = 0.0;
  double second = 0.0;
};

// x = A^+ b for a 2x2 matrix. Singular values below relCutoff * sigma_max are
// dropped; the rank-one pseudo-inverse is then A^T / ||A||_F^2.
inline Vec2 pseudoInverseSolve(double a11, double a12, double a21, double a22, Vec2 b, double relCutoff = 1e-12) {
  const double frob2 = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
  if (frob2 == 0.0) return {};
  const double det = a11 * a22 - a12 * a21;
  const double disc = std::sqrt(std::max(0.0, frob2 * frob2 - 4.0 * det * det));
  const double s1 = std::sqrt(0.5 * (frob2 + disc));
  const double s2 = std::abs(det) / s1;
  if (s2 > relCutoff * s1)
    return {(a22 * b.first - a12 * b.second) / det, (-a21 * b.first + a11 * b.second) / det};
  return {(a11 * b.first + a21 * b.second) / frob2, (a12 * b.first + a22 * b.second) / frob2};
}

struct RescaleResult {
  std::vector<double> zeta;
  std::vector<bool> locked;
  std::size_t iterations = 0;
  std::size_t repairs = 0;
  double residualIn = 0.0;
  double residualOut = 0.0;
};

namespace detail {

enum class Group : unsigned char { None, InHeavy, OutHeavy };

struct RescaleState {
  const IndustrySlice& slice;
  std::vector<double>& zeta;
  const std::vector<bool>& locked;
  const std::vector<Group>& group;
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  void build() {
    a11 = a12 = a21 = a22 = 0.0;
    for (std::size_t j = 0; j < slice.size(); ++j) {
      if (locked[j]) continue;
      if (group[j] == Group::InHeavy) {
        a11 += zeta[j] * slice.sIn[j];
        a21 += zeta[j] * slice.sOut[j];
      } else if (group[j] == Group::OutHeavy) {
        a12 += zeta[j] * slice.sIn[j];
        a22 += zeta[j] * slice.sOut[j];
      }
    }
  }
};

// Gives one unshocked, rescalable firm satisfying `eligible` a U[0,1] shock.
template <class Pred>
bool redrawZeroShock(const IndustrySlice& slice, std::vector<double>& zeta, const std::vector<bool>& locked,
                     Rng& rng, Pred eligible) {
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < slice.size(); ++j)
    if (!locked[j] && zeta[j] == 0.0 && eligible(j)) candidates.push_back(j);
  if (candidates.empty()) return false;
  zeta[candidates[uniformIndex(rng, candidates.size())]] = uniform01(rng);
  return true;
}

}  // namespace detail

// Rescales a draft so both aggregate sums of the industry hit their targets
// within epsilon. Firms are split into in-heavy and out-heavy groups relative
// to the residual target ratio; one factor per group solves the 2x2 system
// A v = b; firms pushed above 1 are clamped and locked. Repeats until both
// residuals are at most epsilon.
inline RescaleResult rescaleShocks(const IndustrySlice& slice, std::vector<double> draft, const IndustryTarget& target,
                                   Rng& rng, const SamplerOptions& opt = {}) {
  using detail::Group;
  const std::size_t nk = slice.size();
  if (draft.size() != nk) throw InvalidArgument("draft shock does not match the industry");

  RescaleResult r;
  r.zeta = std::move(draft);
  r.locked.assign(nk, false);
  auto residuals = [&] {
    const AggregateSums s = aggregateSums(slice, r.zeta);
    r.residualIn = std::abs(s.in - target.in);
    r.residualOut = std::abs(s.out - target.out);
  };
  residuals();

  std::vector<Group> group(nk, Group::None);
  while (!(r.residualIn <= opt.epsilon && r.residualOut <= opt.epsilon)) {
    if (r.iterations == opt.maxRescaleIterations)
      throw NonConvergence("rescaling did not converge in " + std::to_string(r.iterations) + " iterations",
                           r.residualIn, r.residualOut);
    ++r.iterations;

    double bIn = target.in, bOut = target.out;
    for (std::size_t j = 0; j < nk; ++j) {
      if (!r.locked[j]) continue;
      bIn -= r.zeta[j] * slice.sIn[j];
      bOut -= r.zeta[j] * slice.sOut[j];
    }
    if (bIn < -opt.epsilon || bOut < -opt.epsilon)
      throw NonConvergence("locked firms alone exceed the target", r.residualIn, r.residualOut);
    bIn = std::max(0.0, bIn);
    bOut = std::max(0.0, bOut);

    // s_in / s_out against b_in / b_out, cross-multiplied so zero strengths
    // and zero residuals need no special casing.
    std::size_t inCount = 0, outCount = 0;
    std::vector<std::size_t> ties;
    for (std::size_t j = 0; j < nk; ++j) {
      group[j] = Group::None;
      if (r.locked[j] || (slice.sIn[j] == 0.0 && slice.sOut[j] == 0.0)) continue;
      const double lhs = slice.sIn[j] * bOut;
      const double rhs = slice.sOut[j] * bIn;
      if (lhs > rhs) {
        group[j] = Group::InHeavy;
        ++inCount;
      } else if (rhs > lhs) {
        group[j] = Group::OutHeavy;
        ++outCount;
      } else {
        ties.push_back(j);
      }
    }
    const Group tieGroup = inCount <= outCount ? Group::InHeavy : Group::OutHeavy;
    for (std::size_t j : ties) group[j] = tieGroup;
    (tieGroup == Group::InHeavy ? inCount : outCount) += ties.size();

    detail::RescaleState a{slice, r.zeta, r.locked, group};
    a.build();
    for (std::size_t guard = 0; guard <= nk; ++guard) {
      bool repaired = false;
      if (a.a11 == 0.0 && a.a12 == 0.0 && bIn > 0.0)
        repaired = detail::redrawZeroShock(slice, r.zeta, r.locked, rng, [&](std::size_t j) { return slice.sIn[j] > 0.0; });
      else if (a.a21 == 0.0 && a.a22 == 0.0 && bOut > 0.0)
        repaired = detail::redrawZeroShock(slice, r.zeta, r.locked, rng, [&](std::size_t j) { return slice.sOut[j] > 0.0; });
      else if (a.a11 == 0.0 && a.a21 == 0.0 && inCount > 0)
        repaired = detail::redrawZeroShock(slice, r.zeta, r.locked, rng, [&](std::size_t j) { return group[j] == Group::InHeavy; });
      else if (a.a12 == 0.0 && a.a22 == 0.0 && outCount > 0)
        repaired = detail::redrawZeroShock(slice, r.zeta, r.locked, rng, [&](std::size_t j) { return group[j] == Group::OutHeavy; });
      if (!repaired) break;
      ++r.repairs;
      a.build();
    }

    Vec2 v = pseudoInverseSolve(a.a11, a.a12, a.a21, a.a22, {bIn, bOut});
    v.first = std::max(0.0, v.first);
    v.second = std::max(0.0, v.second);

    for (std::size_t j = 0; j < nk; ++j) {
      if (r.locked[j] || group[j] == Group::None) continue;
      r.zeta[j] *= group[j] == Group::InHeavy ? v.first : v.second;
      if (shouldLock(r.zeta[j], opt.lockRule)) r.locked[j] = true;
      r.zeta[j] = std::clamp(r.zeta[j], 0.0, 1.0);
    }
    residuals();
  }
  return r;
}

inline RescaleResult rescaleShocks(const FirmNetwork& net, IndustryIndex k, std::vector<double> draft,
                                   const IndustryTarget& target, Rng& rng, const SamplerOptions& opt = {}) {
  return rescaleShocks(industrySlice(net, strengths(net), k), std::move(draft), target, rng, opt);
}

struct DonorConfig {
  bool beta = false;
  double a = 1.0;
  double b = 1.0;

  static DonorConfig empirical() { return {}; }
  static DonorConfig betaDistribution(double a, double b) { return {true, a, b}; }
};

struct IndustryResidual {
  double in = 0.0;
  double out = 0.0;
};

struct ScenarioEnsemble {
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> psi;                   // [scenario][firm]
  std::vector<std::vector<IndustryResidual>> residuals;   // [scenario][industry]
  std::vector<std::size_t> attempts;                      // draws needed per scenario

  std::size_t size() const noexcept { return psi.size(); }
};

// Everything that is shared by all scenarios of one ensemble.
class ScenarioSampler {
 public:
  ScenarioSampler(const FirmNetwork& net, const FirmShock& base, const DonorConfig& donor, SamplerOptions opt)
      : net_(net), opt_(opt) {
    if (base.size() != net.nodeCount()) throw InvalidArgument("base shock does not match the network");
    const StrengthProfile s = strengths(net);
    target_ = samplingTarget(net, s, base, opt.epsilon);
    for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
      slices_.push_back(industrySlice(net, s, k));
      if (donor.beta) {
        donors_.push_back(DonorDistribution::beta(donor.a, donor.b));
      } else {
        std::vector<double> values;
        for (NodeIndex i : net.members(k)) values.push_back(base.zeta()[i]);
        donors_.push_back(DonorDistribution::empirical(std::move(values)));
      }
    }
  }

  const SamplingTarget& target() const noexcept { return target_; }

  struct Scenario {
    std::vector<double> psi;
    std::vector<IndustryResidual> residuals;
    std::size_t attempts = 0;
  };

  // Scenario `index`, redrawn with fresh sub-seeds when an industry fails.
  Scenario sample(std::uint64_t seed, std::size_t index) const {
    std::string lastError;
    for (std::size_t attempt = 0; attempt <= opt_.maxScenarioRetries; ++attempt) {
      try {
        return attemptScenario(seed, index, attempt);
      } catch (const InfeasibleTarget& e) {
        lastError = e.what();
      } catch (const NonConvergence& e) {
        lastError = e.what();
      }
    }
    throw Error("scenario " + std::to_string(index) + " failed after " + std::to_string(opt_.maxScenarioRetries + 1) +
                " attempts: " + lastError);
  }

 private:
  Scenario attemptScenario(std::uint64_t seed, std::size_t index, std::size_t attempt) const {
    Scenario sc;
    sc.attempts = attempt + 1;
    std::vector<double> zeta(net_.nodeCount(), 0.0);
    sc.residuals.resize(net_.industryCount());
    for (IndustryIndex k = 0; k < net_.industryCount(); ++k) {
      const IndustrySlice& slice = slices_[k];
      if (slice.size() == 0) continue;
      const IndustryTarget& t = target_.industries[k];
      Rng rng = makeRng(seed, {index, k, attempt});
      try {
        auto draft = drawShocks(slice, donors_[k], t, rng, opt_.maxDrawsPerFirm);
        auto res = rescaleShocks(slice, std::move(draft), t, rng, opt_);
        for (std::size_t j = 0; j < slice.size(); ++j) zeta[slice.firms[j]] = res.zeta[j];
        sc.residuals[k] = {res.residualIn, res.residualOut};
      } catch (const InfeasibleTarget& e) {
        throw InfeasibleTarget("industry " + net_.industryLabel(k) + ": " + e.what());
      } catch (const NonConvergence& e) {
        throw NonConvergence("industry " + net_.industryLabel(k) + ": " + e.what(), e.residualIn(), e.residualOut());
      }
    }
    sc.psi.resize(zeta.size());
    for (std::size_t i = 0; i < zeta.size(); ++i) sc.psi[i] = 1.0 - zeta[i];
    return sc;
  }

  const FirmNetwork& net_;
  SamplerOptions opt_;
  SamplingTarget target_;
  std::vector<IndustrySlice> slices_;
  std::vector<DonorDistribution> donors_;
};

// `count` synthetic shocks that aggregate (within epsilon, per industry of
// `net`) to the same industry-level shock as `base`. Scenario l only depends
// on (seed, l), so serial and parallel runs agree bit for bit.
inline ScenarioEnsemble sampleEnsemble(const FirmNetwork& net, const FirmShock& base, std::size_t count,
                                       std::uint64_t seed, const SamplerOptions& opt = {},
                                       const DonorConfig& donor = DonorConfig::empirical()) {
  ScenarioSampler sampler(net, base, donor, opt);
  ScenarioEnsemble ens;
  ens.seed = seed;
  ens.psi.resize(count);
  ens.residuals.resize(count);
  ens.attempts.resize(count);
  parallelFor(count, opt.threads, [&](std::size_t l) {
    auto sc = sampler.sample(seed, l);
    ens.psi[l] = std::move(sc.psi);
    ens.residuals[l] = std::move(sc.residuals);
    ens.attempts[l] = sc.attempts;
  });
  return ens;
}

}  // namespace aggerr
