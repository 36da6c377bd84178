#pragma once

#include <aggerr/network.hpp>
#include <aggerr/rng.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace aggerr {

struct EmploymentRecord {
  std::string firm;
  std::optional<std::int64_t> eJan;
  std::optional<std::int64_t> eMay;
};

// Firm-level shock: zeta is the production reduction, psi = 1 - zeta the
// remaining capacity. Both are kept so neither has to be recomputed.
class FirmShock {
 public:
  FirmShock() = default;

  static FirmShock fromZeta(std::vector<double> zeta) {
    FirmShock s;
    s.psi_.resize(zeta.size());
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      check(zeta[i], i, "zeta");
      s.psi_[i] = 1.0 - zeta[i];
    }
    s.zeta_ = std::move(zeta);
    return s;
  }

  static FirmShock fromPsi(std::vector<double> psi) {
    FirmShock s;
    s.zeta_.resize(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
      check(psi[i], i, "psi");
      s.zeta_[i] = 1.0 - psi[i];
    }
    s.psi_ = std::move(psi);
    return s;
  }

  static FirmShock none(std::size_t n) { return fromZeta(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return zeta_.size(); }
  const std::vector<double>& zeta() const noexcept { return zeta_; }
  const std::vector<double>& psi() const noexcept { return psi_; }

 private:
  static void check(double v, std::size_t i, const char* what) {
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidArgument(std::string(what) + "[" + std::to_string(i) + "] = " + std::to_string(v) +
                            " outside [0,1]");
  }

  std::vector<double> zeta_;
  std::vector<double> psi_;
};

// Firm shock with firms lacking employment data flagged; their zeta is 0
// until imputed.
struct PartialShock {
  std::vector<double> zeta;
  std::vector<bool> missing;

  std::size_t missingCount() const { return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true)); }
};

// Industry-level remaining capacities: phiU weighted by in-strength
// (upstream-constraining), phiD by out-strength (downstream-constraining).
struct IndustryShock {
  std::vector<double> phiU;
  std::vector<double> phiD;

  std::vector<double> xiU() const { return complement(phiU); }
  std::vector<double> xiD() const { return complement(phiD); }

  static IndustryShock uniform(std::vector<double> phi) { return {phi, phi}; }

 private:
  static std::vector<double> complement(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = 1.0 - v[k];
    return out;
  }
};

// zeta_i = max(0, 1 - e_may / e_jan). Firms with e_jan = 0 are unshocked;
// firms without a record or with a missing month are flagged missing.
inline PartialShock shockFromEmployment(const std::vector<EmploymentRecord>& records, const FirmNetwork& net) {
  PartialShock out{std::vector<double>(net.nodeCount(), 0.0), std::vector<bool>(net.nodeCount(), true)};
  for (const auto& r : records) {
    if ((r.eJan && *r.eJan < 0) || (r.eMay && *r.eMay < 0))
      throw InvalidArgument("negative head count for firm " + r.firm);
    auto i = net.findFirm(r.firm);
    if (!i) continue;
    if (!r.eJan || !r.eMay) continue;
    out.missing[*i] = false;
    if (*r.eJan == 0) {
      out.zeta[*i] = 0.0;
    } else {
      out.zeta[*i] = std::max(0.0, 1.0 - static_cast<double>(*r.eMay) / static_cast<double>(*r.eJan));
    }
  }
  return out;
}

struct ImputationResult {
  FirmShock shock;
  std::vector<double> losses;  // loss of every completed draw, by draw index
  std::size_t chosenDraw = 0;
};

using LossFunction = std::function<double(const FirmShock&)>;

// Completes the missing entries `draws` times by sampling observed zeta values
// of the same industry (global pool when the industry has none) and returns
// the completion with the median loss; for even draw counts the lower median.
inline ImputationResult imputeMissing(const PartialShock& partial, const FirmNetwork& net, std::size_t draws,
                                      std::uint64_t seed, const LossFunction& lossFn) {
  const std::size_t n = net.nodeCount();
  if (partial.zeta.size() != n || partial.missing.size() != n)
    throw InvalidArgument("partial shock does not match the network size");

  if (partial.missingCount() == 0) return {FirmShock::fromZeta(partial.zeta), {}, 0};
  if (draws == 0) throw InvalidArgument("imputation needs at least one draw");

  std::vector<std::vector<double>> pools(net.industryCount());
  std::vector<double> global;
  for (NodeIndex i = 0; i < n; ++i) {
    if (partial.missing[i]) continue;
    pools[net.industryOf(i)].push_back(partial.zeta[i]);
    global.push_back(partial.zeta[i]);
  }
  for (NodeIndex i = 0; i < n; ++i)
    if (partial.missing[i] && pools[net.industryOf(i)].empty() && global.empty())
      throw InvalidArgument("no observed shock values to impute from");

  std::vector<std::vector<double>> completed(draws);
  std::vector<double> losses(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng = makeRng(seed, {d});
    std::vector<double> z = partial.zeta;
    for (NodeIndex i = 0; i < n; ++i) {
      if (!partial.missing[i]) continue;
      const auto& pool = pools[net.industryOf(i)].empty() ? global : pools[net.industryOf(i)];
      z[i] = pool[uniformIndex(rng, pool.size())];
    }
    losses[d] = lossFn(FirmShock::fromZeta(z));
    completed[d] = std::move(z);
  }

  std::vector<std::size_t> order(draws);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  const std::size_t chosen = order[(draws - 1) / 2];
  return {FirmShock::fromZeta(std::move(completed[chosen])), std::move(losses), chosen};
}

// Strength-weighted mean capacity per industry; industries without in-
// (out-) strength get phiU (phiD) = 1.
inline IndustryShock aggregateShock(const std::vector<double>& psi, const FirmNetwork& net,
                                    const StrengthProfile& s) {
  const std::size_t n = net.nodeCount();
  if (psi.size() != n) throw InvalidArgument("shock length does not match the network");
  const std::size_t m = net.industryCount();
  std::vector<double> numU(m, 0.0), denU(m, 0.0), numD(m, 0.0), denD(m, 0.0);
  for (NodeIndex i = 0; i < n; ++i) {
    const IndustryIndex k = net.industryOf(i);
    numU[k] += psi[i] * s.sIn[i];
    denU[k] += s.sIn[i];
    numD[k] += psi[i] * s.sOut[i];
    denD[k] += s.sOut[i];
  }
  IndustryShock out{std::vector<double>(m, 1.0), std::vector<double>(m, 1.0)};
  for (IndustryIndex k = 0; k < m; ++k) {
    if (denU[k] > 0.0) out.phiU[k] = std::clamp(numU[k] / denU[k], 0.0, 1.0);
    if (denD[k] > 0.0) out.phiD[k] = std::clamp(numD[k] / denD[k], 0.0, 1.0);
  }
  return out;
}

inline IndustryShock aggregateShock(const FirmShock& shock, const FirmNetwork& net) {
  return aggregateShock(shock.psi(), net, strengths(net));
}

}  // namespace aggerr
