#pragma once

#include <aggerr/config.hpp>
#include <aggerr/csv.hpp>
#include <aggerr/io.hpp>
#include <aggerr/network.hpp>
#include <aggerr/overlap.hpp>
#include <aggerr/parallel.hpp>
#include <aggerr/propagation.hpp>
#include <aggerr/sampler.hpp>
#include <aggerr/shock.hpp>
#include <aggerr/stats.hpp>
#include <aggerr/synthetic.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace aggerr {

// Runs `fn`, re-raising any failure as a StageError tagged with `stage`.
template <class Fn>
auto runStage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

inline std::string optionalCell(const std::optional<double>& v) { return v ? csv::formatDouble(*v) : std::string(); }

inline nlohmann::ordered_json optionalJson(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json summaryJson(const DistributionSummary& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"p5", s.p5},
          {"p25", s.p25},     {"p50", s.p50},   {"p75", s.p75}, {"p95", s.p95}};
}

// ---------------------------------------------------------------- overlaps

struct OverlapReportOptions {
  std::vector<DegreeBin> bins = canonicalDegreeBins();
  bool includeResidual = false;
};

struct OverlapRow {
  std::string industry;
  std::string bin;
  Direction direction = Direction::In;
  std::string measure;
  std::optional<DistributionSummary> summary;
};

inline bool reportedIndustry(const FirmNetwork& net, IndustryIndex k, bool includeResidual) {
  return includeResidual || net.residualIndustry() != k;
}

// One row per industry, degree bin, direction and measure (oc, jaccard).
inline std::vector<OverlapRow> overlapRows(const FirmNetwork& net, const OverlapReportOptions& opt = {}) {
  validateDegreeBins(opt.bins);
  const StrengthProfile s = strengths(net);
  std::vector<OverlapRow> rows;
  for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
    if (!reportedIndustry(net, k, opt.includeResidual)) continue;
    for (const DegreeBin& bin : opt.bins)
      for (Direction dir : {Direction::In, Direction::Out})
        for (Measure m : {Measure::OverlapCoefficient, Measure::Jaccard}) {
          OverlapRow row{net.industryLabel(k), bin.label(), dir, toString(m), std::nullopt};
          auto values = pairwiseValues(net, s, k, bin, m, dir);
          if (!values.empty()) row.summary = summarize(std::move(values));
          rows.push_back(std::move(row));
        }
  }
  return rows;
}

// Per-industry year-on-year overlap (temporal_oc) and retention of each
// firm's own vectors; firms are grouped by their previous-year industry.
inline std::vector<OverlapRow> temporalRows(const FirmNetwork& current, const FirmNetwork& previous,
                                            const OverlapReportOptions& opt = {}) {
  const StrengthProfile sPrev = strengths(previous);
  std::vector<OverlapRow> rows;
  for (IndustryIndex k = 0; k < previous.industryCount(); ++k) {
    if (!reportedIndustry(previous, k, opt.includeResidual)) continue;
    for (Direction dir : {Direction::In, Direction::Out}) {
      std::vector<double> overlaps, retention;
      for (NodeIndex i : previous.members(k)) {
        if (!(sPrev.strength(dir)[i] > 0.0)) continue;
        const std::string& id = previous.firmId(i);
        retention.push_back(retentionProbability(current, previous, id, dir));
        auto j = current.findFirm(id);
        if (!j) continue;
        const auto arcs = dir == Direction::In ? current.graph().inArcs(*j) : current.graph().outArcs(*j);
        if (arcs.empty()) continue;
        overlaps.push_back(temporalOverlap(current, previous, id, dir));
      }
      OverlapRow a{previous.industryLabel(k), "all", dir, "temporal_oc", std::nullopt};
      if (!overlaps.empty()) a.summary = summarize(std::move(overlaps));
      OverlapRow b{previous.industryLabel(k), "all", dir, "retention", std::nullopt};
      if (!retention.empty()) b.summary = summarize(std::move(retention));
      rows.push_back(std::move(a));
      rows.push_back(std::move(b));
    }
  }
  return rows;
}

inline std::string overlapCsv(const std::vector<OverlapRow>& rows) {
  std::string out = "industry,bin,direction,measure,count,mean,std,p5,p25,p50,p75,p95\n";
  for (const auto& r : rows) {
    csv::RecordWriter w;
    w << r.industry << r.bin << toString(r.direction) << r.measure;
    if (r.summary) {
      const auto& s = *r.summary;
      w << s.count << s.mean << s.std << s.p5 << s.p25 << s.p50 << s.p75 << s.p95;
    } else {
      w << std::size_t{0};
      for (int c = 0; c < 7; ++c) w << "";
    }
    out += w.str() + "\n";
  }
  return out;
}

inline nlohmann::ordered_json overlapJson(const std::vector<OverlapRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j = {
        {"industry", r.industry}, {"bin", r.bin}, {"direction", toString(r.direction)}, {"measure", r.measure}};
    j["summary"] = r.summary ? summaryJson(*r.summary) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

struct OverlapReportFiles {
  std::string csv;
  std::string json;
  std::string temporalCsv;
};

// Writes the pairwise report and, when a previous year is given, the temporal one.
inline void emitOverlapReport(const FirmNetwork& net, const OverlapReportFiles& files,
                              const OverlapReportOptions& opt = {}, const FirmNetwork* previous = nullptr) {
  const auto rows = overlapRows(net, opt);
  io::writeText(files.csv, overlapCsv(rows));
  nlohmann::ordered_json j = {{"firms", net.nodeCount()}, {"industries", net.industryCount()}};
  j["pairwise"] = overlapJson(rows);
  if (previous) {
    const auto trows = temporalRows(net, *previous, opt);
    if (!files.temporalCsv.empty()) io::writeText(files.temporalCsv, overlapCsv(trows));
    j["temporal"] = overlapJson(trows);
  }
  if (!files.json.empty()) io::writeText(files.json, j.dump(2) + "\n");
}

// -------------------------------------------------------------- experiment

struct ScenarioOutcome {
  double lossFirm = 0.0;
  std::optional<double> lossLinear;
  std::size_t iterations = 0;
  std::vector<std::optional<double>> industryLoss;
};

struct ExperimentReport {
  std::string configHash;
  std::uint64_t seed = 0;
  std::size_t firms = 0;
  std::vector<std::string> industryLabels;  // reporting granularity
  std::vector<bool> reported;               // industries in the tables

  double lossFirmBase = 0.0;
  double lossInd = 0.0;
  std::vector<std::optional<double>> industryLossBase;
  std::vector<std::optional<double>> industryLossInd;
  IndustryShock phi;
  std::size_t imputedFirms = 0;

  std::vector<ScenarioOutcome> scenarios;
  std::vector<std::vector<IndustryResidual>> residuals;
  std::vector<std::string> samplingLabels;
  std::optional<DistributionSummary> scenarioSummary;
  double scenarioMin = 0.0;
  double scenarioMax = 0.0;
  std::optional<double> relativeDeviation;          // mean over scenarios of L_ind / L_firm - 1
  std::optional<double> meanAbsoluteDeviation;      // mean over scenarios of |L_ind / L_firm - 1|
  std::optional<double> baseRelativeDeviation;      // L_ind / L_firm(base) - 1
  std::size_t deviationCount = 0;
  std::vector<std::optional<double>> industryDeviation;
  std::size_t resumedScenarios = 0;
};

namespace detail {

inline void requireFile(const std::string& key, const std::string& path) {
  if (!path.empty() && !std::filesystem::is_regular_file(path))
    throw ConfigError(key + ": file '" + path + "' does not exist");
}

inline std::string partialHeader(std::size_t m) {
  std::string h = "scenario,loss_firm,loss_linear,iterations";
  for (std::size_t k = 0; k < m; ++k) h += ",industry_" + std::to_string(k);
  return h;
}

inline std::string partialRow(std::size_t l, const ScenarioOutcome& o) {
  csv::RecordWriter w;
  w << l << o.lossFirm << optionalCell(o.lossLinear) << o.iterations;
  for (const auto& v : o.industryLoss) w << optionalCell(v);
  return w.str();
}

// Completed scenarios from an earlier interrupted run with the same config.
inline std::vector<std::optional<ScenarioOutcome>> readPartial(const std::string& path, std::size_t count,
                                                               std::size_t m) {
  std::vector<std::optional<ScenarioOutcome>> out(count);
  if (!std::filesystem::is_regular_file(path)) return out;
  const csv::Table t = csv::read(path);
  if (t.header.size() != 4 + m) return out;
  for (const auto& row : t.rows) {
    const auto l = static_cast<std::size_t>(csv::parseInt(row.cells[0], path, row.line));
    if (l >= count) continue;
    ScenarioOutcome o;
    o.lossFirm = csv::parseDouble(row.cells[1], path, row.line);
    if (!row.cells[2].empty()) o.lossLinear = csv::parseDouble(row.cells[2], path, row.line);
    o.iterations = static_cast<std::size_t>(csv::parseInt(row.cells[3], path, row.line));
    for (std::size_t k = 0; k < m; ++k) {
      const auto& c = row.cells[4 + k];
      o.industryLoss.push_back(c.empty() ? std::nullopt : std::optional<double>(csv::parseDouble(c, path, row.line)));
    }
    out[l] = std::move(o);
  }
  return out;
}

}  // namespace detail

// Base shock, its industry-level aggregate, a sampled ensemble of firm shocks
// with the same aggregate, and losses of all of them on both resolutions.
inline ExperimentReport runAggregationErrorExperiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  ExperimentReport rep;
  rep.configHash = cfg.hash();
  rep.seed = cfg.seed;

  runStage("config", [&] {
    detail::requireFile("edges", cfg.edges);
    detail::requireFile("meta", cfg.meta);
    detail::requireFile("employment", cfg.employment);
    detail::requireFile("shock", cfg.shock);
    detail::requireFile("essentiality", cfg.essentiality);
    if (!cfg.outputDir.empty()) fs::create_directories(cfg.outputDir);
  });

  // Reporting and sampling granularity share firms and edges.
  auto [net, sampleNet] = runStage("load", [&] {
    if (cfg.edges.empty()) {
      auto g = generateNetwork(cfg.synthetic);
      return std::pair{g, g};
    }
    auto r = io::loadFirmNetwork(cfg.edges, cfg.meta, cfg.reportLabel);
    auto s = cfg.samplingLabel == cfg.reportLabel ? r : io::loadFirmNetwork(cfg.edges, cfg.meta, cfg.samplingLabel);
    return std::pair{std::move(r), std::move(s)};
  });
  rep.firms = net.nodeCount();
  rep.industryLabels = net.industryLabels();
  rep.samplingLabels = sampleNet.industryLabels();
  rep.reported.resize(net.industryCount());
  for (IndustryIndex k = 0; k < net.industryCount(); ++k)
    rep.reported[k] = reportedIndustry(net, k, cfg.includeResidual);

  const StrengthProfile s = strengths(net);
  const EssentialityTable ess = runStage("load", [&] {
    return cfg.essentiality.empty() ? EssentialityTable(cfg.defaultClass)
                                    : io::loadEssentiality(cfg.essentiality, net.industryLabels(), cfg.defaultClass);
  });
  const GlpfCalibration cal = calibrateGlpf(net, ess, cfg.mode);
  std::optional<GlpfCalibration> calLinear;
  if (cfg.compareLinear) calLinear = calibrateGlpf(net, ess, ProductionMode::Linear);
  const PropagationOptions popt{cfg.tolerance, cfg.maxIterations, false};

  auto firmLoss = [&](const std::vector<double>& psi) { return economyLoss(propagate(cal, psi, popt).hFinal, s.sOut); };

  const FirmShock base = runStage("shock", [&] {
    if (!cfg.shock.empty()) return io::loadShock(cfg.shock, net);
    const auto records = cfg.employment.empty()
                             ? generateEmployment(net, {cfg.syntheticUnshocked, cfg.syntheticMissing, cfg.seed})
                             : io::loadEmployment(cfg.employment);
    const PartialShock partial = shockFromEmployment(records, net);
    rep.imputedFirms = partial.missingCount();
    return imputeMissing(partial, net, cfg.imputationDraws, deriveSeed(cfg.seed, {0x1u}),
                         [&](const FirmShock& sh) { return firmLoss(sh.psi()); })
        .shock;
  });

  const PropagationResult baseRun = runStage("propagate", [&] { return propagate(cal, base.psi(), popt); });
  rep.lossFirmBase = runStage("propagate", [&] { return economyLoss(baseRun.hFinal, s.sOut); });
  rep.industryLossBase = industryLosses(baseRun, net, s);

  runStage("aggregate", [&] {
    rep.phi = aggregateShock(base, net);
    const IndustryNetwork z = aggregateToIndustry(net);
    const GlpfCalibration calZ = calibrateGlpf(z, ess, cfg.mode);
    const PropagationResult ipn = propagateIndustry(calZ, rep.phi, popt);
    rep.lossInd = economyLoss(ipn.hFinal, z.outStrength());
    rep.industryLossInd = industryLosses(ipn, z);
  });

  const ScenarioEnsemble ens = runStage("sample", [&] {
    SamplerOptions so;
    so.epsilon = cfg.epsilon;
    so.maxRescaleIterations = cfg.maxRescaleIters;
    so.maxScenarioRetries = cfg.maxScenarioRetries;
    so.lockRule = cfg.lockRule;
    so.threads = cfg.threads;
    return sampleEnsemble(sampleNet, base, cfg.scenarioCount, deriveSeed(cfg.seed, {0x2u}), so, cfg.donor);
  });
  rep.residuals = ens.residuals;

  runStage("propagate", [&] {
    const std::size_t count = ens.size();
    const std::size_t m = net.industryCount();
    const std::string partialPath =
        cfg.outputDir.empty() ? std::string() : (fs::path(cfg.outputDir) / ("scenario_losses.partial." + rep.configHash + ".csv")).string();
    std::vector<std::optional<ScenarioOutcome>> done(count);
    if (!partialPath.empty()) {
      if (cfg.resume)
        done = detail::readPartial(partialPath, count, m);
      else
        fs::remove(partialPath);
    }
    std::ofstream partial;
    if (!partialPath.empty()) {
      const bool fresh = !fs::exists(partialPath) || std::all_of(done.begin(), done.end(), [](auto& o) { return !o; });
      partial.open(partialPath, fresh ? std::ios::trunc : std::ios::app);
      if (fresh) partial << detail::partialHeader(m) << "\n";
    }
    for (const auto& o : done) rep.resumedScenarios += o.has_value();

    std::vector<std::size_t> todo;
    for (std::size_t l = 0; l < count; ++l)
      if (!done[l]) todo.push_back(l);
    const std::size_t chunk = std::max<std::size_t>(16, 4 * cfg.threads);
    for (std::size_t start = 0; start < todo.size(); start += chunk) {
      const std::size_t end = std::min(todo.size(), start + chunk);
      parallelFor(end - start, cfg.threads, [&](std::size_t t) {
        const std::size_t l = todo[start + t];
        const auto& psi = ens.psi[l];
        const PropagationResult r = propagate(cal, psi, popt);
        for (std::size_t i = 0; i < psi.size(); ++i)
          if (r.hFinal[i] > psi[i] + 1e-12)
            throw InvalidArgument("scenario " + std::to_string(l) + ": production above capacity at firm " +
                                  net.firmId(i));
        ScenarioOutcome o;
        o.lossFirm = economyLoss(r.hFinal, s.sOut);
        o.iterations = r.iterations;
        o.industryLoss = industryLosses(r, net, s);
        if (calLinear) o.lossLinear = economyLoss(propagate(*calLinear, psi, popt).hFinal, s.sOut);
        done[l] = std::move(o);
      });
      if (partial.is_open()) {
        for (std::size_t t = start; t < end; ++t) partial << detail::partialRow(todo[t], *done[todo[t]]) << "\n";
        partial.flush();
      }
    }
    if (partial.is_open()) partial.close();
    rep.scenarios.reserve(count);
    for (auto& o : done) rep.scenarios.push_back(std::move(*o));
  });

  runStage("report", [&] {
    const bool checkDominance = cfg.compareLinear && cfg.mode == ProductionMode::Glpf && ess.allEssential();
    auto inUnit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!inUnit(rep.lossFirmBase) || !inUnit(rep.lossInd)) throw InvalidArgument("loss outside [0,1]");
    for (std::size_t l = 0; l < rep.scenarios.size(); ++l) {
      const auto& o = rep.scenarios[l];
      if (!inUnit(o.lossFirm)) throw InvalidArgument("scenario " + std::to_string(l) + ": loss outside [0,1]");
      if (checkDominance && o.lossLinear && *o.lossLinear > o.lossFirm + 1e-12)
        throw InvalidArgument("scenario " + std::to_string(l) + ": linear loss exceeds the generalized-Leontief loss");
      for (const auto& r : rep.residuals[l])
        if (r.in > cfg.epsilon || r.out > cfg.epsilon)
          throw InvalidArgument("scenario " + std::to_string(l) + ": residual above epsilon");
    }

    std::vector<double> losses;
    for (const auto& o : rep.scenarios) losses.push_back(o.lossFirm);
    if (!losses.empty()) {
      rep.scenarioSummary = summarize(losses);
      rep.scenarioMin = *std::min_element(losses.begin(), losses.end());
      rep.scenarioMax = *std::max_element(losses.begin(), losses.end());
    }
    double sum = 0.0, sumAbs = 0.0;
    for (const auto& o : rep.scenarios) {
      if (!(o.lossFirm > 0.0)) continue;
      const double d = rep.lossInd / o.lossFirm - 1.0;
      sum += d;
      sumAbs += std::abs(d);
      ++rep.deviationCount;
    }
    if (rep.deviationCount > 0) {
      rep.relativeDeviation = sum / static_cast<double>(rep.deviationCount);
      rep.meanAbsoluteDeviation = sumAbs / static_cast<double>(rep.deviationCount);
    }
    if (rep.lossFirmBase > 0.0) rep.baseRelativeDeviation = rep.lossInd / rep.lossFirmBase - 1.0;

    rep.industryDeviation.assign(net.industryCount(), std::nullopt);
    for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
      if (!rep.industryLossInd[k]) continue;
      double acc = 0.0;
      std::size_t c = 0;
      for (const auto& o : rep.scenarios) {
        if (!o.industryLoss[k] || !(*o.industryLoss[k] > 0.0)) continue;
        acc += *rep.industryLossInd[k] / *o.industryLoss[k] - 1.0;
        ++c;
      }
      if (c > 0) rep.industryDeviation[k] = acc / static_cast<double>(c);
    }

    if (cfg.outputDir.empty()) return;
    const fs::path dir(cfg.outputDir);

    std::string sl = cfg.compareLinear ? "scenario,loss_firm,loss_linear,iterations\n" : "scenario,loss_firm,iterations\n";
    for (std::size_t l = 0; l < rep.scenarios.size(); ++l) {
      csv::RecordWriter w;
      w << l << rep.scenarios[l].lossFirm;
      if (cfg.compareLinear) w << optionalCell(rep.scenarios[l].lossLinear);
      w << rep.scenarios[l].iterations;
      sl += w.str() + "\n";
    }
    io::writeText((dir / "scenario_losses.csv").string(), sl);

    std::string hist = "bin,lower,upper,count\n";
    const auto bins = histogram(losses, cfg.histogramBins);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      csv::RecordWriter w;
      w << b << bins[b].lower << bins[b].upper << bins[b].count;
      hist += w.str() + "\n";
    }
    io::writeText((dir / "loss_histogram.csv").string(), hist);

    std::string il = "scenario,industry,loss\n";
    for (std::size_t l = 0; l < rep.scenarios.size(); ++l)
      for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
        if (!rep.reported[k]) continue;
        csv::RecordWriter w;
        w << l << net.industryLabel(k) << optionalCell(rep.scenarios[l].industryLoss[k]);
        il += w.str() + "\n";
      }
    io::writeText((dir / "industry_losses.csv").string(), il);

    std::string is = "industry,loss_ipn,loss_fpn_base,count,mean,std,p5,p25,p50,p75,p95,relative_deviation\n";
    for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
      if (!rep.reported[k]) continue;
      std::vector<double> v;
      for (const auto& o : rep.scenarios)
        if (o.industryLoss[k]) v.push_back(*o.industryLoss[k]);
      csv::RecordWriter w;
      w << net.industryLabel(k) << optionalCell(rep.industryLossInd[k]) << optionalCell(rep.industryLossBase[k]);
      if (v.empty()) {
        w << std::size_t{0};
        for (int c = 0; c < 7; ++c) w << "";
      } else {
        const auto d = summarize(std::move(v));
        w << d.count << d.mean << d.std << d.p5 << d.p25 << d.p50 << d.p75 << d.p95;
      }
      w << optionalCell(rep.industryDeviation[k]);
      is += w.str() + "\n";
    }
    io::writeText((dir / "industry_summary.csv").string(), is);

    std::string rs = "scenario,industry,res_in,res_out\n";
    for (std::size_t l = 0; l < rep.residuals.size(); ++l)
      for (IndustryIndex k = 0; k < rep.residuals[l].size(); ++k) {
        csv::RecordWriter w;
        w << l << sampleNet.industryLabel(k) << rep.residuals[l][k].in << rep.residuals[l][k].out;
        rs += w.str() + "\n";
      }
    io::writeText((dir / "residuals.csv").string(), rs);

    io::writeShock((dir / "base_psi.csv").string(), net, base.psi());

    nlohmann::ordered_json j;
    j["config_hash"] = rep.configHash;
    j["seed"] = rep.seed;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.toKeyValues())
      if (!ExperimentConfig::isOperational(k)) c[k] = v;
    j["config"] = c;
    j["firms"] = rep.firms;
    j["industries"] = net.industryCount();
    j["imputed_firms"] = rep.imputedFirms;
    j["loss_firm_base"] = rep.lossFirmBase;
    j["loss_ind"] = rep.lossInd;
    j["scenario_count"] = rep.scenarios.size();
    if (rep.scenarioSummary) {
      auto sj = summaryJson(*rep.scenarioSummary);
      sj["min"] = rep.scenarioMin;
      sj["max"] = rep.scenarioMax;
      j["loss_firm_scenarios"] = sj;
    } else {
      j["loss_firm_scenarios"] = nullptr;
    }
    j["relative_deviation_mean"] = optionalJson(rep.relativeDeviation);
    j["mean_absolute_relative_deviation"] = optionalJson(rep.meanAbsoluteDeviation);
    j["base_relative_deviation"] = optionalJson(rep.baseRelativeDeviation);
    j["deviation_scenarios"] = rep.deviationCount;
    j["propagation_iterations_base"] = baseRun.iterations;
    j["propagation_converged_base"] = baseRun.converged;
    io::writeText((dir / "report.json").string(), j.dump(2) + "\n");

    const fs::path partialPath = dir / ("scenario_losses.partial." + rep.configHash + ".csv");
    fs::remove(partialPath);
  });
  return rep;
}

}  // namespace aggerr
