#include <aggerr/aggerr.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>

using namespace aggerr;

namespace {

struct NetworkArgs {
  std::string edges;
  std::string meta;
  std::string label = "industry";

  void add(CLI::App* app) {
    app->add_option("--edges", edges, "edge list (supplier,buyer,weight)")->required()->check(CLI::ExistingFile);
    app->add_option("--meta", meta, "firm metadata (firm,<label>)")->required()->check(CLI::ExistingFile);
    app->add_option("--label", label, "metadata column used as industry")->capture_default_str();
  }
  FirmNetwork load() const { return io::loadFirmNetwork(edges, meta, label); }
};

ProductionMode parseMode(const std::string& s) {
  if (s == "glpf") return ProductionMode::Glpf;
  if (s == "linear") return ProductionMode::Linear;
  throw ConfigError("mode: expected glpf or linear");
}

void ensureParent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

nlohmann::ordered_json industryLossJson(const std::vector<std::string>& labels,
                                        const std::vector<std::optional<double>>& losses) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < labels.size(); ++k) j[labels[k]] = optionalJson(losses[k]);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Firm-level versus industry-level shock propagation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic network (and employment file)");
  SyntheticNetworkSpec genSpec;
  std::string genTopology = "powerlaw", genEdges, genMeta, genEmployment;
  double genUnshocked = 0.4, genMissing = 0.0;
  gen->add_option("--n", genSpec.n, "number of firms")->capture_default_str();
  gen->add_option("--m", genSpec.m, "number of industries")->capture_default_str();
  gen->add_option("--topology", genTopology, "powerlaw or chain")->capture_default_str();
  gen->add_option("--exponent", genSpec.degreeExponent, "out-degree tail exponent")->capture_default_str();
  gen->add_option("--min-degree", genSpec.minDegree)->capture_default_str();
  gen->add_option("--weight-mu", genSpec.weightLogMean)->capture_default_str();
  gen->add_option("--weight-sigma", genSpec.weightLogSd)->capture_default_str();
  gen->add_option("--sink-fraction", genSpec.sinkFraction, "share of firms without business buyers")->capture_default_str();
  gen->add_option("--seed", genSpec.seed)->capture_default_str();
  gen->add_option("--edges-out", genEdges)->required();
  gen->add_option("--meta-out", genMeta)->required();
  gen->add_option("--employment-out", genEmployment);
  gen->add_option("--unshocked", genUnshocked)->capture_default_str();
  gen->add_option("--missing", genMissing)->capture_default_str();

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "industry network Z from a firm network");
  NetworkArgs aggNet;
  std::string aggOut;
  aggNet.add(agg);
  agg->add_option("--out", aggOut, "industry matrix csv")->required();

  // overlaps
  auto* ovl = app.add_subcommand("overlaps", "within-industry similarity of input and output vectors");
  NetworkArgs ovlNet;
  std::string ovlOut, ovlJson, prevEdges, prevMeta, temporalOut;
  bool includeResidual = false;
  ovlNet.add(ovl);
  ovl->add_option("--out", ovlOut, "summary csv")->required();
  ovl->add_option("--json", ovlJson, "summary json");
  ovl->add_option("--prev-edges", prevEdges, "previous-year edge list")->check(CLI::ExistingFile);
  ovl->add_option("--prev-meta", prevMeta, "previous-year metadata")->check(CLI::ExistingFile);
  ovl->add_option("--temporal-out", temporalOut, "temporal summary csv");
  ovl->add_flag("--include-residual", includeResidual, "report the residual industry too");

  // shock
  auto* shk = app.add_subcommand("shock", "firm shock from employment counts");
  NetworkArgs shkNet;
  std::string shkEmployment, shkOut, shkPhiOut, shkEss;
  std::size_t shkDraws = 11;
  std::uint64_t shkSeed = 1;
  shkNet.add(shk);
  shk->add_option("--employment", shkEmployment, "firm,e_jan,e_may")->required()->check(CLI::ExistingFile);
  shk->add_option("--out", shkOut, "firm,psi csv")->required();
  shk->add_option("--phi-out", shkPhiOut, "industry shock csv");
  shk->add_option("--essentiality", shkEss)->check(CLI::ExistingFile);
  shk->add_option("--draws", shkDraws, "imputation draws")->capture_default_str();
  shk->add_option("--seed", shkSeed)->capture_default_str();

  // sample
  auto* smp = app.add_subcommand("sample", "firm shocks with the aggregate of a base shock");
  NetworkArgs smpNet;
  std::string smpShock, smpOut, smpResiduals, smpDonor = "empirical", smpLock = "clamped_only";
  std::size_t smpCount = 100, smpThreads = 1;
  std::uint64_t smpSeed = 1;
  SamplerOptions smpOpt;
  smpNet.add(smp);
  smp->add_option("--shock", smpShock, "base shock (firm,psi)")->required()->check(CLI::ExistingFile);
  smp->add_option("--count", smpCount)->capture_default_str();
  smp->add_option("--seed", smpSeed)->capture_default_str();
  smp->add_option("--epsilon", smpOpt.epsilon)->capture_default_str();
  smp->add_option("--donor", smpDonor, "empirical or beta(a,b)")->capture_default_str();
  smp->add_option("--lock-rule", smpLock, "clamped_only or any_positive")->capture_default_str();
  smp->add_option("--threads", smpThreads)->capture_default_str();
  smp->add_option("--out", smpOut, "wide csv, one psi column per scenario")->required();
  smp->add_option("--residuals", smpResiduals, "scenario,industry,res_in,res_out");

  // propagate
  auto* prp = app.add_subcommand("propagate", "propagate a firm shock on the firm network");
  NetworkArgs prpNet;
  std::string prpShock, prpEss, prpMode = "glpf", prpOut, prpSummary, prpDefault = "essential";
  double prpTol = 1e-9;
  std::size_t prpMaxIter = 100000;
  prpNet.add(prp);
  prp->add_option("--shock", prpShock, "firm,psi")->required()->check(CLI::ExistingFile);
  prp->add_option("--essentiality", prpEss)->check(CLI::ExistingFile);
  prp->add_option("--default-class", prpDefault, "essential or non_essential")->capture_default_str();
  prp->add_option("--mode", prpMode, "glpf or linear")->capture_default_str();
  prp->add_option("--tolerance", prpTol)->capture_default_str();
  prp->add_option("--max-iterations", prpMaxIter)->capture_default_str();
  prp->add_option("--out", prpOut, "firm,h_down,h_up,h_final");
  prp->add_option("--summary", prpSummary, "json summary");

  // experiment
  auto* exp = app.add_subcommand("experiment", "aggregation-error experiment");
  std::string configFile;
  std::map<std::string, std::string> overrides;
  exp->add_option("--config", configFile, "key = value file")->check(CLI::ExistingFile);
  for (const auto& key : ExperimentConfig::keys())
    exp->add_option_function<std::string>("--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (genTopology == "chain")
        genSpec.topology = Topology::Chain;
      else if (genTopology != "powerlaw")
        throw ConfigError("topology: expected powerlaw or chain");
      const auto net = generateNetwork(genSpec);
      ensureParent(genEdges);
      ensureParent(genMeta);
      io::writeFirmNetwork(net, genEdges, genMeta);
      if (!genEmployment.empty()) {
        std::string text = "firm,e_jan,e_may\n";
        for (const auto& r : generateEmployment(net, {genUnshocked, genMissing, genSpec.seed})) {
          csv::RecordWriter w;
          w << r.firm << (r.eJan ? std::to_string(*r.eJan) : "") << (r.eMay ? std::to_string(*r.eMay) : "");
          text += w.str() + "\n";
        }
        ensureParent(genEmployment);
        io::writeText(genEmployment, text);
      }
      std::cout << "firms " << net.nodeCount() << ", edges " << net.edges().size() << ", industries "
                << net.industryCount() << "\n";
    } else if (*agg) {
      const auto z = aggregateToIndustry(aggNet.load());
      ensureParent(aggOut);
      io::writeIndustryNetwork(z, aggOut);
      std::cout << "industries " << z.industryCount() << "\n";
    } else if (*ovl) {
      const auto net = ovlNet.load();
      if (prevEdges.empty() != prevMeta.empty())
        throw ConfigError("--prev-edges and --prev-meta must be given together");
      std::optional<FirmNetwork> prev;
      if (!prevEdges.empty()) prev = io::loadFirmNetwork(prevEdges, prevMeta, ovlNet.label);
      OverlapReportOptions opt;
      opt.includeResidual = includeResidual;
      for (const auto* p : {&ovlOut, &ovlJson, &temporalOut})
        if (!p->empty()) ensureParent(*p);
      emitOverlapReport(net, {ovlOut, ovlJson, temporalOut}, opt, prev ? &*prev : nullptr);
      std::cout << "rows written to " << ovlOut << "\n";
    } else if (*shk) {
      const auto net = shkNet.load();
      const auto ess = shkEss.empty() ? EssentialityTable{} : io::loadEssentiality(shkEss, net.industryLabels());
      const auto cal = calibrateGlpf(net, ess, ProductionMode::Glpf);
      const auto s = strengths(net);
      const auto partial = shockFromEmployment(io::loadEmployment(shkEmployment), net);
      const auto imputed = imputeMissing(partial, net, shkDraws, shkSeed, [&](const FirmShock& sh) {
        return economyLoss(propagate(cal, sh.psi()).hFinal, s.sOut);
      });
      ensureParent(shkOut);
      io::writeShock(shkOut, net, imputed.shock.psi());
      if (!shkPhiOut.empty()) {
        const auto phi = aggregateShock(imputed.shock, net);
        std::string text = "industry,phi_u,phi_d\n";
        for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
          csv::RecordWriter w;
          w << net.industryLabel(k) << phi.phiU[k] << phi.phiD[k];
          text += w.str() + "\n";
        }
        ensureParent(shkPhiOut);
        io::writeText(shkPhiOut, text);
      }
      std::cout << "imputed firms " << partial.missingCount() << "\n";
    } else if (*smp) {
      const auto net = smpNet.load();
      const auto base = io::loadShock(smpShock, net);
      smpOpt.threads = smpThreads;
      const auto kv = ExperimentConfig::fromKeyValues({{"donor", smpDonor}, {"lock_rule", smpLock}});
      smpOpt.lockRule = kv.lockRule;
      const auto ens = sampleEnsemble(net, base, smpCount, smpSeed, smpOpt, kv.donor);
      std::string text = "firm";
      for (std::size_t l = 0; l < ens.size(); ++l) text += ",s" + std::to_string(l);
      text += "\n";
      for (NodeIndex i = 0; i < net.nodeCount(); ++i) {
        csv::RecordWriter w;
        w << net.firmId(i);
        for (std::size_t l = 0; l < ens.size(); ++l) w << ens.psi[l][i];
        text += w.str() + "\n";
      }
      ensureParent(smpOut);
      io::writeText(smpOut, text);
      if (!smpResiduals.empty()) {
        std::string rs = "scenario,industry,res_in,res_out\n";
        for (std::size_t l = 0; l < ens.size(); ++l)
          for (IndustryIndex k = 0; k < net.industryCount(); ++k) {
            csv::RecordWriter w;
            w << l << net.industryLabel(k) << ens.residuals[l][k].in << ens.residuals[l][k].out;
            rs += w.str() + "\n";
          }
        ensureParent(smpResiduals);
        io::writeText(smpResiduals, rs);
      }
      std::cout << "scenarios " << ens.size() << "\n";
    } else if (*prp) {
      const auto net = prpNet.load();
      const auto defaultClass = io::parseInputClass(prpDefault, "--default-class", 0);
      const auto ess = prpEss.empty() ? EssentialityTable(defaultClass)
                                      : io::loadEssentiality(prpEss, net.industryLabels(), defaultClass);
      const auto cal = calibrateGlpf(net, ess, parseMode(prpMode));
      const auto shock = io::loadShock(prpShock, net);
      const auto r = propagate(cal, shock.psi(), {prpTol, prpMaxIter, false});
      const auto s = strengths(net);
      const double loss = economyLoss(r, s);
      if (!prpOut.empty()) {
        ensureParent(prpOut);
        io::writePropagationResult(prpOut, net, r);
      }
      nlohmann::ordered_json j;
      j["economy_loss"] = loss;
      j["industry_losses"] = industryLossJson(net.industryLabels(), industryLosses(r, net, s));
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      if (!prpSummary.empty()) {
        ensureParent(prpSummary);
        io::writeText(prpSummary, j.dump(2) + "\n");
      }
      std::cout << "economy_loss " << csv::formatDouble(loss) << "\n";
      std::cout << "iterations " << r.iterations << (r.converged ? "" : " (not converged)") << "\n";
      if (!r.converged) return 2;
    } else if (*exp) {
      KeyValues kv;
      if (!configFile.empty()) kv = readKeyValues(configFile);
      for (const auto& [k, v] : overrides) kv[k] = v;
      const auto cfg = ExperimentConfig::fromKeyValues(kv);
      const auto rep = runAggregationErrorExperiment(cfg);
      std::cout << "config_hash " << rep.configHash << "\n";
      std::cout << "loss_ind " << csv::formatDouble(rep.lossInd) << "\n";
      std::cout << "loss_firm_base " << csv::formatDouble(rep.lossFirmBase) << "\n";
      if (rep.scenarioSummary)
        std::cout << "loss_firm_scenarios mean " << csv::formatDouble(rep.scenarioSummary->mean) << " min "
                  << csv::formatDouble(rep.scenarioMin) << " max " << csv::formatDouble(rep.scenarioMax) << "\n";
      std::cout << "relative_deviation_mean "
                << (rep.relativeDeviation ? csv::formatDouble(*rep.relativeDeviation) : std::string("undefined"))
                << " over " << rep.deviationCount << " scenarios\n";
      if (rep.resumedScenarios > 0) std::cout << "resumed " << rep.resumedScenarios << " scenarios\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
