#pragma once

#include <aggerr/csv.hpp>
#include <aggerr/error.hpp>
#include <aggerr/propagation.hpp>
#include <aggerr/sampler.hpp>
#include <aggerr/synthetic.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace aggerr {

// Flat `key = value` text; `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parseKeyValues(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineNo, "expected key = value");
    std::string key = csv::trim(t.substr(0, eq));
    if (key.empty()) throw ParseError(source, lineNo, "empty key");
    if (kv.count(key)) throw ParseError(source, lineNo, "duplicate key '" + key + "'");
    kv[key] = csv::trim(t.substr(eq + 1));
  }
  return kv;
}

inline KeyValues readKeyValues(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parseKeyValues(in, path);
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

struct ExperimentConfig {
  // inputs; an empty edge path means a synthetic network
  std::string edges;
  std::string meta;
  std::string employment;
  std::string shock;
  std::string essentiality;
  std::string samplingLabel = "industry";
  std::string reportLabel = "industry";
  InputClass defaultClass = InputClass::Essential;

  ProductionMode mode = ProductionMode::Glpf;
  bool compareLinear = false;
  double tolerance = 1e-9;
  std::size_t maxIterations = 100000;

  std::size_t scenarioCount = 100;
  std::uint64_t seed = 1;
  double epsilon = 0.01;
  DonorConfig donor = DonorConfig::empirical();
  std::size_t maxRescaleIters = 1000;
  std::size_t maxScenarioRetries = 10;
  LockRule lockRule = LockRule::ClampedOnly;
  std::size_t imputationDraws = 11;

  std::size_t histogramBins = 30;
  bool includeResidual = false;

  SyntheticNetworkSpec synthetic;
  double syntheticUnshocked = 0.4;
  double syntheticMissing = 0.05;

  std::string outputDir;
  std::size_t threads = 1;
  bool resume = true;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "edges", "meta", "employment", "shock", "essentiality", "sampling_label", "report_label", "default_class",
        "mode", "compare_linear", "tolerance", "max_iterations", "scenario_count", "seed", "epsilon", "donor",
        "max_rescale_iters", "max_scenario_retries", "lock_rule", "imputation_draws", "histogram_bins",
        "include_residual", "gen_n", "gen_m", "gen_topology", "gen_exponent", "gen_min_degree", "gen_weight_mu",
        "gen_weight_sigma", "gen_industry_exponent", "gen_sink_fraction", "gen_unshocked", "gen_missing", "output_dir", "threads",
        "resume"};
    return k;
  }

  // Keys that do not change any result and stay out of the hash.
  static bool isOperational(const std::string& key) {
    return key == "output_dir" || key == "threads" || key == "resume";
  }

  static ExperimentConfig fromKeyValues(const KeyValues& kv);
  KeyValues toKeyValues() const;

  std::string hash() const {
    std::string canonical;
    for (const auto& [k, v] : toKeyValues())
      if (!isOperational(k)) canonical += k + "=" + v + "\n";
    return hex64(fnv1a(canonical));
  }
};

namespace detail {

inline double configDouble(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

inline std::uint64_t configUnsigned(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": not a non-negative integer: '" + v + "'");
  return x;
}

inline bool configBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// `empirical` or `beta(a,b)`.
inline DonorConfig parseDonor(const std::string& v) {
  if (v == "empirical") return DonorConfig::empirical();
  if (v.rfind("beta(", 0) == 0 && v.back() == ')') {
    const std::string inner = v.substr(5, v.size() - 6);
    const auto comma = inner.find(',');
    if (comma != std::string::npos) {
      const double a = configDouble("donor", csv::trim(inner.substr(0, comma)));
      const double b = configDouble("donor", csv::trim(inner.substr(comma + 1)));
      if (a > 0.0 && b > 0.0) return DonorConfig::betaDistribution(a, b);
    }
  }
  throw ConfigError("donor: expected empirical or beta(a,b) with a, b > 0, got '" + v + "'");
}

inline std::string donorString(const DonorConfig& d) {
  if (!d.beta) return "empirical";
  return "beta(" + csv::formatDouble(d.a) + "," + csv::formatDouble(d.b) + ")";
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::fromKeyValues(const KeyValues& kv) {
  using namespace detail;
  const auto& known = keys();
  for (const auto& [k, v] : kv)
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown config key '" + k + "'");

  ExperimentConfig c;
  auto get = [&](const char* key, auto apply) {
    auto it = kv.find(key);
    if (it != kv.end()) apply(it->second);
  };
  get("edges", [&](const std::string& v) { c.edges = v; });
  get("meta", [&](const std::string& v) { c.meta = v; });
  get("employment", [&](const std::string& v) { c.employment = v; });
  get("shock", [&](const std::string& v) { c.shock = v; });
  get("essentiality", [&](const std::string& v) { c.essentiality = v; });
  get("sampling_label", [&](const std::string& v) { c.samplingLabel = v; });
  get("report_label", [&](const std::string& v) { c.reportLabel = v; });
  get("default_class", [&](const std::string& v) {
    if (v == "essential")
      c.defaultClass = InputClass::Essential;
    else if (v == "non_essential")
      c.defaultClass = InputClass::NonEssential;
    else
      throw ConfigError("default_class: expected essential or non_essential");
  });
  get("mode", [&](const std::string& v) {
    if (v == "glpf")
      c.mode = ProductionMode::Glpf;
    else if (v == "linear")
      c.mode = ProductionMode::Linear;
    else
      throw ConfigError("mode: expected glpf or linear");
  });
  get("compare_linear", [&](const std::string& v) { c.compareLinear = configBool("compare_linear", v); });
  get("tolerance", [&](const std::string& v) { c.tolerance = configDouble("tolerance", v); });
  get("max_iterations", [&](const std::string& v) { c.maxIterations = configUnsigned("max_iterations", v); });
  get("scenario_count", [&](const std::string& v) { c.scenarioCount = configUnsigned("scenario_count", v); });
  get("seed", [&](const std::string& v) { c.seed = configUnsigned("seed", v); });
  get("epsilon", [&](const std::string& v) { c.epsilon = configDouble("epsilon", v); });
  get("donor", [&](const std::string& v) { c.donor = parseDonor(v); });
  get("max_rescale_iters", [&](const std::string& v) { c.maxRescaleIters = configUnsigned("max_rescale_iters", v); });
  get("max_scenario_retries",
      [&](const std::string& v) { c.maxScenarioRetries = configUnsigned("max_scenario_retries", v); });
  get("lock_rule", [&](const std::string& v) {
    if (v == "clamped_only")
      c.lockRule = LockRule::ClampedOnly;
    else if (v == "any_positive")
      c.lockRule = LockRule::AnyPositive;
    else
      throw ConfigError("lock_rule: expected clamped_only or any_positive");
  });
  get("imputation_draws", [&](const std::string& v) { c.imputationDraws = configUnsigned("imputation_draws", v); });
  get("histogram_bins", [&](const std::string& v) { c.histogramBins = configUnsigned("histogram_bins", v); });
  get("include_residual", [&](const std::string& v) { c.includeResidual = configBool("include_residual", v); });
  get("gen_n", [&](const std::string& v) { c.synthetic.n = configUnsigned("gen_n", v); });
  get("gen_m", [&](const std::string& v) { c.synthetic.m = configUnsigned("gen_m", v); });
  get("gen_topology", [&](const std::string& v) {
    if (v == "powerlaw")
      c.synthetic.topology = Topology::PowerLaw;
    else if (v == "chain")
      c.synthetic.topology = Topology::Chain;
    else
      throw ConfigError("gen_topology: expected powerlaw or chain");
  });
  get("gen_exponent", [&](const std::string& v) { c.synthetic.degreeExponent = configDouble("gen_exponent", v); });
  get("gen_min_degree", [&](const std::string& v) { c.synthetic.minDegree = configUnsigned("gen_min_degree", v); });
  get("gen_weight_mu", [&](const std::string& v) { c.synthetic.weightLogMean = configDouble("gen_weight_mu", v); });
  get("gen_weight_sigma", [&](const std::string& v) { c.synthetic.weightLogSd = configDouble("gen_weight_sigma", v); });
  get("gen_industry_exponent",
      [&](const std::string& v) { c.synthetic.industrySizeExponent = configDouble("gen_industry_exponent", v); });
  get("gen_sink_fraction", [&](const std::string& v) { c.synthetic.sinkFraction = configDouble("gen_sink_fraction", v); });
  get("gen_unshocked", [&](const std::string& v) { c.syntheticUnshocked = configDouble("gen_unshocked", v); });
  get("gen_missing", [&](const std::string& v) { c.syntheticMissing = configDouble("gen_missing", v); });
  get("output_dir", [&](const std::string& v) { c.outputDir = v; });
  get("threads", [&](const std::string& v) { c.threads = configUnsigned("threads", v); });
  get("resume", [&](const std::string& v) { c.resume = configBool("resume", v); });
  c.synthetic.seed = c.seed;

  if (!(c.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (c.histogramBins == 0) throw ConfigError("histogram_bins must be at least 1");
  if (c.threads == 0) throw ConfigError("threads must be at least 1");
  if (!(c.syntheticMissing >= 0.0 && c.syntheticMissing < 1.0)) throw ConfigError("gen_missing must be in [0,1)");
  if (!(c.syntheticUnshocked >= 0.0 && c.syntheticUnshocked <= 1.0)) throw ConfigError("gen_unshocked must be in [0,1]");
  if (!(c.synthetic.sinkFraction >= 0.0 && c.synthetic.sinkFraction < 1.0))
    throw ConfigError("gen_sink_fraction must be in [0,1)");
  if (c.edges.empty() != c.meta.empty()) throw ConfigError("edges and meta must be given together");
  if (!c.shock.empty() && !c.employment.empty()) throw ConfigError("give either shock or employment, not both");
  return c;
}

inline KeyValues ExperimentConfig::toKeyValues() const {
  using csv::formatDouble;
  KeyValues kv;
  kv["edges"] = edges;
  kv["meta"] = meta;
  kv["employment"] = employment;
  kv["shock"] = shock;
  kv["essentiality"] = essentiality;
  kv["sampling_label"] = samplingLabel;
  kv["report_label"] = reportLabel;
  kv["default_class"] = defaultClass == InputClass::Essential ? "essential" : "non_essential";
  kv["mode"] = toString(mode);
  kv["compare_linear"] = compareLinear ? "true" : "false";
  kv["tolerance"] = formatDouble(tolerance);
  kv["max_iterations"] = std::to_string(maxIterations);
  kv["scenario_count"] = std::to_string(scenarioCount);
  kv["seed"] = std::to_string(seed);
  kv["epsilon"] = formatDouble(epsilon);
  kv["donor"] = detail::donorString(donor);
  kv["max_rescale_iters"] = std::to_string(maxRescaleIters);
  kv["max_scenario_retries"] = std::to_string(maxScenarioRetries);
  kv["lock_rule"] = lockRule == LockRule::ClampedOnly ? "clamped_only" : "any_positive";
  kv["imputation_draws"] = std::to_string(imputationDraws);
  kv["histogram_bins"] = std::to_string(histogramBins);
  kv["include_residual"] = includeResidual ? "true" : "false";
  kv["gen_n"] = std::to_string(synthetic.n);
  kv["gen_m"] = std::to_string(synthetic.m);
  kv["gen_topology"] = synthetic.topology == Topology::PowerLaw ? "powerlaw" : "chain";
  kv["gen_exponent"] = formatDouble(synthetic.degreeExponent);
  kv["gen_min_degree"] = std::to_string(synthetic.minDegree);
  kv["gen_weight_mu"] = formatDouble(synthetic.weightLogMean);
  kv["gen_weight_sigma"] = formatDouble(synthetic.weightLogSd);
  kv["gen_industry_exponent"] = formatDouble(synthetic.industrySizeExponent);
  kv["gen_sink_fraction"] = formatDouble(synthetic.sinkFraction);
  kv["gen_unshocked"] = formatDouble(syntheticUnshocked);
  kv["gen_missing"] = formatDouble(syntheticMissing);
  kv["output_dir"] = outputDir;
  kv["threads"] = std::to_string(threads);
  kv["resume"] = resume ? "true" : "false";
  return kv;
}

}  // namespace aggerr
