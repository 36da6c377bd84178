#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace aggerr;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

ExperimentConfig fixtureConfig(const std::string& shock) {
  ExperimentConfig c;
  c.edges = testing::dataPath("toy/edges.csv");
  c.meta = testing::dataPath("toy/meta.csv");
  c.essentiality = testing::dataPath("toy/essentiality.csv");
  c.shock = testing::dataPath("toy/" + shock);
  c.scenarioCount = 20;
  c.seed = 3;
  return c;
}

ExperimentConfig syntheticConfig(std::size_t scenarios) {
  ExperimentConfig c;
  c.synthetic.n = 200;
  c.synthetic.m = 5;
  c.synthetic.seed = 7;
  c.seed = 7;
  c.scenarioCount = scenarios;
  return c;
}

std::vector<std::vector<std::string>> rowsOf(const fs::path& p) {
  std::ifstream in(p);
  auto t = csv::parse(in, p.string());
  std::vector<std::vector<std::string>> out;
  for (auto& r : t.rows) out.push_back(r.cells);
  return out;
}

}  // namespace

TEST_CASE("overlap report of the fixture", "[experiment]") {
  auto f = testing::loadToy();
  const auto rows = overlapRows(f.net);
  // five industries, four bins, two directions, two measures
  REQUIRE(rows.size() == 5 * 4 * 2 * 2);
  bool found = false;
  for (const auto& r : rows) {
    if (r.industry == "5" && r.bin == "1-5" && r.direction == Direction::In && r.measure == "oc") {
      REQUIRE(r.summary);
      CHECK(r.summary->mean == 0.5);
      found = true;
    }
    if (r.bin == "36+") CHECK_FALSE(r.summary);
  }
  CHECK(found);

  const std::string text = overlapCsv(rows);
  std::istringstream in(text);
  const auto t = csv::parse(in, "report");
  CHECK(t.header.size() == 12);
  for (const auto& r : t.rows)
    if (r.cells[4] == "0") CHECK(r.cells[5].empty());
}

TEST_CASE("residual industry is left out of the overlap report", "[experiment]") {
  FirmNetwork withResidual({"a", "b", "c", "d"}, {"1", "NA"}, {0, 0, 1, 1},
                           {{2, 0, 1.0}, {3, 1, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}}, IndustryIndex{1});
  for (const auto& r : overlapRows(withResidual)) CHECK(r.industry == "1");
  OverlapReportOptions opt;
  opt.includeResidual = true;
  CHECK(overlapRows(withResidual, opt).size() == 2 * 4 * 2 * 2);
}

TEST_CASE("identical years give unit temporal measures", "[experiment]") {
  auto f = testing::loadToy();
  for (const auto& r : temporalRows(f.net, f.net)) {
    if (!r.summary) continue;
    CHECK(r.summary->mean == 1.0);
    CHECK(r.summary->p5 == 1.0);
  }
  auto dir = testing::scratchDir("overlap_files");
  emitOverlapReport(f.net, {(dir / "o.csv").string(), (dir / "o.json").string(), (dir / "t.csv").string()}, {},
                    &f.net);
  CHECK(fs::exists(dir / "o.csv"));
  CHECK(fs::exists(dir / "t.csv"));
  auto j = nlohmann::json::parse(testing::slurp(dir / "o.json"));
  CHECK(j["pairwise"].size() == 80);
  CHECK(j["firms"] == 11);
}

TEST_CASE("fixture experiment with each knocked-out firm", "[experiment]") {
  for (const char* shock : {"shock_firm3.csv", "shock_firm5.csv"}) {
    auto rep = runAggregationErrorExperiment(fixtureConfig(shock));
    CHECK_THAT(rep.lossInd, WithinAbs(0.2, 1e-9));
    CHECK_THAT(rep.lossFirmBase, WithinAbs(0.2, 1e-9));
    CHECK(rep.phi.phiD == std::vector<double>{1, 0.75, 1, 1, 1});
    CHECK(rep.scenarios.size() == 20);
    REQUIRE(rep.industryLossInd.size() == 5);
    CHECK_THAT(*rep.industryLossInd[0], WithinAbs(0.125, 1e-9));
    CHECK_THAT(*rep.industryLossInd[4], WithinAbs(1.0 / 6.0, 1e-9));
    for (const auto& o : rep.scenarios) {
      CHECK(o.lossFirm >= 0.0);
      CHECK(o.lossFirm <= 1.0);
    }
    for (const auto& res : rep.residuals)
      for (const auto& r : res) {
        CHECK(r.in <= 0.01);
        CHECK(r.out <= 0.01);
      }
  }
  auto two = runAggregationErrorExperiment(fixtureConfig("shock_firm3.csv"));
  auto three = runAggregationErrorExperiment(fixtureConfig("shock_firm5.csv"));
  CHECK(*two.industryLossBase[0] != *three.industryLossBase[0]);
}

TEST_CASE("zero shock yields zero losses and no deviation", "[experiment]") {
  auto cfg = syntheticConfig(5);
  auto dir = testing::scratchDir("zero_shock");
  {
    std::ofstream out(dir / "psi.csv");
    out << "firm,psi\n";
  }
  cfg.synthetic.n = 60;
  cfg.synthetic.m = 3;
  auto net = generateNetwork(cfg.synthetic);
  io::writeFirmNetwork(net, (dir / "e.csv").string(), (dir / "m.csv").string());
  cfg.edges = (dir / "e.csv").string();
  cfg.meta = (dir / "m.csv").string();
  cfg.shock = (dir / "psi.csv").string();
  cfg.outputDir = (dir / "out").string();
  auto rep = runAggregationErrorExperiment(cfg);
  CHECK(rep.lossInd == 0.0);
  CHECK(rep.lossFirmBase == 0.0);
  for (const auto& o : rep.scenarios) CHECK(o.lossFirm == 0.0);
  CHECK_FALSE(rep.relativeDeviation);
  CHECK(rep.deviationCount == 0);
  auto j = nlohmann::json::parse(testing::slurp(dir / "out" / "report.json"));
  CHECK(j["relative_deviation_mean"].is_null());
}

TEST_CASE("linear losses never exceed generalized-Leontief losses", "[experiment]") {
  auto cfg = syntheticConfig(15);
  cfg.compareLinear = true;
  auto rep = runAggregationErrorExperiment(cfg);
  for (const auto& o : rep.scenarios) {
    REQUIRE(o.lossLinear);
    CHECK(*o.lossLinear <= o.lossFirm + 1e-12);
  }
}

TEST_CASE("experiment outputs are deterministic and thread-independent", "[experiment]") {
  auto dir = testing::scratchDir("determinism");
  auto a = syntheticConfig(24);
  a.outputDir = (dir / "a").string();
  auto b = a;
  b.outputDir = (dir / "b").string();
  b.threads = 3;
  runAggregationErrorExperiment(a);
  runAggregationErrorExperiment(b);
  for (const char* file : {"scenario_losses.csv", "loss_histogram.csv", "industry_losses.csv",
                           "industry_summary.csv", "residuals.csv", "base_psi.csv", "report.json"}) {
    INFO(file);
    CHECK(testing::slurp(dir / "a" / file) == testing::slurp(dir / "b" / file));
  }
  for (const auto& e : fs::directory_iterator(dir / "a"))
    CHECK(e.path().filename().string().find("partial") == std::string::npos);
}

TEST_CASE("report files agree with the returned report", "[experiment]") {
  auto dir = testing::scratchDir("consistency");
  auto cfg = syntheticConfig(30);
  cfg.outputDir = dir.string();
  auto rep = runAggregationErrorExperiment(cfg);

  const auto losses = rowsOf(dir / "scenario_losses.csv");
  REQUIRE(losses.size() == 30);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t l = 0; l < losses.size(); ++l) {
    const double lf = csv::parseDouble(losses[l][1], "loss", l);
    CHECK(lf == rep.scenarios[l].lossFirm);
    if (lf > 0.0) {
      sum += rep.lossInd / lf - 1.0;
      ++count;
    }
  }
  auto j = nlohmann::json::parse(testing::slurp(dir / "report.json"));
  REQUIRE(count > 0);
  CHECK_THAT(j["relative_deviation_mean"].get<double>(), WithinAbs(sum / static_cast<double>(count), 1e-12));
  CHECK(j["config_hash"] == cfg.hash());
  CHECK_FALSE(j["config"].contains("output_dir"));

  std::size_t histTotal = 0;
  for (const auto& r : rowsOf(dir / "loss_histogram.csv")) histTotal += std::stoul(r[3]);
  CHECK(histTotal == 30);

  const auto res = rowsOf(dir / "residuals.csv");
  CHECK(res.size() == 30 * 5);
  for (const auto& r : res) {
    CHECK(csv::parseDouble(r[2], "res", 0) <= 0.01);
    CHECK(csv::parseDouble(r[3], "res", 0) <= 0.01);
  }
  CHECK(rowsOf(dir / "industry_losses.csv").size() == 30 * 5);
}

TEST_CASE("an interrupted run resumes from its partial file", "[experiment]") {
  auto dir = testing::scratchDir("resume");
  auto cfg = syntheticConfig(20);
  cfg.outputDir = (dir / "full").string();
  auto full = runAggregationErrorExperiment(cfg);

  auto resumed = cfg;
  resumed.outputDir = (dir / "resumed").string();
  fs::create_directories(resumed.outputDir);
  {
    std::ofstream p(fs::path(resumed.outputDir) / ("scenario_losses.partial." + cfg.hash() + ".csv"));
    p << detail::partialHeader(5) << "\n";
    for (std::size_t l = 0; l < 7; ++l) p << detail::partialRow(l, full.scenarios[l]) << "\n";
  }
  auto rep = runAggregationErrorExperiment(resumed);
  CHECK(rep.resumedScenarios == 7);
  for (const char* file : {"scenario_losses.csv", "industry_summary.csv", "report.json"}) {
    INFO(file);
    CHECK(testing::slurp(dir / "full" / file) == testing::slurp(dir / "resumed" / file));
  }

  auto fresh = resumed;
  fresh.resume = false;
  CHECK(runAggregationErrorExperiment(fresh).resumedScenarios == 0);
}

TEST_CASE("failures carry the stage name", "[experiment]") {
  auto cfg = syntheticConfig(2);
  cfg.edges = "/nonexistent/edges.csv";
  cfg.meta = "/nonexistent/meta.csv";
  try {
    runAggregationErrorExperiment(cfg);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
  }

  auto dir = testing::scratchDir("bad_shock");
  {
    std::ofstream out(dir / "psi.csv");
    out << "firm,psi\nnot_a_firm,0.5\n";
  }
  auto bad = syntheticConfig(2);
  auto net = generateNetwork(bad.synthetic);
  io::writeFirmNetwork(net, (dir / "e.csv").string(), (dir / "m.csv").string());
  bad.edges = (dir / "e.csv").string();
  bad.meta = (dir / "m.csv").string();
  bad.shock = (dir / "psi.csv").string();
  try {
    runAggregationErrorExperiment(bad);
    FAIL("expected an error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "shock");
  }
}

TEST_CASE("a coarser sampling label keeps the reported aggregate", "[experiment]") {
  auto dir = testing::scratchDir("labels");
  {
    std::ofstream e(dir / "e.csv");
    e << "supplier,buyer,weight\n";
    const char* rows[] = {"a,c,2", "b,c,1", "c,d,3", "d,a,1", "d,b,2", "e,f,1", "f,a,2", "b,e,1"};
    for (const char* r : rows) e << r << "\n";
    std::ofstream m(dir / "m.csv");
    m << "firm,industry,sector\na,1,x\nb,1,x\nc,2,x\nd,3,y\ne,3,y\nf,4,y\n";
  }
  ExperimentConfig cfg;
  cfg.edges = (dir / "e.csv").string();
  cfg.meta = (dir / "m.csv").string();
  cfg.samplingLabel = "sector";
  cfg.scenarioCount = 10;
  {
    std::ofstream s(dir / "psi.csv");
    s << "firm,psi\na,0.5\nd,0.2\n";
  }
  cfg.shock = (dir / "psi.csv").string();
  auto rep = runAggregationErrorExperiment(cfg);
  CHECK(rep.samplingLabels == std::vector<std::string>{"x", "y"});
  CHECK(rep.industryLabels.size() == 4);
  for (const auto& res : rep.residuals) CHECK(res.size() == 2);
}
