#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace aggerr;
using Catch::Matchers::WithinAbs;

TEST_CASE("digraph rejects invalid edges", "[network]") {
  CHECK_THROWS_AS(Digraph(2, {{0, 0, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(Digraph(2, {{0, 1, 1.0}, {0, 1, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(Digraph(2, {{0, 1, 0.0}}), InvalidArgument);
  CHECK_THROWS_AS(Digraph(2, {{0, 1, -1.0}}), InvalidArgument);
  CHECK_THROWS_AS(Digraph(2, {{0, 2, 1.0}}), InvalidArgument);
  CHECK_NOTHROW(Digraph(2, {{0, 0, 1.0}}, true));
}

TEST_CASE("firm network validates industries", "[network]") {
  CHECK_THROWS_AS(FirmNetwork::fromIndices(2, {0, 2}, {}), InvalidArgument);
  auto net = FirmNetwork::fromIndices(3, {2, 0, 0}, {{0, 1, 1.0}});
  CHECK(net.members(0) == std::vector<NodeIndex>{1, 2});
  CHECK(net.members(1).empty());
  CHECK(net.industryLabel(2) == "3");
}

TEST_CASE("fixture loads with eleven firms in five industries", "[network]") {
  auto f = testing::loadToy();
  CHECK(f.net.nodeCount() == 11);
  CHECK(f.net.industryCount() == 5);
  CHECK(f.net.industryLabels() == std::vector<std::string>{"1", "2", "3", "4", "5"});
  CHECK_FALSE(f.net.residualIndustry());
}

TEST_CASE("strengths of the fixture", "[network]") {
  auto f = testing::loadToy();
  const auto s = strengths(f.net);
  const NodeIndex six = *f.net.findFirm("6");
  // firm 6 buys from firms 1-4; firm 3 is one of two suppliers of industry 2
  CHECK(s.kIn[six] == 4);
  CHECK(s.sIn[six] == 16.0);
  CHECK(s.sOut[six] == 4.0);
  CHECK(s.kOut[six] == 2);
  const NodeIndex ten = *f.net.findFirm("10");
  CHECK(s.sIn[ten] == 4.0);
  CHECK(s.kIn[ten] == 3);
}

TEST_CASE("isolated node has zero strengths and degrees", "[network]") {
  auto net = FirmNetwork::fromIndices(1, {0, 0, 0}, {{0, 1, 2.0}});
  const auto s = strengths(net);
  CHECK(s.sIn[2] == 0.0);
  CHECK(s.sOut[2] == 0.0);
  CHECK(s.kIn[2] == 0);
  CHECK(s.kOut[2] == 0);
}

TEST_CASE("strengths match dense row and column sums", "[network]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto inst = testing::randomInstance(50, 4, 0.1, seed);
    const auto s = strengths(inst.net);
    const auto sIn = oracle::inStrength(inst.dense), sOut = oracle::outStrength(inst.dense);
    const auto kIn = oracle::inDegree(inst.dense), kOut = oracle::outDegree(inst.dense);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK_THAT(s.sIn[i], WithinAbs(sIn[i], 1e-9));
      CHECK_THAT(s.sOut[i], WithinAbs(sOut[i], 1e-9));
      CHECK(s.kIn[i] == kIn[i]);
      CHECK(s.kOut[i] == kOut[i]);
    }
  }
}

TEST_CASE("aggregation of the fixture", "[network]") {
  auto f = testing::loadToy();
  const auto z = aggregateToIndustry(f.net);
  const auto& g = f.net.graph();
  auto w = [&](const char* a, const char* b) {
    for (const Arc& arc : g.outArcs(*f.net.findFirm(a)))
      if (arc.node == *f.net.findFirm(b)) return arc.weight;
    return 0.0;
  };
  CHECK(z.flow(1, 2) == w("3", "6") + w("4", "6") + w("4", "7") + w("5", "7"));
  CHECK(z.flow(1, 2) == 16.0);
  CHECK(z.outStrength() == std::vector<double>{8, 16, 8, 2, 6});
  double total = 0.0;
  for (double v : z.flows()) total += v;
  CHECK(total == g.totalWeight());
}

TEST_CASE("aggregation with one industry per firm relabels W", "[network]") {
  auto inst = testing::randomInstance(8, 8, 0.4, 11);
  const auto z = aggregateToIndustry(inst.net);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(z.flow(i, j) == inst.dense.w[i][j]);
}

TEST_CASE("aggregation matches the triple-loop oracle and conserves flow", "[network]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto inst = testing::randomInstance(50, 4, 0.15, 100 + seed);
    const auto z = aggregateToIndustry(inst.net);
    const auto zd = oracle::aggregate(inst.dense);
    double total = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t l = 0; l < 4; ++l) {
        CHECK_THAT(z.flow(k, l), WithinAbs(zd[k][l], 1e-9));
        total += z.flow(k, l);
      }
    CHECK_THAT(total, WithinAbs(inst.net.graph().totalWeight(), 1e-9 * total));
    for (std::size_t k = 0; k < 4; ++k) {
      double rowSum = 0.0, colSum = 0.0;
      for (std::size_t l = 0; l < 4; ++l) {
        rowSum += z.flow(k, l);
        colSum += z.flow(l, k);
      }
      CHECK_THAT(z.outStrength()[k], WithinAbs(rowSum, 1e-9));
      CHECK_THAT(z.inStrength()[k], WithinAbs(colSum, 1e-9));
    }
  }
}

TEST_CASE("degree bins", "[network]") {
  const auto bins = canonicalDegreeBins();
  CHECK(assignDegreeBin(5, bins) == std::optional<std::size_t>(0));
  CHECK(assignDegreeBin(6, bins) == std::optional<std::size_t>(1));
  CHECK(assignDegreeBin(35, bins) == std::optional<std::size_t>(2));
  CHECK(assignDegreeBin(36, bins) == std::optional<std::size_t>(3));
  CHECK(assignDegreeBin(100000, bins) == std::optional<std::size_t>(3));
  CHECK_FALSE(assignDegreeBin(0, bins));
  CHECK(bins[3].label() == "36+");
  CHECK(bins[0].label() == "1-5");

  const std::vector<DegreeBin> overlapping{{1, 5}, {5, 10}};
  CHECK_THROWS_AS(assignDegreeBin(3, overlapping), ConfigError);
  const std::vector<DegreeBin> zeroLower{{0, 5}};
  CHECK_THROWS_AS(validateDegreeBins(zeroLower), ConfigError);
}
