#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace aggerr;
using Catch::Matchers::WithinAbs;

namespace {

IndustrySlice slice(std::vector<double> sIn, std::vector<double> sOut) {
  IndustrySlice s;
  for (std::size_t j = 0; j < sIn.size(); ++j) s.firms.push_back(j);
  s.sIn = std::move(sIn);
  s.sOut = std::move(sOut);
  return s;
}

}  // namespace

TEST_CASE("targets of a base shock", "[sampler]") {
  auto f = testing::loadToy();
  const auto s = strengths(f.net);
  auto t = samplingTarget(f.net, s, FirmShock::fromPsi(testing::knockOut(f.net, "3")), 0.01);
  CHECK(t.industries[1].in == 0.0);
  CHECK(t.industries[1].out == 4.0);
  CHECK(t.industries[0].out == 0.0);

  auto phi = aggregateShock(FirmShock::fromPsi(testing::knockOut(f.net, "3")), f.net);
  auto t2 = samplingTarget(f.net, s, phi, 0.01);
  for (IndustryIndex k = 0; k < 5; ++k) {
    CHECK_THAT(t2.industries[k].in, WithinAbs(t.industries[k].in, 1e-12));
    CHECK_THAT(t2.industries[k].out, WithinAbs(t.industries[k].out, 1e-12));
  }
}

TEST_CASE("drawing for a single firm with a point donor", "[sampler]") {
  auto sl = slice({5.0}, {3.0});
  Rng rng = makeRng(1, {});
  auto z = drawShocks(sl, DonorDistribution::empirical({0.4}), {0.4 * 5.0, 0.4 * 3.0}, rng);
  CHECK(z == std::vector<double>{0.4});
}

TEST_CASE("zero targets never enter the draw loop", "[sampler]") {
  auto sl = slice({1, 2, 3}, {3, 2, 1});
  Rng rng = makeRng(1, {});
  const auto before = rng;
  CHECK(drawShocks(sl, DonorDistribution::empirical({0.5}), {0.0, 0.0}, rng) == std::vector<double>(3, 0.0));
  CHECK(rng == before);
}

TEST_CASE("draw loop stops once a sum reaches its target", "[sampler]") {
  auto sl = slice({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {10, 9, 8, 7, 6, 5, 4, 3, 2, 1});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = makeRng(seed, {});
    const IndustryTarget t{20.0, 15.0};
    std::vector<double> donors;
    for (int d = 1; d <= 10; ++d) donors.push_back(0.1 * d);
    auto z = drawShocks(sl, DonorDistribution::empirical(donors), t, rng);
    const auto sums = aggregateSums(sl, z);
    CHECK((sums.in >= t.in || sums.out >= t.out));
    for (double v : z) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("infeasible draws are reported", "[sampler]") {
  auto sl = slice({1, 1}, {1, 1});
  Rng rng = makeRng(3, {});
  CHECK_THROWS_AS(drawShocks(sl, DonorDistribution::empirical({0.5}), {3.0, 3.0}, rng), InfeasibleTarget);
  CHECK_THROWS_AS(drawShocks(sl, DonorDistribution::empirical({0.0}), {1.0, 1.0}, rng), InfeasibleTarget);
}

TEST_CASE("beta donor stays in the unit interval", "[sampler]") {
  auto d = DonorDistribution::beta(2.0, 5.0);
  Rng rng = makeRng(9, {});
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = d.sample(rng);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 1.0);
    mean += x;
  }
  CHECK_THAT(mean / 20000.0, WithinAbs(2.0 / 7.0, 0.01));
  CHECK_THROWS_AS(DonorDistribution::beta(0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(DonorDistribution::empirical({1.5}), InvalidArgument);
}

TEST_CASE("pseudo-inverse of 2x2 systems", "[sampler]") {
  auto v = pseudoInverseSolve(2, 1, 1, 3, {5, 10});
  CHECK_THAT(v.first, WithinAbs(1.0, 1e-12));
  CHECK_THAT(v.second, WithinAbs(3.0, 1e-12));
  // rank one: least-norm least-squares solution
  auto r = pseudoInverseSolve(1, 0, 2, 0, {1, 2});
  CHECK_THAT(r.first, WithinAbs(1.0, 1e-12));
  CHECK(r.second == 0.0);
  auto z = pseudoInverseSolve(0, 0, 0, 0, {1, 1});
  CHECK(z.first == 0.0);
  CHECK(z.second == 0.0);
}

TEST_CASE("rescaling an exact draft changes nothing", "[sampler]") {
  auto sl = slice({2, 4}, {4, 2});
  Rng rng = makeRng(1, {});
  const std::vector<double> draft{0.5, 0.25};
  const auto sums = aggregateSums(sl, draft);
  auto r = rescaleShocks(sl, draft, {sums.in, sums.out}, rng);
  CHECK(r.zeta == draft);
  CHECK(r.iterations == 0);
  CHECK(r.residualIn == 0.0);
  CHECK(r.residualOut == 0.0);
}

TEST_CASE("one in-heavy and one out-heavy firm solve exactly", "[sampler]") {
  // firm 0: s_in 4, s_out 1 (in-heavy); firm 1: s_in 1, s_out 4 (out-heavy)
  auto sl = slice({4, 1}, {1, 4});
  Rng rng = makeRng(1, {});
  // want zeta = (0.5, 0.25): in = 2 + 0.25, out = 0.5 + 1
  const IndustryTarget t{2.25, 1.5};
  auto r = rescaleShocks(sl, {0.2, 0.2}, t, rng);
  // by hand: A = [[0.8, 0.2], [0.2, 0.8]], v = A^-1 b = (2.5, 1.25)
  CHECK_THAT(r.zeta[0], WithinAbs(0.5, 1e-12));
  CHECK_THAT(r.zeta[1], WithinAbs(0.25, 1e-12));
  CHECK(r.iterations == 1);
  CHECK(r.residualIn < 1e-12);
  CHECK(r.residualOut < 1e-12);
}

TEST_CASE("a single firm is forced to the target ratio", "[sampler]") {
  auto sl = slice({5.0}, {2.0});
  Rng rng = makeRng(1, {});
  auto r = rescaleShocks(sl, {0.9}, {0.3 * 5.0, 0.3 * 2.0}, rng);
  CHECK_THAT(r.zeta[0], WithinAbs(0.3, 1e-12));
}

TEST_CASE("rescaling repairs degenerate matrices", "[sampler]") {
  // all draft shocks zero: both rows of A vanish
  auto sl = slice({1, 2, 3, 4}, {4, 3, 2, 1});
  Rng rng = makeRng(5, {});
  const IndustryTarget t{2.0, 2.0};
  auto r = rescaleShocks(sl, {0, 0, 0, 0}, t, rng);
  CHECK(r.repairs > 0);
  CHECK(r.residualIn <= 0.01);
  CHECK(r.residualOut <= 0.01);
}

TEST_CASE("locking rule predicate", "[sampler]") {
  CHECK(shouldLock(1.2, LockRule::ClampedOnly));
  CHECK_FALSE(shouldLock(0.7, LockRule::ClampedOnly));
  CHECK(shouldLock(0.7, LockRule::AnyPositive));
  CHECK_FALSE(shouldLock(0.0, LockRule::AnyPositive));
}

TEST_CASE("rescaling meets targets and locks monotonically", "[sampler]") {
  auto inst = testing::randomInstance(50, 2, 0.1, 17);
  const auto s = strengths(inst.net);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto base = FirmShock::fromPsi(testing::randomPsi(50, 0.6, seed + 100));
    const auto target = samplingTarget(inst.net, s, base, 0.01);
    for (IndustryIndex k = 0; k < 2; ++k) {
      const auto sl = industrySlice(inst.net, s, k);
      Rng rng = makeRng(seed, {k});
      auto draft = drawShocks(sl, DonorDistribution::empirical({0.1, 0.3, 0.9}), target.industries[k], rng);
      auto r = rescaleShocks(sl, draft, target.industries[k], rng);
      const auto sums = aggregateSums(sl, r.zeta);
      CHECK(std::abs(sums.in - target.industries[k].in) <= 0.01);
      CHECK(std::abs(sums.out - target.industries[k].out) <= 0.01);
      for (double z : r.zeta) {
        CHECK(z >= 0.0);
        CHECK(z <= 1.0);
      }
      for (std::size_t j = 0; j < sl.size(); ++j)
        if (r.locked[j]) CHECK(r.zeta[j] == 1.0);
    }
  }
}

TEST_CASE("ensemble with one firm per industry reproduces the base", "[sampler]") {
  auto inst = testing::randomInstance(8, 8, 0.4, 4);
  const auto base = FirmShock::fromPsi(testing::randomPsi(8, 0.7, 5));
  auto ens = sampleEnsemble(inst.net, base, 1, 99);
  REQUIRE(ens.size() == 1);
  const auto s = strengths(inst.net);
  for (std::size_t i = 0; i < 8; ++i) {
    if (s.sIn[i] > 0.0 || s.sOut[i] > 0.0)
      CHECK_THAT(ens.psi[0][i], WithinAbs(base.psi()[i], 0.01 / std::max(s.sIn[i], s.sOut[i]) + 1e-12));
  }
}

TEST_CASE("zero base shock samples zero shocks", "[sampler]") {
  auto inst = testing::randomInstance(30, 3, 0.2, 6);
  auto ens = sampleEnsemble(inst.net, FirmShock::none(30), 5, 1);
  for (const auto& psi : ens.psi) CHECK(psi == std::vector<double>(30, 1.0));
}

TEST_CASE("ensembles are reproducible and thread-independent", "[sampler]") {
  SyntheticNetworkSpec spec;
  spec.n = 200;
  spec.m = 5;
  spec.seed = 3;
  auto net = generateNetwork(spec);
  const auto base = randomShock(200, 4);
  SamplerOptions serial;
  SamplerOptions parallel;
  parallel.threads = 3;
  auto a = sampleEnsemble(net, base, 12, 77, serial);
  auto b = sampleEnsemble(net, base, 12, 77, parallel);
  auto c = sampleEnsemble(net, base, 12, 78, serial);
  CHECK(a.psi == b.psi);
  CHECK(a.psi != c.psi);

  const auto s = strengths(net);
  const auto target = samplingTarget(net, s, base, 0.01);
  for (const auto& psi : a.psi) {
    const auto t = samplingTarget(net, s, FirmShock::fromPsi(psi), 0.01);
    for (IndustryIndex k = 0; k < 5; ++k) {
      CHECK(std::abs(t.industries[k].in - target.industries[k].in) <= 0.01);
      CHECK(std::abs(t.industries[k].out - target.industries[k].out) <= 0.01);
    }
  }
}

TEST_CASE("the any-positive lock rule also converges", "[sampler]") {
  SyntheticNetworkSpec spec;
  spec.n = 150;
  spec.m = 3;
  spec.seed = 8;
  auto net = generateNetwork(spec);
  SamplerOptions opt;
  opt.lockRule = LockRule::AnyPositive;
  auto ens = sampleEnsemble(net, randomShock(150, 2), 5, 1, opt, DonorConfig::betaDistribution(1.0, 3.0));
  for (const auto& r : ens.residuals)
    for (const auto& x : r) {
      CHECK(x.in <= 0.01);
      CHECK(x.out <= 0.01);
    }
}
