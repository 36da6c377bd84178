#include "oracle/equivalence.hpp"

#include <catch_amalgamated.hpp>

TEST_CASE("library agrees with the dense oracle on random instances", "[oracle]") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto d = oracle::compareInstance(seed);
    INFO("seed " << seed << " n=" << d.n << " m=" << d.m);
    CHECK(d.mismatchedSupports == 0);
    CHECK(d.strength <= 1e-9);
    CHECK(d.aggregation <= 1e-9);
    CHECK(d.overlap <= 1e-9);
    CHECK(d.propagation <= 1e-9);
    CHECK(d.loss <= 1e-9);
  }
}
