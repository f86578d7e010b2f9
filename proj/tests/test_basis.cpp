#include <catch2/catch_amalgamated.hpp>

#include "spinchain/basis.hpp"

using namespace spinchain;

TEST_CASE("sector dimensions") {
  CHECK(build_basis(3, 0.5).dim() == 3);   // C(3,2)
  CHECK(build_basis(4, 0.0).dim() == 6);   // C(4,2)
  CHECK(build_basis(10).dim() == 1024);    // 2^10
}

TEST_CASE("states ascending, index inverse, popcount fixed") {
  auto b = build_basis(6, 1.0);  // 4 up-spins
  REQUIRE(b.dim() == 15);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    if (i) CHECK(b.states[i] > b.states[i - 1]);
    CHECK(std::popcount(b.states[i]) == 4);
    CHECK(b.index_of(b.states[i]) == i);
  }
}

TEST_CASE("incompatible sector rejected") {
  CHECK_THROWS_AS(build_basis(4, 0.5), std::invalid_argument);   // parity mismatch
  CHECK_THROWS_AS(build_basis(5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_basis(4, 3.0), std::invalid_argument);   // |sector| > L/2
  CHECK_THROWS_AS(build_basis(1), std::invalid_argument);
}

TEST_CASE("full basis is identity enumeration") {
  auto b = build_basis(5);
  REQUIRE(b.dim() == 32);
  for (uint64_t s = 0; s < 32; ++s) CHECK(b.states[s] == s);
  CHECK(!b.sector.has_value());
}
