#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "spinchain/model.hpp"
#include "spinchain/pauli.hpp"
#include "spinchain/rng.hpp"

using namespace spinchain;

namespace {

PauliOperator random_hermitian(int L, int n_terms, Rng& rng) {
  PauliOperator op(L);
  for (int t = 0; t < n_terms; ++t) {
    PauliString s{L, 0};
    for (int j = 0; j < L; ++j) s.set(j, Pauli(rng.raw() % 4));
    op.add(s, rng.uniform(-1.0, 1.0));
  }
  return op;
}

Eigen::MatrixXcd dense(const PauliOperator& op) {
  return to_dense_complex(op, build_basis(op.L()));
}

}  // namespace

TEST_CASE("single-site product rules") {
  auto [phXY, sXY] = pauli_product(PauliString::parse("X"), PauliString::parse("Y"));
  CHECK(sXY == PauliString::parse("Z"));
  CHECK(phXY == cplx(0, 1));

  auto [phYZ, sYZ] = pauli_product(PauliString::parse("Y"), PauliString::parse("Z"));
  CHECK(sYZ == PauliString::parse("X"));
  CHECK(phYZ == cplx(0, 1));

  auto [phZZ, sZZ] = pauli_product(PauliString::parse("Z"), PauliString::parse("Z"));
  CHECK(sZZ == PauliString::parse("I"));
  CHECK(phZZ == cplx(1, 0));

  auto [ph, s] = pauli_product(PauliString::parse("XI"), PauliString::parse("IY"));
  CHECK(s == PauliString::parse("XY"));
  CHECK(ph == cplx(1, 0));

  CHECK_THROWS_AS(pauli_product(PauliString::parse("X"), PauliString::parse("XY")),
                  std::invalid_argument);
}

TEST_CASE("commutator spin algebra") {
  // [S^z, S^x] = i S^y
  auto c = commutator(spin_op(1, 0, Pauli::Z), spin_op(1, 0, Pauli::X));
  REQUIRE(c.size() == 1);
  CHECK(std::abs(c.coeff(PauliString::parse("Y")) - cplx(0, 0.5)) < 1e-15);

  // self-commutator vanishes
  Rng rng(7);
  auto a = random_hermitian(4, 8, rng);
  CHECK(commutator(a, a).size() == 0);

  // magnetization conservation: [H_bulk, sum_j S^z_j] = 0
  auto h = to_pauli(build_bulk(4, 1.0, 0.0, 0));
  PauliOperator mz(4);
  for (int j = 0; j < 4; ++j) mz += spin_op(4, j, Pauli::Z);
  CHECK(commutator(h, mz).size() == 0);
}

TEST_CASE("norms and traces") {
  CHECK(norm_sq(spin_op(3, 0, Pauli::Z)) == Catch::Approx(0.25));
  CHECK(norm_sq(flip_flop(2, 1, 0)) == Catch::Approx(0.125));  // H_int, two strings 1/4 each
  CHECK(trace_product(spin_op(2, 0, Pauli::Z), spin_op(2, 0, Pauli::X)) == 0.0);
  auto a = flip_flop(3, 1, 0) + spin_op(3, 2, Pauli::Z);
  CHECK(trace_product(a, a) == Catch::Approx(norm_sq(a)));
}

TEST_CASE("R_1 norm matches dense-matrix trace at L=4") {
  auto bulk = to_pauli(build_bulk(4, 1.0, 0.0, 0));
  auto r1 = cplx(0, 1) * commutator(bulk, flip_flop(4, 1, 0));
  r1.realify();
  Eigen::MatrixXcd m = dense(r1);
  const double oracle = (m * m).trace().real() / 16.0;
  CHECK(norm_sq(r1) == Catch::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("to_dense basics") {
  // S_0^z on L=1: diag(-1/2, +1/2), down state first
  auto basis1 = build_basis(2);  // L>=2 enforced; use site 0 of a 2-site chain
  auto mz = to_dense(spin_op(2, 0, Pauli::Z), basis1);
  CHECK(mz(0, 0) == Catch::Approx(-0.5));
  CHECK(mz(1, 1) == Catch::Approx(0.5));
  CHECK(mz(2, 2) == Catch::Approx(-0.5));

  // flip-flop on L=2 sector 0: off-diagonal 1/2
  auto b0 = build_basis(2, 0.0);
  auto ff = to_dense(flip_flop(2, 1, 0), b0);
  REQUIRE(ff.rows() == 2);
  CHECK(ff(0, 1) == Catch::Approx(0.5));
  CHECK(ff(1, 0) == Catch::Approx(0.5));
  CHECK(ff(0, 0) == 0.0);

  // sector-violating operator rejected on restricted basis
  CHECK_THROWS_AS(to_dense(spin_op(2, 0, Pauli::X), b0), std::invalid_argument);
}

TEST_CASE("sector-restricted dense build matches unrestricted block") {
  HamiltonianSpec spec = build_bulk(3, 1.0, 0.0, 0);
  spec.fields = {0.1, -0.2, 0.05};
  auto h = to_pauli(spec);
  auto restricted = to_dense(h, build_basis(3, 0.5));
  auto full = to_dense(h, build_basis(3));
  auto sector_basis = build_basis(3, 0.5);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      CHECK(restricted(a, b) ==
            Catch::Approx(full(sector_basis.states[a], sector_basis.states[b])).margin(1e-14));
}

TEST_CASE("dense/Pauli commutator equivalence at L<=6") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const int L = 2 + int(rng.raw() % 5);
    auto a = random_hermitian(L, 6, rng);
    auto b = random_hermitian(L, 6, rng);
    Eigen::MatrixXcd lhs = dense(commutator(a, b));
    Eigen::MatrixXcd rhs = dense(a) * dense(b) - dense(b) * dense(a);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("norm_sq equals dense trace at L<=6") {
  Rng rng(43);
  for (int rep = 0; rep < 8; ++rep) {
    const int L = 2 + int(rng.raw() % 5);
    auto a = random_hermitian(L, 8, rng);
    Eigen::MatrixXcd m = dense(a);
    const double oracle = (m * m).trace().real() / std::pow(2.0, L);
    CHECK(norm_sq(a) == Catch::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("Jacobi identity on random triples") {
  Rng rng(44);
  for (int rep = 0; rep < 6; ++rep) {
    const int L = 2 + int(rng.raw() % 4);
    auto a = random_hermitian(L, 5, rng);
    auto b = random_hermitian(L, 5, rng);
    auto c = random_hermitian(L, 5, rng);
    auto jac = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) +
               commutator(c, commutator(a, b));
    jac.prune(1e-12);
    double resid = 0;
    for (const auto& [s, v] : jac.terms()) resid = std::max(resid, std::abs(v));
    CHECK(resid < 1e-12);
  }
}

TEST_CASE("parity selection under sigma^z_0 conjugation") {
  // odd A, odd B -> even commutator
  Rng rng(45);
  const int L = 4;
  PauliOperator sz(L);
  sz.add(PauliString::site(L, 0, Pauli::Z), 1.0);
  auto parity_odd = [&](const PauliOperator& op) {
    PauliOperator conj = sz * op * sz;
    conj += cplx(1, 0) * op;  // odd => conj = -op => sum vanishes
    conj.prune(1e-12);
    return conj.size() == 0;
  };
  // build odd operators: strings with X or Y at site 0
  auto make_odd = [&](uint64_t seed) {
    Rng r(seed);
    PauliOperator op(L);
    for (int t = 0; t < 5; ++t) {
      PauliString s{L, 0};
      s.set(0, (r.raw() % 2) ? Pauli::X : Pauli::Y);
      for (int j = 1; j < L; ++j) s.set(j, Pauli(r.raw() % 4));
      op.add(s, r.uniform(-1, 1));
    }
    return op;
  };
  auto a = make_odd(1), b = make_odd(2);
  REQUIRE(parity_odd(a));
  REQUIRE(parity_odd(b));
  auto c = commutator(a, b);
  PauliOperator conj = sz * c * sz;
  conj += cplx(-1, 0) * c;  // even => conj = c => difference vanishes
  conj.prune(1e-12);
  CHECK(conj.size() == 0);
}

TEST_CASE("drop tolerance prunes cancelled terms") {
  PauliOperator op(2);
  op.add(PauliString::parse("XZ"), 1.0);
  op.add(PauliString::parse("XZ"), -1.0 + 1e-16);
  CHECK(op.size() == 0);
}
