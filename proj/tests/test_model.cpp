#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "spinchain/eig.hpp"
#include "spinchain/model.hpp"
#include "spinchain/probes.hpp"

using namespace spinchain;

TEST_CASE("build_bulk basics") {
  auto two = build_bulk(2, 1.0, 0.0, 1);
  REQUIRE(two.bonds.size() == 1);
  CHECK(two.fields == std::vector<double>{0.0, 0.0});
  auto es = eig_full(to_dense(two, build_basis(2, 0.0)), false);
  CHECK(es.values[0] == Catch::Approx(-0.75));  // singlet
  CHECK(es.values[1] == Catch::Approx(0.25));   // triplet

  auto big = build_bulk(17, 1.0, 0.25, 99);
  CHECK(big.bonds.size() == 16);
  REQUIRE(big.fields.size() == 17);
  for (double h : big.fields) {
    CHECK(h >= -0.25);
    CHECK(h <= 0.25);
  }

  auto again = build_bulk(17, 1.0, 0.25, 99);
  CHECK(spec_text(again) == spec_text(big));
}

TEST_CASE("add_impurities") {
  auto spec = build_bulk(17, 1.0, 0.25, 5);
  const double h8 = spec.fields[8];
  auto one = add_impurities(spec, {8}, 5.0);
  CHECK(one.fields[8] == Catch::Approx(h8 + 5.0));
  CHECK(one.impurity_sites == std::vector<int>{8});

  auto none = add_impurities(spec, {}, 3.0);
  CHECK(spec_text(none) == spec_text(spec));

  auto jit = add_impurities(build_bulk(15, 1.0, 0.25, 5), {3, 7, 11}, 4.0, true, 77);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(jit.impurity_strengths[k] >= 2.0);
    CHECK(jit.impurity_strengths[k] <= 6.0);
  }
  auto jit2 = add_impurities(build_bulk(15, 1.0, 0.25, 5), {3, 7, 11}, 4.0, true, 77);
  CHECK(spec_text(jit2) == spec_text(jit));

  CHECK_THROWS_AS(add_impurities(spec, {17}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(add_impurities(spec, {3, 3}, 1.0), std::invalid_argument);
}

TEST_CASE("every generated spec conserves total S^z") {
  PauliOperator mz(7);
  for (int j = 0; j < 7; ++j) mz += spin_op(7, j, Pauli::Z);
  for (const auto& spec :
       {build_bulk(7, 1.0, 0.25, 3), add_impurities(build_bulk(7, 1.0, 0.25, 3), {3}, 5.0),
        weak_link_chain(7, 3, 1.0, 0.25, 4.0, 3),
        schrieffer_wolff(build_bulk(7, 1.0, 0.25, 3), 3, 10.0).h_tilde}) {
    CHECK(commutator(to_pauli(spec), mz).size() == 0);
  }
}

TEST_CASE("schrieffer_wolff structure") {
  auto bulk = build_bulk(7, 1.0, 0.25, 11);
  auto sw = schrieffer_wolff(bulk, 3, 10.0);

  // H-tilde commutes with the impurity spin exactly
  auto ht = to_pauli(sw.h_tilde);
  PauliOperator sz3 = spin_op(7, 3, Pauli::Z);
  CHECK(commutator(ht, sz3).size() == 0);

  // V -> infinity limit: only H_L + H_R + Delta S^z_l (S^z_{l-1}+S^z_{l+1}) + V S^z_l
  auto swinf = schrieffer_wolff(bulk, 3, 1e12);
  CHECK(swinf.h_tilde.triples[0].c == Catch::Approx(1e-12));
  CHECK(swinf.h_tilde.fields[3] == Catch::Approx(bulk.fields[3] + 1e12));
  CHECK(swinf.h_tilde.fields[2] == Catch::Approx(bulk.fields[2]).margin(1e-11));

  CHECK_THROWS_AS(schrieffer_wolff(bulk, 0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(schrieffer_wolff(bulk, 6, 10.0), std::invalid_argument);
}

TEST_CASE("SW spectra agree to O(1/V^2) and improve 4x when V doubles") {
  const int L = 5, ell = 2;
  auto bulk = build_bulk(L, 1.0, 0.25, 21);
  auto basis = build_basis(L);
  auto dev = [&](double V) {
    auto full = add_impurities(bulk, {ell}, V);
    auto hs = eig_full(to_dense(full, basis), false);
    auto ht = eig_full(to_dense(schrieffer_wolff(bulk, ell, V).h_tilde, basis), false);
    return (hs.values - ht.values).cwiseAbs().maxCoeff();
  };
  const double d20 = dev(20.0), d40 = dev(40.0);
  CHECK(d20 < 2.0 / (20.0 * 20.0));
  CHECK(d40 / d20 < 0.35);
  CHECK(d40 / d20 > 0.15);
}

TEST_CASE("BCH expansion of the generator reproduces H-tilde to O(1/V^2)") {
  const int L = 5, ell = 2;
  auto bulk = build_bulk(L, 1.0, 0.25, 31);
  auto resid = [&](double V) {
    auto sw = schrieffer_wolff(bulk, ell, V);
    auto full_spec = add_impurities(bulk, {ell}, V);
    auto h = to_pauli(full_spec);
    PauliOperator ia = cplx(0, 1) * sw.generator_a;
    PauliOperator bch = h + commutator(ia, h) + cplx(0.5, 0) * commutator(ia, commutator(ia, h));
    bch += cplx(-1, 0) * to_pauli(sw.h_tilde);
    bch.prune(1e-12);
    return std::sqrt(norm_sq(bch, false));
  };
  const double r10 = resid(10.0), r20 = resid(20.0);
  CHECK(r10 < 1.0 / (10.0 * 10.0));
  // residual is O(1/V^2): doubling V gains about 4x
  CHECK(r20 / r10 < 0.35);
}

TEST_CASE("effective model weak bond and structure") {
  auto eff = effective_model(6, 6, 1.0, 0.25, 8.0, 7);
  REQUIRE(eff.L == 12);
  const auto& weak = eff.bonds.back();
  CHECK(weak.i == 5);
  CHECK(weak.j == 6);
  CHECK(weak.jx == Catch::Approx(0.0625));  // 1/(2V) at V=8
  CHECK(weak.jz == 0.0);

  // V -> infinity: decoupled blocks identical to SW with 1/V terms deleted
  auto bulk = build_bulk(9, 1.0, 0.25, 13);
  auto effinf = effective_block(bulk, 4, 1e14, 0.5);
  CHECK(effinf.bonds.back().jx == Catch::Approx(0.0).margin(1e-13));
  for (int j = 0; j < 4; ++j) CHECK(effinf.fields[j] == (j == 3 ? bulk.fields[3] + 0.5 : bulk.fields[j]));
}

TEST_CASE("frozen-spin blocks differ by boundary field sign") {
  auto bulk = build_bulk(9, 1.0, 0.25, 13);
  auto up = effective_block(bulk, 4, 5.0, 0.5);
  auto dn = effective_block(bulk, 4, 5.0, -0.5);
  CHECK(up.fields[3] - bulk.fields[3] == Catch::Approx(0.5));
  CHECK(dn.fields[3] - bulk.fields[3] == Catch::Approx(-0.5));
  CHECK(up.bonds.back().jx == Catch::Approx(-dn.bonds.back().jx));
}

TEST_CASE("weak_link_chain places weak bonds after every block") {
  auto spec = weak_link_chain(15, 5, 1.0, 0.25, 4.0, 3);
  int weak = 0;
  for (const auto& b : spec.bonds) {
    if (b.jx != 1.0) {
      ++weak;
      CHECK(b.jx == Catch::Approx(0.125));  // 1/(2V)
      CHECK((b.j == 5 || b.j == 10));
    }
  }
  CHECK(weak == 2);
}

TEST_CASE("fold_spectra") {
  auto folded = fold_spectra({{0, 2}, {0, 2}}, {1.0, -1.0});
  CHECK(folded == std::vector<double>{-1, 1, 1, 3});
  auto single = fold_spectra({{0.5, 1.5, 7.0}}, {0.0});
  CHECK(single == std::vector<double>{0.5, 1.5, 7.0});
}

TEST_CASE("serialization round-trips bit-exactly") {
  auto spec = add_impurities(build_bulk(11, 1.0, 0.25, 123456789ull), {5}, 3.7);
  spec.triples.push_back({5, 4, 6, 0.2702702702702703});
  const std::string path = "spec_roundtrip_test.txt";
  save_spec(spec, path);
  auto re = load_spec(path);
  CHECK(spec_text(re) == spec_text(spec));
  CHECK(spec_hash(re) == spec_hash(spec));
  for (std::size_t j = 0; j < spec.fields.size(); ++j) CHECK(re.fields[j] == spec.fields[j]);
  std::filesystem::remove(path);
}

TEST_CASE("folded one-impurity plan approaches the full model at large V") {
  // desk-scale version of the asymptotic-agreement example
  const int L = 9, ell = central_site(L);
  double r_full = 0, r_fold = 0;
  const int reps = 6;
  for (int rep = 0; rep < reps; ++rep) {
    auto bulk = build_bulk(L, 1.0, 0.25, 1000 + rep);
    const double V = 40.0;
    auto full = add_impurities(bulk, {ell}, V);
    auto es = eig_full(to_dense(full, build_basis(L, 0.5)), false);
    r_full += r_statistic(es.values, 0.5).mean;

    auto plan = single_impurity_folding_plan(bulk, ell, V);
    std::vector<std::vector<double>> spectra;
    std::vector<double> offsets;
    for (const auto& blk : plan.blocks) {
      // frozen spin s contributes n_up = 4 - (s > 0) to the remaining 8 sites
      const double sector = blk.offset > 0 ? 0.0 : 1.0;
      auto bes = eig_full(to_dense(blk.spec, build_basis(L - 1, sector)), false);
      spectra.emplace_back(bes.values.data(), bes.values.data() + bes.values.size());
      offsets.push_back(blk.offset);
    }
    r_fold += r_statistic(fold_spectra(spectra, offsets), 0.5).mean;
  }
  CHECK(std::abs(r_full - r_fold) / reps < 0.03);
}
