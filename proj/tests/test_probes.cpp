#include <catch2/catch_amalgamated.hpp>

#include "spinchain/eig.hpp"
#include "spinchain/model.hpp"
#include "spinchain/probes.hpp"
#include "spinchain/rng.hpp"

using namespace spinchain;

TEST_CASE("r_statistic hand examples") {
  // gaps 1,1,2: ratios min/max = {1, 1/2}
  auto r = r_statistic(std::vector<double>{0, 1, 2, 4}, 1.0);
  REQUIRE(r.ratios.size() == 2);
  CHECK(r.ratios[0] == 1.0);
  CHECK(r.ratios[1] == 0.5);
  CHECK(r.mean == Catch::Approx(0.75));

  CHECK_THROWS_AS(r_statistic(std::vector<double>{0, 2, 1}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(r_statistic(std::vector<double>{0, 1}, 1.0), std::invalid_argument);

  // affine transforms leave every ratio unchanged
  std::vector<double> v{0.0, 0.3, 1.1, 1.15, 2.7, 3.0, 4.9};
  auto base = r_statistic(v, 1.0);
  for (auto& x : v) x = 2.5 * x - 7.0;
  auto scaled = r_statistic(v, 1.0);
  CHECK(scaled.mean == Catch::Approx(base.mean));

  // exact degeneracies are dropped and counted
  auto d = r_statistic(std::vector<double>{0, 1, 1, 2, 3}, 1.0);
  CHECK(d.degenerate_dropped == 2);
}

TEST_CASE("r_statistic matches GOE and Poisson ensemble values") {
  Rng rng(2024);
  const int n = 2000, reps = 12;

  double goe = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::MatrixXd m(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) m(a, b) = m(b, a) = rng.normal() * (a == b ? 1.414213562373095 : 1.0);
    goe += r_statistic(eig_full(m, false).values, 0.5).mean;
  }
  goe /= reps;
  CHECK(goe == Catch::Approx(0.5307).margin(0.005));

  double poi = 0;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> v(n);
    double e = 0;
    for (auto& x : v) x = (e += -std::log(rng.uniform01()));
    poi += r_statistic(v, 0.5).mean;
  }
  poi /= reps;
  CHECK(poi == Catch::Approx(0.38629).margin(0.005));
}

TEST_CASE("fidelity susceptibility closed forms") {
  // 2-level system: values 0,1; probe with off-diagonal 1 -> chi = 1 for both
  EigenSystem es;
  es.values = Eigen::Vector2d(0, 1);
  es.vectors = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d p;
  p << 0, 1, 1, 0;
  auto chi = fidelity_susceptibility(es, p);
  CHECK(chi.chi[0] == Catch::Approx(1.0));
  CHECK(chi.chi[1] == Catch::Approx(1.0));

  // probe commuting with H is diagonal in the eigenbasis -> chi = 0
  auto spec = build_bulk(8, 1.0, 0.25, 5);
  auto basis = build_basis(8, 0.0);
  auto sys = eig_full(to_dense(spec, basis), true);
  Eigen::MatrixXd mz = Eigen::MatrixXd::Zero(sys.dim(), sys.dim());
  for (int j = 0; j < 8; ++j) mz += to_dense(spin_op(8, j, Pauli::Z), basis);
  auto czero = fidelity_susceptibility(sys, mz);
  for (double c : czero.chi) CHECK(c < 1e-18);

  // scaling: chi is quadratic in the probe
  Eigen::MatrixXd sz2 = to_dense(spin_op(8, 2, Pauli::Z), basis);
  auto c1 = fidelity_susceptibility(sys, sz2);
  auto c3 = fidelity_susceptibility(sys, Eigen::MatrixXd(3.0 * sz2));
  for (std::size_t k = 0; k < c1.chi.size(); ++k)
    CHECK(c3.chi[k] == Catch::Approx(9.0 * c1.chi[k]).epsilon(1e-10));
}

TEST_CASE("fidelity susceptibility matches finite-difference ground-state fidelity") {
  // chi_0 = lim 2(1 - |<psi_0(0)|psi_0(eps)>|)/eps^2 for H + eps P
  auto spec = add_impurities(build_bulk(8, 1.0, 0.25, 17), {4}, 2.0);
  auto basis = build_basis(8, 0.0);
  Eigen::MatrixXd h = to_dense(spec, basis);
  Eigen::MatrixXd p = to_dense(spin_op(8, 2, Pauli::Z), basis);
  auto sys = eig_full(h, true);
  auto chi = fidelity_susceptibility(sys, p);

  const double eps = 1e-4;
  auto pert = eig_full(Eigen::MatrixXd(h + eps * p), true);
  const double overlap = std::abs(sys.vectors.col(0).dot(pert.vectors.col(0)));
  const double chi_fd = 2.0 * (1.0 - overlap) / (eps * eps);
  CHECK(chi_fd == Catch::Approx(chi.chi[0]).epsilon(0.01));
}

TEST_CASE("typical chi pools log-mean and excludes zeros") {
  ChiResult a, b;
  a.chi = {1.0, 4.0};
  b.chi = {16.0, 0.0};
  auto t = typical_chi({a, b});
  CHECK(t.pooled == 3);
  CHECK(t.zeros_excluded == 1);
  CHECK(t.value == Catch::Approx(4.0));  // exp(mean(log{1,4,16}))

  ChiResult empty;
  empty.chi = {0.0};
  CHECK_THROWS_AS(typical_chi({empty}), std::invalid_argument);
}

TEST_CASE("g_ratio") {
  CHECK(g_ratio(2.0, 4.0) == 0.5);
  CHECK_THROWS_AS(g_ratio(1.0, 0.0), std::invalid_argument);
}
