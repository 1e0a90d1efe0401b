#include "oracles.hpp"
#include "piac/errors.hpp"
#include "piac/netmodel.hpp"

#include <doctest.h>

using namespace piac;

TEST_CASE("3-node path Laplacian spectrum is {0, 1, 3}") {
  const auto net = oracle::path_network(3);
  const auto s = spectral_decompose(build_laplacian(net));
  CHECK(s.eigenvalues(0) == 0.0);
  CHECK(s.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.eigenvalues(2) == doctest::Approx(3.0).epsilon(1e-12));
  // characteristic polynomial λ(λ-1)(λ-3): check L v = λ v on each mode
  const Eigen::MatrixXd L = build_laplacian(net);
  for (int i = 0; i < 3; ++i)
    CHECK((L * s.modes.col(i) - s.eigenvalues(i) * s.modes.col(i)).norm() < 1e-12);
}

TEST_CASE("triangle spectrum (0, 3, 3) with orthonormal modes") {
  const auto net = oracle::homogeneous(3, 1, 1, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
  const auto s = spectral_decompose(build_laplacian(net));
  CHECK(s.eigenvalues(0) == 0.0);
  CHECK(s.eigenvalues(1) == doctest::Approx(3.0));
  CHECK(s.eigenvalues(2) == doctest::Approx(3.0));
  CHECK((s.modes.transpose() * s.modes - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  // uniform mode is exactly 1/√n
  for (int i = 0; i < 3; ++i) CHECK(s.modes(i, 0) == 1.0 / std::sqrt(3.0));
}

TEST_CASE("spectral decomposition agrees with a dense solver on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 7;
    const auto net = oracle::homogeneous(n, 1, 1, oracle::random_connected(rng, n));
    const Eigen::MatrixXd L = build_laplacian(net);
    const auto s = spectral_decompose(L);
    Eigen::EigenSolver<Eigen::MatrixXd> dense(L);
    std::vector<double> ref;
    for (int i = 0; i < n; ++i) ref.push_back(dense.eigenvalues()(i).real());
    std::sort(ref.begin(), ref.end());
    for (int i = 1; i < n; ++i) CHECK(s.eigenvalues(i) == doctest::Approx(ref[i]).epsilon(1e-10));
    CHECK(s.algebraic_connectivity() > 0.0);
  }
}

TEST_CASE("asymmetric input is rejected") {
  Eigen::Matrix2d L;
  L << 1, -1, -0.5, 0.5;
  CHECK_THROWS_AS(spectral_decompose(L), ShapeError);
}

TEST_CASE("network invariants") {
  using K = NodeKind;
  CHECK_THROWS_AS(PowerNetwork({{1, K::Machine, 1, 1}, {2, K::Machine, 1, 1}, {3, K::Machine, 1, 1}}, {{0, 1, 1}}),
                  DisconnectedNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::Machine, 0, 1}}, {}), InvalidNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::FreqDependent, 1, 1}}, {}), InvalidNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::Passive, 0, 1}}, {}), InvalidNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::Machine, 1, 1}, {2, K::Machine, 1, 1}}, {{0, 1, -1}}), InvalidNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::Machine, 1, 1}, {2, K::Machine, 1, 1}}, {{0, 1, 1}, {1, 0, 1}}),
                  InvalidNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::Machine, 1, 1}, {2, K::Machine, 1, 1}}, {{0, 0, 1}}), InvalidNetwork);
  CHECK_THROWS_AS(PowerNetwork({{1, K::Machine, 1, 1, 0, 0}}, {}), InvalidNetwork);
}

TEST_CASE("aggregate price and controller set") {
  using K = NodeKind;
  const PowerNetwork net({{1, K::Machine, 1, 1, 0, 1}, {2, K::FreqDependent, 0, 1, 0, 2},
                          {3, K::Passive, 0, 0, -0.5, 1}},
                         {{0, 1, 1}, {1, 2, 1}});
  CHECK(net.controllers() == std::vector<int>{0, 1});
  CHECK(net.aggregate_price() == doctest::Approx(2.0 / 3.0));
  CHECK(net.total_injection() == -0.5);
  CHECK(net.total_damping() == 2.0);
  CHECK(net.index_of(3) == 2);
  CHECK(net.index_of(9) == -1);
}

TEST_CASE("communication graph checks") {
  using K = NodeKind;
  const PowerNetwork net({{1, K::Machine, 1, 1}, {2, K::Passive, 0, 0}, {3, K::Machine, 1, 1}},
                         {{0, 1, 1}, {1, 2, 1}});
  CHECK_THROWS_AS(CommunicationGraph(net, {{0, 1, 1}}), InvalidNetwork);
  const auto mirrored = CommunicationGraph::mirror(net);
  CHECK_FALSE(mirrored.connected());  // the passive bus splits V_K
  const CommunicationGraph explicit_links(net, {{0, 2, 1}});
  CHECK(explicit_links.connected());
  CHECK(explicit_links.laplacian().rows() == 2);
}

TEST_CASE("homogeneity report lists every violation") {
  const auto net = oracle::path_network(3);
  auto r = check_homogeneous(net, CommunicationGraph::mirror(net));
  CHECK(r.passed);
  CHECK(r.inertia == 1.0);
  const auto heavy = oracle::path_network(3, 1, 1, 2);
  r = check_homogeneous(heavy, CommunicationGraph::unit(heavy));
  CHECK_FALSE(r.passed);
  CHECK(r.reasons.back() == "communication topology differs from power network");

  using K = NodeKind;
  const PowerNetwork het({{1, K::Machine, 1, 1}, {2, K::Machine, 2, 1, 0, 3}}, {{0, 1, 1}});
  r = check_homogeneous(het, CommunicationGraph::mirror(het));
  CHECK_FALSE(r.passed);
  CHECK(r.reasons.size() == 2);
}

TEST_CASE("bundled IEEE-39-like case has 10 machine, 19 frequency-dependent and 10 passive nodes") {
  const auto b = load_case(PIAC_DATA_DIR "/ieee39-like.case");
  CHECK(b.net.size() == 39);
  CHECK(b.net.edges().size() == 46);
  CHECK(b.net.count(NodeKind::Machine) == 10);
  CHECK(b.net.count(NodeKind::FreqDependent) == 19);
  CHECK(b.net.count(NodeKind::Passive) == 10);
  CHECK(b.comm.connected());
}
