#include "oracles.hpp"
#include "piac/controllers.hpp"
#include "piac/errors.hpp"

#include <doctest.h>

using namespace piac;

TEST_CASE("GBPIAC rates at a worked point") {
  const auto net = oracle::path_network(2);
  const auto p = make_controller_params(net);
  const GainSchedule g = GainSchedule::analytic(1, 1);
  const Eigen::Vector2d omega(0.1, 0.1);
  auto r = gbpiac_rhs({0, 0}, omega, p, g);
  CHECK(r.eta == doctest::Approx(0.2));
  CHECK(r.xi == doctest::Approx(-0.2));
  CHECK(r.u.isZero());
  r = gbpiac_rhs({0, 1}, omega, p, g);
  CHECK(r.u(0) == doctest::Approx(2.0));  // α_s = 1/2
  CHECK(r.u(1) == doctest::Approx(2.0));
}

TEST_CASE("DPIAC consensus term") {
  const auto net = oracle::path_network(2);
  const auto p = make_controller_params(net, CommunicationGraph::mirror(net));
  const GainSchedule g = GainSchedule::analytic(1, 1);
  LocalState s = LocalState::zero(2);
  s.xi << 1, 0;
  const auto r = dpiac_rhs(s, Eigen::Vector2d::Zero(), p, g);
  CHECK(r.eta(0) == doctest::Approx(4.0));
  CHECK(r.eta(1) == doctest::Approx(-4.0));
  CHECK(r.u(0) == 4.0);
}

TEST_CASE("DPIAC with k3 = 0 is DecPIAC bit for bit") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  const auto net = oracle::path_network(4);
  const auto p = make_controller_params(net, CommunicationGraph::mirror(net));
  LocalState s{Eigen::VectorXd::NullaryExpr(4, [&] { return g(rng); }),
               Eigen::VectorXd::NullaryExpr(4, [&] { return g(rng); })};
  const Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(4, [&] { return g(rng); });
  const GainSchedule gains{1.3, 5.2, 0.0, true};
  const auto a = dpiac_rhs(s, w, p, gains), b = decpiac_rhs(s, w, p, gains);
  CHECK(a.eta == b.eta);
  CHECK(a.xi == b.xi);
}

TEST_CASE("economic dispatch equalises marginal costs and balances") {
  using K = NodeKind;
  const PowerNetwork net({{1, K::Machine, 1, 1, 0.2, 1}, {2, K::FreqDependent, 0, 2, -0.5, 2},
                          {3, K::Passive, 0, 0, -0.3, 1}},
                         {{0, 1, 1}, {1, 2, 1}});
  const auto u = optimal_dispatch(net);
  CHECK(u.sum() == doctest::Approx(0.6));
  CHECK(1.0 * u(0) == doctest::Approx(2.0 * u(1)));
  CHECK(synchronized_frequency(net, u) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("gain validation") {
  CHECK_THROWS_AS((GainSchedule{0, 0, 1, false}.validate(false)), GainError);
  CHECK_THROWS_AS((GainSchedule{1, 4, -1, true}.validate(false)), GainError);
  CHECK_THROWS_AS((GainSchedule{1, 5, 1, true}.validate(false)), GainError);
  CHECK_THROWS_AS((GainSchedule{1, 2, 1, false}.validate(true)), GainError);
  CHECK_NOTHROW((GainSchedule{1, 2, 1, false}.validate(false)));
  CHECK_NOTHROW(GainSchedule::analytic(0.3, 0).validate(true));
  CHECK(parse_law("dpiac") == Law::Dpiac);
  CHECK_THROWS_AS(parse_law("pid"), DomainError);
}

TEST_CASE("no controllers, no dispatch") {
  CHECK_THROWS_AS(optimal_dispatch(PowerNetwork({{1, NodeKind::Passive, 0, 0}}, {})), NoControllers);
}
