#include "oracles.hpp"
#include "piac/errors.hpp"
#include "piac/h2.hpp"

#include <doctest.h>

using namespace piac;

namespace {

const std::optional<Eigen::MatrixXd> kIdentity;

StateSpace loop(Law law, const PowerNetwork& net, const GainSchedule& g, OutputSelector sel,
                const std::optional<Eigen::MatrixXd>& input = kIdentity) {
  return assemble(law, net, CommunicationGraph::mirror(net), g, input, sel);
}

}  // namespace

TEST_CASE("GBPIAC n=3, m=2, d=3, k1=0.5: omega norm 2/12 + 8/100") {
  const auto net = oracle::path_network(3, 2, 3);
  const auto g = GainSchedule::analytic(0.5, 0);
  const double expected = 2.0 / 12 + 8.0 / 100;
  const auto a = h2_gbpiac_analytic(3, 2, 3, 0.5, OutputSelector::FrequencyDeviation);
  CHECK(a.value == doctest::Approx(expected).epsilon(1e-14));
  const auto sys = loop(Law::Gbpiac, net, g, OutputSelector::FrequencyDeviation);
  CHECK(oracle::rel(oracle::h2_grounded(sys), expected) < 1e-8);
  CHECK(oracle::rel(h2_numeric(sys).value, expected) < 1e-8);
}

TEST_CASE("GBPIAC u-norm is k1/2 and u_s norm is k1 n/2") {
  const auto net = oracle::homogeneous(4, 1.7, 0.4, {{0, 1, 1}, {1, 2, 3}, {2, 3, 0.5}, {0, 3, 2}});
  const auto g = GainSchedule::analytic(0.5, 0);
  CHECK(oracle::rel(oracle::h2_grounded(loop(Law::Gbpiac, net, g, OutputSelector::ControlInput)), 0.25) < 1e-8);
  CHECK(h2_numeric(loop(Law::Gbpiac, net, g, OutputSelector::ControlInput)).value == doctest::Approx(0.25));
  const auto g1 = GainSchedule::analytic(1, 0);
  CHECK(oracle::rel(oracle::h2_grounded(loop(Law::Gbpiac, net, g1, OutputSelector::TotalControlInput)), 2.0) < 1e-8);
  CHECK(h2_gbpiac_analytic(4, 1.7, 0.4, 1, OutputSelector::TotalControlInput).value == 2.0);
}

TEST_CASE("GBPIAC n=2, m=d=k1=1: omega norm 5/6") {
  const auto net = oracle::path_network(2);
  const auto sys = loop(Law::Gbpiac, net, GainSchedule::analytic(1, 0), OutputSelector::FrequencyDeviation);
  CHECK(oracle::rel(oracle::h2_grounded(sys), 5.0 / 6) < 1e-10);
  CHECK(h2_gbpiac_analytic(2, 1, 1, 1, OutputSelector::FrequencyDeviation).value == doctest::Approx(5.0 / 6));
}

TEST_CASE("DPIAC worked point n=2, λ2=2, m=d=k1=k3=1") {
  const auto net = oracle::path_network(2);
  const auto spectral = spectral_decompose(build_laplacian(net));
  CHECK(spectral.eigenvalues(1) == doctest::Approx(2.0));
  const auto c = dpiac_mode_coefficients(2, 1, 1, 1, 1);
  CHECK(c.b1 == doctest::Approx(150));
  CHECK(c.b2 == doctest::Approx(50));
  CHECK(c.e == doctest::Approx(250));
  const auto g = GainSchedule::analytic(1, 1);
  const std::pair<OutputSelector, double> cases[] = {{OutputSelector::FrequencyDeviation, 0.5 * 150 / 250 + 6.0 / 18},
                                                     {OutputSelector::ControlInput, 0.7},
                                                     {OutputSelector::MarginalCostSpread, 0.8}};
  for (const auto& [sel, expected] : cases) {
    CHECK(h2_dpiac_analytic(spectral, 1, 1, 1, 1, sel).value == doctest::Approx(expected).epsilon(1e-14));
    const auto sys = loop(Law::Dpiac, net, g, sel);
    CHECK(oracle::rel(oracle::h2_grounded(sys), expected) < 1e-9);
    CHECK(oracle::rel(h2_numeric(sys).value, expected) < 1e-9);
  }
}

TEST_CASE("spread term uses λ² b2 / e: it differs from λ² b2 / (m² e) when m != 1") {
  const double m = 2.5, d = 0.7, k1 = 0.6, k3 = 1.5;
  const auto net = oracle::path_network(3, m, d);
  const auto spectral = spectral_decompose(build_laplacian(net));
  const auto sys = loop(Law::Dpiac, net, GainSchedule::analytic(k1, k3), OutputSelector::MarginalCostSpread);
  const double ref = oracle::h2_grounded(sys);
  CHECK(oracle::rel(h2_dpiac_analytic(spectral, m, d, k1, k3, OutputSelector::MarginalCostSpread).value, ref) < 1e-9);
  double printed = 0.0;
  for (int i = 1; i < 3; ++i) {
    const double l = spectral.eigenvalues(i);
    const auto c = dpiac_mode_coefficients(l, m, d, k1, k3);
    printed += l * l * c.b2 / (m * m * c.e);
  }
  CHECK(oracle::rel(printed, ref) > 0.5);
}

TEST_CASE("impulse-response quadrature agrees with the Grammian value") {
  const auto net = oracle::path_network(3, 1.2, 0.9);
  const auto sys = loop(Law::Dpiac, net, GainSchedule::analytic(0.7, 0.5), OutputSelector::FrequencyDeviation);
  const double grammian = h2_numeric(sys).value;
  CHECK(oracle::rel(oracle::h2_impulse(sys, 0.01, 120.0), grammian) < 1e-5);
}

TEST_CASE("numeric H2 before and after deflation, random homogeneous n=5") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = oracle::homogeneous(5, oracle::log_uniform(rng, 0.1, 10), oracle::log_uniform(rng, 0.1, 10),
                                         oracle::random_connected(rng, 5));
    const auto g = GainSchedule::analytic(oracle::log_uniform(rng, 0.1, 10), 2.0);
    for (Law law : {Law::Gbpiac, Law::Dpiac}) {
      const auto sys = loop(law, net, g, OutputSelector::FrequencyDeviation);
      const double grounded = oracle::h2_grounded(sys);  // observable-subspace form
      const auto n = h2_numeric(deflate_zero_mode(sys));
      CHECK(oracle::rel(n.value, grounded) < 1e-9);
      CHECK(oracle::rel(n.value, n.dual) < 1e-8);
      CHECK(oracle::rel(h2_numeric(sys, LyapunovMethod::BartelsStewart).value, grounded) < 1e-9);
    }
  }
}

TEST_CASE("modal sum equals the dense solve") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial;
    const auto net = oracle::homogeneous(n, 1.3, 0.8, oracle::random_connected(rng, n));
    const auto spectral = spectral_decompose(build_laplacian(net));
    for (Law law : {Law::Gbpiac, Law::Dpiac, Law::Decpiac})
      for (auto sel : {OutputSelector::FrequencyDeviation, OutputSelector::ControlInput}) {
        const auto sys = loop(law, net, GainSchedule::analytic(0.9, 1.1), sel);
        CHECK(oracle::rel(h2_modal(modal_decouple(sys, spectral)).value, h2_numeric(sys).value) < 1e-9);
      }
  }
}

TEST_CASE("k1 -> infinity limit: n=2, λ2=2, m=d=k3=1 gives 0.5 * 4/9") {
  const auto spectral = spectral_decompose(build_laplacian(oracle::path_network(2)));
  const double lim = limit_k1_infinity(spectral, 1, 1, 1);
  CHECK(lim == doctest::Approx(0.5 * 4 / 9).epsilon(1e-14));
  const double at = h2_dpiac_analytic(spectral, 1, 1, 1e6, 1, OutputSelector::FrequencyDeviation).value;
  CHECK(oracle::rel(at, lim) < 1e-3);
}

TEST_CASE("k3 -> infinity recovers GBPIAC; finite k3 costs more control") {
  const auto net = oracle::path_network(4, 1.4, 0.6);
  const auto spectral = spectral_decompose(build_laplacian(net));
  const double k1 = 0.8;
  for (auto sel : {OutputSelector::FrequencyDeviation, OutputSelector::ControlInput}) {
    const double gb = h2_gbpiac_analytic(4, 1.4, 0.6, k1, sel).value;
    CHECK(oracle::rel(h2_dpiac_analytic(spectral, 1.4, 0.6, k1, 1e6, sel).value, gb) < 1e-3);
  }
  const auto gaps = compare_laws(spectral, 1.4, 0.6, k1, {0.1, 1, 10, 100});
  for (const auto& g : gaps) CHECK(g.u_gap > 0.0);
  const auto spreads = compare_laws(spectral, 1.4, 0.6, k1, {1, 10, 100});
  CHECK(spreads[0].spread > spreads[1].spread);
  CHECK(spreads[1].spread > spreads[2].spread);
}

TEST_CASE("general B bounds") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  const auto net = oracle::path_network(4);
  const auto g = GainSchedule::analytic(1, 1);
  const Eigen::MatrixXd B = Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).asDiagonal();
  for (Law law : {Law::Gbpiac, Law::Dpiac}) {
    AnalysisOptions opt;
    opt.input = B;
    const auto r = analyze(law, net, CommunicationGraph::mirror(net), g, OutputSelector::FrequencyDeviation, opt);
    REQUIRE(r.bounds);
    CHECK_FALSE(r.analytic);
    CHECK(r.bounds->contains(r.numeric.value, 1e-12));
  }
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(h2_bounds_general_B(1.0, asym), DomainError);
  CHECK_THROWS_AS(h2_bounds_general_B(1.0, -Eigen::Matrix2d::Identity()), DomainError);
}

TEST_CASE("analyze reports closed form only for homogeneous inputs") {
  const auto net = oracle::path_network(3);
  const auto r = analyze(Law::Dpiac, net, CommunicationGraph::mirror(net), GainSchedule::analytic(1, 1),
                         OutputSelector::FrequencyDeviation, {std::nullopt, true, true});
  REQUIRE(r.analytic);
  CHECK(r.relative_gap() < 1e-9);
  CHECK(r.limit_k1);
  CHECK(r.limit_k3);

  using K = NodeKind;
  const PowerNetwork het({{1, K::Machine, 1, 1}, {2, K::Machine, 2, 1}}, {{0, 1, 1}});
  const auto h = analyze(Law::Gbpiac, het, CommunicationGraph::mirror(het), GainSchedule::analytic(1, 0),
                         OutputSelector::ControlInput);
  CHECK_FALSE(h.analytic);
  CHECK(std::isnan(h.relative_gap()));
}

TEST_CASE("analytic inputs are validated") {
  CHECK_THROWS_AS(h2_gbpiac_analytic(3, -1, 1, 1, OutputSelector::FrequencyDeviation), DomainError);
  SpectralDecomposition bad;
  bad.eigenvalues = Eigen::Vector3d(0, 0, 1);
  bad.modes = Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(h2_dpiac_analytic(bad, 1, 1, 1, 1, OutputSelector::FrequencyDeviation), DomainError);
}
