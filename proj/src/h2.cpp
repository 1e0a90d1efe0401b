#include "piac/h2.hpp"

#include "piac/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace piac {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive");
}

void require_modes(const SpectralDecomposition& spectral) {
  if (spectral.size() == 0) throw DomainError("empty spectral decomposition");
  if (spectral.eigenvalues(0) != 0.0) throw DomainError("first Laplacian eigenvalue must be zero");
  for (int i = 1; i < spectral.size(); ++i)
    if (!(spectral.eigenvalues(i) > 0.0))
      throw DomainError("Laplacian has a repeated zero eigenvalue (disconnected network)");
}

// Uniform-mode frequency term shared by both laws.
double overall_frequency(double m, double d, double k1) {
  const double s = 2.0 * k1 * m + d;
  return (d + 5.0 * m * k1) / (2.0 * m * s * s);
}

double trace_form(const Eigen::MatrixXd& outer, const Eigen::MatrixXd& gram) {
  return (outer.transpose() * gram * outer).trace();
}

}  // namespace

NumericH2 h2_numeric(const StateSpace& sys, LyapunovMethod method) {
  const StateSpace deflated = sys.deflated ? sys : deflate_zero_mode(sys);
  const auto [A, B, C] = drop_unreachable_zero_modes(deflated.A, deflated.B, deflated.C);

  const LyapunovSolution obs = lyapunov_solve(A, C.transpose() * C, method);
  const LyapunovSolution ctr = lyapunov_solve(A.transpose(), B * B.transpose(), method);

  NumericH2 out;
  out.grammians = {obs.X, ctr.X};
  out.value = trace_form(B, obs.X);
  out.dual = (C * ctr.X * C.transpose()).trace();
  out.condition_estimate = obs.condition_estimate;

  const double tol = out.condition_estimate > 1e8 ? 1e-6 : 1e-8;
  const double scale = std::max(std::abs(out.value), std::abs(out.dual));
  if (std::abs(out.value - out.dual) > tol * scale)
    throw SolverAccuracyError("Grammian traces disagree: " + std::to_string(out.value) + " vs " +
                              std::to_string(out.dual));
  return out;
}

ModalH2 h2_modal(const ModalDecomposition& modes) {
  ModalH2 out;
  for (const auto& blk : modes.blocks) {
    Eigen::MatrixXd A = blk.A, B = blk.B, C = blk.C;
    if (blk.rigid) {
      // The first coordinate is the average phase: nothing reads it.
      const auto s = A.rows() - 1;
      if (A.col(0).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) ||
          (C.size() && C.col(0).cwiseAbs().maxCoeff() > 0.0))
        throw NotDeflatable("rigid modal block is observable through its phase coordinate");
      A = blk.A.bottomRightCorner(s, s);
      B = blk.B.bottomRows(s);
      C = blk.C.rightCols(s);
    }
    Realization r = drop_unreachable_zero_modes(A, B, C);
    A = std::move(r.A);
    B = std::move(r.B);
    C = std::move(r.C);
    const LyapunovSolution obs = lyapunov_solve(A, C.transpose() * C);
    const double v = trace_form(B, obs.X);
    out.per_mode.push_back(v);
    out.value += v;
  }
  return out;
}

AnalyticH2 h2_gbpiac_analytic(int n, double m, double d, double k1, OutputSelector selector) {
  if (n < 1) throw DomainError("n must be at least 1");
  require_positive(m, "m");
  require_positive(d, "d");
  require_positive(k1, "k1");
  AnalyticH2 out;
  out.per_mode.assign(n, 0.0);
  switch (selector) {
    case OutputSelector::FrequencyDeviation:
      out.overall = overall_frequency(m, d, k1);
      for (int i = 1; i < n; ++i) out.per_mode[i] = 1.0 / (2.0 * m * d);
      out.relative = (n - 1) / (2.0 * m * d);
      break;
    case OutputSelector::ControlInput: out.overall = k1 / 2.0; break;
    case OutputSelector::TotalControlInput: out.overall = k1 * n / 2.0; break;
    case OutputSelector::MarginalCostSpread: break;
  }
  out.per_mode[0] = out.overall;
  out.value = out.overall + out.relative;
  return out;
}

DpiacModeCoefficients dpiac_mode_coefficients(double lambda, double m, double d, double k1,
                                              double k3) {
  const double l = lambda;
  const double g = 4.0 * k1 * k1 * k3 * m - 1.0;
  const double s = d + 2.0 * k1 * m;
  DpiacModeCoefficients c;
  c.b1 = l * l * g * g + 4.0 * d * m * k1 * k1 * k1 +
         k1 * (d + 4.0 * k1 * m) * (4.0 * d * l * k1 * k3 + 5.0 * l + 4.0 * d * k1);
  c.b2 = 2.0 * d * k1 * k1 * k1 * s * s + 2.0 * l * std::pow(k1, 4) * m * m * (4.0 * k1 * k3 * d + 4.0);
  c.e = d * l * l * g * g + 16.0 * d * l * std::pow(k1, 4) * k3 * m * m + d * d * l * k1 +
        4.0 * k1 * s * s * (d * k1 + l + d * l * k1 * k3);
  return c;
}

AnalyticH2 h2_dpiac_analytic(const SpectralDecomposition& spectral, double m, double d, double k1,
                             double k3, OutputSelector selector) {
  require_modes(spectral);
  require_positive(m, "m");
  require_positive(d, "d");
  require_positive(k1, "k1");
  if (!(k3 >= 0.0)) throw DomainError("k3 must be non-negative");
  const int n = spectral.size();

  AnalyticH2 out;
  out.per_mode.assign(n, 0.0);
  switch (selector) {
    case OutputSelector::FrequencyDeviation: out.overall = overall_frequency(m, d, k1); break;
    case OutputSelector::ControlInput: out.overall = k1 / 2.0; break;
    case OutputSelector::TotalControlInput: out.overall = k1 * n / 2.0; break;
    case OutputSelector::MarginalCostSpread: break;
  }
  out.per_mode[0] = out.overall;
  if (selector != OutputSelector::TotalControlInput) {
    for (int i = 1; i < n; ++i) {
      const double l = spectral.eigenvalues(i);
      const auto c = dpiac_mode_coefficients(l, m, d, k1, k3);
      double term = 0.0;
      switch (selector) {
        case OutputSelector::FrequencyDeviation: term = c.b1 / (2.0 * m * c.e); break;
        case OutputSelector::ControlInput: term = c.b2 / c.e; break;
        case OutputSelector::MarginalCostSpread: term = l * l * c.b2 / c.e; break;
        case OutputSelector::TotalControlInput: break;
      }
      out.per_mode[i] = term;
      out.relative += term;
    }
  }
  out.value = out.overall + out.relative;
  return out;
}

Interval h2_bounds_general_B(double value_at_identity, const Eigen::MatrixXd& B) {
  if (B.rows() == 0 || B.rows() != B.cols()) throw DomainError("B must be square");
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("B must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw DomainError("B must be positive definite");
  return {lo * lo * value_at_identity, hi * hi * value_at_identity};
}

double limit_k1_infinity(const SpectralDecomposition& spectral, double m, double d, double k3) {
  require_modes(spectral);
  require_positive(m, "m");
  require_positive(d, "d");
  require_positive(k3, "k3");
  double sum = 0.0;
  for (int i = 1; i < spectral.size(); ++i) {
    const double l = spectral.eigenvalues(i);
    const double num = l * l * k3 * k3;
    sum += num / (d * num + d * (1.0 + 2.0 * l * k3));
  }
  return sum / (2.0 * m);
}

std::vector<LawGap> compare_laws(const SpectralDecomposition& spectral, double m, double d,
                                 double k1, const std::vector<double>& k3_grid) {
  const int n = spectral.size();
  const double gb_omega = h2_gbpiac_analytic(n, m, d, k1, OutputSelector::FrequencyDeviation).value;
  const double gb_u = h2_gbpiac_analytic(n, m, d, k1, OutputSelector::ControlInput).value;
  std::vector<LawGap> rows;
  rows.reserve(k3_grid.size());
  for (double k3 : k3_grid) {
    LawGap row;
    row.k3 = k3;
    row.omega_gap =
        h2_dpiac_analytic(spectral, m, d, k1, k3, OutputSelector::FrequencyDeviation).value - gb_omega;
    row.u_gap = h2_dpiac_analytic(spectral, m, d, k1, k3, OutputSelector::ControlInput).value - gb_u;
    row.spread = h2_dpiac_analytic(spectral, m, d, k1, k3, OutputSelector::MarginalCostSpread).value;
    rows.push_back(row);
  }
  return rows;
}

double H2Report::relative_gap() const {
  if (!analytic) return std::nan("");
  const double diff = std::abs(analytic->value - numeric.value);
  if (diff == 0.0) return 0.0;
  return diff / std::max(std::abs(numeric.value), std::abs(analytic->value));
}

H2Report analyze(Law law, const PowerNetwork& net, const CommunicationGraph& comm,
                 const GainSchedule& gains, OutputSelector selector,
                 const AnalysisOptions& options) {
  H2Report report;
  report.law = law;
  report.selector = selector;
  report.nodes = net.size();
  report.numeric = h2_numeric(assemble(law, net, comm, gains, options.input, selector));

  if (!options.analytic || !gains.analytic_mode) return report;
  // GBPIAC and DecPIAC never read the communication graph.
  const auto homogeneity =
      check_homogeneous(net, law == Law::Dpiac ? comm : CommunicationGraph::mirror(net));
  if (!homogeneity.passed) return report;

  const double m = homogeneity.inertia, d = homogeneity.damping;
  const auto spectral = spectral_decompose(build_laplacian(net));
  const double k3 = law == Law::Decpiac ? 0.0 : gains.k3;
  const AnalyticH2 closed = law == Law::Gbpiac
                                ? h2_gbpiac_analytic(net.size(), m, d, gains.k1, selector)
                                : h2_dpiac_analytic(spectral, m, d, gains.k1, k3, selector);
  const bool identity_input =
      !options.input || (options.input->rows() == options.input->cols() &&
                         options.input->isApprox(Eigen::MatrixXd::Identity(net.size(), net.size())));
  if (identity_input) report.analytic = closed;
  else report.bounds = h2_bounds_general_B(closed.value, *options.input);

  if (options.limits && law != Law::Gbpiac) {
    if (selector == OutputSelector::FrequencyDeviation && k3 > 0.0)
      report.limit_k1 = limit_k1_infinity(spectral, m, d, k3);
    report.limit_k3 = h2_gbpiac_analytic(net.size(), m, d, gains.k1, selector).value;
  }
  return report;
}

}  // namespace piac
