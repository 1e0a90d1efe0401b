#pragma once

#include "piac/closedloop.hpp"
#include "piac/lyapunov.hpp"
#include "piac/netmodel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace piac {

struct Grammians {
  Eigen::MatrixXd observability;    // Q_o A + Aᵀ Q_o + Cᵀ C = 0
  Eigen::MatrixXd controllability;  // A Q_c + Q_c Aᵀ + B Bᵀ = 0
};

struct NumericH2 {
  double value = 0.0;  // tr(Bᵀ Q_o B)
  double dual = 0.0;   // tr(C Q_c Cᵀ)
  double condition_estimate = 0.0;
  Grammians grammians;
};

/// Squared H2 norm through both Grammians. Deflates the average-phase mode
/// first when `sys` is not yet deflated. The two traces must agree to 1e-8
/// relative (1e-6 for badly conditioned operators) or SolverAccuracyError is
/// raised.
NumericH2 h2_numeric(const StateSpace& sys, LyapunovMethod method = LyapunovMethod::Auto);

/// Squared H2 norm by summing per-mode Lyapunov solves over modal_decouple
/// blocks; the rigid block drops its average-phase coordinate.
struct ModalH2 {
  double value = 0.0;
  std::vector<double> per_mode;
};
ModalH2 h2_modal(const ModalDecomposition& modes);

/// Closed-form GBPIAC norms for the homogeneous case with k2 = 4 k1, B = I.
struct AnalyticH2 {
  double value = 0.0;
  double relative = 0.0;  // Σ over non-zero Laplacian modes
  double overall = 0.0;   // zero (uniform) mode
  std::vector<double> per_mode;  // index 0 is the uniform mode
};

AnalyticH2 h2_gbpiac_analytic(int n, double m, double d, double k1, OutputSelector selector);

/// Per-mode rational coefficients of the DPIAC norms (mode eigenvalue λ > 0).
struct DpiacModeCoefficients {
  double b1 = 0.0;
  double b2 = 0.0;
  double e = 0.0;
};

DpiacModeCoefficients dpiac_mode_coefficients(double lambda, double m, double d, double k1,
                                              double k3);

/// Closed-form DPIAC norms (DecPIAC when k3 = 0). For the spread output the
/// per-mode term is λ_i² b2_i / e_i.
AnalyticH2 h2_dpiac_analytic(const SpectralDecomposition& spectral, double m, double d, double k1,
                             double k3, OutputSelector selector);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double rel_tol = 0.0) const {
    const double slack = rel_tol * std::max(std::abs(lo), std::abs(hi));
    return x >= lo - slack && x <= hi + slack;
  }
};

/// [γ_min² G, γ_max² G] for a symmetric positive-definite disturbance matrix B.
Interval h2_bounds_general_B(double value_at_identity, const Eigen::MatrixXd& B);

/// lim_{k1→∞} of the DPIAC frequency norm:
/// (1/2m) Σ_{i≥2} λ_i² k3² / (d λ_i² k3² + d (1 + 2 λ_i k3)).
double limit_k1_infinity(const SpectralDecomposition& spectral, double m, double d, double k3);

struct LawGap {
  double k3 = 0.0;
  double omega_gap = 0.0;  // DPIAC - GBPIAC, frequency
  double u_gap = 0.0;      // DPIAC - GBPIAC, control input
  double spread = 0.0;     // DPIAC marginal-cost spread norm
};

/// DPIAC versus GBPIAC over a k3 grid.
std::vector<LawGap> compare_laws(const SpectralDecomposition& spectral, double m, double d,
                                 double k1, const std::vector<double>& k3_grid);

/// Everything the analyze command reports.
struct H2Report {
  Law law = Law::Dpiac;
  OutputSelector selector = OutputSelector::FrequencyDeviation;
  int nodes = 0;
  NumericH2 numeric;
  std::optional<AnalyticH2> analytic;
  std::optional<Interval> bounds;
  std::optional<double> limit_k1;  // DPIAC frequency norm as k1 → ∞
  std::optional<double> limit_k3;  // DPIAC norm as k3 → ∞ (the GBPIAC value)

  double relative_gap() const;
};

struct AnalysisOptions {
  std::optional<Eigen::MatrixXd> input;  // disturbance matrix; identity when empty
  bool analytic = true;                  // include closed form when applicable
  bool limits = false;
};

/// Numeric norm always; analytic and bounds when check_homogeneous passes and
/// the gains are in analytic mode.
H2Report analyze(Law law, const PowerNetwork& net, const CommunicationGraph& comm,
                 const GainSchedule& gains, OutputSelector selector,
                 const AnalysisOptions& options = {});

}  // namespace piac
