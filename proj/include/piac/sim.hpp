#pragma once

#include "piac/controllers.hpp"
#include "piac/netmodel.hpp"
#include "piac/scenario.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace piac {

/// One recorded instant. Vectors run over all nodes; entries that do not
/// exist for a node kind (ω of passive nodes, controller states of
/// non-controllers) are NaN. GBPIAC broadcasts its central η_s, ξ_s to every
/// controller row.
struct TraceSample {
  double t = 0.0;
  Eigen::VectorXd theta, omega, eta, xi, u, marginal_cost;
};

struct Trace {
  std::vector<int> node_ids;
  std::vector<bool> controller;  // per node: member of V_K
  std::vector<TraceSample> samples;
};

struct Metrics {
  // Deterministic: S = ∫₀^T0 ωᵀω dt, C = ½ ∫₀^T0 uᵀ α u dt over V_K.
  double S = 0.0;
  double C = 0.0;
  // Stochastic: stationary E[ωᵀω] and ½ E[uᵀ α u] with path-to-path
  // standard errors.
  double E_S = 0.0;
  double E_C = 0.0;
  double E_S_stderr = 0.0;
  double E_C_stderr = 0.0;
  bool stochastic = false;
};

/// Trapezoid quadrature of the S and C integrands over [0, T0] on the trace
/// grid (the last interval is cut at T0). Throws InsufficientHorizon when the
/// trace ends before T0.
Metrics compute_metrics(const Trace& trace, const Eigen::VectorXd& price, double T0);

/// Pre-disturbance operating point: ω = 0, economic dispatch u*, power flow
/// angles and the matching controller states. Layout follows the simulator.
struct Equilibrium {
  Eigen::VectorXd theta;  // all nodes
  Eigen::VectorXd u;      // over V_K
  Eigen::VectorXd state;  // differential state vector
};

Equilibrium solve_equilibrium(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                              const GainSchedule& gains, bool linearized = false);

/// Integrates the nonlinear (or linearized) DAE closed loop under a step load
/// with an adaptive Dormand-Prince 5(4) scheme (rtol 1e-8, atol 1e-10); the
/// passive-node angles are solved by damped Newton inside every stage.
/// Throws DAESolveError or NumericalBlowup.
Trace simulate_deterministic(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                             const GainSchedule& gains, const Scenario& scenario);

struct PathResult {
  Trace trace;
  double mean_omega_sq = 0.0;  // time average of ωᵀω after burn-in
  double mean_cost = 0.0;      // time average of ½ uᵀαu after burn-in
};

/// One Euler-Maruyama path; its random stream is derived from (seed, path).
PathResult simulate_path(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                         const GainSchedule& gains, const Scenario& scenario, int path);

struct Ensemble {
  std::vector<PathResult> paths;
  Metrics metrics;
};

/// Ensemble over scenario.paths independent paths, OpenMP-parallel (capped by
/// PIAC_WORKERS). Results do not depend on the worker count.
Ensemble simulate_stochastic(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                             const GainSchedule& gains, const Scenario& scenario);

/// Serial reference for simulate_stochastic.
Ensemble simulate_stochastic_serial(const PowerNetwork& net, const CommunicationGraph& comm,
                                    Law law, const GainSchedule& gains, const Scenario& scenario);

/// Terminal bookkeeping against the economic-dispatch steady state.
struct SteadyState {
  double max_abs_omega = 0.0;
  double omega_syn = 0.0;         // Σ D_i ω_i / Σ D_i at the last sample
  double balance_residual = 0.0;  // |Σ u + Σ P|
  double cost_spread = 0.0;       // max - min marginal cost
};

SteadyState check_steady_state(const Trace& trace, const PowerNetwork& net, const Scenario& scenario);

/// Marginal-cost spread (max - min over V_K) of every sample.
std::vector<double> cost_spread_series(const Trace& trace);

}  // namespace piac
