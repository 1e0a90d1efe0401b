#pragma once

#include "piac/netmodel.hpp"

#include <Eigen/Dense>

#include <string>

namespace piac {

enum class Law { Gbpiac, Dpiac, Decpiac };

const char* to_string(Law law);
Law parse_law(const std::string& text);

/// Control gains. The transient theorems assume k2 = 4 k1 exactly
/// (`analytic_mode`); simulation accepts any k2 >= 4 k1.
struct GainSchedule {
  double k1 = 1.0;
  double k2 = 4.0;
  double k3 = 1.0;
  bool analytic_mode = true;

  static GainSchedule analytic(double k1, double k3) { return {k1, 4.0 * k1, k3, true}; }

  /// Throws GainError on k1 <= 0, k2 <= 0, k3 < 0, or analytic_mode with
  /// k2 != 4 k1. k2 < 4 k1 is rejected when `strict`, otherwise only noted on
  /// stderr.
  void validate(bool strict) const;

  bool operator==(const GainSchedule&) const = default;
};

/// Per-controller parameters over V_K in PowerNetwork::controllers() order.
struct ControllerParams {
  Eigen::VectorXd inertia;  // zero for frequency-dependent nodes
  Eigen::VectorXd damping;
  Eigen::VectorXd price;
  double aggregate_price = 0.0;  // α_s
  Eigen::MatrixXd comm_laplacian;

  int size() const { return static_cast<int>(price.size()); }
};

/// Without a communication graph the Laplacian is left zero-sized; only
/// dpiac_rhs reads it.
ControllerParams make_controller_params(const PowerNetwork& net);
ControllerParams make_controller_params(const PowerNetwork& net, const CommunicationGraph& comm);

struct CentralState {
  double eta = 0.0;
  double xi = 0.0;
};

struct CentralRates {
  double eta = 0.0;
  double xi = 0.0;
  Eigen::VectorXd u;
};

struct LocalState {
  Eigen::VectorXd eta;
  Eigen::VectorXd xi;

  static LocalState zero(int n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }
};

struct LocalRates {
  Eigen::VectorXd eta;
  Eigen::VectorXd xi;
  Eigen::VectorXd u;
};

/// Gather-broadcast law: dη_s = Σ D_i ω_i, dξ_s = -k1(Σ M_i ω_i + η_s) - k2 ξ_s,
/// u_i = (α_s / α_i) k2 ξ_s.
CentralRates gbpiac_rhs(const CentralState& state, const Eigen::VectorXd& omega,
                        const ControllerParams& params, const GainSchedule& gains);

/// Distributed law: the decentralized update plus the consensus term
/// k3 Σ_j l_ij (k2 α_i ξ_i - k2 α_j ξ_j) in dη_i.
LocalRates dpiac_rhs(const LocalState& state, const Eigen::VectorXd& omega,
                     const ControllerParams& params, const GainSchedule& gains);

LocalRates decpiac_rhs(const LocalState& state, const Eigen::VectorXd& omega,
                       const ControllerParams& params, const GainSchedule& gains);

/// Economic dispatch optimum u*_i = -P_s α_s / α_i over V_K.
Eigen::VectorXd optimal_dispatch(const PowerNetwork& net);

/// ω_syn = (Σ P_i + Σ u_i) / Σ D_i, with `u` over V_K.
double synchronized_frequency(const PowerNetwork& net, const Eigen::VectorXd& u);

/// α_i u_i = k2 α_i ξ_i.
Eigen::VectorXd marginal_costs(const Eigen::VectorXd& xi, const ControllerParams& params,
                               const GainSchedule& gains);

}  // namespace piac
