#include "piac/controllers.hpp"

#include "piac/errors.hpp"

#include <cmath>
#include <iostream>

namespace piac {

namespace {

void require_size(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() != n)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                     std::to_string(v.size()));
}

void require_local(const LocalState& state, const Eigen::VectorXd& omega,
                   const ControllerParams& params) {
  require_size(omega, params.size(), "omega");
  require_size(state.eta, params.size(), "eta");
  require_size(state.xi, params.size(), "xi");
}

LocalRates local_update(const LocalState& state, const Eigen::VectorXd& omega,
                        const ControllerParams& params, const GainSchedule& gains) {
  LocalRates r;
  r.eta = params.damping.cwiseProduct(omega);
  r.xi = -gains.k1 * (params.inertia.cwiseProduct(omega) + state.eta) - gains.k2 * state.xi;
  r.u = gains.k2 * state.xi;
  return r;
}

}  // namespace

const char* to_string(Law law) {
  switch (law) {
    case Law::Gbpiac: return "gbpiac";
    case Law::Dpiac: return "dpiac";
    case Law::Decpiac: return "decpiac";
  }
  return "?";
}

Law parse_law(const std::string& text) {
  if (text == "gbpiac") return Law::Gbpiac;
  if (text == "dpiac") return Law::Dpiac;
  if (text == "decpiac") return Law::Decpiac;
  throw DomainError("unknown control law '" + text + "'");
}

void GainSchedule::validate(bool strict) const {
  if (!(k1 > 0.0)) throw GainError("k1 must be positive");
  if (!(k2 > 0.0)) throw GainError("k2 must be positive");
  if (!(k3 >= 0.0)) throw GainError("k3 must be non-negative");
  if (analytic_mode && std::abs(k2 - 4.0 * k1) > 1e-12 * std::abs(k2))
    throw GainError("analytic mode requires k2 = 4 k1");
  if (k2 < 4.0 * k1) {
    if (strict) throw GainError("k2 must satisfy k2 >= 4 k1");
    std::cerr << "note: k2 < 4 k1, the control input may overshoot\n";
  }
}

ControllerParams make_controller_params(const PowerNetwork& net) {
  const auto& ctrl = net.controllers();
  const int nk = static_cast<int>(ctrl.size());
  ControllerParams p;
  p.inertia.resize(nk);
  p.damping.resize(nk);
  p.price.resize(nk);
  for (int k = 0; k < nk; ++k) {
    const auto& node = net.node(ctrl[k]);
    p.inertia(k) = node.kind == NodeKind::Machine ? node.inertia : 0.0;
    p.damping(k) = node.damping;
    p.price(k) = node.price;
  }
  p.aggregate_price = net.aggregate_price();
  return p;
}

ControllerParams make_controller_params(const PowerNetwork& net, const CommunicationGraph& comm) {
  ControllerParams p = make_controller_params(net);
  if (comm.laplacian().rows() != p.size())
    throw ShapeError("communication graph does not match the controller set");
  p.comm_laplacian = comm.laplacian();
  return p;
}

CentralRates gbpiac_rhs(const CentralState& state, const Eigen::VectorXd& omega,
                        const ControllerParams& params, const GainSchedule& gains) {
  require_size(omega, params.size(), "omega");
  CentralRates r;
  r.eta = params.damping.dot(omega);
  r.xi = -gains.k1 * (params.inertia.dot(omega) + state.eta) - gains.k2 * state.xi;
  r.u = (params.aggregate_price * gains.k2 * state.xi) * params.price.cwiseInverse();
  return r;
}

LocalRates dpiac_rhs(const LocalState& state, const Eigen::VectorXd& omega,
                     const ControllerParams& params, const GainSchedule& gains) {
  require_local(state, omega, params);
  if (params.comm_laplacian.rows() != params.size())
    throw ShapeError("dpiac needs a communication Laplacian over the controllers");
  LocalRates r = local_update(state, omega, params, gains);
  // k3 = 0 must reproduce decpiac_rhs bit for bit, signed zeros included.
  if (gains.k3 == 0.0) return r;
  const Eigen::VectorXd cost = gains.k2 * params.price.cwiseProduct(state.xi);
  r.eta += gains.k3 * (params.comm_laplacian * cost);
  return r;
}

LocalRates decpiac_rhs(const LocalState& state, const Eigen::VectorXd& omega,
                       const ControllerParams& params, const GainSchedule& gains) {
  require_local(state, omega, params);
  return local_update(state, omega, params, gains);
}

Eigen::VectorXd optimal_dispatch(const PowerNetwork& net) {
  const auto& ctrl = net.controllers();
  if (ctrl.empty()) throw NoControllers("network has no controller nodes");
  const double imbalance = net.total_injection();
  Eigen::VectorXd u(ctrl.size());
  for (std::size_t k = 0; k < ctrl.size(); ++k)
    u(k) = -imbalance * net.aggregate_price() / net.node(ctrl[k]).price;
  return u;
}

double synchronized_frequency(const PowerNetwork& net, const Eigen::VectorXd& u) {
  require_size(u, static_cast<int>(net.controllers().size()), "u");
  const double damping = net.total_damping();
  if (!(damping > 0.0)) throw DegenerateModel("total damping is zero");
  return (net.total_injection() + u.sum()) / damping;
}

Eigen::VectorXd marginal_costs(const Eigen::VectorXd& xi, const ControllerParams& params,
                               const GainSchedule& gains) {
  require_size(xi, params.size(), "xi");
  return gains.k2 * params.price.cwiseProduct(xi);
}

}  // namespace piac
