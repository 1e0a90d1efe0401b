#include "piac/sim.hpp"

#include "piac/errors.hpp"
#include "piac/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace piac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// The closed loop in differential-algebraic form. Differential states are
/// (θ_M, ω_M, θ_F, controller); passive angles θ_P are algebraic and solved
/// by Newton on every evaluation, warm-started from the previous solution.
class Dynamics {
 public:
  Dynamics(const PowerNetwork& net, const CommunicationGraph& comm, Law law, GainSchedule gains,
           bool linearized)
      : net_(net), law_(law), gains_(gains), linearized_(linearized) {
    const int n = net.size();
    position_.assign(n, -1);
    for (int i = 0; i < n; ++i) {
      switch (net.node(i).kind) {
        case NodeKind::Machine: position_[i] = static_cast<int>(machines_.size()); machines_.push_back(i); break;
        case NodeKind::FreqDependent: position_[i] = static_cast<int>(freqdep_.size()); freqdep_.push_back(i); break;
        case NodeKind::Passive: position_[i] = static_cast<int>(passive_.size()); passive_.push_back(i); break;
      }
    }
    controllers_ = net.controllers();
    if (controllers_.empty()) throw NoControllers("network has no controller nodes");
    if (law == Law::Dpiac) {
      if (comm.laplacian().rows() != static_cast<Eigen::Index>(controllers_.size()))
        throw ShapeError("communication graph does not match the controller set");
      if (!comm.connected()) throw DisconnectedNetwork("communication graph over V_K is not connected");
      params_ = make_controller_params(net, comm);
    } else {
      params_ = make_controller_params(net);
    }

    adjacency_.assign(n, {});
    for (const auto& e : net.edges()) {
      adjacency_[e.from].push_back({e.to, e.weight});
      adjacency_[e.to].push_back({e.from, e.weight});
    }

    const int nk = static_cast<int>(controllers_.size());
    off_omega_ = static_cast<int>(machines_.size());
    off_freq_ = 2 * off_omega_;
    off_ctrl_ = off_freq_ + static_cast<int>(freqdep_.size());
    ctrl_dim_ = law == Law::Gbpiac ? 2 : 2 * nk;

    theta_ = Eigen::VectorXd::Zero(n);
    flows_ = Eigen::VectorXd::Zero(n);
    omega_k_ = Eigen::VectorXd::Zero(nk);
    u_ = Eigen::VectorXd::Zero(nk);
  }

  int dim() const { return off_ctrl_ + ctrl_dim_; }
  int controllers() const { return static_cast<int>(controllers_.size()); }
  const std::vector<int>& controller_nodes() const { return controllers_; }
  const ControllerParams& params() const { return params_; }
  Law law() const { return law_; }
  const GainSchedule& gains() const { return gains_; }

  double coupling(double x) const { return linearized_ ? x : std::sin(x); }
  double slope(double x) const { return linearized_ ? 1.0 : std::cos(x); }

  void set_angles(const Eigen::VectorXd& theta) { theta_ = theta; }

  /// Power-flow angles with ω = 0 for injections `p` plus controller inputs
  /// `u` over V_K; node 0 is the angle reference.
  Eigen::VectorXd power_flow(const Eigen::VectorXd& p, const Eigen::VectorXd& u) {
    const int n = net_.size();
    Eigen::VectorXd net_injection = p;
    for (int k = 0; k < controllers(); ++k) net_injection(controllers_[k]) += u(k);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    if (n == 1) return theta;

    for (int iter = 0; iter < 100; ++iter) {
      compute_flows(theta);
      const Eigen::VectorXd g = (net_injection - flows_).tail(n - 1);
      const double norm = g.cwiseAbs().maxCoeff();
      if (norm <= 1e-13 * (1.0 + net_injection.cwiseAbs().maxCoeff())) return theta;
      Eigen::MatrixXd J = flow_jacobian(theta).bottomRightCorner(n - 1, n - 1);
      const Eigen::VectorXd step = J.partialPivLu().solve(g);
      double damping = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        Eigen::VectorXd trial = theta;
        trial.tail(n - 1) += damping * step;
        compute_flows(trial);
        if ((net_injection - flows_).tail(n - 1).cwiseAbs().maxCoeff() < norm || ls == 29) {
          theta = trial;
          break;
        }
        damping *= 0.5;
      }
    }
    throw DAESolveError("power flow for the initial operating point did not converge");
  }

  /// dy = f(y) for nodal injections `p` (base + disturbance). Leaves θ, ω over
  /// V_K and u available for observation.
  void eval(const Eigen::VectorXd& y, const Eigen::VectorXd& p, Eigen::VectorXd& dy) {
    dy.resize(dim());
    for (std::size_t m = 0; m < machines_.size(); ++m) theta_(machines_[m]) = y(m);
    for (std::size_t f = 0; f < freqdep_.size(); ++f) theta_(freqdep_[f]) = y(off_freq_ + f);
    solve_passive(p);
    compute_flows(theta_);

    const int nk = controllers();
    if (law_ == Law::Gbpiac) {
      const double xi_s = y(off_ctrl_ + 1);
      u_ = (params_.aggregate_price * gains_.k2 * xi_s) * params_.price.cwiseInverse();
    } else {
      u_ = gains_.k2 * y.segment(off_ctrl_ + nk, nk);
    }

    for (int k = 0; k < nk; ++k) {
      const int i = controllers_[k];
      const Node& node = net_.node(i);
      const double drive = p(i) + u_(k) - flows_(i);
      if (node.kind == NodeKind::Machine) {
        const int m = position_[i];
        const double w = y(off_omega_ + m);
        dy(m) = w;
        dy(off_omega_ + m) = (drive - node.damping * w) / node.inertia;
        omega_k_(k) = w;
      } else {
        const double w = drive / node.damping;
        dy(off_freq_ + position_[i]) = w;
        omega_k_(k) = w;
      }
    }

    switch (law_) {
      case Law::Gbpiac: {
        const auto r = gbpiac_rhs({y(off_ctrl_), y(off_ctrl_ + 1)}, omega_k_, params_, gains_);
        dy(off_ctrl_) = r.eta;
        dy(off_ctrl_ + 1) = r.xi;
        break;
      }
      case Law::Dpiac:
      case Law::Decpiac: {
        const LocalState s{y.segment(off_ctrl_, nk), y.segment(off_ctrl_ + nk, nk)};
        const auto r = law_ == Law::Dpiac ? dpiac_rhs(s, omega_k_, params_, gains_)
                                          : decpiac_rhs(s, omega_k_, params_, gains_);
        dy.segment(off_ctrl_, nk) = r.eta;
        dy.segment(off_ctrl_ + nk, nk) = r.xi;
        break;
      }
    }
  }

  /// Differential state for angles `theta` at rest with controller input `u`.
  Eigen::VectorXd rest_state(const Eigen::VectorXd& theta, const Eigen::VectorXd& u) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(dim());
    for (std::size_t m = 0; m < machines_.size(); ++m) y(m) = theta(machines_[m]);
    for (std::size_t f = 0; f < freqdep_.size(); ++f) y(off_freq_ + f) = theta(freqdep_[f]);
    const int nk = controllers();
    if (law_ == Law::Gbpiac) {
      // u_i = (α_s/α_i) k2 ξ_s and ξ̇_s = 0 at rest.
      const double xi_s = u.sum() / gains_.k2;
      y(off_ctrl_ + 1) = xi_s;
      y(off_ctrl_) = -gains_.k2 * xi_s / gains_.k1;
    } else {
      for (int k = 0; k < nk; ++k) {
        const double xi = u(k) / gains_.k2;
        y(off_ctrl_ + nk + k) = xi;
        y(off_ctrl_ + k) = -gains_.k2 * xi / gains_.k1;
      }
    }
    return y;
  }

  TraceSample observe(double t, const Eigen::VectorXd& y) const {
    const int n = net_.size(), nk = controllers();
    TraceSample s;
    s.t = t;
    s.theta = theta_;
    s.omega = Eigen::VectorXd::Constant(n, kNaN);
    s.eta = Eigen::VectorXd::Constant(n, kNaN);
    s.xi = Eigen::VectorXd::Constant(n, kNaN);
    s.u = Eigen::VectorXd::Constant(n, kNaN);
    s.marginal_cost = Eigen::VectorXd::Constant(n, kNaN);
    for (int k = 0; k < nk; ++k) {
      const int i = controllers_[k];
      s.omega(i) = omega_k_(k);
      s.u(i) = u_(k);
      s.marginal_cost(i) = params_.price(k) * u_(k);
      if (law_ == Law::Gbpiac) {
        s.eta(i) = y(off_ctrl_);
        s.xi(i) = y(off_ctrl_ + 1);
      } else {
        s.eta(i) = y(off_ctrl_ + k);
        s.xi(i) = y(off_ctrl_ + nk + k);
      }
    }
    return s;
  }

  const Eigen::VectorXd& omega_k() const { return omega_k_; }
  const Eigen::VectorXd& u() const { return u_; }

 private:
  struct Link {
    int to;
    double weight;
  };

  void compute_flows(const Eigen::VectorXd& theta) {
    flows_.setZero();
    for (const auto& e : net_.edges()) {
      const double f = e.weight * coupling(theta(e.from) - theta(e.to));
      flows_(e.from) += f;
      flows_(e.to) -= f;
    }
  }

  /// ∂flows/∂θ over all nodes.
  Eigen::MatrixXd flow_jacobian(const Eigen::VectorXd& theta) const {
    const int n = net_.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : net_.edges()) {
      const double c = e.weight * slope(theta(e.from) - theta(e.to));
      J(e.from, e.from) += c;
      J(e.to, e.to) += c;
      J(e.from, e.to) -= c;
      J(e.to, e.from) -= c;
    }
    return J;
  }

  // 0 = P_i - Σ_j K_ij sin(θ_i - θ_j) for every passive node.
  void solve_passive(const Eigen::VectorXd& p) {
    const int np = static_cast<int>(passive_.size());
    if (np == 0) return;
    Eigen::VectorXd g(np);
    auto residual = [&]() {
      for (int a = 0; a < np; ++a) {
        const int i = passive_[a];
        double flow = 0.0;
        for (const auto& l : adjacency_[i]) flow += l.weight * coupling(theta_(i) - theta_(l.to));
        g(a) = p(i) - flow;
      }
      return g.cwiseAbs().maxCoeff();
    };
    const double tol = 1e-12 * (1.0 + p.cwiseAbs().maxCoeff());
    double norm = residual();
    for (int iter = 0; iter < 50; ++iter) {
      if (norm <= tol) return;
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(np, np);
      for (int a = 0; a < np; ++a) {
        const int i = passive_[a];
        for (const auto& l : adjacency_[i]) {
          const double c = l.weight * slope(theta_(i) - theta_(l.to));
          J(a, a) += c;
          if (net_.node(l.to).kind == NodeKind::Passive) J(a, position_[l.to]) -= c;
        }
      }
      // g = p - flow, ∂g/∂θ_P = -J: Newton step solves J Δ = g.
      const Eigen::VectorXd step = J.partialPivLu().solve(g);
      if (!step.allFinite()) break;
      const Eigen::VectorXd before = passive_angles();
      double damping = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        for (int a = 0; a < np; ++a) theta_(passive_[a]) = before(a) + damping * step(a);
        const double trial = residual();
        if (trial < norm || ls == 29) {
          norm = trial;
          break;
        }
        damping *= 0.5;
      }
    }
    if (norm <= tol) return;
    throw DAESolveError("passive-node power balance did not converge (residual " +
                        std::to_string(norm) + ")");
  }

  Eigen::VectorXd passive_angles() const {
    Eigen::VectorXd v(passive_.size());
    for (std::size_t a = 0; a < passive_.size(); ++a) v(a) = theta_(passive_[a]);
    return v;
  }

  const PowerNetwork& net_;
  Law law_;
  GainSchedule gains_;
  bool linearized_;
  ControllerParams params_;
  std::vector<int> machines_, freqdep_, passive_, controllers_, position_;
  std::vector<std::vector<Link>> adjacency_;
  int off_omega_ = 0, off_freq_ = 0, off_ctrl_ = 0, ctrl_dim_ = 0;
  Eigen::VectorXd theta_, flows_, omega_k_, u_;
};

Eigen::VectorXd base_injection(const PowerNetwork& net) {
  Eigen::VectorXd p(net.size());
  for (int i = 0; i < net.size(); ++i) p(i) = net.node(i).injection;
  return p;
}

Trace empty_trace(const PowerNetwork& net) {
  Trace t;
  for (const auto& node : net.nodes()) {
    t.node_ids.push_back(node.id);
    t.controller.push_back(node.is_controller());
  }
  return t;
}

void check_finite(const Eigen::VectorXd& y, double t) {
  if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e6)
    throw NumericalBlowup("state diverged at t = " + std::to_string(t));
}

/// Adaptive Dormand-Prince 5(4) with a persistent step-size proposal.
class DormandPrince {
 public:
  DormandPrince(double rtol, double atol, double initial_step)
      : rtol_(rtol), atol_(atol), h_(initial_step) {}

  template <class F>
  void advance(F&& f, Eigen::VectorXd& y, double t0, double t1) {
    static constexpr double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
    static constexpr double a[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static constexpr double e[7] = {35.0 / 384 - 5179.0 / 57600,    0,
                                    500.0 / 1113 - 7571.0 / 16695,  125.0 / 192 - 393.0 / 640,
                                    -2187.0 / 6784 + 92097.0 / 339200, 11.0 / 84 - 187.0 / 2100,
                                    -1.0 / 40};
    double t = t0;
    Eigen::VectorXd k[7], stage, y_new, err;
    while (t < t1) {
      const bool last = t + h_ >= t1;
      const double h = last ? t1 - t : h_;
      for (int s = 0; s < 7; ++s) {
        stage = y;
        for (int j = 0; j < s; ++j)
          if (a[s][j] != 0.0) stage += h * a[s][j] * k[j];
        f(t + c[s] * h, stage, k[s]);
      }
      y_new = stage;  // the seventh stage evaluates at the 5th-order solution
      err = Eigen::VectorXd::Zero(y.size());
      for (int s = 0; s < 7; ++s)
        if (e[s] != 0.0) err += h * e[s] * k[s];
      double ratio = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double scale = atol_ + rtol_ * std::max(std::abs(y(i)), std::abs(y_new(i)));
        ratio = std::max(ratio, std::abs(err(i)) / scale);
      }
      if (!std::isfinite(ratio)) ratio = 1e10;
      const double factor = std::clamp(0.9 * std::pow(std::max(ratio, 1e-10), -0.2), 0.2, 5.0);
      if (ratio <= 1.0) {
        t = last ? t1 : t + h;
        y = y_new;
        if (!last) h_ = h * factor;
        else h_ = std::max(h_, h * factor);
      } else {
        h_ = h * std::max(factor, 0.1);
        if (h_ < 1e-12) throw NumericalBlowup("step size underflow at t = " + std::to_string(t));
      }
    }
  }

 private:
  double rtol_, atol_, h_;
};

void validate_scenario(const Scenario& s) {
  if (!(s.step > 0.0)) throw DomainError("scenario step must be positive");
  if (!(s.horizon > 0.0)) throw DomainError("scenario horizon must be positive");
  if (s.record_stride < 1) throw DomainError("record_stride must be at least 1");
}

}  // namespace

Equilibrium solve_equilibrium(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                              const GainSchedule& gains, bool linearized) {
  Dynamics dyn(net, comm, law, gains, linearized);
  Equilibrium eq;
  eq.u = optimal_dispatch(net);
  eq.theta = dyn.power_flow(base_injection(net), eq.u);
  eq.state = dyn.rest_state(eq.theta, eq.u);
  return eq;
}

Trace simulate_deterministic(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                             const GainSchedule& gains, const Scenario& scenario) {
  validate_scenario(scenario);
  if (scenario.kind != ScenarioKind::StepLoad)
    throw DomainError("simulate_deterministic needs a step-load scenario");
  gains.validate(false);

  Dynamics dyn(net, comm, law, gains, scenario.linearized);
  const Eigen::VectorXd before = base_injection(net);
  Eigen::VectorXd after = before;
  for (const auto& s : scenario.steps) {
    const int i = net.index_of(s.node_id);
    if (i < 0) throw DomainError("load step at unknown node " + std::to_string(s.node_id));
    after(i) += s.delta;
  }

  const Eigen::VectorXd u0 = optimal_dispatch(net);
  const Eigen::VectorXd theta0 = dyn.power_flow(before, u0);
  dyn.set_angles(theta0);
  Eigen::VectorXd y = dyn.rest_state(theta0, u0);
  Eigen::VectorXd dy;

  auto injection_at = [&](double segment_start) -> const Eigen::VectorXd& {
    return segment_start >= scenario.onset ? after : before;
  };

  Trace trace = empty_trace(net);
  const long steps = std::lround(scenario.horizon / scenario.step);
  auto record = [&](long k, double t) {
    if (k % scenario.record_stride != 0 && k != steps) return;
    dyn.eval(y, injection_at(t), dy);
    trace.samples.push_back(dyn.observe(t, y));
  };
  record(0, 0.0);

  DormandPrince stepper(1e-8, 1e-10, std::min(scenario.step, 1e-3));
  for (long k = 0; k < steps; ++k) {
    const double t0 = k * scenario.step;
    const double t1 = (k + 1) * scenario.step;
    double a = t0;
    for (double b : {scenario.onset, t1}) {
      if (b <= a || b > t1) continue;
      const Eigen::VectorXd& p = injection_at(a);
      stepper.advance([&](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) { dyn.eval(s, p, ds); },
                      y, a, b);
      a = b;
    }
    check_finite(y, t1);
    record(k + 1, t1);
  }
  return trace;
}

PathResult simulate_path(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                         const GainSchedule& gains, const Scenario& scenario, int path) {
  validate_scenario(scenario);
  if (scenario.kind != ScenarioKind::WhiteNoise)
    throw DomainError("stochastic simulation needs a white-noise scenario");
  if (!scenario.seed) throw DomainError("stochastic simulation needs a random seed");
  if (!(scenario.burn_in < scenario.horizon))
    throw InsufficientHorizon("burn-in must end before the horizon");
  gains.validate(false);

  Dynamics dyn(net, comm, law, gains, scenario.linearized);
  const Eigen::VectorXd base = base_injection(net);
  std::vector<std::pair<int, double>> sources;
  for (const auto& w : scenario.noise) {
    const int i = net.index_of(w.node_id);
    if (i < 0) throw DomainError("noise source at unknown node " + std::to_string(w.node_id));
    if (!(w.sigma >= 0.0)) throw DomainError("noise sigma must be non-negative");
    sources.emplace_back(i, w.sigma);
  }

  const Eigen::VectorXd u0 = optimal_dispatch(net);
  const Eigen::VectorXd theta0 = dyn.power_flow(base, u0);
  dyn.set_angles(theta0);
  Eigen::VectorXd y = dyn.rest_state(theta0, u0);
  Eigen::VectorXd dy, p = base;

  const std::uint64_t seed = *scenario.seed;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  PathResult out;
  out.trace = empty_trace(net);
  const double h = scenario.step;
  const double sqrt_h = std::sqrt(h);
  const long steps = std::lround(scenario.horizon / h);
  const Eigen::VectorXd& price = dyn.params().price;
  double sum_w = 0.0, sum_c = 0.0;
  long counted = 0;

  for (long k = 0; k < steps; ++k) {
    const double t = k * h;
    // Piecewise-constant white noise over the step: w_i = σ_i ΔW_i / h.
    p = base;
    for (const auto& [i, sigma] : sources) p(i) += sigma * normal(rng) * sqrt_h / h;
    dyn.eval(y, p, dy);
    if (t >= scenario.burn_in) {
      sum_w += dyn.omega_k().squaredNorm();
      sum_c += 0.5 * dyn.u().dot(price.cwiseProduct(dyn.u()));
      ++counted;
    }
    if (k % scenario.record_stride == 0) out.trace.samples.push_back(dyn.observe(t, y));
    y += h * dy;
    if ((k & 1023) == 0) check_finite(y, t + h);
  }
  check_finite(y, scenario.horizon);
  if (counted == 0) throw InsufficientHorizon("no samples after burn-in");
  out.mean_omega_sq = sum_w / counted;
  out.mean_cost = sum_c / counted;
  return out;
}

namespace {

Metrics ensemble_metrics(const std::vector<PathResult>& paths) {
  Metrics m;
  m.stochastic = true;
  const double count = static_cast<double>(paths.size());
  for (const auto& p : paths) {
    m.E_S += p.mean_omega_sq / count;
    m.E_C += p.mean_cost / count;
  }
  if (paths.size() < 2) {
    m.E_S_stderr = m.E_C_stderr = kNaN;
    return m;
  }
  double vs = 0.0, vc = 0.0;
  for (const auto& p : paths) {
    vs += (p.mean_omega_sq - m.E_S) * (p.mean_omega_sq - m.E_S);
    vc += (p.mean_cost - m.E_C) * (p.mean_cost - m.E_C);
  }
  m.E_S_stderr = std::sqrt(vs / (count - 1.0) / count);
  m.E_C_stderr = std::sqrt(vc / (count - 1.0) / count);
  return m;
}

void validate_ensemble(const Scenario& scenario) {
  if (scenario.paths < 1) throw DomainError("at least one sample path is required");
  if (!scenario.seed) throw DomainError("stochastic simulation needs a random seed");
}

}  // namespace

Ensemble simulate_stochastic(const PowerNetwork& net, const CommunicationGraph& comm, Law law,
                             const GainSchedule& gains, const Scenario& scenario) {
  validate_ensemble(scenario);
  Ensemble out;
  out.paths.resize(scenario.paths);
  const auto run = [&](int path) { out.paths[path] = simulate_path(net, comm, law, gains, scenario, path); };
  parallel_for(scenario.paths, run);
  out.metrics = ensemble_metrics(out.paths);
  return out;
}

Ensemble simulate_stochastic_serial(const PowerNetwork& net, const CommunicationGraph& comm,
                                    Law law, const GainSchedule& gains, const Scenario& scenario) {
  validate_ensemble(scenario);
  Ensemble out;
  for (int path = 0; path < scenario.paths; ++path)
    out.paths.push_back(simulate_path(net, comm, law, gains, scenario, path));
  out.metrics = ensemble_metrics(out.paths);
  return out;
}

Metrics compute_metrics(const Trace& trace, const Eigen::VectorXd& price, double T0) {
  if (trace.samples.empty() || trace.samples.back().t < T0 - 1e-12)
    throw InsufficientHorizon("trace ends before T0 = " + std::to_string(T0));
  const std::size_t n = trace.node_ids.size();
  auto integrands = [&](const TraceSample& s) {
    double w = 0.0, c = 0.0;
    int k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!trace.controller[i]) continue;
      w += s.omega(i) * s.omega(i);
      c += 0.5 * price(k) * s.u(i) * s.u(i);
      ++k;
    }
    return std::pair{w, c};
  };
  if (price.size() != static_cast<Eigen::Index>(std::count(trace.controller.begin(), trace.controller.end(), true)))
    throw ShapeError("price vector does not match the controller set");

  Metrics m;
  auto [w_prev, c_prev] = integrands(trace.samples.front());
  for (std::size_t s = 1; s < trace.samples.size(); ++s) {
    const double ta = trace.samples[s - 1].t;
    if (ta >= T0) break;
    const double tb = trace.samples[s].t;
    auto [w, c] = integrands(trace.samples[s]);
    if (tb > T0) {
      // Linear interpolation of the integrand up to T0.
      const double frac = (T0 - ta) / (tb - ta);
      w = w_prev + frac * (w - w_prev);
      c = c_prev + frac * (c - c_prev);
    }
    const double dt = std::min(tb, T0) - ta;
    m.S += 0.5 * dt * (w_prev + w);
    m.C += 0.5 * dt * (c_prev + c);
    w_prev = w;
    c_prev = c;
  }
  return m;
}

SteadyState check_steady_state(const Trace& trace, const PowerNetwork& net, const Scenario& scenario) {
  if (trace.samples.empty()) throw InsufficientHorizon("empty trace");
  const TraceSample& last = trace.samples.back();
  double disturbance = 0.0;
  if (scenario.kind == ScenarioKind::StepLoad && last.t >= scenario.onset)
    for (const auto& s : scenario.steps) disturbance += s.delta;

  SteadyState ss;
  double sum_u = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo, weighted = 0.0;
  for (std::size_t i = 0; i < trace.node_ids.size(); ++i) {
    if (!trace.controller[i]) continue;
    ss.max_abs_omega = std::max(ss.max_abs_omega, std::abs(last.omega(i)));
    weighted += net.node(static_cast<int>(i)).damping * last.omega(i);
    sum_u += last.u(i);
    lo = std::min(lo, last.marginal_cost(i));
    hi = std::max(hi, last.marginal_cost(i));
  }
  const double total = net.total_injection() + disturbance;
  ss.balance_residual = std::abs(sum_u + total);
  ss.omega_syn = weighted / net.total_damping();
  ss.cost_spread = hi - lo;
  return ss;
}

std::vector<double> cost_spread_series(const Trace& trace) {
  std::vector<double> out;
  out.reserve(trace.samples.size());
  for (const auto& s : trace.samples) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < trace.node_ids.size(); ++i) {
      if (!trace.controller[i]) continue;
      lo = std::min(lo, s.marginal_cost(i));
      hi = std::max(hi, s.marginal_cost(i));
    }
    out.push_back(hi - lo);
  }
  return out;
}

}  // namespace piac
