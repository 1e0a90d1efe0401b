#include "piac/closedloop.hpp"

#include "piac/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace piac {

namespace {

Eigen::MatrixXd input_matrix(const std::optional<Eigen::MatrixXd>& input, int n) {
  if (!input) return Eigen::MatrixXd::Identity(n, n);
  if (input->rows() != n) throw ShapeError("input matrix must have one row per node");
  return *input;
}

StateSpace skeleton(Law law, const GainSchedule& gains, OutputSelector selector, int n,
                    int controller_states) {
  StateSpace sys;
  sys.law = law;
  sys.gains = gains;
  sys.selector = selector;
  sys.nodes = n;
  sys.blocks = {{"theta", 0, n},
                {"omega", n, n},
                {"eta", 2 * n, controller_states},
                {"xi", 2 * n + controller_states, controller_states}};
  const int dim = 2 * n + 2 * controller_states;
  sys.A = Eigen::MatrixXd::Zero(dim, dim);
  return sys;
}

// Swing rows shared by every law: θ̇ = ω, ω̇ = M⁻¹(-Lθ - Dω) + M⁻¹ B w.
void fill_swing(StateSpace& sys, const OpenLoop& open, const Eigen::MatrixXd& input) {
  const int n = open.size();
  const Eigen::VectorXd inv_m = open.inertia.cwiseInverse();
  sys.A.block(0, n, n, n).setIdentity();
  sys.A.block(n, 0, n, n) = -(inv_m.asDiagonal() * open.laplacian);
  sys.A.block(n, n, n, n) = (-inv_m.cwiseProduct(open.damping)).asDiagonal();
  sys.B = Eigen::MatrixXd::Zero(sys.A.rows(), input.cols());
  sys.B.block(n, 0, n, input.cols()) = inv_m.asDiagonal() * input;
}

StateSpace assemble_local(Law law, const PowerNetwork& net, const Eigen::MatrixXd& comm_laplacian,
                          const GainSchedule& gains, const std::optional<Eigen::MatrixXd>& input,
                          OutputSelector selector) {
  const OpenLoop open = assemble_open_loop(net);
  const int n = open.size();
  const ControllerParams params = make_controller_params(net);
  StateSpace sys = skeleton(law, gains, selector, n, n);
  fill_swing(sys, open, input_matrix(input, n));

  const int eta = 2 * n, xi = 3 * n;
  const Eigen::VectorXd inv_m = open.inertia.cwiseInverse();
  sys.A.block(n, xi, n, n) = (gains.k2 * inv_m).asDiagonal();
  sys.A.block(eta, n, n, n) = open.damping.asDiagonal();
  if (law == Law::Dpiac)
    sys.A.block(eta, xi, n, n) = gains.k3 * gains.k2 * comm_laplacian * params.price.asDiagonal();
  sys.A.block(xi, n, n, n) = (-gains.k1 * open.inertia).asDiagonal();
  sys.A.block(xi, eta, n, n) = -gains.k1 * Eigen::MatrixXd::Identity(n, n);
  sys.A.block(xi, xi, n, n) = -gains.k2 * Eigen::MatrixXd::Identity(n, n);

  const int dim = 4 * n;
  switch (selector) {
    case OutputSelector::FrequencyDeviation:
      sys.C = Eigen::MatrixXd::Zero(n, dim);
      sys.C.block(0, n, n, n).setIdentity();
      break;
    case OutputSelector::ControlInput:
      sys.C = Eigen::MatrixXd::Zero(n, dim);
      sys.C.block(0, xi, n, n) = gains.k2 * Eigen::MatrixXd::Identity(n, n);
      break;
    case OutputSelector::TotalControlInput:
      sys.C = Eigen::MatrixXd::Zero(1, dim);
      sys.C.block(0, xi, 1, n).setConstant(gains.k2);
      break;
    case OutputSelector::MarginalCostSpread:
      sys.C = Eigen::MatrixXd::Zero(n, dim);
      sys.C.block(0, xi, n, n) = gains.k2 * comm_laplacian * params.price.asDiagonal();
      break;
  }
  return sys;
}

}  // namespace

const char* to_string(OutputSelector selector) {
  switch (selector) {
    case OutputSelector::FrequencyDeviation: return "omega";
    case OutputSelector::ControlInput: return "u";
    case OutputSelector::TotalControlInput: return "us";
    case OutputSelector::MarginalCostSpread: return "spread";
  }
  return "?";
}

OutputSelector parse_selector(const std::string& text) {
  if (text == "omega") return OutputSelector::FrequencyDeviation;
  if (text == "u") return OutputSelector::ControlInput;
  if (text == "us") return OutputSelector::TotalControlInput;
  if (text == "spread") return OutputSelector::MarginalCostSpread;
  throw DomainError("unknown output selector '" + text + "'");
}

const StateBlock& StateSpace::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw ShapeError("no state block named " + name);
}

Eigen::MatrixXd OpenLoop::state_matrix() const {
  const int n = size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Eigen::VectorXd inv_m = inertia.cwiseInverse();
  A.block(0, n, n, n).setIdentity();
  A.block(n, 0, n, n) = -(inv_m.asDiagonal() * laplacian);
  A.block(n, n, n, n) = (-inv_m.cwiseProduct(damping)).asDiagonal();
  return A;
}

OpenLoop assemble_open_loop(const PowerNetwork& net) {
  if (net.count(NodeKind::Passive) > 0)
    throw UnsupportedForLinearPath("passive nodes need Kron reduction before linear analysis");
  if (net.count(NodeKind::FreqDependent) > 0)
    throw UnsupportedForLinearPath("frequency-dependent nodes are not supported by the linear path");
  OpenLoop open;
  const int n = net.size();
  open.inertia.resize(n);
  open.damping.resize(n);
  for (int i = 0; i < n; ++i) {
    open.inertia(i) = net.node(i).inertia;
    open.damping(i) = net.node(i).damping;
  }
  open.laplacian = build_laplacian(net);
  return open;
}

StateSpace assemble_gbpiac(const PowerNetwork& net, const GainSchedule& gains,
                           const std::optional<Eigen::MatrixXd>& input, OutputSelector selector) {
  const OpenLoop open = assemble_open_loop(net);
  const int n = open.size();
  const ControllerParams params = make_controller_params(net);
  StateSpace sys = skeleton(Law::Gbpiac, gains, selector, n, 1);
  fill_swing(sys, open, input_matrix(input, n));

  const int eta = 2 * n, xi = 2 * n + 1;
  // u_i = (α_s / α_i) k2 ξ_s
  const Eigen::VectorXd share = params.aggregate_price * gains.k2 * params.price.cwiseInverse();
  sys.A.block(n, xi, n, 1) = open.inertia.cwiseInverse().cwiseProduct(share);
  sys.A.block(eta, n, 1, n) = open.damping.transpose();
  sys.A.block(xi, n, 1, n) = -gains.k1 * open.inertia.transpose();
  sys.A(xi, eta) = -gains.k1;
  sys.A(xi, xi) = -gains.k2;

  const int dim = 2 * n + 2;
  switch (selector) {
    case OutputSelector::FrequencyDeviation:
      sys.C = Eigen::MatrixXd::Zero(n, dim);
      sys.C.block(0, n, n, n).setIdentity();
      break;
    case OutputSelector::ControlInput:
      sys.C = Eigen::MatrixXd::Zero(n, dim);
      sys.C.col(xi) = share;
      break;
    case OutputSelector::TotalControlInput:
      sys.C = Eigen::MatrixXd::Zero(1, dim);
      sys.C(0, xi) = share.sum();
      break;
    case OutputSelector::MarginalCostSpread:
      // α_i u_i = α_s k2 ξ_s at every node: the spread is identically zero.
      sys.C = Eigen::MatrixXd::Zero(n, dim);
      break;
  }
  return sys;
}

StateSpace assemble_dpiac(const PowerNetwork& net, const CommunicationGraph& comm,
                          const GainSchedule& gains, const std::optional<Eigen::MatrixXd>& input,
                          OutputSelector selector) {
  if (comm.laplacian().rows() != net.size())
    throw ShapeError("communication graph does not cover the network");
  if (!comm.connected()) throw DisconnectedNetwork("communication graph over V_K is not connected");
  return assemble_local(Law::Dpiac, net, comm.laplacian(), gains, input, selector);
}

StateSpace assemble_decpiac(const PowerNetwork& net, const GainSchedule& gains,
                            const std::optional<Eigen::MatrixXd>& input, OutputSelector selector) {
  // Without communication the spread output is measured over the power network.
  return assemble_local(Law::Decpiac, net, build_laplacian(net), gains, input, selector);
}

StateSpace assemble(Law law, const PowerNetwork& net, const CommunicationGraph& comm,
                    const GainSchedule& gains, const std::optional<Eigen::MatrixXd>& input,
                    OutputSelector selector) {
  switch (law) {
    case Law::Gbpiac: return assemble_gbpiac(net, gains, input, selector);
    case Law::Dpiac: return assemble_dpiac(net, comm, gains, input, selector);
    case Law::Decpiac: return assemble_decpiac(net, gains, input, selector);
  }
  throw DomainError("unknown law");
}

StateSpace deflate_zero_mode(const StateSpace& sys) {
  if (sys.deflated) return sys;
  const int dim = sys.state_dim();
  const int n = sys.nodes;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e.head(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));

  const double a_scale = std::max(1.0, sys.A.cwiseAbs().maxCoeff());
  const double c_scale = std::max(1.0, sys.C.size() ? sys.C.cwiseAbs().maxCoeff() : 0.0);
  if ((sys.A * e).cwiseAbs().maxCoeff() > 1e-12 * a_scale)
    throw NotDeflatable("average phase is not a zero mode of A");
  if (sys.C.rows() > 0 && (sys.C * e).cwiseAbs().maxCoeff() > 1e-12 * c_scale)
    throw NotDeflatable("output depends on the average phase");

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(e);
  const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd basis = full.rightCols(dim - 1);

  StateSpace out = sys;
  out.A = basis.transpose() * sys.A * basis;
  out.B = basis.transpose() * sys.B;
  out.C = sys.C * basis;
  out.deflated = true;
  out.blocks = {{"deflated", 0, dim - 1}};
  return out;
}

Realization drop_unreachable_zero_modes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        const Eigen::MatrixXd& C) {
  const auto dim = A.rows();
  if (dim == 0) return {A, B, C};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU);
  const Eigen::VectorXd& sigma = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < dim && sigma(rank) > 1e-11 * sigma(0)) ++rank;
  if (rank == dim || rank == 0) return {A, B, C};

  const Eigen::MatrixXd null = svd.matrixU().rightCols(dim - rank);
  const double b_scale = std::max(1e-300, B.cwiseAbs().maxCoeff());
  if ((null.transpose() * B).cwiseAbs().maxCoeff() > 1e-9 * b_scale) return {A, B, C};

  const Eigen::MatrixXd W = svd.matrixU().leftCols(rank);
  return {W.transpose() * A * W, W.transpose() * B, C * W};
}

double spectral_abscissa(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
  return solver.eigenvalues().real().maxCoeff();
}

ModalDecomposition modal_decouple(const StateSpace& sys, const SpectralDecomposition& spectral) {
  if (sys.deflated) throw UnsupportedForModalPath("modal decoupling needs the undeflated system");
  const int n = sys.nodes;
  if (spectral.size() != n) throw ShapeError("spectral decomposition size does not match the system");
  const int dim = sys.state_dim();
  const Eigen::MatrixXd& Q = spectral.modes;

  std::vector<std::vector<int>> groups;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
  T.block(0, 0, n, n) = Q;
  T.block(n, n, n, n) = Q;
  if (sys.law == Law::Gbpiac) {
    T(2 * n, 2 * n) = 1.0;
    T(2 * n + 1, 2 * n + 1) = 1.0;
    groups.push_back({0, n, 2 * n, 2 * n + 1});
    for (int i = 1; i < n; ++i) groups.push_back({i, n + i});
  } else {
    T.block(2 * n, 2 * n, n, n) = Q;
    T.block(3 * n, 3 * n, n, n) = Q;
    for (int i = 0; i < n; ++i) groups.push_back({i, n + i, 2 * n + i, 3 * n + i});
  }

  const Eigen::MatrixXd At = T.transpose() * sys.A * T;
  const Eigen::MatrixXd Bt = T.transpose() * sys.B;
  const Eigen::MatrixXd Ct = sys.C * T;
  const Eigen::MatrixXd CtC = Ct.transpose() * Ct;

  Eigen::MatrixXd off_a = At, off_c = CtC;
  for (const auto& g : groups)
    for (int r : g)
      for (int c : g) {
        off_a(r, c) = 0.0;
        off_c(r, c) = 0.0;
      }

  ModalDecomposition out;
  out.transform = T;
  const double a_norm = std::max(1e-300, sys.A.cwiseAbs().rowwise().sum().maxCoeff());
  out.residual = off_a.cwiseAbs().rowwise().sum().maxCoeff() / a_norm;
  if (out.residual > 1e-9)
    throw UnsupportedForModalPath("closed loop does not decouple over the Laplacian modes "
                                  "(heterogeneous parameters or mismatched communication graph)");
  const double c_norm = CtC.size() ? CtC.cwiseAbs().maxCoeff() : 0.0;
  if (c_norm > 0.0 && off_c.cwiseAbs().maxCoeff() > 1e-9 * c_norm)
    throw UnsupportedForModalPath("output couples the modal blocks");

  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    const int s = static_cast<int>(g.size());
    ModalBlock blk;
    blk.mode = static_cast<int>(k);
    blk.eigenvalue = spectral.eigenvalues(static_cast<Eigen::Index>(k));
    blk.states = g;
    blk.A.resize(s, s);
    blk.B.resize(s, Bt.cols());
    blk.C.resize(Ct.rows(), s);
    for (int r = 0; r < s; ++r) {
      for (int c = 0; c < s; ++c) blk.A(r, c) = At(g[r], g[c]);
      blk.B.row(r) = Bt.row(g[r]);
      blk.C.col(r) = Ct.col(g[r]);
    }
    blk.rigid = k == 0 && blk.eigenvalue == 0.0;
    out.blocks.push_back(std::move(blk));
  }
  return out;
}

}  // namespace piac
