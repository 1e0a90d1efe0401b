#pragma once

#include "piac/controllers.hpp"
#include "piac/netmodel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace piac {

enum class OutputSelector {
  FrequencyDeviation,  // y = ω
  ControlInput,        // y = u
  TotalControlInput,   // y = u_s = Σ u_i
  MarginalCostSpread,  // y = k2 L_comm diag(α) ξ  (4 k1 L ξ in the homogeneous case)
};

const char* to_string(OutputSelector selector);
OutputSelector parse_selector(const std::string& text);

struct StateBlock {
  std::string name;  // "theta", "omega", "eta", "xi"
  int offset = 0;
  int size = 0;
};

/// ẋ = A x + B w, y = C x with state ordered (θ, ω, η, ξ).
struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  std::vector<StateBlock> blocks;
  Law law = Law::Dpiac;
  GainSchedule gains;
  OutputSelector selector = OutputSelector::FrequencyDeviation;
  int nodes = 0;
  bool deflated = false;

  int state_dim() const { return static_cast<int>(A.rows()); }
  const StateBlock& block(const std::string& name) const;
};

/// Linearized swing dynamics θ̇ = ω, M ω̇ = -L θ - D ω + B w + u.
struct OpenLoop {
  Eigen::VectorXd inertia;
  Eigen::VectorXd damping;
  Eigen::MatrixXd laplacian;

  int size() const { return static_cast<int>(inertia.size()); }
  /// A of the uncontrolled 2n system in (θ, ω) ordering.
  Eigen::MatrixXd state_matrix() const;
};

/// Throws UnsupportedForLinearPath for networks with passive or
/// frequency-dependent nodes (those need Kron reduction / algebraic
/// elimination first).
OpenLoop assemble_open_loop(const PowerNetwork& net);

/// Closed loops. `input` is the n×m disturbance matrix (identity when empty);
/// it enters the ω equation as M⁻¹ B. Parameters may be heterogeneous.
StateSpace assemble_gbpiac(const PowerNetwork& net, const GainSchedule& gains,
                           const std::optional<Eigen::MatrixXd>& input, OutputSelector selector);
StateSpace assemble_dpiac(const PowerNetwork& net, const CommunicationGraph& comm,
                          const GainSchedule& gains, const std::optional<Eigen::MatrixXd>& input,
                          OutputSelector selector);
StateSpace assemble_decpiac(const PowerNetwork& net, const GainSchedule& gains,
                            const std::optional<Eigen::MatrixXd>& input, OutputSelector selector);

/// Dispatches on `law`; `comm` is only read for DPIAC.
StateSpace assemble(Law law, const PowerNetwork& net, const CommunicationGraph& comm,
                    const GainSchedule& gains, const std::optional<Eigen::MatrixXd>& input,
                    OutputSelector selector);

/// Projects out the average-phase direction (1_n in the θ block) with an
/// orthonormal complement basis. Throws NotDeflatable if that direction is not
/// an unobservable zero mode.
StateSpace deflate_zero_mode(const StateSpace& sys);

/// A realization (A, B, C) with the zero modes that B cannot reach removed.
/// With k3 = 0 the local laws conserve η_i - D_i θ_i, which adds one such
/// integrator per node. The state is restricted to the complement of the left
/// null space of A when B is orthogonal to it; otherwise nothing changes.
struct Realization {
  Eigen::MatrixXd A, B, C;
};
Realization drop_unreachable_zero_modes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                        const Eigen::MatrixXd& C);

/// Largest real part of the eigenvalues of A.
double spectral_abscissa(const Eigen::MatrixXd& A);

/// One decoupled modal subsystem. `rigid` marks the block that still carries
/// the average-phase integrator as its first coordinate.
struct ModalBlock {
  int mode = 0;
  double eigenvalue = 0.0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  std::vector<int> states;  // indices into the transformed full state
  bool rigid = false;
};

struct ModalDecomposition {
  std::vector<ModalBlock> blocks;
  Eigen::MatrixXd transform;  // T with T⁻¹ A T block diagonal (after permutation)
  double residual = 0.0;      // ‖T⁻¹AT - blockdiag‖_∞ / ‖A‖_∞
};

/// Splits an undeflated homogeneous closed loop into per-mode blocks using the
/// eigenvectors of `spectral`. GBPIAC yields a 4-state block for mode 1 and
/// 2-state blocks for the rest; DPIAC/DecPIAC yield n 4-state blocks. Throws
/// UnsupportedForModalPath when the similarity is not block diagonal to 1e-9
/// or the output couples modes.
ModalDecomposition modal_decouple(const StateSpace& sys, const SpectralDecomposition& spectral);

}  // namespace piac
