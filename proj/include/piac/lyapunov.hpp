#pragma once

#include <Eigen/Dense>

namespace piac {

enum class LyapunovMethod {
  Auto,            // Kronecker up to kKroneckerMaxDim states, Bartels-Stewart above
  Kronecker,       // dense solve of the vectorized N²×N² system
  BartelsStewart,  // real Schur form plus quasi-triangular back substitution
};

inline constexpr int kKroneckerMaxDim = 24;

struct LyapunovSolution {
  Eigen::MatrixXd X;
  double residual = 0.0;            // ‖X A + Aᵀ X + RHS‖_∞
  double tolerance = 0.0;           // residual bound that was enforced
  double condition_estimate = 0.0;  // 2‖A‖_F / min_ij |λ_i + conj(λ_j)|
  LyapunovMethod method = LyapunovMethod::Auto;
};

/// Solves X A + Aᵀ X + RHS = 0 for Hurwitz A and symmetric RHS.
///
/// The residual must satisfy ‖R‖_∞ ≤ 1e-9 ‖RHS‖_∞, relaxed to 1e-6 when the
/// condition estimate exceeds 1e8 (noted on stderr). Up to two steps of
/// iterative refinement are tried before giving up.
///
/// Throws ShapeError, UnstableSystem (spectral abscissa ≥ 0) or
/// SolverAccuracyError.
LyapunovSolution lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs,
                                LyapunovMethod method = LyapunovMethod::Auto);

}  // namespace piac
