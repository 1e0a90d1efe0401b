#include "piac/lyapunov.hpp"

#include "piac/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <vector>

namespace piac {

namespace {

double inf_norm(const Eigen::MatrixXd& m) {
  return m.size() ? m.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

Eigen::MatrixXd residual_of(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& rhs) {
  return X * A + A.transpose() * X + rhs;
}

Eigen::MatrixXd solve_kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs) {
  const auto n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  // vec(X A) = (Aᵀ ⊗ I) vec X,  vec(Aᵀ X) = (I ⊗ Aᵀ) vec X
  Eigen::MatrixXd K(n * n, n * n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) K.block(r * n, c * n, n, n) = At(r, c) * I + (r == c ? At : Eigen::MatrixXd::Zero(n, n));
  const Eigen::VectorXd b = -Eigen::Map<const Eigen::VectorXd>(rhs.data(), n * n);
  Eigen::VectorXd x = K.partialPivLu().solve(b);
  return Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
}

// Solves Pᵀ Y + Y R = S for blocks of at most 2×2.
Eigen::MatrixXd solve_small_sylvester(const Eigen::MatrixXd& P, const Eigen::MatrixXd& R,
                                      const Eigen::MatrixXd& S) {
  const auto p = P.rows(), q = R.rows();
  if (p == 1 && q == 1) return S / (P(0, 0) + R(0, 0));
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(p * q, p * q);
  const Eigen::MatrixXd Pt = P.transpose();
  for (Eigen::Index c = 0; c < q; ++c) {
    K.block(c * p, c * p, p, p) += Pt;
    for (Eigen::Index r = 0; r < q; ++r) K.block(c * p, r * p, p, p) += R(r, c) * Eigen::MatrixXd::Identity(p, p);
  }
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(S.data(), p * q);
  Eigen::VectorXd y = K.fullPivLu().solve(b);
  return Eigen::Map<Eigen::MatrixXd>(y.data(), p, q);
}

Eigen::MatrixXd solve_bartels_stewart(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs) {
  Eigen::RealSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) throw SolverAccuracyError("real Schur factorization failed");
  const Eigen::MatrixXd& U = schur.matrixU();
  const Eigen::MatrixXd& T = schur.matrixT();
  const Eigen::MatrixXd F = U.transpose() * rhs * U;
  const auto n = A.rows();

  // Diagonal block boundaries of the quasi-triangular T.
  std::vector<Eigen::Index> start, size;
  for (Eigen::Index i = 0; i < n;) {
    const bool pair = i + 1 < n && T(i + 1, i) != 0.0;
    start.push_back(i);
    size.push_back(pair ? 2 : 1);
    i += pair ? 2 : 1;
  }

  // Tᵀ Y + Y T = -F, solved block by block in column-major order.
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);
  const auto blocks = start.size();
  for (std::size_t bj = 0; bj < blocks; ++bj) {
    const auto cj = start[bj], q = size[bj];
    for (std::size_t bi = 0; bi < blocks; ++bi) {
      const auto ri = start[bi], p = size[bi];
      Eigen::MatrixXd S = -F.block(ri, cj, p, q);
      if (ri > 0) S.noalias() -= T.block(0, ri, ri, p).transpose() * Y.block(0, cj, ri, q);
      if (cj > 0) S.noalias() -= Y.block(ri, 0, p, cj) * T.block(0, cj, cj, q);
      Y.block(ri, cj, p, q) = solve_small_sylvester(T.block(ri, ri, p, p), T.block(cj, cj, q, q), S);
    }
  }
  return U * Y * U.transpose();
}

Eigen::MatrixXd solve_with(LyapunovMethod method, const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs) {
  return method == LyapunovMethod::Kronecker ? solve_kronecker(A, rhs) : solve_bartels_stewart(A, rhs);
}

}  // namespace

LyapunovSolution lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs,
                                LyapunovMethod method) {
  const auto n = A.rows();
  if (A.cols() != n || rhs.rows() != n || rhs.cols() != n)
    throw ShapeError("lyapunov_solve: A and RHS must be square and of equal size");
  const double rhs_norm = inf_norm(rhs);
  if ((rhs - rhs.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, rhs_norm))
    throw ShapeError("lyapunov_solve: RHS must be symmetric");

  LyapunovSolution sol;
  if (n == 0) return sol;

  Eigen::EigenSolver<Eigen::MatrixXd> eig(A, false);
  const Eigen::VectorXcd lambda = eig.eigenvalues();
  const double a_norm = std::max(1.0, inf_norm(A));
  if (lambda.real().maxCoeff() >= -1e-12 * a_norm)
    throw UnstableSystem("lyapunov_solve: A is not Hurwitz (spectral abscissa " +
                         std::to_string(lambda.real().maxCoeff()) + ")");

  double sep = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) sep = std::min(sep, std::abs(lambda(i) + std::conj(lambda(j))));
  sol.condition_estimate = 2.0 * A.norm() / sep;

  if (method == LyapunovMethod::Auto)
    method = n <= kKroneckerMaxDim ? LyapunovMethod::Kronecker : LyapunovMethod::BartelsStewart;
  sol.method = method;

  const double rel = sol.condition_estimate > 1e8 ? 1e-6 : 1e-9;
  if (rel > 1e-9)
    std::cerr << "note: Lyapunov operator condition estimate " << sol.condition_estimate
              << ", residual tolerance relaxed to 1e-6\n";
  sol.tolerance = rel * rhs_norm;

  if (rhs_norm == 0.0) {
    sol.X = Eigen::MatrixXd::Zero(n, n);
    return sol;
  }

  sol.X = solve_with(method, A, rhs);
  sol.X = 0.5 * (sol.X + sol.X.transpose()).eval();
  Eigen::MatrixXd R = residual_of(A, sol.X, rhs);
  sol.residual = inf_norm(R);
  for (int refine = 0; refine < 2 && sol.residual > sol.tolerance; ++refine) {
    Eigen::MatrixXd correction = solve_with(method, A, 0.5 * (R + R.transpose()));
    sol.X += 0.5 * (correction + correction.transpose());
    R = residual_of(A, sol.X, rhs);
    sol.residual = inf_norm(R);
  }
  if (!(sol.residual <= sol.tolerance))
    throw SolverAccuracyError("lyapunov_solve: residual " + std::to_string(sol.residual) +
                              " exceeds tolerance " + std::to_string(sol.tolerance));
  return sol;
}

}  // namespace piac
