#pragma once
// Independent reference computations for the tests. None of these share code
// paths with the library solvers: reduction grounds the last phase instead of
// using the Householder complement, and Lyapunov solves use a dense full-pivot
// LU on the Kronecker sum.

#include "piac/case_io.hpp"
#include "piac/closedloop.hpp"
#include "piac/netmodel.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

// X A + Aᵀ X + Q = 0 by brute force.
inline Eigen::MatrixXd kron_lyap(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
  const auto n = A.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) {
        // (X A)_ij = Σ_k X_ik A_kj ; (Aᵀ X)_ij = Σ_k A_ki X_kj ; vec column major
        K(i + j * n, i + k * n) += A(k, j);
        K(i + j * n, k + j * n) += A(k, i);
      }
  Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::VectorXd x = K.fullPivLu().solve(-q);
  return Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
}

struct Reduced {
  Eigen::MatrixXd A, B, C;
};

// Ground node n-1: δ_i = θ_i - θ_{n-1}. Valid because the uniform phase shift
// lies in ker A and ker C.
inline Reduced ground(const piac::StateSpace& sys) {
  const int n = sys.nodes, N = static_cast<int>(sys.A.rows());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N - 1);  // z -> x with θ_{n-1} = 0
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N - 1, N);  // x -> z
  for (int i = 0; i < n - 1; ++i) {
    T(i, i) = 1;
    D(i, i) = 1;
    D(i, n - 1) = -1;
  }
  for (int r = n; r < N; ++r) {
    T(r, r - 1) = 1;
    D(r - 1, r) = 1;
  }
  return {D * sys.A * T, D * sys.B, sys.C * T};
}

inline double h2_grounded(const piac::StateSpace& sys) {
  const Reduced r = ground(sys);
  const Eigen::MatrixXd X = kron_lyap(r.A, r.C.transpose() * r.C);
  return (r.B.transpose() * X * r.B).trace();
}

// Impulse-response energy ∫ ‖C e^{At} B‖_F² dt by composite Simpson with the
// exact propagator; slow but shares nothing with any Lyapunov solver.
inline double h2_impulse(const piac::StateSpace& sys, double dt, double horizon) {
  const Reduced r = ground(sys);
  const Eigen::MatrixXd step = (r.A * dt).exp();
  Eigen::MatrixXd X = r.B;
  const long K = static_cast<long>(std::ceil(horizon / dt / 2)) * 2;
  double sum = 0.0;
  for (long k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * (r.C * X).squaredNorm();
    X = step * X;
  }
  return sum * dt / 3.0;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// Random spanning tree plus a few chords, weights in [0.5, 2].
inline std::vector<piac::Edge> random_connected(std::mt19937_64& rng, int n) {
  std::vector<piac::Edge> edges;
  std::uniform_real_distribution<double> w(0.5, 2.0);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    edges.push_back({pick(rng), i, w(rng)});
  }
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int extra = 0; extra < n / 2; ++extra) {
    int a = node(rng), b = node(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    bool dup = false;
    for (const auto& e : edges) dup |= (std::min(e.from, e.to) == a && std::max(e.from, e.to) == b);
    if (!dup) edges.push_back({a, b, w(rng)});
  }
  return edges;
}

inline piac::PowerNetwork homogeneous(int n, double m, double d, const std::vector<piac::Edge>& edges) {
  std::vector<piac::Node> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({i + 1, piac::NodeKind::Machine, m, d, 0.0, 1.0, 1.0});
  return piac::PowerNetwork(nodes, edges);
}

inline piac::PowerNetwork path_network(int n, double m = 1, double d = 1, double K = 1) {
  std::vector<piac::Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, K});
  return homogeneous(n, m, d, edges);
}

inline double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace oracle
