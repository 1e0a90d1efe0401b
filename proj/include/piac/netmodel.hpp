#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace piac {

enum class NodeKind { Machine, FreqDependent, Passive };

const char* to_string(NodeKind kind);

/// A bus. Quantities are per-unit on a common base; inertia and damping are
/// ignored (and must be zero) where the node kind has no such term.
struct Node {
  int id = 0;
  NodeKind kind = NodeKind::Machine;
  double inertia = 0.0;
  double damping = 0.0;
  double injection = 0.0;
  double price = 1.0;
  double voltage = 1.0;

  bool is_controller() const { return kind != NodeKind::Passive; }
  bool operator==(const Node&) const = default;
};

/// Undirected weighted link between two node *indices* (not ids).
struct Edge {
  int from = 0;
  int to = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

/// Transmission network: nodes plus lines weighted by effective susceptance
/// K_ij = B_ij V_i V_j. Construction validates the node invariants, simplicity
/// of the edge set and connectivity.
class PowerNetwork {
 public:
  PowerNetwork() = default;
  PowerNetwork(std::vector<Node> nodes, std::vector<Edge> edges);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(int index) const { return nodes_.at(index); }

  /// Index of the node carrying `id`, or -1.
  int index_of(int id) const;

  /// Indices of V_K = V_M ∪ V_F in node order.
  const std::vector<int>& controllers() const { return controllers_; }
  int count(NodeKind kind) const;

  double total_injection() const;
  double total_damping() const;

  /// α_s = (Σ_{i∈V_K} 1/α_i)^{-1}, computed once at construction.
  double aggregate_price() const { return aggregate_price_; }

  bool operator==(const PowerNetwork& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<int> controllers_;
  double aggregate_price_ = 0.0;
};

/// Communication links among controller nodes. Edges reference network node
/// indices; the Laplacian is expressed over V_K in PowerNetwork::controllers()
/// order.
class CommunicationGraph {
 public:
  CommunicationGraph() = default;
  CommunicationGraph(const PowerNetwork& net, std::vector<Edge> links);

  /// l_ij = K_ij on every line joining two controller nodes.
  static CommunicationGraph mirror(const PowerNetwork& net);
  /// l_ij = 1 on every line joining two controller nodes.
  static CommunicationGraph unit(const PowerNetwork& net);

  const std::vector<Edge>& links() const { return links_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  /// Assumption 1: every controller reachable over communication links.
  bool connected() const { return connected_; }

  bool operator==(const CommunicationGraph& other) const { return links_ == other.links_; }

 private:
  std::vector<Edge> links_;
  Eigen::MatrixXd laplacian_;
  bool connected_ = true;
};

/// Eigen-decomposition of a graph Laplacian, eigenvalues ascending.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd modes;  // orthogonal, column i pairs with eigenvalues(i)

  int size() const { return static_cast<int>(eigenvalues.size()); }
  double algebraic_connectivity() const { return size() > 1 ? eigenvalues(1) : 0.0; }
};

/// Weighted Laplacian of `edges` over `n` vertices (no connectivity check).
Eigen::MatrixXd laplacian_of(int n, const std::vector<Edge>& edges);

bool is_connected(int n, const std::vector<Edge>& edges);

/// Laplacian of the transmission network; throws DisconnectedNetwork.
Eigen::MatrixXd build_laplacian(const PowerNetwork& net);

/// Throws ShapeError when `laplacian` is not square and symmetric.
SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& laplacian);

struct HomogeneityReport {
  bool passed = true;
  std::vector<std::string> reasons;
  double inertia = 0.0;  // common m when passed
  double damping = 0.0;  // common d when passed
};

/// Checks the conditions under which the closed-form norms hold: machine nodes
/// only, common inertia and damping, unit prices and l_ij = K_ij.
HomogeneityReport check_homogeneous(const PowerNetwork& net, const CommunicationGraph& comm);

}  // namespace piac
