#include "piac/netmodel.hpp"

#include "piac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace piac {

namespace {

bool nearly_equal(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

void validate_node(const Node& node) {
  const std::string where = "node " + std::to_string(node.id) + ": ";
  switch (node.kind) {
    case NodeKind::Machine:
      if (!(node.inertia > 0.0)) throw InvalidNetwork(where + "machine node needs inertia > 0");
      if (!(node.damping > 0.0)) throw InvalidNetwork(where + "machine node needs damping > 0");
      break;
    case NodeKind::FreqDependent:
      if (node.inertia != 0.0) throw InvalidNetwork(where + "frequency-dependent node has no inertia");
      if (!(node.damping > 0.0)) throw InvalidNetwork(where + "frequency-dependent node needs damping > 0");
      break;
    case NodeKind::Passive:
      if (node.inertia != 0.0 || node.damping != 0.0)
        throw InvalidNetwork(where + "passive node has neither inertia nor damping");
      break;
  }
  if (node.is_controller() && !(node.price > 0.0))
    throw InvalidNetwork(where + "controller node needs price > 0");
  if (!(node.voltage > 0.0)) throw InvalidNetwork(where + "voltage must be positive");
  if (!std::isfinite(node.injection)) throw InvalidNetwork(where + "injection must be finite");
}

void validate_edges(int n, const std::vector<Edge>& edges, const char* what) {
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.from < 0 || e.to < 0 || e.from >= n || e.to >= n)
      throw InvalidNetwork(std::string(what) + ": endpoint out of range");
    if (e.from == e.to) throw InvalidNetwork(std::string(what) + ": self loop");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw InvalidNetwork(std::string(what) + ": weight must be positive");
    auto key = std::minmax(e.from, e.to);
    if (!seen.insert(key).second) throw InvalidNetwork(std::string(what) + ": duplicate edge");
  }
}

}  // namespace

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Machine: return "machine";
    case NodeKind::FreqDependent: return "freqdep";
    case NodeKind::Passive: return "passive";
  }
  return "?";
}

PowerNetwork::PowerNetwork(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (nodes_.empty()) throw InvalidNetwork("network has no nodes");
  std::set<int> ids;
  for (const auto& node : nodes_) {
    validate_node(node);
    if (!ids.insert(node.id).second)
      throw InvalidNetwork("duplicate node id " + std::to_string(node.id));
  }
  validate_edges(size(), edges_, "edges");
  if (!is_connected(size(), edges_)) throw DisconnectedNetwork("transmission network is not connected");

  double inverse_sum = 0.0;
  for (int i = 0; i < size(); ++i) {
    if (nodes_[i].is_controller()) {
      controllers_.push_back(i);
      inverse_sum += 1.0 / nodes_[i].price;
    }
  }
  aggregate_price_ = inverse_sum > 0.0 ? 1.0 / inverse_sum : 0.0;
}

int PowerNetwork::index_of(int id) const {
  for (int i = 0; i < size(); ++i)
    if (nodes_[i].id == id) return i;
  return -1;
}

int PowerNetwork::count(NodeKind kind) const {
  return static_cast<int>(
      std::count_if(nodes_.begin(), nodes_.end(), [kind](const Node& n) { return n.kind == kind; }));
}

double PowerNetwork::total_injection() const {
  return std::accumulate(nodes_.begin(), nodes_.end(), 0.0,
                         [](double acc, const Node& n) { return acc + n.injection; });
}

double PowerNetwork::total_damping() const {
  return std::accumulate(nodes_.begin(), nodes_.end(), 0.0,
                         [](double acc, const Node& n) { return acc + n.damping; });
}

CommunicationGraph::CommunicationGraph(const PowerNetwork& net, std::vector<Edge> links)
    : links_(std::move(links)) {
  validate_edges(net.size(), links_, "comm");
  const auto& ctrl = net.controllers();
  std::map<int, int> position;
  for (int k = 0; k < static_cast<int>(ctrl.size()); ++k) position[ctrl[k]] = k;

  std::vector<Edge> local;
  local.reserve(links_.size());
  for (const auto& e : links_) {
    auto a = position.find(e.from);
    auto b = position.find(e.to);
    if (a == position.end() || b == position.end())
      throw InvalidNetwork("comm: links must join controller nodes");
    local.push_back({a->second, b->second, e.weight});
  }
  const int nk = static_cast<int>(ctrl.size());
  laplacian_ = laplacian_of(nk, local);
  connected_ = is_connected(nk, local);
}

CommunicationGraph CommunicationGraph::mirror(const PowerNetwork& net) {
  std::vector<Edge> links;
  for (const auto& e : net.edges())
    if (net.node(e.from).is_controller() && net.node(e.to).is_controller()) links.push_back(e);
  return CommunicationGraph(net, std::move(links));
}

CommunicationGraph CommunicationGraph::unit(const PowerNetwork& net) {
  std::vector<Edge> links;
  for (const auto& e : net.edges())
    if (net.node(e.from).is_controller() && net.node(e.to).is_controller())
      links.push_back({e.from, e.to, 1.0});
  return CommunicationGraph(net, std::move(links));
}

Eigen::MatrixXd laplacian_of(int n, const std::vector<Edge>& edges) {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : edges) {
    lap(e.from, e.to) -= e.weight;
    lap(e.to, e.from) -= e.weight;
    lap(e.from, e.from) += e.weight;
    lap(e.to, e.to) += e.weight;
  }
  return lap;
}

bool is_connected(int n, const std::vector<Edge>& edges) {
  if (n <= 1) return true;
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n;
  for (const auto& e : edges) {
    int a = find(e.from), b = find(e.to);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

Eigen::MatrixXd build_laplacian(const PowerNetwork& net) {
  if (!is_connected(net.size(), net.edges()))
    throw DisconnectedNetwork("transmission network is not connected");
  return laplacian_of(net.size(), net.edges());
}

SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& laplacian) {
  const auto n = laplacian.rows();
  if (n == 0 || laplacian.cols() != n) throw ShapeError("laplacian must be square and non-empty");
  const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ShapeError("laplacian must be symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};

  // The zero mode is structural: snap numerical dust so deflation never divides by it.
  const double snap = 1e-9 * std::max(out.eigenvalues.cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(out.eigenvalues(i)) <= snap) out.eigenvalues(i) = 0.0;

  const bool zero_rows = laplacian.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * scale * n;
  const bool simple_zero = n == 1 || out.eigenvalues(1) > 0.0;
  if (zero_rows && simple_zero) {
    // Uniform mode, exactly; the remaining columns are already orthogonal to it.
    out.modes.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  }

  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(out.modes(r, c)) > 1e-10) {
        if (out.modes(r, c) < 0.0) out.modes.col(c) *= -1.0;
        break;
      }
    }
  }
  return out;
}

HomogeneityReport check_homogeneous(const PowerNetwork& net, const CommunicationGraph& comm) {
  HomogeneityReport report;
  auto fail = [&](std::string reason) {
    report.passed = false;
    report.reasons.push_back(std::move(reason));
  };
  if (net.count(NodeKind::FreqDependent) > 0) fail("frequency-dependent nodes present");
  if (net.count(NodeKind::Passive) > 0) fail("passive nodes present");

  const auto& first = net.node(0);
  bool uniform_m = true, uniform_d = true, unit_price = true;
  for (const auto& node : net.nodes()) {
    uniform_m = uniform_m && nearly_equal(node.inertia, first.inertia);
    uniform_d = uniform_d && nearly_equal(node.damping, first.damping);
    if (node.is_controller()) unit_price = unit_price && nearly_equal(node.price, 1.0);
  }
  if (!uniform_m) fail("inertia not uniform");
  if (!uniform_d) fail("damping not uniform");
  if (!unit_price) fail("prices not uniform");

  if (report.passed) {
    const Eigen::MatrixXd power = laplacian_of(net.size(), net.edges());
    const auto& lc = comm.laplacian();
    const double tol = 1e-12 * std::max(1.0, power.cwiseAbs().maxCoeff());
    if (lc.rows() != power.rows() || (lc - power).cwiseAbs().maxCoeff() > tol)
      fail("communication topology differs from power network");
  }
  if (report.passed) {
    report.inertia = first.inertia;
    report.damping = first.damping;
  }
  return report;
}

}  // namespace piac
