#include "piac/case_io.hpp"

#include "piac/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace piac {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& tok, int line, const std::string& field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw CaseFormatError(line, field, "expected a number, got '" + tok + "'");
  return v;
}

long long to_integer(const std::string& tok, int line, const std::string& field) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw CaseFormatError(line, field, "expected an integer, got '" + tok + "'");
  return v;
}

bool to_bool(const std::string& tok, int line, const std::string& field) {
  if (tok == "true" || tok == "1") return true;
  if (tok == "false" || tok == "0") return false;
  throw CaseFormatError(line, field, "expected true or false, got '" + tok + "'");
}

NodeKind to_kind(const std::string& tok, int line) {
  if (tok == "machine") return NodeKind::Machine;
  if (tok == "freqdep") return NodeKind::FreqDependent;
  if (tok == "passive") return NodeKind::Passive;
  throw CaseFormatError(line, "nodes.kind", "unknown node kind '" + tok + "'");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RawEdge {
  int line;
  int from_id;
  int to_id;
  double weight;
};

}  // namespace

CaseBundle parse_case(const std::string& text) {
  std::vector<Node> nodes;
  std::vector<RawEdge> edges, links;
  std::string comm_mode = "explicit";
  bool saw_comm_directive = false;
  std::map<std::string, std::pair<int, std::string>> gain_kv;
  Scenario scenario;
  bool saw_step = false;
  std::string section;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw CaseFormatError(lineno, "section", "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "nodes" && section != "edges" && section != "comm" && section != "gains" &&
          section != "scenario")
        throw CaseFormatError(lineno, "section", "unknown section '" + section + "'");
      continue;
    }
    if (section.empty()) throw CaseFormatError(lineno, "section", "record outside of any section");

    if (section == "nodes") {
      const auto t = tokenize(line);
      static const char* fields[] = {"nodes.id",        "nodes.kind",  "nodes.inertia", "nodes.damping",
                                     "nodes.injection", "nodes.price", "nodes.voltage"};
      if (t.size() != 7)
        throw CaseFormatError(lineno, t.size() < 7 ? fields[t.size()] : "nodes",
                              "expected 7 fields: id kind inertia damping injection price voltage");
      Node n;
      n.id = static_cast<int>(to_integer(t[0], lineno, fields[0]));
      n.kind = to_kind(t[1], lineno);
      n.inertia = to_double(t[2], lineno, fields[2]);
      n.damping = to_double(t[3], lineno, fields[3]);
      n.injection = to_double(t[4], lineno, fields[4]);
      n.price = to_double(t[5], lineno, fields[5]);
      n.voltage = to_double(t[6], lineno, fields[6]);
      nodes.push_back(n);
    } else if (section == "edges" || section == "comm") {
      const auto t = tokenize(line);
      if (section == "comm" && t.size() == 1 && (t[0] == "mirror" || t[0] == "unit")) {
        comm_mode = t[0];
        saw_comm_directive = true;
        continue;
      }
      const std::string pre = section + ".";
      static const char* names[] = {"from", "to", "weight"};
      if (t.size() != 3)
        throw CaseFormatError(lineno, pre + (t.size() < 3 ? names[t.size()] : "record"),
                              "expected 3 fields: from to weight");
      RawEdge e{lineno, static_cast<int>(to_integer(t[0], lineno, pre + "from")),
                static_cast<int>(to_integer(t[1], lineno, pre + "to")),
                to_double(t[2], lineno, pre + "weight")};
      (section == "edges" ? edges : links).push_back(e);
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CaseFormatError(lineno, section, "expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      const std::string field = section + "." + key;
      if (value.empty()) throw CaseFormatError(lineno, field, "missing value");

      if (section == "gains") {
        if (key != "k1" && key != "k2" && key != "k3" && key != "analytic")
          throw CaseFormatError(lineno, field, "unknown gain");
        gain_kv[key] = {lineno, value};
        continue;
      }
      if (key == "kind") {
        if (value == "step") scenario.kind = ScenarioKind::StepLoad;
        else if (value == "noise") scenario.kind = ScenarioKind::WhiteNoise;
        else throw CaseFormatError(lineno, field, "kind must be step or noise");
      } else if (key == "horizon") {
        scenario.horizon = to_double(value, lineno, field);
      } else if (key == "step") {
        scenario.step = to_double(value, lineno, field);
        saw_step = true;
      } else if (key == "record_stride") {
        scenario.record_stride = static_cast<int>(to_integer(value, lineno, field));
      } else if (key == "metrics_window") {
        scenario.metrics_window = to_double(value, lineno, field);
      } else if (key == "linearized") {
        scenario.linearized = to_bool(value, lineno, field);
      } else if (key == "onset") {
        scenario.onset = to_double(value, lineno, field);
      } else if (key == "load" || key == "noise") {
        const auto t = tokenize(value);
        if (t.size() != 2) throw CaseFormatError(lineno, field, "expected: node_id value");
        const int id = static_cast<int>(to_integer(t[0], lineno, field));
        const double v = to_double(t[1], lineno, field);
        if (key == "load") scenario.steps.push_back({id, v});
        else scenario.noise.push_back({id, v});
      } else if (key == "paths") {
        scenario.paths = static_cast<int>(to_integer(value, lineno, field));
      } else if (key == "burn_in") {
        scenario.burn_in = to_double(value, lineno, field);
      } else if (key == "seed") {
        std::uint64_t seed = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (ec != std::errc() || ptr != value.data() + value.size())
          throw CaseFormatError(lineno, field, "expected an unsigned integer, got '" + value + "'");
        scenario.seed = seed;
      } else {
        throw CaseFormatError(lineno, field, "unknown scenario key");
      }
    }
  }

  if (nodes.empty()) throw CaseFormatError(lineno, "nodes", "no nodes defined");
  if (!saw_step && scenario.kind == ScenarioKind::WhiteNoise) scenario.step = 1e-3;

  std::map<int, int> index;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) index[nodes[i].id] = i;
  auto resolve = [&](const RawEdge& e, const std::string& sec) -> Edge {
    auto a = index.find(e.from_id), b = index.find(e.to_id);
    if (a == index.end()) throw CaseFormatError(e.line, sec + ".from", "unknown node id");
    if (b == index.end()) throw CaseFormatError(e.line, sec + ".to", "unknown node id");
    return {a->second, b->second, e.weight};
  };
  std::vector<Edge> net_edges;
  for (const auto& e : edges) net_edges.push_back(resolve(e, "edges"));

  CaseBundle out;
  out.net = PowerNetwork(std::move(nodes), std::move(net_edges));

  if (saw_comm_directive && !links.empty())
    throw CaseFormatError(links.front().line, "comm", "explicit links mixed with a directive");
  if (comm_mode == "mirror" || (comm_mode == "explicit" && links.empty())) {
    out.comm = CommunicationGraph::mirror(out.net);
  } else if (comm_mode == "unit") {
    out.comm = CommunicationGraph::unit(out.net);
  } else {
    std::vector<Edge> comm_edges;
    for (const auto& e : links) comm_edges.push_back(resolve(e, "comm"));
    out.comm = CommunicationGraph(out.net, std::move(comm_edges));
  }

  auto gain = [&](const std::string& key) { return gain_kv.find(key); };
  if (gain("k1") == gain_kv.end()) throw CaseFormatError(lineno, "gains.k1", "k1 is required");
  out.gains.k1 = to_double(gain("k1")->second.second, gain("k1")->second.first, "gains.k1");
  out.gains.k2 = gain("k2") != gain_kv.end()
                     ? to_double(gain("k2")->second.second, gain("k2")->second.first, "gains.k2")
                     : 4.0 * out.gains.k1;
  out.gains.k3 = gain("k3") != gain_kv.end()
                     ? to_double(gain("k3")->second.second, gain("k3")->second.first, "gains.k3")
                     : 0.0;
  out.gains.analytic_mode =
      gain("analytic") != gain_kv.end()
          ? to_bool(gain("analytic")->second.second, gain("analytic")->second.first, "gains.analytic")
          : out.gains.k2 == 4.0 * out.gains.k1;

  for (const auto& s : scenario.steps)
    if (out.net.index_of(s.node_id) < 0)
      throw CaseFormatError(lineno, "scenario.load", "unknown node id " + std::to_string(s.node_id));
  for (const auto& s : scenario.noise)
    if (out.net.index_of(s.node_id) < 0)
      throw CaseFormatError(lineno, "scenario.noise", "unknown node id " + std::to_string(s.node_id));
  out.scenario = std::move(scenario);
  return out;
}

std::string format_case(const CaseBundle& b) {
  std::ostringstream o;
  o << "# piac case file\n[nodes]\n# id kind inertia damping injection price voltage\n";
  for (const auto& n : b.net.nodes())
    o << n.id << ' ' << to_string(n.kind) << ' ' << num(n.inertia) << ' ' << num(n.damping) << ' '
      << num(n.injection) << ' ' << num(n.price) << ' ' << num(n.voltage) << '\n';
  o << "\n[edges]\n# from to K\n";
  for (const auto& e : b.net.edges())
    o << b.net.node(e.from).id << ' ' << b.net.node(e.to).id << ' ' << num(e.weight) << '\n';
  o << "\n[comm]\n# from to l\n";
  for (const auto& e : b.comm.links())
    o << b.net.node(e.from).id << ' ' << b.net.node(e.to).id << ' ' << num(e.weight) << '\n';
  o << "\n[gains]\nk1 = " << num(b.gains.k1) << "\nk2 = " << num(b.gains.k2)
    << "\nk3 = " << num(b.gains.k3) << "\nanalytic = " << (b.gains.analytic_mode ? "true" : "false")
    << "\n";

  const auto& s = b.scenario;
  o << "\n[scenario]\nkind = " << (s.kind == ScenarioKind::StepLoad ? "step" : "noise")
    << "\nhorizon = " << num(s.horizon) << "\nstep = " << num(s.step)
    << "\nrecord_stride = " << s.record_stride << "\nmetrics_window = " << num(s.metrics_window)
    << "\nlinearized = " << (s.linearized ? "true" : "false") << "\nonset = " << num(s.onset) << '\n';
  for (const auto& l : s.steps) o << "load = " << l.node_id << ' ' << num(l.delta) << '\n';
  for (const auto& w : s.noise) o << "noise = " << w.node_id << ' ' << num(w.sigma) << '\n';
  o << "paths = " << s.paths << "\nburn_in = " << num(s.burn_in) << '\n';
  if (s.seed) o << "seed = " << *s.seed << '\n';
  return o.str();
}

CaseBundle load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaseFormatError(0, "file", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

void save_case(const CaseBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << format_case(bundle);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace piac
