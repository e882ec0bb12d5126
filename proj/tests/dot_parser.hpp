#pragma once

#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal checker for the DOT dialect the library emits: a fixed header,
// node statements, then edge statements, then the closing brace.
namespace test_support {

struct DotNode {
  int id = 0;
  std::string label;
  std::string attrs;
};

struct DotEdge {
  int from = 0;
  int to = 0;
  std::string label;
};

struct DotGraph {
  std::vector<DotNode> nodes;
  std::vector<DotEdge> edges;

  const DotNode* find(const std::string& label) const {
    for (const DotNode& n : nodes) {
      if (n.label == label) return &n;
    }
    return nullptr;
  }
};

inline DotGraph parse_dot(const std::string& text) {
  static const std::regex node_re(
      R"re(^  n(\d+) \[label="((?:[^"\\]|\\.)*)"(?:, ([^\]]+))?\];$)re");
  static const std::regex edge_re(
      R"re(^  n(\d+) -> n(\d+) \[label="((?:[^"\\]|\\.)*)"\];$)re");

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "digraph interpretation {") {
    throw std::runtime_error("bad dot header: " + line);
  }
  if (!std::getline(in, line) || line != "  rankdir=LR;") {
    throw std::runtime_error("bad dot attribute line: " + line);
  }

  DotGraph g;
  bool saw_edge = false;
  bool saw_close = false;
  while (std::getline(in, line)) {
    if (line == "}") {
      saw_close = true;
      break;
    }
    std::smatch m;
    if (std::regex_match(line, m, edge_re)) {
      saw_edge = true;
      g.edges.push_back({std::stoi(m[1]), std::stoi(m[2]), m[3]});
    } else if (std::regex_match(line, m, node_re)) {
      if (saw_edge) throw std::runtime_error("node statement after edges: " + line);
      g.nodes.push_back({std::stoi(m[1]), m[2], m[3]});
    } else {
      throw std::runtime_error("unparsable dot line: " + line);
    }
  }
  if (!saw_close) throw std::runtime_error("missing closing brace");
  while (std::getline(in, line)) {
    if (!line.empty()) throw std::runtime_error("trailing content: " + line);
  }

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].id != static_cast<int>(i)) {
      throw std::runtime_error("node ids are not dense and ordered");
    }
  }
  for (const DotEdge& e : g.edges) {
    if (e.from < 0 || e.from >= static_cast<int>(g.nodes.size()) || e.to < 0 ||
        e.to >= static_cast<int>(g.nodes.size())) {
      throw std::runtime_error("edge endpoint out of range");
    }
  }
  return g;
}

}  // namespace test_support
