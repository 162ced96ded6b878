#include "ontopath/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ontopath/error.hpp"
#include "ontopath/rng.hpp"

namespace ontopath {

namespace {

void check_id(const NodeId& id, std::size_t record) {
  if (id.empty() || id.find_first_of("\t\n\r") != NodeId::npos) {
    throw Error(ErrorCode::MalformedRecord,
                "record " + std::to_string(record) + ": invalid id '" + id + "'");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

bool skippable(const std::string& line) {
  return line.empty() || line.front() == '#';
}

}  // namespace

std::map<NodeId, std::vector<NodeId>> OntologyGraph::parents_of() const {
  std::map<NodeId, std::vector<NodeId>> out;
  for (const auto& n : nodes) out[n];
  for (const auto& [child, parent] : edges) out[child].push_back(parent);
  return out;
}

OntologyGraph parse_ontology(const std::vector<EdgeRecord>& edge_records,
                             const std::vector<DefinitionRecord>& definition_records) {
  OntologyGraph g;
  for (std::size_t i = 0; i < edge_records.size(); ++i) {
    const auto& [child, parent] = edge_records[i];
    check_id(child, i);
    check_id(parent, i);
    if (child == parent) {
      throw Error(ErrorCode::MalformedRecord,
                  "record " + std::to_string(i) + ": self edge on '" + child + "'");
    }
    g.nodes.insert(child);
    g.nodes.insert(parent);
    g.edges.emplace(child, parent);
  }
  for (std::size_t i = 0; i < definition_records.size(); ++i) {
    const auto& [id, text] = definition_records[i];
    check_id(id, i);
    if (!g.nodes.contains(id)) throw Error(ErrorCode::DanglingDefinition, id);
    if (!g.definitions.emplace(id, text).second) throw Error(ErrorCode::DuplicateDefinition, id);
  }
  std::set<NodeId> has_parent;
  for (const auto& e : g.edges) has_parent.insert(e.first);
  for (const auto& n : g.nodes) {
    if (!has_parent.contains(n)) g.roots.push_back(n);
  }
  return g;
}

std::vector<EdgeRecord> read_edge_file(const std::string& path) {
  std::vector<EdgeRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (skippable(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::MalformedRecord,
                  path + ":" + std::to_string(i + 1) + ": expected child<TAB>parent");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

std::vector<DefinitionRecord> read_definition_file(const std::string& path) {
  std::vector<DefinitionRecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (skippable(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::MalformedRecord,
                  path + ":" + std::to_string(i + 1) + ": expected id<TAB>text");
    }
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

OntologyGraph validate_dag(OntologyGraph g) {
  if (g.nodes.empty()) throw Error(ErrorCode::EmptyGraph, "no nodes");
  const auto parents = g.parents_of();
  // Allowed only as the sole root, which is how a converted tree is written back.
  if (g.nodes.contains(kSyntheticRoot) && (g.roots.size() > 1 || (parents.contains(kSyntheticRoot) && !parents.at(kSyntheticRoot).empty()))) {
    throw Error(ErrorCode::ReservedId, kSyntheticRoot);
  }
  // Iterative DFS along child -> parent edges, colours: 0 new, 1 on stack, 2 done.
  std::map<NodeId, int> colour;
  for (const auto& start : g.nodes) {
    if (colour[start] != 0) continue;
    std::vector<std::pair<const NodeId*, std::size_t>> stack{{&start, 0}};
    colour[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& ps = parents.at(*node);
      if (next == ps.size()) {
        colour[*node] = 2;
        stack.pop_back();
        continue;
      }
      const NodeId& p = ps[next++];
      const int c = colour[p];
      if (c == 1) {
        std::vector<NodeId> cycle;
        auto it = std::find_if(stack.begin(), stack.end(),
                               [&](const auto& frame) { return *frame.first == p; });
        for (; it != stack.end(); ++it) cycle.push_back(*it->first);
        throw CycleError(std::move(cycle));
      }
      if (c == 0) {
        colour[p] = 1;
        stack.emplace_back(&p, 0);
      }
    }
  }
  if (g.roots.empty()) throw Error(ErrorCode::EmptyGraph, "no root");

  if (g.roots.size() > 1) {
    for (const auto& r : g.roots) g.edges.emplace(r, kSyntheticRoot);
    g.nodes.insert(kSyntheticRoot);
    g.roots = {kSyntheticRoot};
  }
  return g;
}

DagStats compute_dag_stats(const OntologyGraph& g) {
  DagStats s;
  if (g.nodes.empty()) return s;
  std::map<NodeId, std::size_t> count;
  for (const auto& e : g.edges) ++count[e.first];
  std::size_t multi = 0;
  std::size_t total = 0;
  for (const auto& [node, k] : count) {
    if (k > 1) {
      ++multi;
      total += k;
    }
  }
  s.multi_parent_pct = 100.0 * static_cast<double>(multi) / static_cast<double>(g.nodes.size());
  s.avg_parents_of_multi = multi ? static_cast<double>(total) / static_cast<double>(multi) : 0.0;
  return s;
}

TreeOntology::TreeOntology(std::vector<NodeId> ids, const std::vector<Index>& parent,
                           std::vector<std::optional<std::string>> definitions,
                           std::size_t removed_edges)
    : ids_(std::move(ids)),
      parent_(parent),
      definitions_(std::move(definitions)),
      removed_edges_(removed_edges) {
  const std::size_t n = ids_.size();
  if (n == 0) throw Error(ErrorCode::EmptyGraph, "no nodes");
  if (parent_.size() != n || definitions_.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "tree arrays have inconsistent sizes");
  }
  if (!std::is_sorted(ids_.begin(), ids_.end()) ||
      std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
    throw Error(ErrorCode::InvalidArgument, "tree ids must be strictly ascending");
  }
  children_.assign(n, {});
  for (std::size_t v = 0; v < n; ++v) {
    index_.emplace(ids_[v], static_cast<Index>(v));
    const Index p = parent_[v];
    if (p == kNone) {
      if (root_ != kNone) {
        throw Error(ErrorCode::MalformedRecord,
                    "more than one root: " + ids_[static_cast<std::size_t>(root_)] + ", " + ids_[v]);
      }
      root_ = static_cast<Index>(v);
    } else {
      if (p < 0 || static_cast<std::size_t>(p) >= n) {
        throw Error(ErrorCode::InvalidArgument, "parent index out of range");
      }
      children_[static_cast<std::size_t>(p)].push_back(static_cast<Index>(v));
    }
  }
  if (root_ == kNone) throw Error(ErrorCode::EmptyGraph, "no root");

  // Children are appended in ascending index order, hence ascending id order.
  label_.assign(n, kInvalidLabel);
  depth_.assign(n, -1);
  depth_[static_cast<std::size_t>(root_)] = 0;
  std::vector<Index> queue{root_};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Index v = queue[head];
    const auto& kids = children_[static_cast<std::size_t>(v)];
    max_children_ = std::max(max_children_, kids.size());
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const auto c = static_cast<std::size_t>(kids[i]);
      label_[c] = static_cast<LabelId>(i);
      depth_[c] = depth_[static_cast<std::size_t>(v)] + 1;
      queue.push_back(kids[i]);
    }
  }
  if (queue.size() != n) {
    throw Error(ErrorCode::CycleDetected, "parent map is not connected to the root");
  }
}

std::optional<TreeOntology::Index> TreeOntology::find(const NodeId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TreeOntology::Index TreeOntology::index_of(const NodeId& id) const {
  const auto v = find(id);
  if (!v) throw Error(ErrorCode::UnknownNode, id);
  return *v;
}

std::optional<TreeOntology::Index> TreeOntology::child_with_label(Index p, LabelId l) const {
  const auto& kids = children(p);
  if (l >= kids.size()) return std::nullopt;
  return kids[l];
}

int TreeOntology::max_depth() const { return *std::max_element(depth_.begin(), depth_.end()); }

std::vector<TreeOntology::Index> TreeOntology::leaves() const {
  std::vector<Index> out;
  for (std::size_t v = 0; v < size(); ++v) {
    if (children_[v].empty() && static_cast<Index>(v) != root_) out.push_back(static_cast<Index>(v));
  }
  return out;
}

std::vector<EdgeRecord> TreeOntology::edge_records() const {
  std::vector<EdgeRecord> out;
  for (std::size_t v = 0; v < size(); ++v) {
    if (parent_[v] != kNone) out.push_back({ids_[v], ids_[static_cast<std::size_t>(parent_[v])]});
  }
  return out;
}

TreeOntology dag_to_tree(const OntologyGraph& g, std::uint64_t seed) {
  if (g.roots.size() != 1) {
    throw Error(ErrorCode::InvalidArgument, "dag_to_tree needs a single-rooted graph");
  }
  std::vector<NodeId> ids(g.nodes.begin(), g.nodes.end());
  std::unordered_map<NodeId, TreeOntology::Index> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<TreeOntology::Index>(i));

  // parents_of lists parents ascending because edges are an ordered set.
  const auto parents = g.parents_of();
  SplitMix64 rng(seed);
  std::vector<TreeOntology::Index> parent(ids.size(), TreeOntology::kNone);
  std::size_t removed = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& ps = parents.at(ids[i]);
    if (ps.empty()) continue;
    std::size_t pick = 0;
    if (ps.size() > 1) {
      pick = static_cast<std::size_t>(rng.below(ps.size()));
      removed += ps.size() - 1;
    }
    parent[i] = index.at(ps[pick]);
  }

  std::vector<std::optional<std::string>> defs(ids.size());
  for (const auto& [id, text] : g.definitions) defs[static_cast<std::size_t>(index.at(id))] = text;
  return TreeOntology(std::move(ids), parent, std::move(defs), removed);
}

TreeOntology assign_edge_labels(TreeOntology t) { return t; }

const char* to_string(PathMode m) { return m == PathMode::NodePath ? "text2nodes" : "text2edges"; }

PathMode path_mode_from_string(const std::string& s) {
  if (s == "text2nodes" || s == "nodes") return PathMode::NodePath;
  if (s == "text2edges" || s == "edges") return PathMode::EdgePath;
  throw Error(ErrorCode::InvalidArgument, "unknown path mode '" + s + "'");
}

PathSpec extract_path(const TreeOntology& t, const NodeId& v, PathMode mode, Terminus terminus) {
  auto node = t.index_of(v);
  if (terminus == Terminus::ToParent) {
    if (node == t.root()) throw Error(ErrorCode::RootHasNoParentPath, v);
  }
  PathSpec p;
  p.mode = mode;
  p.terminus = terminus;
  if (mode == PathMode::NodePath) {
    auto cur = terminus == Terminus::ToParent ? t.parent(node) : node;
    for (; cur != TreeOntology::kNone; cur = t.parent(cur)) p.nodes.push_back(t.id(cur));
    std::reverse(p.nodes.begin(), p.nodes.end());
  } else {
    // Labels of edges from the root down to the terminus.
    auto cur = terminus == Terminus::ToParent ? t.parent(node) : node;
    for (; cur != t.root(); cur = t.parent(cur)) p.labels.push_back(t.label(cur));
    std::reverse(p.labels.begin(), p.labels.end());
  }
  return p;
}

Resolution resolve_path(const TreeOntology& t, const PathSpec& p) {
  auto cur = t.root();
  if (p.mode == PathMode::EdgePath) {
    for (const LabelId l : p.labels) {
      const auto next = t.child_with_label(cur, l);
      if (!next) return {t.id(cur), false};
      cur = *next;
    }
    return {t.id(cur), true};
  }
  if (p.nodes.empty()) return {t.id(cur), true};
  if (p.nodes.front() != t.id(cur)) return {t.id(cur), false};
  for (std::size_t i = 1; i < p.nodes.size(); ++i) {
    const auto next = t.find(p.nodes[i]);
    if (!next || t.parent(*next) != cur) return {t.id(cur), false};
    cur = *next;
  }
  return {t.id(cur), true};
}

long average_decisions(double avg_depth, double avg_branch) {
  return std::lround(avg_depth * avg_branch);
}

GraphStats compute_stats(const TreeOntology& t) {
  GraphStats s;
  s.node_count = t.size();
  std::size_t depth_sum = 0;
  std::size_t internal = 0;
  std::size_t branch_sum = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = static_cast<TreeOntology::Index>(i);
    if (v != t.root()) {
      depth_sum += static_cast<std::size_t>(t.depth(v));
      s.max_depth = std::max(s.max_depth, t.depth(v));
    }
    const auto k = t.children(v).size();
    if (k > 0) {
      ++internal;
      branch_sum += k;
      s.max_branch = std::max(s.max_branch, k);
    }
  }
  if (t.size() > 1) s.avg_depth = static_cast<double>(depth_sum) / static_cast<double>(t.size() - 1);
  if (internal > 0) s.avg_branch = static_cast<double>(branch_sum) / static_cast<double>(internal);
  s.a_d = average_decisions(s.avg_depth, s.avg_branch);
  return s;
}

TreeOntology load_tree(const std::string& edges_path, const std::string& definitions_path,
                       std::uint64_t seed) {
  std::vector<DefinitionRecord> defs;
  if (!definitions_path.empty()) defs = read_definition_file(definitions_path);
  auto g = validate_dag(parse_ontology(read_edge_file(edges_path), defs));
  return dag_to_tree(g, seed);
}

}  // namespace ontopath
