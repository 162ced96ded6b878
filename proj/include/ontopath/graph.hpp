#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ontopath {

using NodeId = std::string;
using LabelId = std::uint32_t;

/// Id of the synthetic root added when an ontology has several roots.
inline constexpr const char* kSyntheticRoot = "__ROOT__";

/// Marker for a decoded symbol that cannot name any edge or node.
inline constexpr LabelId kInvalidLabel = UINT32_MAX;

struct EdgeRecord {
  NodeId child;
  NodeId parent;
};

struct DefinitionRecord {
  NodeId id;
  std::string text;
};

/// Hypernymy graph as read from disk: child -> parent edges plus definitions.
struct OntologyGraph {
  std::set<NodeId> nodes;
  std::set<std::pair<NodeId, NodeId>> edges;  // (child, parent)
  std::map<NodeId, std::string> definitions;
  std::vector<NodeId> roots;  // ascending

  std::map<NodeId, std::vector<NodeId>> parents_of() const;
};

OntologyGraph parse_ontology(const std::vector<EdgeRecord>& edge_records,
                             const std::vector<DefinitionRecord>& definition_records);

/// `child<TAB>parent` lines; `#` comments and blank lines skipped.
std::vector<EdgeRecord> read_edge_file(const std::string& path);
/// `id<TAB>text` lines; the text is everything after the first tab.
std::vector<DefinitionRecord> read_definition_file(const std::string& path);

/// Rejects cycles and empty graphs; joins multiple roots under kSyntheticRoot.
OntologyGraph validate_dag(OntologyGraph g);

struct DagStats {
  double multi_parent_pct = 0.0;
  double avg_parents_of_multi = 0.0;  // 0 when no node has several parents
};

DagStats compute_dag_stats(const OntologyGraph& g);

/// Rooted tree with nodes stored in ascending id order. Node indices are
/// therefore lexicographic ranks, and sorting children by index sorts them
/// by id. The label of an edge is the child's position among its siblings.
class TreeOntology {
 public:
  using Index = std::int32_t;
  static constexpr Index kNone = -1;

  TreeOntology() = default;

  /// Builds from a parent map (kNone for the root). Throws on more than one
  /// root, cycles or disconnected input.
  TreeOntology(std::vector<NodeId> ids, const std::vector<Index>& parent,
               std::vector<std::optional<std::string>> definitions, std::size_t removed_edges);

  std::size_t size() const { return ids_.size(); }
  Index root() const { return root_; }
  const NodeId& id(Index v) const { return ids_[static_cast<std::size_t>(v)]; }
  std::optional<Index> find(const NodeId& id) const;
  Index index_of(const NodeId& id) const;  // throws UnknownNode

  Index parent(Index v) const { return parent_[static_cast<std::size_t>(v)]; }
  const std::vector<Index>& children(Index v) const { return children_[static_cast<std::size_t>(v)]; }
  bool is_leaf(Index v) const { return children(v).empty(); }
  int depth(Index v) const { return depth_[static_cast<std::size_t>(v)]; }
  /// Label of the edge parent(v) -> v.
  LabelId label(Index v) const { return label_[static_cast<std::size_t>(v)]; }
  /// Child of p carrying label l, if any.
  std::optional<Index> child_with_label(Index p, LabelId l) const;

  const std::optional<std::string>& definition(Index v) const {
    return definitions_[static_cast<std::size_t>(v)];
  }
  std::size_t removed_edges() const { return removed_edges_; }
  /// Size of the artificial edge vocabulary: the largest children count.
  std::size_t label_vocab_size() const { return max_children_; }
  int max_depth() const;

  std::vector<Index> leaves() const;
  /// (child, parent) pairs of the tree in ascending child id order.
  std::vector<EdgeRecord> edge_records() const;

 private:
  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, Index> index_;
  std::vector<Index> parent_;
  std::vector<std::vector<Index>> children_;
  std::vector<int> depth_;
  std::vector<LabelId> label_;
  std::vector<std::optional<std::string>> definitions_;
  Index root_ = kNone;
  std::size_t removed_edges_ = 0;
  std::size_t max_children_ = 0;
};

/// Keeps one parent per node, drawn uniformly with a seeded generator while
/// visiting nodes in ascending id order. `g` must come from validate_dag.
TreeOntology dag_to_tree(const OntologyGraph& g, std::uint64_t seed);

/// Labels are fixed at construction (i-th child gets label i); this returns
/// the tree unchanged and exists to mirror the pipeline stage.
TreeOntology assign_edge_labels(TreeOntology t);

enum class PathMode { NodePath, EdgePath };
enum class Terminus { ToParent, ToNode };

const char* to_string(PathMode m);
PathMode path_mode_from_string(const std::string& s);

struct PathSpec {
  PathMode mode = PathMode::EdgePath;
  Terminus terminus = Terminus::ToParent;
  std::vector<NodeId> nodes;    // NodePath
  std::vector<LabelId> labels;  // EdgePath

  std::size_t size() const { return mode == PathMode::NodePath ? nodes.size() : labels.size(); }
  bool operator==(const PathSpec&) const = default;
};

PathSpec extract_path(const TreeOntology& t, const NodeId& v, PathMode mode, Terminus terminus);

struct Resolution {
  NodeId node;
  bool valid = true;
  bool operator==(const Resolution&) const = default;
};

Resolution resolve_path(const TreeOntology& t, const PathSpec& p);

struct GraphStats {
  std::size_t node_count = 0;
  double avg_depth = 0.0;
  int max_depth = 0;
  double avg_branch = 0.0;
  std::size_t max_branch = 0;
  long a_d = 0;
};

/// Average number of decisions: avg_depth * avg_branch rounded half away
/// from zero.
long average_decisions(double avg_depth, double avg_branch);

GraphStats compute_stats(const TreeOntology& t);

/// Full ingestion: parse files, validate, convert to a tree.
TreeOntology load_tree(const std::string& edges_path, const std::string& definitions_path,
                       std::uint64_t seed);

}  // namespace ontopath
