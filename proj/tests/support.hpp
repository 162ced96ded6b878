#pragma once

// Fixtures and brute-force oracles shared by the test binaries. Oracles work
// on plain child -> parent maps and never call into TreeOntology.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ontopath/corpus.hpp"
#include "ontopath/graph.hpp"
#include "ontopath/synthetic.hpp"

namespace testsupport {

using ontopath::DefinitionRecord;
using ontopath::EdgeRecord;

inline std::string pad_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

/// Random recursive tree; names are shuffled so id order differs from
/// insertion order.
inline std::vector<EdgeRecord> random_tree_edges(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(pad_name("t", i));
  std::shuffle(names.begin(), names.end(), gen);
  std::vector<EdgeRecord> edges;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    edges.push_back({names[i], names[pick(gen)]});
  }
  return edges;
}

/// Random single-rooted DAG: node i draws 1..3 distinct parents among 0..i-1.
inline std::vector<EdgeRecord> random_dag_edges(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(pad_name("d", i));
  std::shuffle(names.begin(), names.end(), gen);
  std::vector<EdgeRecord> edges;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> count(1, 3);
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::set<std::size_t> ps;
    const int k = std::min<int>(count(gen), static_cast<int>(i));
    while (static_cast<int>(ps.size()) < k) ps.insert(pick(gen));
    for (const auto p : ps) edges.push_back({names[i], names[p]});
  }
  return edges;
}

inline std::vector<DefinitionRecord> definitions_for(const std::vector<EdgeRecord>& edges) {
  std::set<std::string> seen;
  std::vector<DefinitionRecord> defs;
  for (const auto& e : edges) {
    if (seen.insert(e.child).second) defs.push_back({e.child, "a kind of " + e.parent});
  }
  return defs;
}

/// The bird taxonomy from the running example, with enough siblings that
/// edge labels are not all zero.
inline std::vector<EdgeRecord> bird_edges() {
  return {{"chordate", "animal"},       {"arthropod", "animal"},     {"annelid", "animal"},
          {"vertebrate", "chordate"},   {"tunicate", "chordate"},    {"amphibian", "vertebrate"},
          {"bird", "vertebrate"},       {"apodiform_bird", "bird"},  {"passerine", "bird"},
          {"hummingbird", "apodiform_bird"}, {"swift", "apodiform_bird"}, {"lark", "passerine"},
          {"fish", "vertebrate"},       {"insect", "arthropod"}};
}

inline std::vector<DefinitionRecord> bird_definitions() {
  return {{"swift", "small bird that resembles a swallow and is noted for its rapid flight."},
          {"hummingbird", "tiny American bird having brilliant iridescent plumage."},
          {"apodiform_bird", "nonpasserine bird having weak feet."},
          {"bird", "warm-blooded egg-laying vertebrate with feathers."},
          {"vertebrate", "animal having a bony or cartilaginous skeleton."},
          {"chordate", "any animal of the phylum Chordata."},
          {"passerine", "perching birds."},
          {"lark", "a songbird."}};
}

inline ontopath::TreeOntology tree_from(const std::vector<EdgeRecord>& edges,
                                        const std::vector<DefinitionRecord>& defs = {}, std::uint64_t seed = 1) {
  return ontopath::dag_to_tree(ontopath::validate_dag(ontopath::parse_ontology(edges, defs)), seed);
}

/// Parent map of a tree, derived by brute force from its edge records.
inline std::map<std::string, std::string> parent_map(const std::vector<EdgeRecord>& tree_edges) {
  std::map<std::string, std::string> m;
  for (const auto& e : tree_edges) m[e.child] = e.parent;
  return m;
}

inline std::vector<std::string> oracle_root_path(const std::map<std::string, std::string>& parent,
                                                 std::string v) {
  std::vector<std::string> path{v};
  for (auto it = parent.find(v); it != parent.end(); it = parent.find(it->second)) path.push_back(it->second);
  std::reverse(path.begin(), path.end());
  return path;
}

inline std::map<std::string, std::vector<std::string>> oracle_children(
    const std::map<std::string, std::string>& parent) {
  std::map<std::string, std::vector<std::string>> ch;
  for (const auto& [c, p] : parent) ch[p].push_back(c);
  for (auto& [p, cs] : ch) std::sort(cs.begin(), cs.end());
  return ch;
}

/// Synthetic ontology of `examples + 1` nodes whose Standard examples (one
/// per non-root node) form the whole training set; dev and test are empty.
struct ToyCorpus {
  ontopath::TreeOntology tree;
  ontopath::DatasetSplit split;
};

inline ToyCorpus toy_corpus(std::size_t examples, ontopath::PathMode mode, std::uint64_t seed = 5,
                            int max_depth = 4) {
  const auto syn = ontopath::make_synthetic_ontology(examples + 1, max_depth, seed);
  ToyCorpus c{tree_from(syn.edges, syn.definitions), {}};
  for (auto& e : ontopath::make_examples(c.tree, mode)) {
    if (e.kind == ontopath::ExampleKind::Standard) c.split.train.push_back(std::move(e));
  }
  return c;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("ontopath_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testsupport
