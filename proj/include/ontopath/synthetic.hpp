#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ontopath/graph.hpp"

namespace ontopath {

struct SyntheticOntology {
  std::vector<EdgeRecord> edges;
  std::vector<DefinitionRecord> definitions;
};

/// Random recursive tree of `node_count` nodes with pronounceable unique
/// names and depth at most `max_depth`. Every non-root node gets a templated
/// definition naming all of its proper ancestors, parent first.
SyntheticOntology make_synthetic_ontology(std::size_t node_count, int max_depth, std::uint64_t seed);

void write_synthetic_ontology(const SyntheticOntology& s, const std::string& edges_path,
                              const std::string& definitions_path);

}  // namespace ontopath
