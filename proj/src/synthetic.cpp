#include "ontopath/synthetic.hpp"

#include <array>
#include <fstream>
#include <unordered_set>

#include "ontopath/error.hpp"
#include "ontopath/rng.hpp"

namespace ontopath {

namespace {

constexpr std::array<const char*, 14> kOnsets = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
constexpr std::array<const char*, 5> kVowels = {"a", "e", "i", "o", "u"};

std::string make_name(SplitMix64& rng) {
  std::string s;
  const auto syllables = 2 + rng.below(2);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    s += kOnsets[rng.below(kOnsets.size())];
    s += kVowels[rng.below(kVowels.size())];
  }
  return s;
}

constexpr std::array<const char*, 4> kOpeners = {"a kind of", "a type of", "one sort of", "a form of"};
constexpr std::array<const char*, 3> kLinks = {"which is", "that is", "itself"};

}  // namespace

SyntheticOntology make_synthetic_ontology(std::size_t node_count, int max_depth, std::uint64_t seed) {
  if (node_count < 2 || max_depth < 1) {
    throw Error(ErrorCode::InvalidArgument, "synthetic ontology needs >= 2 nodes and depth >= 1");
  }
  SplitMix64 rng = stream_for(seed, "synthetic");
  std::vector<std::string> names;
  std::vector<std::size_t> parent;
  std::vector<int> depth;
  std::unordered_set<std::string> used;
  auto fresh = [&] {
    for (;;) {
      auto n = make_name(rng);
      if (used.insert(n).second) return n;
    }
  };

  names.push_back(fresh());
  parent.push_back(0);
  depth.push_back(0);
  while (names.size() < node_count) {
    // Uniform attachment among nodes that can still grow a child.
    std::size_t p;
    do {
      p = static_cast<std::size_t>(rng.below(names.size()));
    } while (depth[p] >= max_depth);
    names.push_back(fresh());
    parent.push_back(p);
    depth.push_back(depth[p] + 1);
  }

  SyntheticOntology s;
  for (std::size_t v = 1; v < names.size(); ++v) {
    s.edges.push_back({names[v], names[parent[v]]});
    std::string def = std::string(kOpeners[rng.below(kOpeners.size())]) + " " + names[parent[v]];
    for (std::size_t a = parent[v]; a != 0;) {
      a = parent[a];
      def += std::string(", ") + kLinks[rng.below(kLinks.size())] + " " + kOpeners[rng.below(kOpeners.size())] +
             " " + names[a];
    }
    def += ".";
    s.definitions.push_back({names[v], def});
  }
  return s;
}

void write_synthetic_ontology(const SyntheticOntology& s, const std::string& edges_path,
                              const std::string& definitions_path) {
  std::ofstream e(edges_path);
  std::ofstream d(definitions_path);
  if (!e || !d) throw Error(ErrorCode::IoError, "cannot write synthetic ontology files");
  e << "# child\tparent\n";
  for (const auto& r : s.edges) e << r.child << '\t' << r.parent << '\n';
  d << "# id\tdefinition\n";
  for (const auto& r : s.definitions) d << r.id << '\t' << r.text << '\n';
}

}  // namespace ontopath
