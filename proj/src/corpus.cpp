#include "ontopath/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "ontopath/error.hpp"
#include "ontopath/rng.hpp"

namespace ontopath {

using json = nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto is_punct = [](unsigned char c) { return c < 128 && std::ispunct(c) != 0; };
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;

    std::size_t lo = i;
    std::size_t hi = j;
    while (lo < hi && is_punct(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && is_punct(static_cast<unsigned char>(text[hi - 1]))) --hi;
    for (std::size_t k = i; k < lo; ++k) out.emplace_back(1, text[k]);
    if (lo < hi) {
      std::string word = text.substr(lo, hi - lo);
      for (auto& c : word) {
        if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      out.push_back(std::move(word));
    }
    for (std::size_t k = hi; k < j; ++k) out.emplace_back(1, text[k]);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------- TokenVocab

TokenVocab::TokenVocab() {
  for (const char* t : {kPadToken, kUnkToken, kEmptyToken}) {
    index_.emplace(t, static_cast<std::int32_t>(tokens_.size()));
    tokens_.emplace_back(t);
    freq_.push_back(0);
  }
}

std::int32_t TokenVocab::add(const std::string& token, std::size_t count) {
  const auto it = index_.find(token);
  if (it != index_.end()) {
    if (it->second < 3) throw Error(ErrorCode::InvalidArgument, "reserved token '" + token + "'");
    freq_[static_cast<std::size_t>(it->second)] += count;
    return it->second;
  }
  const auto i = static_cast<std::int32_t>(tokens_.size());
  index_.emplace(token, i);
  tokens_.push_back(token);
  freq_.push_back(count);
  return i;
}

std::int32_t TokenVocab::index(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> TokenVocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

TokenVocab TokenVocab::from_tokens(const std::vector<std::string>& tokens) {
  TokenVocab v;
  if (tokens.size() < 3 || tokens[0] != kPadToken || tokens[1] != kUnkToken || tokens[2] != kEmptyToken) {
    throw Error(ErrorCode::FormatError, "token list does not start with the reserved tokens");
  }
  for (std::size_t i = 3; i < tokens.size(); ++i) v.add(tokens[i], 0);
  return v;
}

// --------------------------------------------------------------- SymbolVocab

SymbolVocab SymbolVocab::for_tree(const TreeOntology& t, PathMode mode) {
  std::vector<std::string> symbols;
  if (mode == PathMode::NodePath) {
    for (std::size_t v = 0; v < t.size(); ++v) symbols.push_back(t.id(static_cast<TreeOntology::Index>(v)));
  } else {
    for (std::size_t l = 0; l < t.label_vocab_size(); ++l) symbols.push_back(std::to_string(l));
  }
  return from_symbols(mode, symbols);
}

SymbolVocab SymbolVocab::from_symbols(PathMode mode, const std::vector<std::string>& symbols) {
  SymbolVocab v;
  v.mode_ = mode;
  v.symbols_ = symbols;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (!v.index_.emplace(symbols[i], static_cast<std::int32_t>(i) + kFirst).second) {
      throw Error(ErrorCode::FormatError, "duplicate symbol '" + symbols[i] + "'");
    }
  }
  return v;
}

const std::string& SymbolVocab::symbol(std::int32_t i) const {
  if (i < kFirst || static_cast<std::size_t>(i) >= size()) {
    throw Error(ErrorCode::IndexOutOfRange, "symbol index " + std::to_string(i));
  }
  return symbols_[static_cast<std::size_t>(i - kFirst)];
}

std::vector<std::int32_t> SymbolVocab::encode(const PathSpec& p) const {
  if (p.mode != mode_) throw Error(ErrorCode::VocabMismatch, "path mode differs from vocabulary");
  std::vector<std::int32_t> out;
  auto lookup = [&](const std::string& s) {
    const auto it = index_.find(s);
    if (it == index_.end()) throw Error(ErrorCode::VocabMismatch, "unknown symbol '" + s + "'");
    out.push_back(it->second);
  };
  if (mode_ == PathMode::NodePath) {
    for (const auto& n : p.nodes) lookup(n);
  } else {
    for (const auto l : p.labels) lookup(std::to_string(l));
  }
  out.push_back(kEos);
  return out;
}

PathSpec SymbolVocab::decode(const std::vector<std::int32_t>& indices, Terminus terminus) const {
  PathSpec p;
  p.mode = mode_;
  p.terminus = terminus;
  for (const auto i : indices) {
    const bool reserved = i < kFirst || static_cast<std::size_t>(i) >= size();
    if (mode_ == PathMode::NodePath) {
      p.nodes.push_back(reserved ? std::string() : symbol(i));
    } else {
      p.labels.push_back(reserved ? kInvalidLabel : static_cast<LabelId>(i - kFirst));
    }
  }
  return p;
}

// ------------------------------------------------------------------ examples

const char* to_string(ExampleKind k) {
  return k == ExampleKind::Standard ? "standard" : "dummy_leaf";
}

std::vector<Example> make_examples(const TreeOntology& t, PathMode mode, std::size_t max_source_len) {
  std::vector<Example> out;
  std::size_t missing = 0;
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = static_cast<TreeOntology::Index>(i);
    if (v == t.root()) continue;
    const auto& def = t.definition(v);
    if (def) {
      Example ex;
      ex.node = t.id(v);
      ex.kind = ExampleKind::Standard;
      ex.source = tokenize(*def);
      if (ex.source.empty()) ex.source = {TokenVocab::kEmptyToken};
      if (ex.source.size() > max_source_len) {
        ex.source.resize(max_source_len);
        ++truncated;
      }
      ex.target = extract_path(t, ex.node, mode, Terminus::ToParent);
      out.push_back(std::move(ex));
    } else {
      ++missing;
    }
    if (t.is_leaf(v)) {
      Example ex;
      ex.node = t.id(v);
      ex.kind = ExampleKind::DummyLeaf;
      ex.source = {TokenVocab::kEmptyToken};
      ex.target = extract_path(t, ex.node, mode, Terminus::ToNode);
      out.push_back(std::move(ex));
    }
  }
  if (missing) log_warning(std::to_string(missing) + " non-root nodes have no definition");
  if (truncated) {
    log_warning(std::to_string(truncated) + " definitions truncated to " +
                std::to_string(max_source_len) + " tokens");
  }
  return out;
}

SplitCounts split_counts(std::size_t leaf_count) {
  if (leaf_count < 20) {
    throw Error(ErrorCode::TooFewLeaves, std::to_string(leaf_count) + " leaves, need at least 20");
  }
  SplitCounts c;
  c.sampled = leaf_count / 10;
  c.dev = std::max<std::size_t>(1, c.sampled / 10);
  c.test = c.sampled - c.dev;
  return c;
}

DatasetSplit apply_split(const std::vector<Example>& examples, const std::set<NodeId>& dev_nodes,
                         const std::set<NodeId>& test_nodes, std::uint64_t seed, bool keep_test_dummy) {
  DatasetSplit s;
  s.seed = seed;
  s.dev_nodes = dev_nodes;
  s.test_nodes = test_nodes;
  s.sampled_leaves = dev_nodes;
  s.sampled_leaves.insert(test_nodes.begin(), test_nodes.end());
  for (const auto& ex : examples) {
    const bool held_out = s.sampled_leaves.contains(ex.node);
    if (!held_out || (keep_test_dummy && ex.kind == ExampleKind::DummyLeaf)) {
      s.train.push_back(ex);
    } else if (test_nodes.contains(ex.node)) {
      s.test.push_back(ex);
    } else {
      s.dev.push_back(ex);
    }
  }
  return s;
}

DatasetSplit split_dataset(const std::vector<Example>& examples, const TreeOntology& t,
                           std::uint64_t seed, bool keep_test_dummy) {
  auto leaves = t.leaves();
  const auto counts = split_counts(leaves.size());
  SplitMix64 rng = stream_for(seed, "split");
  // Partial Fisher-Yates: the first `sampled` slots are a uniform sample.
  for (std::size_t i = 0; i < counts.sampled; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(leaves.size() - i));
    std::swap(leaves[i], leaves[j]);
  }
  std::set<NodeId> test_nodes;
  std::set<NodeId> dev_nodes;
  for (std::size_t i = 0; i < counts.sampled; ++i) {
    (i < counts.test ? test_nodes : dev_nodes).insert(t.id(leaves[i]));
  }
  return apply_split(examples, dev_nodes, test_nodes, seed, keep_test_dummy);
}

TokenVocab build_token_vocab(const std::vector<Example>& examples, const std::vector<std::string>& extra) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : examples) {
    for (const auto& tok : ex.source) {
      if (tok != TokenVocab::kEmptyToken) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  TokenVocab v;
  for (const auto& [tok, n] : ordered) {
    if (tok == TokenVocab::kPadToken || tok == TokenVocab::kUnkToken) continue;
    v.add(tok, n);
  }
  std::vector<std::string> more(extra);
  std::sort(more.begin(), more.end());
  for (const auto& tok : more) {
    if (v.index(tok) == TokenVocab::kUnk && tok != TokenVocab::kUnkToken && tok != TokenVocab::kPadToken &&
        tok != TokenVocab::kEmptyToken) {
      v.add(tok, 0);
    }
  }
  return v;
}

// ---------------------------------------------------------------------- I/O

namespace {

json example_json(const Example& ex, const char* split) {
  json j;
  j["node"] = ex.node;
  j["kind"] = to_string(ex.kind);
  j["split"] = split;
  j["mode"] = to_string(ex.target.mode);
  j["terminus"] = ex.target.terminus == Terminus::ToParent ? "to_parent" : "to_node";
  j["source"] = ex.source;
  if (ex.target.mode == PathMode::NodePath) {
    j["target"] = ex.target.nodes;
  } else {
    j["target"] = ex.target.labels;
  }
  return j;
}

}  // namespace

void write_corpus_jsonl(std::ostream& out, const DatasetSplit& split) {
  for (const auto& ex : split.train) out << example_json(ex, "train").dump() << '\n';
  for (const auto& ex : split.dev) out << example_json(ex, "dev").dump() << '\n';
  for (const auto& ex : split.test) out << example_json(ex, "test").dump() << '\n';
}

void write_split_manifest(std::ostream& out, const DatasetSplit& split, PathMode mode) {
  json j;
  j["format_version"] = kCorpusFormatVersion;
  j["seed"] = split.seed;
  j["path_mode"] = to_string(mode);
  j["counts"] = {{"sampled_leaves", split.sampled_leaves.size()},
                 {"test_nodes", split.test_nodes.size()},
                 {"dev_nodes", split.dev_nodes.size()},
                 {"train_examples", split.train.size()},
                 {"dev_examples", split.dev.size()},
                 {"test_examples", split.test.size()}};
  j["test_nodes"] = split.test_nodes;
  j["dev_nodes"] = split.dev_nodes;
  out << j.dump(2) << '\n';
}

DatasetSplit read_corpus_jsonl(std::istream& in) {
  DatasetSplit s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      Example ex;
      ex.node = j.at("node").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "standard") {
        ex.kind = ExampleKind::Standard;
      } else if (kind == "dummy_leaf") {
        ex.kind = ExampleKind::DummyLeaf;
      } else {
        throw Error(ErrorCode::FormatError, "unknown kind '" + kind + "'");
      }
      ex.source = j.at("source").get<std::vector<std::string>>();
      ex.target.mode = path_mode_from_string(j.at("mode").get<std::string>());
      ex.target.terminus = j.at("terminus").get<std::string>() == "to_node" ? Terminus::ToNode : Terminus::ToParent;
      if (ex.target.mode == PathMode::NodePath) {
        ex.target.nodes = j.at("target").get<std::vector<std::string>>();
      } else {
        ex.target.labels = j.at("target").get<std::vector<LabelId>>();
      }
      const auto split = j.at("split").get<std::string>();
      if (split == "train") {
        s.train.push_back(std::move(ex));
      } else if (split == "dev") {
        s.dev_nodes.insert(ex.node);
        s.dev.push_back(std::move(ex));
      } else if (split == "test") {
        s.test_nodes.insert(ex.node);
        s.test.push_back(std::move(ex));
      } else {
        throw Error(ErrorCode::FormatError, "unknown split '" + split + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  s.sampled_leaves = s.dev_nodes;
  s.sampled_leaves.insert(s.test_nodes.begin(), s.test_nodes.end());
  return s;
}

}  // namespace ontopath
