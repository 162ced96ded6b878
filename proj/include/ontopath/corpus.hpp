#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ontopath/graph.hpp"

namespace ontopath {

inline constexpr std::size_t kDefaultMaxSourceLen = 60;

/// Lowercases, splits on whitespace and peels leading/trailing ASCII
/// punctuation off each word as single-character tokens.
std::vector<std::string> tokenize(const std::string& text);

/// Source-side vocabulary. Indices 0..2 are reserved.
class TokenVocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kEmpty = 2;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kEmptyToken = "<empty>";

  TokenVocab();

  /// Adds a corpus token (reserved spellings are rejected). Returns its index.
  std::int32_t add(const std::string& token, std::size_t count = 1);
  std::int32_t index(const std::string& token) const;  // kUnk when absent
  const std::string& token(std::int32_t i) const { return tokens_.at(static_cast<std::size_t>(i)); }
  std::size_t frequency(std::int32_t i) const { return freq_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;

  /// Rebuilds from an ordered token list (as stored in a checkpoint sidecar).
  static TokenVocab from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freq_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Target-side vocabulary over node ids (text2nodes) or edge labels
/// (text2edges). Indices 0..2 are PAD, SOS, EOS.
class SymbolVocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kSos = 1;
  static constexpr std::int32_t kEos = 2;
  static constexpr std::int32_t kFirst = 3;

  SymbolVocab() = default;
  /// |V|+3 symbols in node mode, label_vocab_size()+3 in edge mode.
  static SymbolVocab for_tree(const TreeOntology& t, PathMode mode);
  static SymbolVocab from_symbols(PathMode mode, const std::vector<std::string>& symbols);

  PathMode mode() const { return mode_; }
  std::size_t size() const { return symbols_.size() + kFirst; }
  /// Symbol spelling of a non-reserved index: node id or decimal label.
  const std::string& symbol(std::int32_t i) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

  /// Path symbols followed by EOS. Throws VocabMismatch on unknown symbols.
  std::vector<std::int32_t> encode(const PathSpec& p) const;
  /// Decoded indices (no SOS/EOS) back to a path. Reserved indices become
  /// symbols that resolve_path treats as invalid.
  PathSpec decode(const std::vector<std::int32_t>& indices, Terminus terminus) const;

 private:
  PathMode mode_ = PathMode::EdgePath;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::int32_t> index_;
};

enum class ExampleKind { Standard, DummyLeaf };

const char* to_string(ExampleKind k);

struct Example {
  NodeId node;
  ExampleKind kind = ExampleKind::Standard;
  std::vector<std::string> source;  // tokens; [<empty>] for dummy leaves
  PathSpec target;                  // EOS is added by SymbolVocab::encode
};

/// One Standard example per non-root node with a definition (target ends at
/// the parent) and one DummyLeaf example per leaf (target ends at the leaf).
std::vector<Example> make_examples(const TreeOntology& t, PathMode mode,
                                   std::size_t max_source_len = kDefaultMaxSourceLen);

struct SplitCounts {
  std::size_t sampled = 0;
  std::size_t test = 0;
  std::size_t dev = 0;
};

/// 10% of leaves sampled, 90/10 test/dev, rounded down with at least one
/// node per split. Throws TooFewLeaves below 20 leaves.
SplitCounts split_counts(std::size_t leaf_count);

struct DatasetSplit {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
  std::set<NodeId> sampled_leaves;
  std::set<NodeId> dev_nodes;
  std::set<NodeId> test_nodes;
  std::uint64_t seed = 0;
};

/// With `keep_test_dummy`, DummyLeaf examples of sampled leaves stay in train.
DatasetSplit split_dataset(const std::vector<Example>& examples, const TreeOntology& t,
                           std::uint64_t seed, bool keep_test_dummy = false);

/// Re-partitions examples from saved node sets (used when loading a manifest).
DatasetSplit apply_split(const std::vector<Example>& examples, const std::set<NodeId>& dev_nodes,
                         const std::set<NodeId>& test_nodes, std::uint64_t seed,
                         bool keep_test_dummy = false);

/// Vocabulary over the source tokens of the given examples, ordered by
/// descending frequency then token. Tokens in `extra` are appended.
TokenVocab build_token_vocab(const std::vector<Example>& examples,
                             const std::vector<std::string>& extra = {});

inline constexpr int kCorpusFormatVersion = 1;

/// JSON-lines dump; `split` names the partition of each example.
void write_corpus_jsonl(std::ostream& out, const DatasetSplit& split);
void write_split_manifest(std::ostream& out, const DatasetSplit& split, PathMode mode);
/// Reads what write_corpus_jsonl produced.
DatasetSplit read_corpus_jsonl(std::istream& in);

}  // namespace ontopath
