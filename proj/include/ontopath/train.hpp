#pragma once

#include <optional>
#include <vector>

#include "ontopath/corpus.hpp"
#include "ontopath/embeddings.hpp"
#include "ontopath/eval.hpp"
#include "ontopath/seq2seq.hpp"

namespace ontopath {

/// Everything needed to decode: configuration, both vocabularies and the
/// trained parameters.
struct Checkpoint {
  ModelConfig config;
  TokenVocab tokens;
  SymbolVocab symbols;
  ParamStore<float> params;
  int best_epoch = 0;
  double best_dev_f1 = -1.0;  // -1 when never evaluated
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> dev_f1;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// max_target_len from the config, or the tree's max depth + 1 when unset.
std::size_t effective_max_target_len(const ModelConfig& cfg, const TreeOntology& t);

std::vector<EncodedExample> encode_examples(std::span<const Example> examples, const TokenVocab& tokens,
                                            const SymbolVocab& symbols);

/// Seeded epoch loop with RMSProp updates and global-norm clipping. The dev
/// split is decoded every `eval_every` epochs (and after the last one); the
/// parameters with the best mean dev Ancestor-F1 are returned. Without dev
/// examples the final parameters are returned.
TrainResult train(const TreeOntology& t, const DatasetSplit& split, const ModelConfig& cfg,
                  const EmbeddingTable* embeddings = nullptr);

/// Greedy decoder bound to a checkpoint; safe to call from several threads.
class PathPredictor {
 public:
  PathPredictor(const Checkpoint& ck, std::size_t max_target_len) : ck_(ck), max_len_(max_target_len) {}

  DecodeResult decode(const std::vector<std::string>& tokens) const;
  PathSpec operator()(const Example& ex) const;
  PathSpec to_path(const DecodeResult& r) const;

 private:
  const Checkpoint& ck_;
  std::size_t max_len_;
};

EvalReport evaluate_checkpoint(const TreeOntology& t, const Checkpoint& ck, std::span<const Example> test,
                               EvalOptions opts = {}, std::span<const Example> train = {});

}  // namespace ontopath
