#include "ontopath/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ontopath/error.hpp"
#include "ontopath/optim.hpp"
#include "ontopath/rng.hpp"

namespace ontopath {

std::size_t effective_max_target_len(const ModelConfig& cfg, const TreeOntology& t) {
  if (cfg.max_target_len > 0) return static_cast<std::size_t>(cfg.max_target_len);
  return static_cast<std::size_t>(t.max_depth()) + 1;
}

std::vector<EncodedExample> encode_examples(std::span<const Example> examples, const TokenVocab& tokens,
                                            const SymbolVocab& symbols) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back({tokens.encode(ex.source), symbols.encode(ex.target)});
  return out;
}

DecodeResult PathPredictor::decode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> src = ck_.tokens.encode(tokens);
  if (src.empty()) src.push_back(TokenVocab::kEmpty);
  if (src.size() > static_cast<std::size_t>(ck_.config.max_source_len)) {
    src.resize(static_cast<std::size_t>(ck_.config.max_source_len));
  }
  return greedy_decode(ck_.params, ck_.config, src, max_len_);
}

PathSpec PathPredictor::to_path(const DecodeResult& r) const {
  return ck_.symbols.decode(r.symbols, Terminus::ToParent);
}

PathSpec PathPredictor::operator()(const Example& ex) const { return to_path(decode(ex.source)); }

EvalReport evaluate_checkpoint(const TreeOntology& t, const Checkpoint& ck, std::span<const Example> test,
                               EvalOptions opts, std::span<const Example> train) {
  const auto expected = SymbolVocab::for_tree(t, ck.config.path_mode);
  if (expected.symbols() != ck.symbols.symbols() || expected.mode() != ck.symbols.mode()) {
    throw Error(ErrorCode::VocabMismatch, "checkpoint symbol vocabulary does not match the tree");
  }
  for (const auto& ex : test) {
    if (ex.target.mode != ck.config.path_mode) {
      throw Error(ErrorCode::VocabMismatch, "test examples use a different path mode than the checkpoint");
    }
  }
  const PathPredictor predictor(ck, effective_max_target_len(ck.config, t));
  return evaluate(t, test, [&](const Example& ex) { return predictor(ex); }, opts, train);
}

namespace {

std::vector<std::string> pretrained_extras(const DatasetSplit& split, const EmbeddingTable& emb) {
  std::vector<std::string> extra;
  for (const auto* part : {&split.dev, &split.test}) {
    for (const auto& ex : *part) {
      for (const auto& tok : ex.source) {
        if (emb.contains(tok)) extra.push_back(tok);
      }
    }
  }
  return extra;
}

}  // namespace

TrainResult train(const TreeOntology& t, const DatasetSplit& split, const ModelConfig& cfg,
                  const EmbeddingTable* embeddings) {
  cfg.validate();
  if (split.train.empty()) throw Error(ErrorCode::EmptyBatch, "no training examples");
  const bool pretrained = cfg.use_pretrained && embeddings != nullptr;
  if (cfg.use_pretrained && embeddings == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "use_pretrained set but no embedding table given");
  }

  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.config = cfg;
  ck.tokens = build_token_vocab(split.train, pretrained ? pretrained_extras(split, *embeddings) : std::vector<std::string>{});
  ck.symbols = SymbolVocab::for_tree(t, cfg.path_mode);
  ck.params = init_params<float>(cfg, ck.tokens.size(), ck.symbols.size());

  if (pretrained) {
    if (embeddings->dim() != cfg.word_emb_dim) {
      throw Error(ErrorCode::DimensionMismatch, "embedding table has dimension " + std::to_string(embeddings->dim()) +
                                                    ", model expects " + std::to_string(cfg.word_emb_dim));
    }
    auto& table = ck.params.get(param_names::kWordEmb);
    for (std::size_t i = 0; i < ck.tokens.size(); ++i) {
      table.row(static_cast<Eigen::Index>(i)) =
          embeddings->lookup(ck.tokens.token(static_cast<std::int32_t>(i))).transpose().cast<float>();
    }
  }

  const auto encoded = encode_examples(split.train, ck.tokens, ck.symbols);
  for (const auto& ex : encoded) {
    if (ex.source.size() > static_cast<std::size_t>(cfg.max_source_len)) {
      throw Error(ErrorCode::SourceTooLong, std::to_string(ex.source.size()) + " tokens");
    }
  }

  RmsPropState<float> opt;
  opt.decay = cfg.rms_decay;
  opt.learning_rate = cfg.learning_rate;
  opt.epsilon = cfg.rms_epsilon;

  SplitMix64 shuffle_rng = stream_for(cfg.seed, "shuffle");
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);

  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const bool has_dev = std::any_of(split.dev.begin(), split.dev.end(),
                                   [](const Example& e) { return e.kind == ExampleKind::Standard; });
  ParamStore<float> best = ck.params;
  double best_score = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0;
    std::size_t positions_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::vector<const EncodedExample*> members;
      for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
        members.push_back(&encoded[order[k]]);
      }
      const auto batch = make_batch(members);
      std::map<std::string, Matrix<float>> grads;
      {
        Tape<float> tape;
        std::size_t positions = 0;
        const auto loss = forward_loss(tape, ck.params, cfg, batch, &positions);
        const double value = loss.value()(0, 0);
        if (!std::isfinite(value)) {
          throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch));
        }
        loss_sum += value * static_cast<double>(positions);
        positions_sum += positions;
        tape.backward(loss);
        grads = tape.param_grads(ck.params);
      }
      if (cfg.freeze_embeddings && pretrained) grads.erase(param_names::kWordEmb);
      clip_global_norm(grads, cfg.clip_norm);
      rmsprop_step(ck.params, grads, opt);
    }

    EpochLog row;
    row.epoch = epoch;
    row.loss = loss_sum / static_cast<double>(positions_sum);
    const bool last = epoch == cfg.epochs || (cfg.stop_loss > 0 && row.loss < cfg.stop_loss);
    if (has_dev && (epoch % cfg.eval_every == 0 || last)) {
      const auto report = evaluate_checkpoint(t, ck, split.dev);
      row.dev_f1 = report.mean_f1;
      if (report.mean_f1 > best_score) {
        best_score = report.mean_f1;
        best = ck.params;
        ck.best_epoch = epoch;
      }
    }
    result.log.push_back(row);
    if (last) break;
  }

  if (has_dev && best_score >= 0) {
    ck.params = std::move(best);
    ck.best_dev_f1 = best_score;
  } else {
    ck.best_epoch = result.log.empty() ? 0 : result.log.back().epoch;
  }
  return result;
}

}  // namespace ontopath
