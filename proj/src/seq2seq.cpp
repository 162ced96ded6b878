#include "ontopath/seq2seq.hpp"

#include <algorithm>

namespace ontopath {

namespace pn = param_names;

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive");
  };
  positive(word_emb_dim, "word_emb_dim");
  positive(symbol_emb_dim, "symbol_emb_dim");
  positive(encoder_hidden, "encoder_hidden");
  positive(decoder_hidden, "decoder_hidden");
  positive(attention_dim, "attention_dim");
  positive(batch_size, "batch_size");
  positive(max_source_len, "max_source_len");
  positive(eval_every, "eval_every");
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be non-negative");
  if (max_target_len < 0) throw Error(ErrorCode::InvalidArgument, "max_target_len must be non-negative");
  if (decoder_hidden != 2 * encoder_hidden) {
    throw Error(ErrorCode::InvalidArgument, "decoder_hidden must be 2 * encoder_hidden");
  }
  if (learning_rate <= 0) throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
}

template <typename Scalar>
ParamStore<Scalar> init_params(const ModelConfig& cfg, std::size_t token_vocab, std::size_t symbol_vocab) {
  cfg.validate();
  const auto h = static_cast<Eigen::Index>(cfg.encoder_hidden);
  const auto dh = static_cast<Eigen::Index>(cfg.decoder_hidden);
  const auto a = static_cast<Eigen::Index>(cfg.attention_dim);
  ParamStore<Scalar> s;
  s.add(pn::kWordEmb, static_cast<Eigen::Index>(token_vocab), cfg.word_emb_dim, cfg.seed);
  add_lstm_params(s, pn::kEncFwd, cfg.word_emb_dim, h, cfg.seed);
  add_lstm_params(s, pn::kEncBwd, cfg.word_emb_dim, h, cfg.seed);
  s.add(pn::kSymbolEmb, static_cast<Eigen::Index>(symbol_vocab), cfg.symbol_emb_dim, cfg.seed);
  add_lstm_params(s, pn::kDecLstm, cfg.symbol_emb_dim, dh, cfg.seed);
  s.add(pn::kAttW, 2 * h, a, cfg.seed);
  s.add(pn::kAttU, dh, a, cfg.seed);
  s.add(pn::kAttV, a, 1, cfg.seed);
  s.add(pn::kOut, dh + 2 * h, static_cast<Eigen::Index>(symbol_vocab), cfg.seed);
  return s;
}

Batch make_batch(const std::vector<const EncodedExample*>& examples) {
  if (examples.empty()) throw Error(ErrorCode::EmptyBatch, "no examples");
  Batch b;
  b.size = examples.size();
  for (const auto* ex : examples) {
    if (ex->source.empty()) throw Error(ErrorCode::InvalidArgument, "example with empty source");
    b.source_len = std::max(b.source_len, ex->source.size());
    b.target_len = std::max(b.target_len, ex->target.size());
  }
  const auto B = static_cast<Eigen::Index>(b.size);
  b.source.assign(b.source_len, std::vector<std::int32_t>(b.size, TokenVocab::kPad));
  b.target.assign(b.target_len, std::vector<std::int32_t>(b.size, SymbolVocab::kPad));
  b.source_mask = Eigen::MatrixXd::Zero(B, static_cast<Eigen::Index>(b.source_len));
  b.target_mask = Eigen::MatrixXd::Zero(B, static_cast<Eigen::Index>(b.target_len));
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto* ex = examples[i];
    for (std::size_t t = 0; t < ex->source.size(); ++t) {
      b.source[t][i] = ex->source[t];
      b.source_mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = 1;
    }
    for (std::size_t j = 0; j < ex->target.size(); ++j) {
      b.target[j][i] = ex->target[j];
      b.target_mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1;
    }
  }
  return b;
}

namespace {

/// Keeps the previous state on rows where `mask` is 0.
template <typename Scalar>
LstmState<Scalar> carry(Tape<Scalar>& tape, const LstmState<Scalar>& next, const LstmState<Scalar>& prev,
                        const Eigen::MatrixXd& mask_col) {
  if ((mask_col.array() != 0).all()) return next;
  const auto keep = tape.constant(mask_col.cast<Scalar>());
  const auto hold = tape.constant((1.0 - mask_col.array()).matrix().cast<Scalar>());
  return {add(mul(next.h, keep), mul(prev.h, hold)), add(mul(next.c, keep), mul(prev.c, hold))};
}

}  // namespace

template <typename Scalar>
EncoderOutput<Scalar> encode(Tape<Scalar>& tape, const ParamStore<Scalar>& store, const Batch& batch) {
  const auto n = batch.source_len;
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "encode: empty source");
  const auto emb = tape.param(store, pn::kWordEmb);
  const auto hidden = store.get(std::string(pn::kEncFwd) + ".U").rows();
  const auto B = static_cast<Eigen::Index>(batch.size);
  const LstmNames fwd_names(pn::kEncFwd);
  const LstmNames bwd_names(pn::kEncBwd);

  std::vector<Var<Scalar>> inputs;
  inputs.reserve(n);
  for (std::size_t t = 0; t < n; ++t) inputs.push_back(gather_rows(emb, batch.source[t]));

  const auto zeros = tape.constant(Matrix<Scalar>::Zero(B, hidden));
  LstmState<Scalar> fwd{zeros, zeros};
  LstmState<Scalar> bwd{zeros, zeros};
  std::vector<Var<Scalar>> fwd_h(n);
  std::vector<Var<Scalar>> bwd_h(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Eigen::MatrixXd m = batch.source_mask.col(static_cast<Eigen::Index>(t));
    fwd = carry(tape, lstm_cell(inputs[t], fwd, store, fwd_names), fwd, m);
    fwd_h[t] = fwd.h;
  }
  for (std::size_t k = n; k-- > 0;) {
    const Eigen::MatrixXd m = batch.source_mask.col(static_cast<Eigen::Index>(k));
    bwd = carry(tape, lstm_cell(inputs[k], bwd, store, bwd_names), bwd, m);
    bwd_h[k] = bwd.h;
  }

  EncoderOutput<Scalar> out;
  out.states.reserve(n);
  for (std::size_t t = 0; t < n; ++t) out.states.push_back(concat(fwd_h[t], bwd_h[t]));
  out.final_h = concat(fwd.h, bwd.h);
  out.final_c = concat(fwd.c, bwd.c);
  out.mask = batch.source_mask.cast<Scalar>();
  return out;
}

template <typename Scalar>
std::vector<Var<Scalar>> attention_keys(const EncoderOutput<Scalar>& enc, const ParamStore<Scalar>& store) {
  auto& tape = *enc.final_h.tape;
  const auto wa = tape.param(store, pn::kAttW);
  std::vector<Var<Scalar>> keys;
  keys.reserve(enc.states.size());
  for (const auto& h : enc.states) keys.push_back(matmul(h, wa));
  return keys;
}

template <typename Scalar>
Attention<Scalar> attend(Var<Scalar> query, const EncoderOutput<Scalar>& enc, const ParamStore<Scalar>& store,
                         const std::vector<Var<Scalar>>& keys_in) {
  auto& tape = *query.tape;
  const auto keys = keys_in.empty() ? attention_keys(enc, store) : keys_in;
  const auto ua = tape.param(store, pn::kAttU);
  const auto va = tape.param(store, pn::kAttV);
  const auto q = matmul(query, ua);
  std::vector<Var<Scalar>> scores;
  scores.reserve(keys.size());
  for (const auto& k : keys) scores.push_back(matmul(tanh(add(k, q)), va));
  const auto weights = masked_softmax(concat<Scalar>(std::span<const Var<Scalar>>(scores)), enc.mask);

  Var<Scalar> context;
  for (std::size_t i = 0; i < enc.states.size(); ++i) {
    const auto term = mul(enc.states[i], slice_cols(weights, static_cast<Eigen::Index>(i), 1));
    context = i == 0 ? term : add(context, term);
  }
  return {context, weights};
}

template <typename Scalar>
DecodeStep<Scalar> decode_step(const std::vector<std::int32_t>& prev_symbols, LstmState<Scalar> state,
                               const EncoderOutput<Scalar>& enc, const ParamStore<Scalar>& store,
                               const ModelConfig& cfg, const std::vector<Var<Scalar>>& keys) {
  auto& tape = *state.h.tape;
  const auto x = gather_rows(tape.param(store, pn::kSymbolEmb), prev_symbols);
  Attention<Scalar> att;
  if (cfg.attend_before_update) att = attend(state.h, enc, store, keys);
  const auto next = lstm_cell(x, state, store, LstmNames(pn::kDecLstm));
  if (!cfg.attend_before_update) att = attend(next.h, enc, store, keys);
  const auto logits = matmul(concat(next.h, att.context), tape.param(store, pn::kOut));
  return {logits, next, att.weights};
}

template <typename Scalar>
Var<Scalar> forward_loss(Tape<Scalar>& tape, const ParamStore<Scalar>& store, const ModelConfig& cfg,
                         const Batch& batch, std::size_t* positions) {
  if (batch.size == 0) throw Error(ErrorCode::EmptyBatch, "no examples");
  if (batch.source_len > static_cast<std::size_t>(cfg.max_source_len)) {
    throw Error(ErrorCode::SourceTooLong, std::to_string(batch.source_len) + " tokens, limit " +
                                              std::to_string(cfg.max_source_len));
  }
  const auto enc = encode(tape, store, batch);
  const auto keys = attention_keys(enc, store);
  LstmState<Scalar> state{enc.final_h, enc.final_c};
  std::vector<std::int32_t> prev(batch.size, SymbolVocab::kSos);

  Var<Scalar> total;
  std::size_t count = 0;
  for (std::size_t j = 0; j < batch.target_len; ++j) {
    const auto step = decode_step(prev, state, enc, store, cfg, keys);
    std::vector<Scalar> w(batch.size);
    for (std::size_t b = 0; b < batch.size; ++b) {
      w[b] = static_cast<Scalar>(batch.target_mask(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)));
      if (w[b] != 0) ++count;
    }
    const auto ce = softmax_cross_entropy(step.logits, batch.target[j], w);
    total = j == 0 ? ce : add(total, ce);
    state = step.state;
    prev = batch.target[j];
  }
  if (positions) *positions = count;
  if (count == 0) throw Error(ErrorCode::EmptyBatch, "no target positions");
  return scale(total, Scalar(1) / static_cast<Scalar>(count));
}

template <typename Scalar>
DecodeResult greedy_decode(const ParamStore<Scalar>& store, const ModelConfig& cfg,
                           const std::vector<std::int32_t>& source, std::size_t max_target_len) {
  DecodeResult r;
  const auto n = static_cast<Eigen::Index>(source.size());
  r.attention.resize(0, n);
  if (max_target_len == 0) return r;

  EncodedExample ex{source, {}};
  const auto batch = make_batch({&ex});
  Tape<Scalar> tape;
  const auto enc = encode(tape, store, batch);
  const auto keys = attention_keys(enc, store);
  LstmState<Scalar> state{enc.final_h, enc.final_c};
  std::int32_t prev = SymbolVocab::kSos;
  std::vector<Eigen::RowVectorXd> rows;
  for (std::size_t j = 0; j < max_target_len; ++j) {
    const auto step = decode_step(std::vector<std::int32_t>{prev}, state, enc, store, cfg, keys);
    Eigen::Index best = 0;
    step.logits.value().row(0).maxCoeff(&best);
    const auto sym = static_cast<std::int32_t>(best);
    if (sym == SymbolVocab::kEos) {
      r.stopped = true;
      break;
    }
    r.symbols.push_back(sym);
    rows.push_back(step.weights.value().row(0).template cast<double>());
    state = step.state;
    prev = sym;
  }
  r.attention.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) r.attention.row(static_cast<Eigen::Index>(i)) = rows[i];
  return r;
}

#define ONTOPATH_INSTANTIATE(S)                                                                              \
  template ParamStore<S> init_params<S>(const ModelConfig&, std::size_t, std::size_t);                       \
  template EncoderOutput<S> encode<S>(Tape<S>&, const ParamStore<S>&, const Batch&);                          \
  template std::vector<Var<S>> attention_keys<S>(const EncoderOutput<S>&, const ParamStore<S>&);             \
  template Attention<S> attend<S>(Var<S>, const EncoderOutput<S>&, const ParamStore<S>&,                     \
                                  const std::vector<Var<S>>&);                                               \
  template DecodeStep<S> decode_step<S>(const std::vector<std::int32_t>&, LstmState<S>, const EncoderOutput<S>&, \
                                        const ParamStore<S>&, const ModelConfig&, const std::vector<Var<S>>&); \
  template Var<S> forward_loss<S>(Tape<S>&, const ParamStore<S>&, const ModelConfig&, const Batch&,          \
                                  std::size_t*);                                                             \
  template DecodeResult greedy_decode<S>(const ParamStore<S>&, const ModelConfig&,                           \
                                         const std::vector<std::int32_t>&, std::size_t);

ONTOPATH_INSTANTIATE(float)
ONTOPATH_INSTANTIATE(double)
ONTOPATH_INSTANTIATE(long double)

#undef ONTOPATH_INSTANTIATE

}  // namespace ontopath
