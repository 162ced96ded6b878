#pragma once

// Attention encoder-decoder that maps definition tokens to path symbols.
//
// Encoder: bi-directional LSTM over word embeddings; h_i = [fwd_i ; bwd_i].
// Decoder: LSTM over symbol embeddings, initialised from the concatenated
// encoder finals. At step j the context is
//   e_ji = v_a^T tanh(W_a h_i + U_a h*_j),  c_j = sum_i softmax_i(e_ji) h_i
// and the symbol distribution is softmax(W [h*_j ; c_j]).

#include <cstdint>
#include <string>
#include <vector>

#include "ontopath/corpus.hpp"
#include "ontopath/graph.hpp"
#include "ontopath/lstm.hpp"
#include "ontopath/params.hpp"
#include "ontopath/tensor.hpp"

namespace ontopath {

struct ModelConfig {
  int word_emb_dim = 64;
  int symbol_emb_dim = 64;
  int encoder_hidden = 64;   // per direction
  int decoder_hidden = 128;  // must equal 2 * encoder_hidden
  int attention_dim = 128;
  int epochs = 300;
  int batch_size = 16;
  double learning_rate = 0.001;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  double clip_norm = 5.0;
  int max_source_len = static_cast<int>(kDefaultMaxSourceLen);
  int max_target_len = 0;  // 0: max tree depth + 1
  std::uint64_t seed = 1;
  bool use_pretrained = false;
  bool freeze_embeddings = false;
  bool attend_before_update = false;
  int eval_every = 10;
  double stop_loss = 0.0;  // stop once the epoch loss falls below this; 0 disables
  PathMode path_mode = PathMode::EdgePath;

  /// Throws InvalidArgument when a dimension is non-positive or the decoder
  /// width does not match the concatenated encoder state.
  void validate() const;
};

namespace param_names {
inline constexpr const char* kWordEmb = "enc.emb";
inline constexpr const char* kEncFwd = "enc.fwd";
inline constexpr const char* kEncBwd = "enc.bwd";
inline constexpr const char* kSymbolEmb = "dec.emb";
inline constexpr const char* kDecLstm = "dec.lstm";
inline constexpr const char* kAttW = "att.W";
inline constexpr const char* kAttU = "att.U";
inline constexpr const char* kAttV = "att.v";
inline constexpr const char* kOut = "out.W";
}  // namespace param_names

template <typename Scalar>
ParamStore<Scalar> init_params(const ModelConfig& cfg, std::size_t token_vocab, std::size_t symbol_vocab);

/// Index-encoded example: source token ids and target symbol ids ending in EOS.
struct EncodedExample {
  std::vector<std::int32_t> source;
  std::vector<std::int32_t> target;
};

/// Right-padded batch; masks are 1 on real positions.
struct Batch {
  std::size_t size = 0;
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  std::vector<std::vector<std::int32_t>> source;  // [t][b]
  std::vector<std::vector<std::int32_t>> target;  // [j][b]
  Eigen::MatrixXd source_mask;                    // B x N
  Eigen::MatrixXd target_mask;                    // B x M
};

Batch make_batch(const std::vector<const EncodedExample*>& examples);

template <typename Scalar>
struct EncoderOutput {
  std::vector<Var<Scalar>> states;  // one B x 2h block per source position
  Var<Scalar> final_h;              // [fwd_N ; bwd_1]
  Var<Scalar> final_c;
  Matrix<Scalar> mask;              // B x N
};

template <typename Scalar>
EncoderOutput<Scalar> encode(Tape<Scalar>& tape, const ParamStore<Scalar>& store, const Batch& batch);

template <typename Scalar>
struct Attention {
  Var<Scalar> context;  // B x 2h
  Var<Scalar> weights;  // B x N
};

/// Additive attention. `keys` are the per-position W_a h_i blocks; pass an
/// empty vector to have them computed here.
template <typename Scalar>
Attention<Scalar> attend(Var<Scalar> query, const EncoderOutput<Scalar>& enc, const ParamStore<Scalar>& store,
                         const std::vector<Var<Scalar>>& keys = {});

template <typename Scalar>
std::vector<Var<Scalar>> attention_keys(const EncoderOutput<Scalar>& enc, const ParamStore<Scalar>& store);

template <typename Scalar>
struct DecodeStep {
  Var<Scalar> logits;
  LstmState<Scalar> state;
  Var<Scalar> weights;
};

template <typename Scalar>
DecodeStep<Scalar> decode_step(const std::vector<std::int32_t>& prev_symbols, LstmState<Scalar> state,
                               const EncoderOutput<Scalar>& enc, const ParamStore<Scalar>& store,
                               const ModelConfig& cfg, const std::vector<Var<Scalar>>& keys);

/// Mean cross-entropy over non-PAD target positions (EOS included), teacher
/// forced. Also reports the number of scored positions.
template <typename Scalar>
Var<Scalar> forward_loss(Tape<Scalar>& tape, const ParamStore<Scalar>& store, const ModelConfig& cfg,
                         const Batch& batch, std::size_t* positions = nullptr);

struct DecodeResult {
  std::vector<std::int32_t> symbols;  // without SOS/EOS
  bool stopped = false;               // EOS emitted
  Eigen::MatrixXd attention;          // one row per returned symbol
};

template <typename Scalar>
DecodeResult greedy_decode(const ParamStore<Scalar>& store, const ModelConfig& cfg,
                           const std::vector<std::int32_t>& source, std::size_t max_target_len);

}  // namespace ontopath
