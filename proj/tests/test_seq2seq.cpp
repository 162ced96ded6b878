#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "ontopath/checkpoint.hpp"
#include "ontopath/error.hpp"
#include "ontopath/gradcheck.hpp"
#include "ontopath/seq2seq.hpp"
#include "ontopath/train.hpp"
#include "support.hpp"

using namespace ontopath;
using namespace testsupport;
namespace pn = param_names;
using Md = Matrix<double>;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.word_emb_dim = 5;
  c.symbol_emb_dim = 4;
  c.encoder_hidden = 4;
  c.decoder_hidden = 8;
  c.attention_dim = 6;
  c.seed = 3;
  return c;
}

Batch batch_of(const std::vector<EncodedExample>& ex) {
  std::vector<const EncodedExample*> ptrs;
  for (const auto& e : ex) ptrs.push_back(&e);
  return make_batch(ptrs);
}

double loss_of(const ParamStore<double>& store, const ModelConfig& cfg, const Batch& b) {
  Tape<double> tape;
  return forward_loss(tape, store, cfg, b).value()(0, 0);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.decoder_hidden == 2 * c.encoder_hidden);
  c.decoder_hidden = 100;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ModelConfig{};
  c.attention_dim = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("encoder widths and single-token source") {
  ModelConfig cfg;
  const auto store = init_params<double>(cfg, 10, 6);
  const auto b = batch_of({{{4}, {3, 2}}});
  Tape<double> tape;
  const auto enc = encode(tape, store, b);
  REQUIRE(enc.states.size() == 1);
  CHECK(enc.states[0].cols() == 128);
  CHECK(enc.final_h.value() == enc.states[0].value());
  CHECK(store.get(pn::kOut).rows() == cfg.decoder_hidden + 2 * cfg.encoder_hidden);
}

TEST_CASE("encoder mirror symmetry on a palindrome with tied directions") {
  const auto cfg = tiny_config();
  auto store = init_params<double>(cfg, 10, 6);
  for (const char* part : {".W", ".U", ".b"}) {
    store.get(std::string(pn::kEncBwd) + part) = store.get(std::string(pn::kEncFwd) + part);
  }
  store.get(std::string(pn::kEncFwd) + ".b").setConstant(0.3);
  store.get(std::string(pn::kEncBwd) + ".b").setConstant(0.3);
  const auto b = batch_of({{{4, 7, 5, 7, 4}, {3, 2}}});
  Tape<double> tape;
  const auto enc = encode(tape, store, b);
  const auto h = cfg.encoder_hidden;
  const std::size_t n = enc.states.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Md& a = enc.states[i].value();
    const Md& m = enc.states[n - 1 - i].value();
    CHECK((a.leftCols(h) - m.rightCols(h)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((a.rightCols(h) - m.leftCols(h)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("attention with zero scoring vector is uniform") {
  const auto cfg = tiny_config();
  auto store = init_params<double>(cfg, 10, 6);
  store.get(pn::kAttV).setZero();
  const auto b = batch_of({{{4, 5, 6}, {3, 2}}, {{7, 8}, {2}}});
  Tape<double> tape;
  const auto enc = encode(tape, store, b);
  const auto att = attend(enc.final_h, enc, store);
  CHECK(att.weights.value()(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(att.weights.value()(1, 0) == doctest::Approx(0.5));
  CHECK(att.weights.value()(1, 2) == 0.0);
  Md mean0 = Md::Zero(1, 8);
  for (int i = 0; i < 3; ++i) mean0 += enc.states[static_cast<std::size_t>(i)].value().row(0);
  CHECK((att.context.value().row(0) - mean0 / 3.0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("attention with one unmasked position") {
  const auto cfg = tiny_config();
  const auto store = init_params<double>(cfg, 10, 6);
  const auto b = batch_of({{{4}, {3, 2}}, {{7, 8, 9}, {2}}});
  Tape<double> tape;
  const auto enc = encode(tape, store, b);
  const auto att = attend(enc.final_h, enc, store);
  CHECK(att.weights.value()(0, 0) == 1.0);
  CHECK((att.context.value().row(0) - enc.states[0].value().row(0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("attention matches the scoring formula evaluated directly") {
  const auto cfg = tiny_config();
  const auto store = init_params<double>(cfg, 10, 6);
  const auto b = batch_of({{{4, 5, 6}, {3, 2}}});
  Tape<double> tape;
  const auto enc = encode(tape, store, b);
  std::mt19937 gen(1);
  std::normal_distribution<double> nd;
  Md query(1, 8);
  for (int i = 0; i < 8; ++i) query(0, i) = nd(gen);
  const auto att = attend(tape.constant(query), enc, store);

  const Eigen::MatrixXd wa = store.get(pn::kAttW);
  const Eigen::MatrixXd ua = store.get(pn::kAttU);
  const Eigen::VectorXd va = store.get(pn::kAttV);
  Eigen::VectorXd e(3);
  for (int i = 0; i < 3; ++i) {
    const Eigen::RowVectorXd hi = enc.states[static_cast<std::size_t>(i)].value();
    e(i) = ((hi * wa + Eigen::RowVectorXd(query) * ua).array().tanh().matrix() * va)(0);
  }
  const Eigen::VectorXd w = e.array().exp() / e.array().exp().sum();
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(8);
  for (int i = 0; i < 3; ++i) c += w(i) * Eigen::RowVectorXd(enc.states[static_cast<std::size_t>(i)].value());
  for (int i = 0; i < 3; ++i) CHECK(att.weights.value()(0, i) == doctest::Approx(w(i)).epsilon(1e-13));
  CHECK((Eigen::RowVectorXd(att.context.value()) - c).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("decode step with a zero output layer predicts uniformly") {
  for (const bool before : {false, true}) {
    auto cfg = tiny_config();
    cfg.attend_before_update = before;
    auto store = init_params<double>(cfg, 10, 6);
    store.get(pn::kOut).setZero();
    const auto b = batch_of({{{4, 5}, {3, 2}}});
    Tape<double> tape;
    const auto enc = encode(tape, store, b);
    const auto step = decode_step<double>({SymbolVocab::kSos}, {enc.final_h, enc.final_c}, enc, store, cfg, {});
    CHECK(step.logits.cols() == 6);
    const auto p = softmax(step.logits);
    for (int k = 0; k < 6; ++k) CHECK(p.value()(0, k) == doctest::Approx(1.0 / 6));
    CHECK(step.weights.value().sum() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("attention timing flag changes the computation") {
  auto cfg = tiny_config();
  const auto store = init_params<double>(cfg, 10, 6);
  const auto b = batch_of({{{4, 5, 6}, {3, 4, 2}}});
  const double after = loss_of(store, cfg, b);
  cfg.attend_before_update = true;
  CHECK(loss_of(store, cfg, b) != after);
}

TEST_CASE("untrained loss is close to ln K") {
  ModelConfig cfg;
  const std::size_t k = 40;
  const auto store = init_params<double>(cfg, 30, k);
  std::vector<EncodedExample> ex;
  std::mt19937 gen(2);
  for (int i = 0; i < 16; ++i) {
    EncodedExample e;
    for (int t = 0; t < 8; ++t) e.source.push_back(3 + static_cast<std::int32_t>(gen() % 27));
    for (int t = 0; t < 4; ++t) e.target.push_back(3 + static_cast<std::int32_t>(gen() % (k - 3)));
    e.target.push_back(SymbolVocab::kEos);
    ex.push_back(e);
  }
  const double loss = loss_of(store, cfg, batch_of(ex));
  CHECK(loss == doctest::Approx(std::log(static_cast<double>(k))).epsilon(0.05));
}

TEST_CASE("batching and masking") {
  const auto cfg = tiny_config();
  const auto store = init_params<double>(cfg, 10, 6);
  const EncodedExample a{{4, 5, 6}, {3, 4, 2}};
  const EncodedExample b{{7}, {5, 2}};
  const double single = loss_of(store, cfg, batch_of({a}));
  CHECK(loss_of(store, cfg, batch_of({a, a, a})) == doctest::Approx(single).epsilon(1e-14));

  // Changing what sits in padded positions leaves the loss bit-identical.
  auto padded = batch_of({a, b});
  const double base = loss_of(store, cfg, padded);
  padded.source[1][1] = 9;
  padded.source[2][1] = 8;
  padded.target[2][1] = 5;
  CHECK(loss_of(store, cfg, padded) == base);

  // The mean is over real positions: (3 * L_a + 2 * L_b) / 5.
  const double lb = loss_of(store, cfg, batch_of({b}));
  CHECK(base == doctest::Approx((3 * single + 2 * lb) / 5).epsilon(1e-12));

  CHECK_THROWS_AS(make_batch({}), Error);
  auto short_cfg = cfg;
  short_cfg.max_source_len = 2;
  try {
    loss_of(store, short_cfg, batch_of({a}));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SourceTooLong);
  }
}

TEST_CASE("full model gradient check, tiny configuration") {
  ModelConfig cfg;
  cfg.word_emb_dim = 6;
  cfg.symbol_emb_dim = 5;
  cfg.encoder_hidden = 4;
  cfg.decoder_hidden = 8;
  cfg.attention_dim = 7;
  cfg.seed = 11;
  for (const bool before : {false, true}) {
    cfg.attend_before_update = before;
    auto store = init_params<double>(cfg, 12, 7);
    const auto batch = batch_of({{{3, 4, 5}, {3, 4, 2}}, {{6, 7}, {5, 2}}});
    const auto r = finite_diff_check<double>(
        [&](Tape<double>& t, const ParamStore<double>& s) { return forward_loss(t, s, cfg, batch); }, store, 1e-5);
    INFO("worst " << r.worst_param << "[" << r.worst_index << "] " << r.analytic << " vs " << r.numeric);
    CHECK(r.checked == store.scalar_count());
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("encoder is independent of the path representation") {
  ModelConfig nodes_cfg = tiny_config();
  nodes_cfg.path_mode = PathMode::NodePath;
  ModelConfig edges_cfg = tiny_config();
  const auto sn = init_params<double>(nodes_cfg, 10, 40);
  const auto se = init_params<double>(edges_cfg, 10, 6);
  for (const auto* name : {pn::kWordEmb, "enc.fwd.W", "enc.fwd.U", "enc.fwd.b", "enc.bwd.W", "enc.bwd.U", "enc.bwd.b",
                           pn::kAttW}) {
    CHECK(sn.get(name) == se.get(name));
  }
  const auto b = batch_of({{{4, 5, 6}, {3, 2}}});
  Tape<double> t1, t2;
  CHECK(encode(t1, sn, b).final_h.value() == encode(t2, se, b).final_h.value());
}

TEST_CASE("greedy decoding") {
  const auto cfg = tiny_config();
  const auto store = init_params<double>(cfg, 10, 6);
  const auto none = greedy_decode(store, cfg, {4, 5}, 0);
  CHECK(none.symbols.empty());
  const auto a = greedy_decode(store, cfg, {4, 5, 6}, 5);
  const auto b = greedy_decode(store, cfg, {4, 5, 6}, 5);
  CHECK(a.symbols == b.symbols);
  CHECK(a.attention == b.attention);
  CHECK(a.attention.rows() == static_cast<Eigen::Index>(a.symbols.size()));
  CHECK(a.attention.cols() == 3);
  CHECK(a.symbols.size() <= 5);
  for (Eigen::Index r = 0; r < a.attention.rows(); ++r) CHECK(std::abs(a.attention.row(r).sum() - 1.0) < 1e-6);
}

TEST_CASE("train: zero epochs returns the initialisation") {
  auto toy = toy_corpus(20, PathMode::EdgePath);
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const auto r = train(toy.tree, toy.split, cfg);
  CHECK(r.log.empty());
  CHECK(r.checkpoint.params == init_params<float>(cfg, r.checkpoint.tokens.size(), r.checkpoint.symbols.size()));
}

TEST_CASE("train: overfits one example") {
  auto toy = toy_corpus(20, PathMode::EdgePath);
  toy.split.train.resize(1);
  auto cfg = tiny_config();
  cfg.epochs = 150;
  cfg.learning_rate = 0.01;
  const auto r = train(toy.tree, toy.split, cfg);
  const PathPredictor predict(r.checkpoint, effective_max_target_len(cfg, toy.tree));
  CHECK(predict(toy.split.train[0]) == toy.split.train[0].target);
}

TEST_CASE("train: loss falls steadily on the toy corpus and runs are reproducible") {
  const auto toy = toy_corpus(50, PathMode::EdgePath);
  ModelConfig cfg;
  cfg.word_emb_dim = 16;
  cfg.symbol_emb_dim = 16;
  cfg.encoder_hidden = 16;
  cfg.decoder_hidden = 32;
  cfg.attention_dim = 16;
  cfg.epochs = 50;
  cfg.learning_rate = 0.003;
  const auto r = train(toy.tree, toy.split, cfg);
  REQUIRE(r.log.size() == 50);
  for (std::size_t e = 5; e < r.log.size(); ++e) CHECK(r.log[e].loss <= 1.1 * r.log[e - 5].loss);
  CHECK(r.log.back().loss < 0.5 * r.log.front().loss);

  const auto again = train(toy.tree, toy.split, cfg);
  CHECK(again.checkpoint.params == r.checkpoint.params);
  for (std::size_t e = 0; e < r.log.size(); ++e) CHECK(again.log[e].loss == r.log[e].loss);
}

TEST_CASE("train: frozen pretrained embeddings stay fixed") {
  const auto toy = toy_corpus(20, PathMode::EdgePath);
  auto cfg = tiny_config();
  cfg.epochs = 3;
  cfg.use_pretrained = true;
  cfg.freeze_embeddings = true;
  std::vector<std::string> words{"one", "a", "of"};
  Eigen::MatrixXd vecs = Eigen::MatrixXd::Constant(3, 5, 0.25);
  const EmbeddingTable table(words, vecs);
  const auto r = train(toy.tree, toy.split, cfg, &table);
  const auto& emb = r.checkpoint.params.get(pn::kWordEmb);
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(r.checkpoint.tokens.size()); ++i) {
    const auto& tok = r.checkpoint.tokens.token(i);
    const float expect = table.contains(tok) ? 0.25f : 0.0f;
    CHECK((emb.row(i).array() == expect).all());
  }
  cfg.word_emb_dim = 6;
  CHECK_THROWS_AS(train(toy.tree, toy.split, cfg, &table), Error);
}

TEST_CASE("parameter container round trip is bit exact") {
  const auto cfg = tiny_config();
  const auto f = init_params<float>(cfg, 9, 5);
  std::stringstream ss;
  write_params(ss, f);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 8) == "ONTOCKPT");
  const auto back = read_params<float>(ss);
  CHECK(back == f);
  std::stringstream again;
  write_params(again, back);
  CHECK(again.str() == bytes);

  std::stringstream wide;
  write_params(wide, f.cast<double>());
  CHECK_THROWS_AS(read_params<float>(wide), Error);
  std::stringstream junk("NOTACKPT");
  CHECK_THROWS_AS(read_params<float>(junk), Error);
}

TEST_CASE("checkpoint files round trip") {
  TempDir dir("ckpt");
  const auto toy = toy_corpus(20, PathMode::NodePath);
  auto cfg = tiny_config();
  cfg.path_mode = PathMode::NodePath;
  cfg.epochs = 2;
  const auto r = train(toy.tree, toy.split, cfg);
  save_checkpoint(dir.file("m.ckpt"), r.checkpoint);
  const auto ck = load_checkpoint(dir.file("m.ckpt"));
  CHECK(ck.params == r.checkpoint.params);
  CHECK(ck.tokens.tokens() == r.checkpoint.tokens.tokens());
  CHECK(ck.symbols.symbols() == r.checkpoint.symbols.symbols());
  CHECK(ck.symbols.mode() == PathMode::NodePath);
  CHECK(ck.config.path_mode == PathMode::NodePath);
  CHECK(ck.config.encoder_hidden == cfg.encoder_hidden);
  save_checkpoint(dir.file("n.ckpt"), ck);
  CHECK(slurp(dir.file("m.ckpt")) == slurp(dir.file("n.ckpt")));
  CHECK(slurp(dir.file("m.ckpt.json")) == slurp(dir.file("n.ckpt.json")));

  // A checkpoint for one tree is refused on a tree with another vocabulary.
  const auto other = toy_corpus(30, PathMode::NodePath, 9);
  CHECK_THROWS_AS(evaluate_checkpoint(other.tree, ck, other.split.train), Error);
}
