#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ontopath/error.hpp"
#include "ontopath/gradcheck.hpp"
#include "ontopath/lstm.hpp"
#include "ontopath/optim.hpp"
#include "ontopath/params.hpp"
#include "ontopath/tensor.hpp"

using namespace ontopath;
using Md = Matrix<double>;
using Vd = Var<double>;

namespace {

Md random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ontopath::Error");
  return ErrorCode::FormatError;
}

using LossFn = std::function<Vd(Tape<double>&, const ParamStore<double>&)>;

}  // namespace

TEST_CASE("softmax of a constant row is uniform") {
  Tape<double> tape;
  const auto s = softmax(tape.constant(Md::Constant(1, 7, 3.5)));
  for (Eigen::Index j = 0; j < 7; ++j) CHECK(s.value()(0, j) == doctest::Approx(1.0 / 7).epsilon(1e-15));
}

TEST_CASE("softmax rows are distributions") {
  Tape<double> tape;
  const auto s = softmax(tape.constant(random_matrix(20, 9, 1) * 30.0));
  for (Eigen::Index i = 0; i < 20; ++i) {
    CHECK((s.value().row(i).array() >= 0).all());
    CHECK(std::abs(s.value().row(i).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("masked softmax ignores masked columns") {
  Tape<double> tape;
  Md mask(2, 3);
  mask << 1, 1, 0, 1, 0, 0;
  const auto s = masked_softmax(tape.constant(random_matrix(2, 3, 2)), mask);
  CHECK(s.value()(0, 2) == 0.0);
  CHECK(s.value()(1, 0) == doctest::Approx(1.0));
  CHECK(s.value().row(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("matmul with identity") {
  Tape<double> tape;
  const Md x = random_matrix(4, 3, 3);
  const auto y = matmul(tape.constant(Md::Identity(4, 4)), tape.constant(x));
  CHECK(y.value() == x);
}

TEST_CASE("shape errors name both shapes") {
  Tape<double> tape;
  const auto a = tape.constant(Md::Zero(2, 3));
  const auto b = tape.constant(Md::Zero(2, 3));
  try {
    matmul(a, b);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("(2x3)") != std::string::npos);
  }
  CHECK(code_of([&] { add(a, tape.constant(Md::Zero(3, 3))); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { mul(a, tape.constant(Md::Zero(2, 2))); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { pick_row(a, 2); }) == ErrorCode::IndexOutOfRange);
  CHECK(code_of([&] { cross_entropy(tape.constant(Md::Zero(1, 3)), 3); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("broadcasting add and mul") {
  Tape<double> tape;
  const Md a = random_matrix(3, 4, 5);
  const Md row = random_matrix(1, 4, 6);
  const Md col = random_matrix(3, 1, 7);
  const auto r = add(tape.constant(a), tape.constant(row));
  const auto c = mul(tape.constant(a), tape.constant(col));
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      CHECK(r.value()(i, j) == a(i, j) + row(0, j));
      CHECK(c.value()(i, j) == a(i, j) * col(i, 0));
    }
}

TEST_CASE("tanh gradient at zero") {
  ParamStore<double> store;
  store.set("x", Md::Zero(1, 1));
  Tape<double> tape;
  const auto y = sum(tanh(tape.param(store, "x")));
  tape.backward(y);
  CHECK(tape.param_grads(store).at("x")(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  const auto r = finite_diff_check<double>([](Tape<double>& t, const ParamStore<double>& s) { return sum(tanh(t.param(s, "x"))); },
                                           store, 1e-5);
  CHECK(std::abs(r.analytic - r.numeric) < 1e-8);
}

TEST_CASE("every primitive passes a finite-difference check") {
  ParamStore<double> store;
  store.set("a", random_matrix(3, 4, 11));
  store.set("b", random_matrix(4, 2, 12));
  store.set("row", random_matrix(1, 4, 13));
  store.set("col", random_matrix(3, 1, 14));
  store.set("table", random_matrix(5, 4, 15));
  Md mask(3, 4);
  mask << 1, 1, 1, 1, 1, 1, 0, 0, 1, 0, 0, 0;
  const LossFn fn = [&](Tape<double>& t, const ParamStore<double>& s) {
    const auto a = t.param(s, "a");
    const auto b = t.param(s, "b");
    const auto m = matmul(a, b);                              // 3x2
    const auto r = add(a, t.param(s, "row"));                 // 3x4
    const auto c = mul(sigmoid(r), t.param(s, "col"));        // 3x4
    const auto cat = concat(m, c);                            // 3x6
    const auto sl = slice_cols(cat, 1, 4);                    // 3x4
    const auto sm = masked_softmax(scale(sl, 1.5), mask);     // 3x4
    const auto g = gather_rows(t.param(s, "table"), {4, 0, 4});
    const auto mixed = add(mul(sm, g), tanh(mul(a, a)));
    const auto logits = concat(mixed, softmax(gather_rows(t.param(s, "table"), {2, 2, 1})));
    const auto picked = sum(mul(pick_row(t.param(s, "table"), 3), pick_row(t.param(s, "table"), 3)));
    return add(add(sum(mixed), picked), softmax_cross_entropy(logits, {1, 6, 3}, std::vector<double>{1.0, 0.5, 0.0}));
  };
  const auto r = finite_diff_check<double>(fn, store, 1e-6);
  CHECK(r.checked == store.scalar_count());
  INFO("worst " << r.worst_param << "[" << r.worst_index << "] analytic " << r.analytic << " numeric " << r.numeric);
  CHECK(r.max_rel_error < 1e-7);
}

TEST_CASE("cross entropy values") {
  Tape<double> tape;
  CHECK(cross_entropy(tape.constant(Md::Constant(1, 6, -2.0)), 4).value()(0, 0) == doctest::Approx(std::log(6.0)));
  Md favour = Md::Zero(1, 5);
  favour(0, 2) = 20;
  // ~4 exp(-20) = 8.2e-9
  CHECK(cross_entropy(tape.constant(favour), 2).value()(0, 0) < 1e-8);

  const Md logits = random_matrix(1, 7, 21) * 3.0;
  long double denom = 0;
  for (int j = 0; j < 7; ++j) denom += std::exp(static_cast<long double>(logits(0, j)));
  const long double direct = -std::log(std::exp(static_cast<long double>(logits(0, 5))) / denom);
  CHECK(cross_entropy(tape.constant(logits), 5).value()(0, 0) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-14));

  Md huge = Md::Zero(1, 3);
  huge(0, 0) = 1e4;
  CHECK(std::isfinite(cross_entropy(tape.constant(huge), 1).value()(0, 0)));
}

TEST_CASE("backward: linear case and reuse") {
  ParamStore<double> store;
  store.set("W", random_matrix(3, 2, 31));
  const Md x = random_matrix(1, 3, 32);
  Tape<double> tape;
  const auto w = tape.param(store, "W");
  const auto y = sum(matmul(tape.constant(x), w));
  tape.backward(y);
  const auto g = tape.param_grads(store).at("W");
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) CHECK(g(i, j) == doctest::Approx(x(0, i)));

  Tape<double> twice;
  const auto w1 = twice.param(store, "W");
  const auto w2 = twice.param(store, "W");
  CHECK(w1.id == w2.id);
  twice.backward(sum(add(w1, w2)));
  CHECK(twice.param_grads(store).at("W") == Md::Constant(3, 2, 2.0));

  // A parameter that does not reach the loss gets zeros.
  store.set("unused", Md::Ones(2, 2));
  Tape<double> t3;
  t3.param(store, "unused");
  t3.backward(sum(t3.param(store, "W")));
  CHECK(t3.param_grads(store).at("unused").isZero());
}

TEST_CASE("gradient check identity on a quadratic") {
  ParamStore<double> store;
  store.set("p", random_matrix(4, 3, 41));
  const auto r = finite_diff_check<double>(
      [](Tape<double>& t, const ParamStore<double>& s) {
        const auto p = t.param(s, "p");
        return scale(sum(mul(p, p)), 0.5);
      },
      store, 1e-4);
  CHECK(r.max_rel_error < 1e-9);
}

TEST_CASE("gradient check subsamples large stores") {
  ParamStore<double> store;
  store.set("p", random_matrix(200, 100, 42));
  const auto r = finite_diff_check<double>(
      [](Tape<double>& t, const ParamStore<double>& s) { return sum(tanh(t.param(s, "p"))); }, store, 1e-5, 500, 3);
  CHECK(r.checked > 300);
  CHECK(r.checked < 800);
  CHECK(r.max_rel_error < 1e-7);
}

TEST_CASE("lstm cell: zero parameters") {
  ParamStore<double> store;
  store.set("l.W", Md::Zero(3, 16));
  store.set("l.U", Md::Zero(4, 16));
  store.set("l.b", Md::Zero(1, 16));
  Tape<double> tape;
  const auto out = lstm_cell<double>(tape.constant(random_matrix(2, 3, 51)),
                                     {tape.constant(Md::Zero(2, 4)), tape.constant(Md::Zero(2, 4))}, store,
                                     LstmNames("l"));
  CHECK(out.h.value().isZero());
  CHECK(out.c.value().isZero());
}

TEST_CASE("lstm cell: saturated forget gate keeps the cell") {
  const Eigen::Index h = 4;
  ParamStore<double> store;
  store.set("l.W", Md::Zero(3, 4 * h));
  store.set("l.U", Md::Zero(h, 4 * h));
  Md b = Md::Zero(1, 4 * h);
  b.middleCols(0, h).setConstant(-50);  // input gate closed
  b.middleCols(h, h).setConstant(50);   // forget gate open
  store.set("l.b", b);
  const Md c_prev = random_matrix(1, h, 52);
  Tape<double> tape;
  const auto out = lstm_cell<double>(tape.constant(random_matrix(1, 3, 53)),
                                     {tape.constant(random_matrix(1, h, 54)), tape.constant(c_prev)}, store,
                                     LstmNames("l"));
  CHECK((out.c.value() - c_prev).cwiseAbs().maxCoeff() < 1e-12);
  // o = 0.5, so h = 0.5 tanh(c_prev).
  CHECK((out.h.value() - 0.5 * c_prev.array().tanh().matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lstm cell gradient on a 4-unit cell") {
  ParamStore<double> store;
  add_lstm_params(store, "l", 3, 4, 7);
  store.get("l.b") = random_matrix(1, 16, 55) * 0.5;
  store.set("x", random_matrix(2, 3, 56));
  store.set("h0", random_matrix(2, 4, 57) * 0.5);
  store.set("c0", random_matrix(2, 4, 58));
  const LossFn fn = [](Tape<double>& t, const ParamStore<double>& s) {
    LstmState<double> st{t.param(s, "h0"), t.param(s, "c0")};
    const auto x = t.param(s, "x");
    st = lstm_cell(x, st, s, LstmNames("l"));
    st = lstm_cell(x, st, s, LstmNames("l"));
    return add(sum(mul(st.h, st.h)), sum(st.c));
  };
  const auto r = finite_diff_check<double>(fn, store, 1e-5);
  INFO(r.worst_param << " " << r.analytic << " " << r.numeric);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("glorot init depends on seed, name and shape only") {
  ParamStore<float> a, b, c;
  a.add("x", 5, 7, 3);
  a.add("y", 2, 2, 3);
  b.add("y", 2, 2, 3);
  b.add("x", 5, 7, 3);
  c.add("x", 5, 7, 4);
  CHECK(a.get("x") == b.get("x"));
  CHECK(a.get("y") == b.get("y"));
  CHECK(a.get("x") != c.get("x"));
  const double r = std::sqrt(6.0 / 12.0);
  CHECK(a.get("x").cwiseAbs().maxCoeff() <= r);
  CHECK(a.get("x").cwiseAbs().maxCoeff() > 0.5 * r);
  CHECK(code_of([&] { a.add("x", 1, 1, 3); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("rmsprop") {
  ParamStore<double> store;
  store.set("p", random_matrix(2, 3, 61));
  const Md before = store.get("p");
  RmsPropState<double> st;
  CHECK(st.learning_rate == 0.001);
  CHECK(st.decay == 0.9);
  CHECK(st.epsilon == 1e-8);
  std::map<std::string, Md> zero{{"p", Md::Zero(2, 3)}};
  rmsprop_step(store, zero, st);
  CHECK(store.get("p") == before);

  Md g(2, 3);
  g << 0.3, -2.0, 5.0, -0.01, 1.0, -7.0;
  std::map<std::string, Md> grads{{"p", g}};
  Md prev = store.get("p");
  for (int i = 0; i < 300; ++i) {
    prev = store.get("p");
    rmsprop_step(store, grads, st);
  }
  const Md step = prev - store.get("p");
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    CHECK(step.data()[i] == doctest::Approx(0.001 * (g.data()[i] > 0 ? 1 : -1)).epsilon(1e-4));
  }
  CHECK((st.mean_square.at("p").array() >= 0).all());
}

TEST_CASE("global norm clipping") {
  std::map<std::string, Md> grads{{"a", Md::Constant(1, 1, 3.0)}, {"b", Md::Constant(1, 1, 4.0)}};
  CHECK(clip_global_norm(grads, 1.0) == doctest::Approx(5.0));
  CHECK(grads.at("a")(0, 0) == doctest::Approx(0.6));
  CHECK(grads.at("b")(0, 0) == doctest::Approx(0.8));
  std::map<std::string, Md> small{{"a", Md::Constant(1, 1, 0.1)}};
  clip_global_norm(small, 1.0);
  CHECK(small.at("a")(0, 0) == 0.1);
}

TEST_CASE("operations are bitwise deterministic") {
  ParamStore<double> store;
  add_lstm_params(store, "l", 5, 6, 9);
  const Md x = random_matrix(3, 5, 71);
  auto run = [&] {
    Tape<double> t;
    LstmState<double> st{t.constant(Md::Zero(3, 6)), t.constant(Md::Zero(3, 6))};
    for (int i = 0; i < 4; ++i) st = lstm_cell(t.constant(x), st, store, LstmNames("l"));
    const auto loss = sum(st.h);
    t.backward(loss);
    return std::make_pair(Md(st.h.value()), t.param_grads(store));
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}
