#pragma once

#include <string>

#include "ontopath/params.hpp"
#include "ontopath/tensor.hpp"

namespace ontopath {

/// Parameter names of one LSTM layer: `<prefix>.W` (input x 4h),
/// `<prefix>.U` (h x 4h), `<prefix>.b` (1 x 4h). Gate blocks are ordered
/// input, forget, output, candidate.
struct LstmNames {
  std::string w, u, b;
  explicit LstmNames(const std::string& prefix) : w(prefix + ".W"), u(prefix + ".U"), b(prefix + ".b") {}
};

template <typename Scalar>
void add_lstm_params(ParamStore<Scalar>& store, const std::string& prefix, Eigen::Index input,
                     Eigen::Index hidden, std::uint64_t seed) {
  const LstmNames n(prefix);
  store.add(n.w, input, 4 * hidden, seed);
  store.add(n.u, hidden, 4 * hidden, seed);
  store.add(n.b, 1, 4 * hidden, seed, Init::Zero);
}

template <typename Scalar>
struct LstmState {
  Var<Scalar> h;
  Var<Scalar> c;
};

/// One step of the standard LSTM recurrence on a batch of rows:
/// i, f, o = sigmoid(x W + h U + b), g = tanh(...), c = f*c + i*g,
/// h = o*tanh(c).
template <typename Scalar>
LstmState<Scalar> lstm_cell(Var<Scalar> x, LstmState<Scalar> prev, const ParamStore<Scalar>& store,
                            const LstmNames& names) {
  auto& tape = *x.tape;
  const auto w = tape.param(store, names.w);
  const auto u = tape.param(store, names.u);
  const auto b = tape.param(store, names.b);
  const Eigen::Index hidden = u.rows();
  if (w.rows() != x.cols() || prev.h.cols() != hidden || prev.c.cols() != hidden || u.cols() != 4 * hidden) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell: input " + shape_str(x.rows(), x.cols()) + ", W " +
                                              shape_str(w.rows(), w.cols()) + ", state " +
                                              shape_str(prev.h.rows(), prev.h.cols()));
  }
  const auto gates = add(add(matmul(x, w), matmul(prev.h, u)), b);
  const auto sig = sigmoid(slice_cols(gates, 0, 3 * hidden));
  const auto in = slice_cols(sig, 0, hidden);
  const auto forget = slice_cols(sig, hidden, hidden);
  const auto out = slice_cols(sig, 2 * hidden, hidden);
  const auto cand = tanh(slice_cols(gates, 3 * hidden, hidden));
  const auto c = add(mul(forget, prev.c), mul(in, cand));
  const auto h = mul(out, tanh(c));
  return {h, c};
}

}  // namespace ontopath
