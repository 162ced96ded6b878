#pragma once

#include <cmath>
#include <map>
#include <string>

#include "ontopath/params.hpp"

namespace ontopath {

template <typename Scalar>
struct RmsPropState {
  double decay = 0.9;
  double learning_rate = 0.001;
  double epsilon = 1e-8;
  std::map<std::string, Matrix<Scalar>> mean_square;
};

/// acc <- decay*acc + (1-decay)*g^2;  p <- p - lr * g / sqrt(acc + eps).
template <typename Scalar>
void rmsprop_step(ParamStore<Scalar>& store, const std::map<std::string, Matrix<Scalar>>& grads,
                  RmsPropState<Scalar>& state) {
  const auto rho = static_cast<Scalar>(state.decay);
  const auto lr = static_cast<Scalar>(state.learning_rate);
  const auto eps = static_cast<Scalar>(state.epsilon);
  for (auto& [name, p] : store.params()) {
    const auto git = grads.find(name);
    if (git == grads.end()) continue;
    const auto& g = git->second;
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient for " + name + " has shape " + shape_str(g.rows(), g.cols()));
    }
    auto [it, fresh] = state.mean_square.try_emplace(name);
    if (fresh) it->second = Matrix<Scalar>::Zero(p.rows(), p.cols());
    auto& acc = it->second;
    acc = rho * acc + (Scalar(1) - rho) * g.cwiseProduct(g);
    p.array() -= lr * g.array() / (acc.array() + eps).sqrt();
  }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`
/// (0 disables). Returns the norm before clipping.
template <typename Scalar>
double clip_global_norm(std::map<std::string, Matrix<Scalar>>& grads, double max_norm) {
  double sq = 0;
  for (const auto& [name, g] : grads) sq += static_cast<double>(g.squaredNorm());
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const auto f = static_cast<Scalar>(max_norm / norm);
    for (auto& [name, g] : grads) g *= f;
  }
  return norm;
}

}  // namespace ontopath
