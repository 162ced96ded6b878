#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "ontopath/params.hpp"
#include "ontopath/rng.hpp"
#include "ontopath/tensor.hpp"

namespace ontopath {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients with central differences on every scalar
/// parameter (a seeded subsample when there are more than `max_scalars`).
/// Relative error is |a - n| / (|a| + |n| + 1e-12).
template <typename Scalar>
GradCheckResult finite_diff_check(const std::function<Var<Scalar>(Tape<Scalar>&, const ParamStore<Scalar>&)>& loss_fn,
                                  ParamStore<Scalar>& store, double eps = 1e-5,
                                  std::size_t max_scalars = 10000, std::uint64_t seed = 0) {
  Tape<Scalar> tape;
  const auto loss = loss_fn(tape, store);
  tape.backward(loss);
  const auto grads = tape.param_grads(store);

  auto eval = [&]() {
    Tape<Scalar> t;
    return loss_fn(t, store).value()(0, 0);
  };

  const std::size_t total = store.scalar_count();
  const double keep = total > max_scalars ? static_cast<double>(max_scalars) / static_cast<double>(total) : 1.0;
  SplitMix64 rng = stream_for(seed, "gradcheck");

  GradCheckResult r;
  for (auto& [name, p] : store.params()) {
    const auto& g = grads.at(name);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (keep < 1.0 && rng.uniform() >= keep) continue;
      Scalar& x = p.data()[i];
      const Scalar orig = x;
      x = static_cast<Scalar>(orig + eps);
      const Scalar up = eval();
      x = static_cast<Scalar>(orig - eps);
      const Scalar down = eval();
      x = orig;
      // Difference in Scalar: narrowing first would discard the extra precision.
      const double numeric = static_cast<double>((up - down) / static_cast<Scalar>(2 * eps));
      const double analytic = static_cast<double>(g.data()[i]);
      const double rel = std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
      ++r.checked;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst_param = name;
        r.worst_index = i;
        r.analytic = analytic;
        r.numeric = numeric;
      }
    }
  }
  return r;
}

}  // namespace ontopath
