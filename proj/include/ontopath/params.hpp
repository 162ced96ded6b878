#pragma once

#include <cmath>
#include <map>
#include <string>

#include "ontopath/error.hpp"
#include "ontopath/rng.hpp"
#include "ontopath/tensor.hpp"

namespace ontopath {

enum class Init { Glorot, Zero };

/// Named trainable tensors, iterated in ascending name order.
template <typename Scalar>
class ParamStore {
 public:
  using Mat = Matrix<Scalar>;

  /// Registers a parameter. Glorot values are uniform in [-r, r] with
  /// r = sqrt(6 / (rows + cols)), drawn from a stream keyed by (seed, name),
  /// so they depend only on (seed, name, shape).
  Mat& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
           Init init = Init::Glorot) {
    if (params_.contains(name)) throw Error(ErrorCode::InvalidArgument, "duplicate parameter " + name);
    Mat m = Mat::Zero(rows, cols);
    if (init == Init::Glorot) {
      auto rng = stream_for(seed, name);
      const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * r);
    }
    return params_.emplace(name, std::move(m)).first->second;
  }

  /// Inserts or replaces a parameter with a given value.
  void set(const std::string& name, Mat value) { params_[name] = std::move(value); }

  const Mat& get(const std::string& name) const {
    const auto it = params_.find(name);
    if (it == params_.end()) throw Error(ErrorCode::InvalidArgument, "no parameter named " + name);
    return it->second;
  }
  Mat& get(const std::string& name) {
    const auto it = params_.find(name);
    if (it == params_.end()) throw Error(ErrorCode::InvalidArgument, "no parameter named " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.contains(name); }

  const std::map<std::string, Mat>& params() const { return params_; }
  std::map<std::string, Mat>& params() { return params_; }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : params_) n += static_cast<std::size_t>(m.size());
    return n;
  }

  template <typename To>
  ParamStore<To> cast() const {
    ParamStore<To> out;
    for (const auto& [name, m] : params_) out.set(name, m.template cast<To>());
    return out;
  }

  bool operator==(const ParamStore& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (const auto& [name, m] : params_) {
      const auto it = other.params_.find(name);
      if (it == other.params_.end() || it->second.rows() != m.rows() || it->second.cols() != m.cols() ||
          it->second != m) {
        return false;
      }
    }
    return true;
  }

 private:
  std::map<std::string, Mat> params_;
};

}  // namespace ontopath
