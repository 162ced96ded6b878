#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

namespace ontopath {

/// Pretrained word vectors, one row per token. Lookups of unknown tokens
/// return zeros.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors);

  Eigen::Index dim() const { return vectors_.cols(); }
  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const { return index_.contains(token); }
  Eigen::VectorXd lookup(const std::string& token) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Eigen::Index> index_;
  Eigen::MatrixXd vectors_;
};

/// Reads `token v1 ... vd` lines with an optional `count dim` header.
/// `expected_dim` of 0 accepts whatever dimension the file declares.
EmbeddingTable load_embeddings(const std::string& path, Eigen::Index expected_dim = 0);

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;   // d x k, orthonormal columns
  Eigen::VectorXd eigenvalues;  // all d, descending
};

PcaModel pca_fit(const Eigen::MatrixXd& x, Eigen::Index k);

/// Projects the table onto its top-k principal components.
EmbeddingTable pca_reduce(const EmbeddingTable& table, Eigen::Index k);

}  // namespace ontopath
