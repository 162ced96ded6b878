#include "ontopath/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ontopath/error.hpp"
#include "ontopath/linalg.hpp"

namespace ontopath {

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(tokens_.size()) != vectors_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "token count differs from vector count");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<Eigen::Index>(i));
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return Eigen::VectorXd::Zero(dim());
  return vectors_.row(it->second).transpose();
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string f;
  while (in >> f) out.push_back(std::move(f));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path, Eigen::Index expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);

  std::vector<std::string> tokens;
  std::vector<std::vector<double>> rows;
  Eigen::Index dim = expected_dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (lineno == 1 && fields.size() == 2) {
      double count = 0;
      double d = 0;
      if (parse_double(fields[0], count) && parse_double(fields[1], d) && d == std::floor(d)) {
        const auto declared = static_cast<Eigen::Index>(d);
        if (dim != 0 && declared != dim) {
          throw Error(ErrorCode::DimensionMismatch,
                      where + ": header declares " + std::to_string(declared) + ", expected " + std::to_string(dim));
        }
        dim = declared;
        continue;
      }
    }
    const auto got = static_cast<Eigen::Index>(fields.size()) - 1;
    if (dim == 0) dim = got;
    if (got != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  where + ": " + std::to_string(got) + " values, expected " + std::to_string(dim));
    }
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (!parse_double(fields[static_cast<std::size_t>(i) + 1], row[static_cast<std::size_t>(i)])) {
        throw Error(ErrorCode::MalformedLine, where + ": bad number '" + fields[static_cast<std::size_t>(i) + 1] + "'");
      }
    }
    tokens.push_back(fields[0]);
    rows.push_back(std::move(row));
  }

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), dim);
  }
  return EmbeddingTable(std::move(tokens), std::move(m));
}

PcaModel pca_fit(const Eigen::MatrixXd& x, Eigen::Index k) {
  if (k <= 0 || k > x.cols()) {
    throw Error(ErrorCode::InvalidArgument, "pca dimension " + std::to_string(k) + " outside 1.." + std::to_string(x.cols()));
  }
  if (x.rows() < k + 1) {
    throw Error(ErrorCode::InvalidArgument, "pca needs at least k+1 vectors");
  }
  const auto eig = jacobi_eigen(covariance(x));
  PcaModel m;
  m.mean = x.colwise().mean();
  m.eigenvalues = eig.values;
  m.components = eig.vectors.leftCols(k);
  const double floor = 1e-12 * std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  if ((eig.values.head(k).array() <= floor).any()) {
    log_warning("RankDeficient: fewer than " + std::to_string(k) + " positive eigenvalues");
  }
  return m;
}

EmbeddingTable pca_reduce(const EmbeddingTable& table, Eigen::Index k) {
  const auto model = pca_fit(table.vectors(), k);
  Eigen::MatrixXd reduced = (table.vectors().rowwise() - model.mean) * model.components;
  return EmbeddingTable(table.tokens(), std::move(reduced));
}

}  // namespace ontopath
