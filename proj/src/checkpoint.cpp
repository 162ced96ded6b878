#include "ontopath/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "ontopath/config.hpp"
#include "ontopath/error.hpp"

namespace ontopath {

using json = nlohmann::json;

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorCode::FormatError, "truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

template <typename Scalar>
void write_params(std::ostream& out, const ParamStore<Scalar>& store) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, sizeof(Scalar));
  put_le<std::uint64_t>(out, store.params().size());
  for (const auto& [name, m] : store.params()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_le<Scalar>(out, m.data()[i]);
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing parameters");
}

template <typename Scalar>
ParamStore<Scalar> read_params(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::FormatError, "not a checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::FormatError, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto width = get_le<std::uint32_t>(in);
  if (width != sizeof(Scalar)) {
    throw Error(ErrorCode::FormatError, "checkpoint stores " + std::to_string(width) + "-byte values, expected " +
                                            std::to_string(sizeof(Scalar)));
  }
  const auto count = get_le<std::uint64_t>(in);
  ParamStore<Scalar> store;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint32_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw Error(ErrorCode::FormatError, "truncated parameter name");
    const auto rank = get_le<std::uint32_t>(in);
    if (rank < 1 || rank > 2) throw Error(ErrorCode::FormatError, "parameter " + name + " has rank " + std::to_string(rank));
    const auto rows = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
    const auto cols = rank == 2 ? static_cast<Eigen::Index>(get_le<std::uint64_t>(in)) : Eigen::Index(1);
    Matrix<Scalar> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get_le<Scalar>(in);
    store.set(name, std::move(m));
  }
  return store;
}

template void write_params<float>(std::ostream&, const ParamStore<float>&);
template void write_params<double>(std::ostream&, const ParamStore<double>&);
template ParamStore<float> read_params<float>(std::istream&);
template ParamStore<double> read_params<double>(std::istream&);

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    write_params(out, ck.params);
  }
  json j;
  j["format_version"] = kCheckpointVersion;
  j["config"] = model_config_to_json(ck.config);
  j["token_vocab"] = ck.tokens.tokens();
  j["symbol_vocab"] = {{"mode", to_string(ck.symbols.mode())}, {"symbols", ck.symbols.symbols()}};
  j["best_epoch"] = ck.best_epoch;
  j["best_dev_f1"] = ck.best_dev_f1;
  std::ofstream side(path + ".json");
  if (!side) throw Error(ErrorCode::IoError, "cannot write " + path + ".json");
  side << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  Checkpoint ck;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    ck.params = read_params<float>(in);
  }
  std::ifstream side(path + ".json");
  if (!side) throw Error(ErrorCode::IoError, "cannot open " + path + ".json");
  try {
    const auto j = json::parse(side);
    ck.config = model_config_from_json(j.at("config"));
    ck.tokens = TokenVocab::from_tokens(j.at("token_vocab").get<std::vector<std::string>>());
    const auto& sv = j.at("symbol_vocab");
    ck.symbols = SymbolVocab::from_symbols(path_mode_from_string(sv.at("mode").get<std::string>()),
                                           sv.at("symbols").get<std::vector<std::string>>());
    ck.best_epoch = j.at("best_epoch").get<int>();
    ck.best_dev_f1 = j.at("best_dev_f1").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path + ".json: " + e.what());
  }
  if (ck.params.get(param_names::kWordEmb).rows() != static_cast<Eigen::Index>(ck.tokens.size()) ||
      ck.params.get(param_names::kOut).cols() != static_cast<Eigen::Index>(ck.symbols.size())) {
    throw Error(ErrorCode::VocabMismatch, "checkpoint parameters do not match its vocabularies");
  }
  return ck;
}

}  // namespace ontopath
