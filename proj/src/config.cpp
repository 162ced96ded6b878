#include "ontopath/config.hpp"

#include <charconv>
#include <fstream>

#include "ontopath/error.hpp"

namespace ontopath {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw Error(ErrorCode::InvalidArgument, "bad value '" + v + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidArgument, "bad boolean '" + v + "' for " + key);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "edges", "definitions", "embeddings", "data_dir", "output_dir", "checkpoint",
      "path_mode", "gold_convention", "split_seed", "tree_seed", "keep_test_dummy",
      "include_self", "include_root", "threads",
      "word_emb_dim", "symbol_emb_dim", "encoder_hidden", "decoder_hidden", "attention_dim",
      "epochs", "batch_size", "learning_rate", "rms_decay", "rms_epsilon", "clip_norm",
      "max_source_len", "max_target_len", "seed", "use_pretrained", "freeze_embeddings",
      "attend_before_update", "eval_every", "stop_loss"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto& m = model;
  if (key == "edges") edges = value;
  else if (key == "definitions") definitions = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "data_dir") data_dir = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "path_mode") m.path_mode = path_mode_from_string(value);
  else if (key == "gold_convention") gold_convention = gold_convention_from_string(value);
  else if (key == "split_seed") split_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "tree_seed") tree_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "keep_test_dummy") keep_test_dummy = parse_bool(key, value);
  else if (key == "include_self") include_self = parse_bool(key, value);
  else if (key == "include_root") include_root = parse_bool(key, value);
  else if (key == "threads") threads = parse_number<unsigned>(key, value);
  else if (key == "word_emb_dim") m.word_emb_dim = parse_number<int>(key, value);
  else if (key == "symbol_emb_dim") m.symbol_emb_dim = parse_number<int>(key, value);
  else if (key == "encoder_hidden") {
    m.encoder_hidden = parse_number<int>(key, value);
    m.decoder_hidden = 2 * m.encoder_hidden;
  } else if (key == "decoder_hidden") m.decoder_hidden = parse_number<int>(key, value);
  else if (key == "attention_dim") m.attention_dim = parse_number<int>(key, value);
  else if (key == "epochs") m.epochs = parse_number<int>(key, value);
  else if (key == "batch_size") m.batch_size = parse_number<int>(key, value);
  else if (key == "learning_rate") m.learning_rate = parse_number<double>(key, value);
  else if (key == "rms_decay") m.rms_decay = parse_number<double>(key, value);
  else if (key == "rms_epsilon") m.rms_epsilon = parse_number<double>(key, value);
  else if (key == "clip_norm") m.clip_norm = parse_number<double>(key, value);
  else if (key == "max_source_len") m.max_source_len = parse_number<int>(key, value);
  else if (key == "max_target_len") m.max_target_len = parse_number<int>(key, value);
  else if (key == "seed") m.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "use_pretrained") m.use_pretrained = parse_bool(key, value);
  else if (key == "freeze_embeddings") m.freeze_embeddings = parse_bool(key, value);
  else if (key == "attend_before_update") m.attend_before_update = parse_bool(key, value);
  else if (key == "eval_every") m.eval_every = parse_number<int>(key, value);
  else if (key == "stop_loss") m.stop_loss = parse_number<double>(key, value);
  else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
}

json model_config_to_json(const ModelConfig& c) {
  return {{"word_emb_dim", c.word_emb_dim},
          {"symbol_emb_dim", c.symbol_emb_dim},
          {"encoder_hidden", c.encoder_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"attention_dim", c.attention_dim},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"rms_decay", c.rms_decay},
          {"rms_epsilon", c.rms_epsilon},
          {"clip_norm", c.clip_norm},
          {"max_source_len", c.max_source_len},
          {"max_target_len", c.max_target_len},
          {"seed", c.seed},
          {"use_pretrained", c.use_pretrained},
          {"freeze_embeddings", c.freeze_embeddings},
          {"attend_before_update", c.attend_before_update},
          {"eval_every", c.eval_every},
          {"stop_loss", c.stop_loss},
          {"path_mode", to_string(c.path_mode)}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.word_emb_dim = j.at("word_emb_dim").get<int>();
  c.symbol_emb_dim = j.at("symbol_emb_dim").get<int>();
  c.encoder_hidden = j.at("encoder_hidden").get<int>();
  c.decoder_hidden = j.at("decoder_hidden").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.rms_decay = j.at("rms_decay").get<double>();
  c.rms_epsilon = j.at("rms_epsilon").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.max_source_len = j.at("max_source_len").get<int>();
  c.max_target_len = j.at("max_target_len").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.use_pretrained = j.at("use_pretrained").get<bool>();
  c.freeze_embeddings = j.at("freeze_embeddings").get<bool>();
  c.attend_before_update = j.at("attend_before_update").get<bool>();
  c.eval_every = j.at("eval_every").get<int>();
  c.stop_loss = j.at("stop_loss").get<double>();
  c.path_mode = path_mode_from_string(j.at("path_mode").get<std::string>());
  c.validate();
  return c;
}

}  // namespace ontopath
