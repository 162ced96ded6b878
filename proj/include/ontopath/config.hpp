#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ontopath/eval.hpp"
#include "ontopath/seq2seq.hpp"

namespace ontopath {

/// All settings of a pipeline run. Every key has a default except the input
/// paths, which each subcommand checks for itself.
struct RunConfig {
  ModelConfig model;
  std::string edges;
  std::string definitions;
  std::string embeddings;
  std::string data_dir;
  std::string output_dir = ".";
  std::string checkpoint;
  GoldConvention gold_convention = GoldConvention::Parent;
  std::uint64_t split_seed = 1;
  std::uint64_t tree_seed = 1;
  bool keep_test_dummy = false;
  bool include_self = true;
  bool include_root = true;
  unsigned threads = 1;

  /// Sets one key from its textual value; throws InvalidArgument on unknown
  /// keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  static const std::vector<std::string>& keys();
};

/// Applies a flat `key = value` file (`#` comments allowed) onto `cfg`.
void apply_config_file(RunConfig& cfg, const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace ontopath
