// ontopath: ontology ingestion, corpus preparation, training, prediction and
// evaluation of definition-to-path models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ontopath/checkpoint.hpp"
#include "ontopath/config.hpp"
#include "ontopath/corpus.hpp"
#include "ontopath/embeddings.hpp"
#include "ontopath/error.hpp"
#include "ontopath/eval.hpp"
#include "ontopath/graph.hpp"
#include "ontopath/synthetic.hpp"
#include "ontopath/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ontopath;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Raw per-key strings collected from flags, applied after the config file.
struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_run_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "flat key = value config file");
  for (const auto& key : RunConfig::keys()) {
    auto dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    std::string names = "--" + key;
    if (dashed != key) names += ",--" + dashed;
    app->add_option_function<std::string>(
        names, [&o, key](const std::string& v) { o.values[key] = v; }, "config key " + key);
  }
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.config_file.empty()) apply_config_file(cfg, o.config_file);
  for (const auto& [k, v] : o.values) {
    // decoder_hidden after encoder_hidden so an explicit value wins.
    if (k != "decoder_hidden") cfg.set(k, v);
  }
  if (const auto it = o.values.find("decoder_hidden"); it != o.values.end()) cfg.set(it->first, it->second);
  return cfg;
}

void require(const std::string& value, const char* key) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string("missing required --") + key);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  return out;
}

void write_tree_files(const TreeOntology& t, const fs::path& dir) {
  auto edges = open_out(dir / "tree.tsv");
  edges << "# child\tparent\n";
  for (const auto& e : t.edge_records()) edges << e.child << '\t' << e.parent << '\n';
  auto defs = open_out(dir / "definitions.tsv");
  defs << "# id\tdefinition\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto v = static_cast<TreeOntology::Index>(i);
    if (const auto& d = t.definition(v)) defs << t.id(v) << '\t' << *d << '\n';
  }
}

TreeOntology load_data_tree(const RunConfig& cfg) {
  require(cfg.data_dir, "data_dir");
  const fs::path dir(cfg.data_dir);
  return load_tree((dir / "tree.tsv").string(), (dir / "definitions.tsv").string(), cfg.tree_seed);
}

DatasetSplit load_corpus(const RunConfig& cfg) {
  const fs::path p = fs::path(cfg.data_dir) / "corpus.jsonl";
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  return read_corpus_jsonl(in);
}

int cmd_ingest(const RunConfig& cfg) {
  require(cfg.edges, "edges");
  std::vector<DefinitionRecord> defs;
  if (!cfg.definitions.empty()) defs = read_definition_file(cfg.definitions);
  const auto graph = validate_dag(parse_ontology(read_edge_file(cfg.edges), defs));
  const auto dag = compute_dag_stats(graph);
  const auto tree = dag_to_tree(graph, cfg.tree_seed);
  const auto stats = compute_stats(tree);
  std::cerr << "removed " << tree.removed_edges() << " edges converting to a tree\n";

  json j = {{"node_count", stats.node_count},
            {"avg_depth", stats.avg_depth},
            {"max_depth", stats.max_depth},
            {"avg_branch", stats.avg_branch},
            {"max_branch", stats.max_branch},
            {"a_d", stats.a_d},
            {"multi_parent_pct", dag.multi_parent_pct},
            {"avg_parents_of_multi", dag.avg_parents_of_multi},
            {"removed_edges", tree.removed_edges()},
            {"label_vocab_size", tree.label_vocab_size()},
            {"root", tree.id(tree.root())}};
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  write_tree_files(tree, dir);
  open_out(dir / "stats.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_prepare(const RunConfig& cfg) {
  require(cfg.edges, "edges");
  const auto tree = load_tree(cfg.edges, cfg.definitions, cfg.tree_seed);
  const auto examples = make_examples(tree, cfg.model.path_mode, static_cast<std::size_t>(cfg.model.max_source_len));
  const auto split = split_dataset(examples, tree, cfg.split_seed, cfg.keep_test_dummy);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  write_tree_files(tree, dir);
  {
    auto out = open_out(dir / "corpus.jsonl");
    write_corpus_jsonl(out, split);
  }
  {
    auto out = open_out(dir / "split.json");
    write_split_manifest(out, split, cfg.model.path_mode);
  }
  std::cout << "train " << split.train.size() << ", dev " << split.dev.size() << ", test " << split.test.size()
            << " examples; " << split.test_nodes.size() << " test and " << split.dev_nodes.size()
            << " dev leaves\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg) {
  const auto tree = load_data_tree(cfg);
  const auto split = load_corpus(cfg);
  for (const auto* part : {&split.train, &split.dev, &split.test}) {
    for (const auto& ex : *part) {
      if (ex.target.mode != cfg.model.path_mode) {
        throw Error(ErrorCode::InvalidArgument, std::string("corpus was prepared for ") + to_string(ex.target.mode) +
                                                    " but path_mode is " + to_string(cfg.model.path_mode));
      }
    }
  }
  std::optional<EmbeddingTable> table;
  if (cfg.model.use_pretrained) {
    require(cfg.embeddings, "embeddings");
    table = load_embeddings(cfg.embeddings);
    if (table->dim() != cfg.model.word_emb_dim) table = pca_reduce(*table, cfg.model.word_emb_dim);
  }
  const auto result = train(tree, split, cfg.model, table ? &*table : nullptr);

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  save_checkpoint((dir / "model.ckpt").string(), result.checkpoint);
  auto log = open_out(dir / "train_log.csv");
  log << "epoch,loss,dev_f1\n";
  for (const auto& row : result.log) {
    log << row.epoch << ',' << json(row.loss).dump() << ',';
    if (row.dev_f1) log << json(*row.dev_f1).dump();
    log << '\n';
  }
  std::cout << "trained " << result.log.size() << " epochs; best epoch " << result.checkpoint.best_epoch
            << ", dev F1 " << result.checkpoint.best_dev_f1 << '\n';
  return kOk;
}

int cmd_predict(const RunConfig& cfg) {
  require(cfg.checkpoint, "checkpoint");
  const auto ck = load_checkpoint(cfg.checkpoint);
  const auto tree = load_data_tree(cfg);
  const PathPredictor predictor(ck, effective_max_target_len(ck.config, tree));

  std::vector<std::string> inputs;
  std::string line;
  while (std::getline(std::cin, line)) inputs.push_back(line);
  if (inputs.empty()) inputs.emplace_back();

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto tokens = tokenize(inputs[i]);
    if (tokens.empty()) tokens = {TokenVocab::kEmptyToken};
    const auto decoded = predictor.decode(tokens);
    const auto path = predictor.to_path(decoded);
    const auto resolved = resolve_path(tree, path);
    json j = {{"input", inputs[i]}, {"resolved_node", resolved.node}, {"valid", resolved.valid}};
    if (path.mode == PathMode::NodePath) {
      j["path"] = path.nodes;
    } else {
      j["path"] = path.labels;
    }
    std::cout << j.dump() << '\n';

    const auto name = inputs.size() == 1 ? std::string("attention.csv") : "attention_" + std::to_string(i + 1) + ".csv";
    auto csv = open_out(dir / name);
    csv << "symbol";
    for (const auto& t : tokens) csv << ',' << (t.find_first_of(",\"") == std::string::npos ? t : "\"" + t + "\"");
    csv << '\n';
    for (Eigen::Index r = 0; r < decoded.attention.rows(); ++r) {
      csv << ck.symbols.symbol(decoded.symbols[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < decoded.attention.cols(); ++c) csv << ',' << json(decoded.attention(r, c)).dump();
      csv << '\n';
    }
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg) {
  require(cfg.checkpoint, "checkpoint");
  const auto ck = load_checkpoint(cfg.checkpoint);
  const auto tree = load_data_tree(cfg);
  const auto split = load_corpus(cfg);
  EvalOptions opts;
  opts.convention = cfg.gold_convention;
  opts.ancestors = {cfg.include_self, cfg.include_root};
  opts.threads = cfg.threads;
  const auto report = evaluate_checkpoint(tree, ck, split.test, opts, split.train);
  const auto baseline_path = frequency_baseline(split.train);
  const auto baseline =
      evaluate(tree, split.test, [&](const Example&) { return baseline_path; }, opts, split.train);

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "report.json");
    write_report_json(out, report, &baseline);
  }
  {
    auto out = open_out(dir / "records.csv");
    write_records_csv(out, report);
  }
  {
    auto out = open_out(dir / "decoded_length.csv");
    write_decoded_length_csv(out, report.lengths);
  }
  {
    auto out = open_out(dir / "train_length.csv");
    write_train_length_csv(out, report.lengths);
  }
  std::cout << "Ancestor-F1 " << report.mean_f1 << " (" << to_string(report.convention) << " gold), invalid "
            << report.invalid_pct << "% of " << report.n_total << "; frequency baseline " << baseline.mean_f1
            << '\n';
  return kOk;
}

int cmd_synth(std::size_t nodes, int depth, std::uint64_t seed, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_synthetic_ontology(make_synthetic_ontology(nodes, depth, seed), (dir / "edges.tsv").string(),
                           (dir / "definitions.tsv").string());
  return kOk;
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return kUsage;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::ShapeMismatch: return kNumeric;
    default: return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map textual definitions to paths in an ontology tree"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "print tool and file format versions");

  Overrides ingest_o, prepare_o, train_o, predict_o, eval_o;
  auto* ingest = app.add_subcommand("ingest", "validate an ontology, convert it to a tree, write stats");
  add_run_options(ingest, ingest_o);
  auto* prepare = app.add_subcommand("prepare", "build the example corpus and the leaf-sampled split");
  add_run_options(prepare, prepare_o);
  auto* train_cmd = app.add_subcommand("train", "train a model on a prepared corpus");
  add_run_options(train_cmd, train_o);
  bool resume = false;
  train_cmd->add_flag("--resume", resume, "not supported");
  auto* predict = app.add_subcommand("predict", "decode definitions read from standard input");
  add_run_options(predict, predict_o);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on the test split");
  add_run_options(evaluate_cmd, eval_o);

  std::size_t synth_nodes = 500;
  int synth_depth = 6;
  std::uint64_t synth_seed = 1;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "write a synthetic ontology with templated definitions");
  synth->add_option("--nodes", synth_nodes);
  synth->add_option("--max-depth", synth_depth);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--output-dir,--output_dir", synth_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (version) {
    std::cout << "ontopath " << kVersion << "\ncheckpoint format " << kCheckpointVersion << "\ncorpus format "
              << kCorpusFormatVersion << '\n';
    return kOk;
  }

  try {
    if (*ingest) return cmd_ingest(resolve(ingest_o));
    if (*prepare) return cmd_prepare(resolve(prepare_o));
    if (*train_cmd) {
      if (resume) {
        std::cerr << "error: resuming training is not supported; start a fresh run\n";
        return kUsage;
      }
      return cmd_train(resolve(train_o));
    }
    if (*predict) return cmd_predict(resolve(predict_o));
    if (*evaluate_cmd) return cmd_evaluate(resolve(eval_o));
    if (*synth) return cmd_synth(synth_nodes, synth_depth, synth_seed, synth_out);
    std::cout << app.help();
    return kUsage;
  } catch (const CycleError& e) {
    std::cerr << "error: cycle detected:";
    for (const auto& n : e.cycle()) std::cerr << ' ' << n;
    std::cerr << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
