#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ontopath/corpus.hpp"
#include "ontopath/graph.hpp"

namespace ontopath {

/// Which nodes count as ancestors of v. By default the root-to-v path
/// including both ends.
struct AncestorOptions {
  bool include_self = true;
  bool include_root = true;
};

std::set<NodeId> ancestor_set(const TreeOntology& t, const NodeId& v, AncestorOptions opts = {});

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Ancestor-F1 of a predicted node against a gold node.
F1Score ancestor_f1(const TreeOntology& t, const NodeId& predicted, const NodeId& gold, AncestorOptions opts = {});

/// Parent: the gold node is the held-out leaf's parent, i.e. where its
/// training-style target path ends. Leaf: the leaf itself.
enum class GoldConvention { Parent, Leaf };

const char* to_string(GoldConvention c);
GoldConvention gold_convention_from_string(const std::string& s);

struct PredictionRecord {
  NodeId node;
  PathSpec gold_path;
  PathSpec predicted_path;
  NodeId gold_node;
  NodeId resolved_node;
  bool valid = true;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double alt_f1 = 0.0;  // under the other gold convention
};

struct LengthRow {
  std::size_t gold_length = 0;
  std::size_t count = 0;
  double mean_decoded = 0.0;
  double stddev_decoded = 0.0;  // population
};

struct LengthReport {
  std::map<std::size_t, std::size_t> train_frequency;  // target length -> examples
  std::vector<LengthRow> decoded;                      // ascending gold length
};

LengthReport length_report(std::span<const Example> train, std::span<const PredictionRecord> records);

struct EvalReport {
  GoldConvention convention = GoldConvention::Parent;
  double mean_f1 = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_alt_f1 = 0.0;
  double invalid_pct = 0.0;
  std::size_t n_total = 0;
  std::vector<PredictionRecord> records;
  LengthReport lengths;
};

using Predictor = std::function<PathSpec(const Example&)>;

struct EvalOptions {
  GoldConvention convention = GoldConvention::Parent;
  AncestorOptions ancestors;
  unsigned threads = 1;
};

/// Scores the Standard examples among `test`. Invalid paths are scored at
/// the node where resolution stopped. Records keep the order of `test`.
EvalReport evaluate(const TreeOntology& t, std::span<const Example> test, const Predictor& predict,
                    EvalOptions opts = {}, std::span<const Example> train = {});

/// Recomputes the aggregates of a report from its records.
void aggregate(EvalReport& report);

/// The most frequent target among Standard training examples (all examples
/// if there are none); ties go to the lexicographically smallest symbols.
PathSpec frequency_baseline(std::span<const Example> train);

double spearman(std::span<const double> xs, std::span<const double> ys);
double pearson(std::span<const double> xs, std::span<const double> ys);

/// `baseline`, when given, is summarised under "frequency_baseline".
void write_report_json(std::ostream& out, const EvalReport& r, const EvalReport* baseline = nullptr);
void write_records_csv(std::ostream& out, const EvalReport& r);
void write_decoded_length_csv(std::ostream& out, const LengthReport& r);
void write_train_length_csv(std::ostream& out, const LengthReport& r);

std::string path_to_string(const PathSpec& p);

}  // namespace ontopath
