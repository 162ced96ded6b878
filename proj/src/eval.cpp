#include "ontopath/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "ontopath/error.hpp"

namespace ontopath {

using json = nlohmann::json;

std::set<NodeId> ancestor_set(const TreeOntology& t, const NodeId& v, AncestorOptions opts) {
  std::set<NodeId> out;
  for (auto cur = t.index_of(v); cur != TreeOntology::kNone; cur = t.parent(cur)) {
    const bool self = t.id(cur) == v;
    const bool root = cur == t.root();
    if ((self && !opts.include_self) || (root && !opts.include_root)) continue;
    out.insert(t.id(cur));
  }
  return out;
}

F1Score ancestor_f1(const TreeOntology& t, const NodeId& predicted, const NodeId& gold, AncestorOptions opts) {
  const auto model = ancestor_set(t, predicted, opts);
  const auto ref = ancestor_set(t, gold, opts);
  std::size_t overlap = 0;
  for (const auto& n : model) overlap += ref.contains(n) ? 1 : 0;
  F1Score s;
  if (!model.empty()) s.precision = static_cast<double>(overlap) / static_cast<double>(model.size());
  if (!ref.empty()) s.recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
  if (s.precision + s.recall > 0) s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

const char* to_string(GoldConvention c) { return c == GoldConvention::Parent ? "parent" : "leaf"; }

GoldConvention gold_convention_from_string(const std::string& s) {
  if (s == "parent") return GoldConvention::Parent;
  if (s == "leaf") return GoldConvention::Leaf;
  throw Error(ErrorCode::InvalidArgument, "unknown gold convention '" + s + "'");
}

LengthReport length_report(std::span<const Example> train, std::span<const PredictionRecord> records) {
  LengthReport r;
  for (const auto& ex : train) ++r.train_frequency[ex.target.size()];
  std::map<std::size_t, std::vector<double>> by_gold;
  for (const auto& rec : records) {
    by_gold[rec.gold_path.size()].push_back(static_cast<double>(rec.predicted_path.size()));
  }
  for (const auto& [len, decoded] : by_gold) {
    LengthRow row;
    row.gold_length = len;
    row.count = decoded.size();
    row.mean_decoded = std::accumulate(decoded.begin(), decoded.end(), 0.0) / static_cast<double>(decoded.size());
    double ss = 0;
    for (const double d : decoded) ss += (d - row.mean_decoded) * (d - row.mean_decoded);
    row.stddev_decoded = std::sqrt(ss / static_cast<double>(decoded.size()));
    r.decoded.push_back(row);
  }
  return r;
}

void aggregate(EvalReport& report) {
  report.n_total = report.records.size();
  double f1 = 0, p = 0, r = 0, alt = 0;
  std::size_t invalid = 0;
  for (const auto& rec : report.records) {
    f1 += rec.f1;
    p += rec.precision;
    r += rec.recall;
    alt += rec.alt_f1;
    invalid += rec.valid ? 0 : 1;
  }
  const double n = static_cast<double>(report.n_total);
  if (report.n_total == 0) {
    report.mean_f1 = report.mean_precision = report.mean_recall = report.mean_alt_f1 = report.invalid_pct = 0;
    return;
  }
  report.mean_f1 = f1 / n;
  report.mean_precision = p / n;
  report.mean_recall = r / n;
  report.mean_alt_f1 = alt / n;
  report.invalid_pct = 100.0 * static_cast<double>(invalid) / n;
}

namespace {

PredictionRecord score_one(const TreeOntology& t, const Example& ex, const PathSpec& predicted,
                           const EvalOptions& opts) {
  PredictionRecord rec;
  rec.node = ex.node;
  rec.gold_path = ex.target;
  rec.predicted_path = predicted;
  const auto resolved = resolve_path(t, predicted);
  rec.resolved_node = resolved.node;
  rec.valid = resolved.valid;
  const NodeId parent_gold = resolve_path(t, ex.target).node;
  const NodeId& leaf_gold = ex.node;
  const bool parent_conv = opts.convention == GoldConvention::Parent;
  rec.gold_node = parent_conv ? parent_gold : leaf_gold;
  const auto main = ancestor_f1(t, rec.resolved_node, rec.gold_node, opts.ancestors);
  rec.precision = main.precision;
  rec.recall = main.recall;
  rec.f1 = main.f1;
  rec.alt_f1 = ancestor_f1(t, rec.resolved_node, parent_conv ? leaf_gold : parent_gold, opts.ancestors).f1;
  return rec;
}

}  // namespace

EvalReport evaluate(const TreeOntology& t, std::span<const Example> test, const Predictor& predict,
                    EvalOptions opts, std::span<const Example> train) {
  std::vector<const Example*> todo;
  for (const auto& ex : test) {
    if (ex.kind == ExampleKind::Standard) todo.push_back(&ex);
  }
  EvalReport report;
  report.convention = opts.convention;
  report.records.resize(todo.size());

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      report.records[i] = score_one(t, *todo[i], predict(*todo[i]), opts);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(opts.threads, todo.size()));
  if (threads <= 1) {
    work(0, todo.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (todo.size() + threads - 1) / threads;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t k = 0; k < threads; ++k) {
      const std::size_t begin = k * chunk;
      const std::size_t end = std::min(todo.size(), begin + chunk);
      pool.emplace_back([&, k, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  aggregate(report);
  report.lengths = length_report(train, report.records);
  return report;
}

namespace {

std::vector<std::string> path_symbols(const PathSpec& p) {
  if (p.mode == PathMode::NodePath) return p.nodes;
  std::vector<std::string> out;
  for (const auto l : p.labels) out.push_back(l == kInvalidLabel ? std::string("?") : std::to_string(l));
  return out;
}

}  // namespace

PathSpec frequency_baseline(std::span<const Example> train) {
  if (train.empty()) throw Error(ErrorCode::InvalidArgument, "frequency baseline needs training examples");
  const bool any_standard =
      std::any_of(train.begin(), train.end(), [](const Example& e) { return e.kind == ExampleKind::Standard; });
  std::map<std::vector<std::string>, std::pair<std::size_t, const PathSpec*>> counts;
  for (const auto& ex : train) {
    if (any_standard && ex.kind != ExampleKind::Standard) continue;
    auto& slot = counts[path_symbols(ex.target)];
    ++slot.first;
    slot.second = &ex.target;
  }
  // std::map iterates keys in lexicographic order, so the first maximum wins ties.
  const std::pair<std::size_t, const PathSpec*>* best = nullptr;
  for (const auto& [key, slot] : counts) {
    if (!best || slot.first > best->first) best = &slot;
  }
  return *best->second;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "need two equal-length samples of size >= 2");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw Error(ErrorCode::DegenerateInput, "zero variance");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "need two equal-length samples of size >= 2");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

// ---------------------------------------------------------------- emitters

std::string path_to_string(const PathSpec& p) {
  std::string s;
  for (const auto& sym : path_symbols(p)) {
    if (!s.empty()) s += ' ';
    s += sym;
  }
  return s;
}

void write_report_json(std::ostream& out, const EvalReport& r, const EvalReport* baseline) {
  json j;
  j["gold_convention"] = to_string(r.convention);
  j["n_total"] = r.n_total;
  j["mean_f1"] = r.mean_f1;
  j["mean_precision"] = r.mean_precision;
  j["mean_recall"] = r.mean_recall;
  j["mean_f1_other_convention"] = r.mean_alt_f1;
  j["invalid_pct"] = r.invalid_pct;
  json lengths = json::array();
  for (const auto& row : r.lengths.decoded) {
    lengths.push_back({{"gold_length", row.gold_length},
                       {"count", row.count},
                       {"mean_decoded", row.mean_decoded},
                       {"stddev_decoded", row.stddev_decoded}});
  }
  j["decoded_length"] = lengths;
  json freq = json::array();
  for (const auto& [len, n] : r.lengths.train_frequency) freq.push_back({{"length", len}, {"count", n}});
  j["train_length_frequency"] = freq;
  if (baseline) {
    j["frequency_baseline"] = {{"mean_f1", baseline->mean_f1},
                               {"mean_f1_other_convention", baseline->mean_alt_f1},
                               {"invalid_pct", baseline->invalid_pct}};
  }
  out << j.dump(2) << '\n';
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (const char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string num(double v) {
  json j = v;
  return j.dump();
}

}  // namespace

void write_records_csv(std::ostream& out, const EvalReport& r) {
  out << "node,gold_node,resolved_node,valid,precision,recall,f1,f1_other_convention,gold_length,"
         "decoded_length,gold_path,decoded_path\n";
  for (const auto& rec : r.records) {
    out << csv_field(rec.node) << ',' << csv_field(rec.gold_node) << ',' << csv_field(rec.resolved_node) << ','
        << (rec.valid ? 1 : 0) << ',' << num(rec.precision) << ',' << num(rec.recall) << ',' << num(rec.f1) << ','
        << num(rec.alt_f1) << ',' << rec.gold_path.size() << ',' << rec.predicted_path.size() << ','
        << csv_field(path_to_string(rec.gold_path)) << ',' << csv_field(path_to_string(rec.predicted_path)) << '\n';
  }
}

void write_decoded_length_csv(std::ostream& out, const LengthReport& r) {
  out << "gold_length,count,mean_decoded_length,stddev_decoded_length\n";
  for (const auto& row : r.decoded) {
    out << row.gold_length << ',' << row.count << ',' << num(row.mean_decoded) << ',' << num(row.stddev_decoded)
        << '\n';
  }
}

void write_train_length_csv(std::ostream& out, const LengthReport& r) {
  out << "length,frequency\n";
  for (const auto& [len, n] : r.train_frequency) out << len << ',' << n << '\n';
}

}  // namespace ontopath
