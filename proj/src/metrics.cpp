#include "augure/metrics.hpp"

#include <cmath>
#include <unordered_map>

#include "augure/common.hpp"

namespace augure {

namespace {

void check_lengths(std::span<const std::size_t> pred, std::span<const std::size_t> gold,
                   std::size_t min_n) {
  if (pred.size() != gold.size()) {
    throw ShapeError("metrics: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(gold.size()) + " gold labels");
  }
  if (pred.size() < min_n) {
    throw ShapeError("metrics: need at least " + std::to_string(min_n) + " items");
  }
}

struct Contingency {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> cells;
  std::map<std::size_t, std::size_t> pred_sizes;
  std::map<std::size_t, std::size_t> gold_sizes;
};

Contingency contingency(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  Contingency c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++c.cells[{pred[i], gold[i]}];
    ++c.pred_sizes[pred[i]];
    ++c.gold_sizes[gold[i]];
  }
  return c;
}

double choose2(std::size_t n) {
  return 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
}

double entropy(const std::map<std::size_t, std::size_t>& sizes, double n) {
  double h = 0.0;
  for (const auto& [label, count] : sizes) {
    const double p = static_cast<double>(count) / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double harmonic_mean(double a, double b) {
  return a + b == 0.0 ? 0.0 : 2.0 * a * b / (a + b);
}

PrecisionRecall b_cubed(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  check_lengths(pred, gold, 1);
  const Contingency c = contingency(pred, gold);
  // Every item in cell (p, g) has the same |C ∩ L| = n_pg.
  double precision = 0.0;
  double recall = 0.0;
  for (const auto& [key, n_pg] : c.cells) {
    const double overlap = static_cast<double>(n_pg);
    precision += overlap * overlap / static_cast<double>(c.pred_sizes.at(key.first));
    recall += overlap * overlap / static_cast<double>(c.gold_sizes.at(key.second));
  }
  const double n = static_cast<double>(pred.size());
  PrecisionRecall out;
  out.precision = precision / n;
  out.recall = recall / n;
  out.f1 = harmonic_mean(out.precision, out.recall);
  return out;
}

VMeasure v_measure(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  check_lengths(pred, gold, 1);
  const Contingency c = contingency(pred, gold);
  const double n = static_cast<double>(pred.size());
  const double h_gold = entropy(c.gold_sizes, n);
  const double h_pred = entropy(c.pred_sizes, n);
  double h_gold_given_pred = 0.0;
  double h_pred_given_gold = 0.0;
  for (const auto& [key, count] : c.cells) {
    const double joint = static_cast<double>(count) / n;
    h_gold_given_pred -=
        joint * std::log(static_cast<double>(count) /
                         static_cast<double>(c.pred_sizes.at(key.first)));
    h_pred_given_gold -=
        joint * std::log(static_cast<double>(count) /
                         static_cast<double>(c.gold_sizes.at(key.second)));
  }
  VMeasure out;
  out.homogeneity = h_gold == 0.0 ? 1.0 : 1.0 - h_gold_given_pred / h_gold;
  out.completeness = h_pred == 0.0 ? 1.0 : 1.0 - h_pred_given_gold / h_pred;
  out.f1 = harmonic_mean(out.homogeneity, out.completeness);
  return out;
}

double adjusted_rand_index(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  check_lengths(pred, gold, 2);
  const Contingency c = contingency(pred, gold);
  double index = 0.0;
  for (const auto& [key, count] : c.cells) index += choose2(count);
  double sum_pred = 0.0;
  for (const auto& [label, count] : c.pred_sizes) sum_pred += choose2(count);
  double sum_gold = 0.0;
  for (const auto& [label, count] : c.gold_sizes) sum_gold += choose2(count);
  const double expected = sum_pred * sum_gold / choose2(pred.size());
  const double max_index = 0.5 * (sum_pred + sum_gold);
  if (max_index == expected) {
    // Both partitions are trivial (all-singletons or one cluster).
    const bool identical = c.cells.size() == c.pred_sizes.size() &&
                           c.cells.size() == c.gold_sizes.size();
    return identical ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

EvaluationReport evaluate(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  const PrecisionRecall b3 = b_cubed(pred, gold);
  const VMeasure v = v_measure(pred, gold);
  EvaluationReport r;
  r.b3_precision = b3.precision;
  r.b3_recall = b3.recall;
  r.b3_f1 = b3.f1;
  r.homogeneity = v.homogeneity;
  r.completeness = v.completeness;
  r.v_f1 = v.f1;
  r.ari = pred.size() >= 2 ? adjusted_rand_index(pred, gold) : 1.0;
  return r;
}

EvaluationReport evaluate(const std::map<std::string, std::size_t>& pred,
                          const std::map<std::string, std::string>& gold) {
  std::vector<std::string> missing;
  for (const auto& [id, label] : pred) {
    if (!gold.contains(id)) missing.push_back(id);
  }
  for (const auto& [id, relation] : gold) {
    if (!pred.contains(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    throw EvaluationError("evaluation: missing gold or prediction for " +
                          std::to_string(missing.size()) + " sentence(s): " +
                          join(missing, ", "));
  }
  Labels p;
  std::vector<std::string> g;
  for (const auto& [id, label] : pred) {
    p.push_back(label);
    g.push_back(gold.at(id));
  }
  const Labels gold_ids = encode_labels(g);
  return evaluate(p, gold_ids);
}

Labels encode_labels(std::span<const std::string> names) {
  std::unordered_map<std::string, std::size_t> ids;
  Labels out;
  out.reserve(names.size());
  for (const std::string& name : names) {
    auto [it, inserted] = ids.emplace(name, ids.size());
    out.push_back(it->second);
  }
  return out;
}

double round_percent(double value) { return std::round(value * 1000.0) / 10.0; }

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json full = {{"b3_precision", r.b3_precision},
                         {"b3_recall", r.b3_recall},
                         {"b3_f1", r.b3_f1},
                         {"homogeneity", r.homogeneity},
                         {"completeness", r.completeness},
                         {"v_f1", r.v_f1},
                         {"ari", r.ari}};
  nlohmann::json j;
  for (const auto& [key, value] : full.items()) j[key] = round_percent(value.get<double>());
  j["full_precision"] = std::move(full);
  return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  const auto& f = j.contains("full_precision") ? j.at("full_precision") : j;
  EvaluationReport r;
  r.b3_precision = f.at("b3_precision").get<double>();
  r.b3_recall = f.at("b3_recall").get<double>();
  r.b3_f1 = f.at("b3_f1").get<double>();
  r.homogeneity = f.at("homogeneity").get<double>();
  r.completeness = f.at("completeness").get<double>();
  r.v_f1 = f.at("v_f1").get<double>();
  r.ari = f.at("ari").get<double>();
  return r;
}

}  // namespace augure
