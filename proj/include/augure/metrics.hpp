#pragma once

// Clustering evaluation: B-cubed, V-measure and adjusted Rand index.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace augure {

using Labels = std::vector<std::size_t>;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct VMeasure {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double f1 = 0.0;
};

struct EvaluationReport {
  double b3_precision = 0.0;
  double b3_recall = 0.0;
  double b3_f1 = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_f1 = 0.0;
  double ari = 0.0;
};

// Harmonic mean with 0/0 -> 0.
double harmonic_mean(double a, double b);

PrecisionRecall b_cubed(std::span<const std::size_t> pred, std::span<const std::size_t> gold);
// Natural-log entropies.
VMeasure v_measure(std::span<const std::size_t> pred, std::span<const std::size_t> gold);
double adjusted_rand_index(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

EvaluationReport evaluate(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

// Evaluates predicted labels per sentence id against gold relation strings.
// Throws EvaluationError listing every id without gold or without prediction.
EvaluationReport evaluate(const std::map<std::string, std::size_t>& pred,
                          const std::map<std::string, std::string>& gold);

// Dense ids in first-seen order.
Labels encode_labels(std::span<const std::string> names);

// Seven fields x100 rounded to one decimal, plus "full_precision".
nlohmann::json to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j);
double round_percent(double value);

}  // namespace augure
