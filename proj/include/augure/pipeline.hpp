#pragma once

// Run orchestration: config, per-seed stages, manifests, aggregation and the
// ablation suite. Every artifact lands under the configured output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "augure/common.hpp"
#include "augure/corpus.hpp"
#include "augure/metrics.hpp"
#include "augure/pairs_cross.hpp"
#include "augure/training.hpp"
#include "json.hpp"

namespace augure {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;

struct RunConfig {
  std::string preset;

  std::filesystem::path corpus;
  std::filesystem::path triples;     // empty: built-in extractor
  std::filesystem::path nli_scores;  // for nli_mode = offline_file
  std::filesystem::path rewrites;    // empty: no rewrite-derived pairs
  std::filesystem::path encodings;   // for encoder_mode = external
  std::filesystem::path output_dir = "runs/default";

  std::string nli_mode = "lexical_stub";
  std::string nli_host = "127.0.0.1";
  int nli_port = 8080;
  std::string encoder_mode = "trainable";  // trainable | external

  std::size_t embedding_dim = 32;
  std::size_t window = 1;

  double margin = 0.75;
  double temperature = 0.02;
  std::size_t nce_negatives = 10;
  double learning_rate = 1e-5;
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double weight_decay = 0.01;
  // Empty: (k, 2k, 4k).
  std::vector<std::size_t> exemplar_layers;

  std::size_t m = 2;
  std::size_t t = 4;
  double r = 0.95;
  double f = 0.10;
  std::size_t k = 10;
  std::size_t same_template_cap = 0;

  std::size_t kmeans_max_iter = 100;
  double kmeans_tol = 1e-6;
  std::size_t kmeans_restarts = 1;

  bool no_entity_aug = false;
  bool no_within_pairs = false;
  bool no_chatgpt_pairs = false;
  bool no_cross_pairs = false;
  bool nce_for_pairs = false;

  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool parallel_seeds = false;

  // Throws ConfigError.
  void validate() const;
  std::vector<std::size_t> exemplar_sizes() const;
  LossConfig loss_config(std::uint64_t seed) const;
  CrossMiningOptions mining_options() const;
  KMeansOptions kmeans_options() const;
};

nlohmann::json to_json(const RunConfig& c);
// Unknown keys or a wrong schema version raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Known presets: "default", "nyt-fb", "tacred", "synthetic".
RunConfig apply_preset(RunConfig c, std::string_view name);
std::vector<std::string> preset_names();

// Sets `key` (a RunConfig JSON key) from text, parsed according to the type
// of the current value. Lists are comma-separated.
void apply_override(nlohmann::json& config, const std::string& key, const std::string& value);

// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

enum class Stage { ingest, mine, train, cluster, evaluate, stats };
std::string_view to_string(Stage s);

class StageFailure : public Error {
 public:
  StageFailure(Stage stage, const std::string& what, bool config_error = false)
      : Error(std::string(to_string(stage)) + ": " + what),
        stage_(stage),
        config_error_(config_error) {}
  Stage stage() const { return stage_; }
  // The underlying cause was a ConfigError.
  bool config_error() const { return config_error_; }

 private:
  Stage stage_;
  bool config_error_;
};

std::filesystem::path seed_dir(const RunConfig& c, std::uint64_t seed);

// Individual stages. Each reads what earlier stages wrote and raises
// StageFailure on any error.
Corpus run_ingest(const RunConfig& c);
CrossMining run_mine(const RunConfig& c, const Corpus& corpus, std::uint64_t seed);
TrainResult run_train(const RunConfig& c, const Corpus& corpus, std::uint64_t seed);
std::vector<std::size_t> run_cluster(const RunConfig& c, const Corpus& corpus,
                                     std::uint64_t seed);
EvaluationReport run_evaluate(const RunConfig& c, const Corpus& corpus, std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one seed
  double median = 0.0;
};

struct Aggregate {
  std::size_t runs = 0;
  MetricSummary b3_precision, b3_recall, b3_f1;
  MetricSummary homogeneity, completeness, v_f1;
  MetricSummary ari;
};

Aggregate aggregate(const std::vector<EvaluationReport>& reports);
nlohmann::json to_json(const Aggregate& a);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::vector<EpochLog> log;
  std::vector<std::size_t> labels;
  std::optional<EvaluationReport> report;
};

struct RunOutcome {
  std::vector<SeedOutcome> seeds;
  std::optional<Aggregate> summary;  // when the corpus carries gold
};

nlohmann::json manifest(const RunConfig& c);

// ingest -> mine -> train -> cluster -> evaluate for every seed. Training is
// skipped (and recorded as such) with external encodings.
RunOutcome run_pipeline(const RunConfig& c);

struct AblationRow {
  std::string variant;
  std::optional<Aggregate> summary;
  std::string error;  // set when the variant failed
};

struct AblationTable {
  std::vector<AblationRow> rows;
};

// Variant names in table order.
std::vector<std::string> ablation_variants();
RunConfig ablation_config(const RunConfig& base, const std::string& variant);

// Runs every variant under output_dir/<variant> with the base seeds and
// writes ablation.json and ablation.txt.
AblationTable run_ablation_suite(const RunConfig& base);
std::string render_ablation(const AblationTable& t);

// Reads every seed's mining stats under `run_dir` and renders them.
// Writes stats.txt. Throws StageFailure(stats) when nothing was mined.
std::string emit_stats(const std::filesystem::path& run_dir);

}  // namespace augure
