#pragma once

// Contrastive training: margin pair loss, InfoNCE (ablation), the
// hierarchical exemplar loss, negative sampling, AdamW and the epoch loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "augure/clustering.hpp"
#include "augure/common.hpp"
#include "augure/corpus.hpp"
#include "augure/encoder.hpp"
#include "augure/pairs_within.hpp"
#include "json.hpp"

namespace augure {

struct LossConfig {
  double margin = 0.75;
  double temperature = 0.02;
  std::size_t nce_negatives = 10;
  bool use_nce_for_pairs = false;
  std::vector<std::size_t> exemplar_layer_sizes{10, 20, 40};
  double learning_rate = 1e-5;
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Throws ConfigError.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Losses on raw vectors. Gradients are with respect to every input.
// ---------------------------------------------------------------------------

// 1 - cos(a, b). Throws std::domain_error on a zero vector.
double cosine_distance(std::span<const double> a, std::span<const double> b);
// d/da of cosine_distance(a, b).
Vector cosine_distance_grad(std::span<const double> a, std::span<const double> b);

struct MarginLoss {
  double value = 0.0;  // mean over pairs
  std::vector<double> per_pair;
  std::vector<Vector> grad_anchor, grad_positive, grad_negative;
};

// mean_i max(d(a_i, p_i) - d(a_i, n_i) + margin, 0). Subgradient 0 at the hinge.
MarginLoss margin_pair_loss(std::span<const Vector> anchors,
                            std::span<const Vector> positives,
                            std::span<const Vector> negatives, double margin);

struct NceLoss {
  double value = 0.0;  // sum over anchors
  std::vector<double> per_anchor;
  std::vector<Vector> grad_anchor, grad_positive, grad_pool;
};

// sum_i -log softmax_0(a_i . [p_i, pool[neg_i1], ...] / tau).
NceLoss info_nce_loss(std::span<const Vector> anchors, std::span<const Vector> positives,
                      std::span<const Vector> pool,
                      const std::vector<std::vector<std::size_t>>& negatives,
                      double temperature);

// J distinct pool indices per anchor, uniformly from members whose family is
// not in that anchor's exclusion list. Throws ConfigError when fewer than J
// are eligible.
std::vector<std::vector<std::size_t>> sample_nce_negatives(
    std::span<const std::string> pool_families,
    const std::vector<std::vector<std::string>>& excluded, std::size_t negatives,
    Rng& rng);

// Uniform pool index whose family is not excluded. Throws
// BatchConstructionError when there is none.
std::size_t sample_negative(std::span<const std::string> pool_families,
                            std::span<const std::string> excluded, Rng& rng);

struct ExemplarLayers {
  std::vector<Matrix> centroids;  // per layer, unit rows
  // assignments[l][i]: centroid of representation i at layer l.
  std::vector<std::vector<std::size_t>> assignments;

  std::size_t layers() const { return centroids.size(); }
};

// One K-Means fit per layer size; centroids are normalized afterwards.
ExemplarLayers compute_exemplars(std::span<const Vector> representations,
                                 std::span<const std::size_t> layer_sizes,
                                 const KMeansOptions& options, Rng& rng);

struct ExemplarLoss {
  double value = 0.0;  // sum over instances
  std::vector<double> per_instance;
  std::vector<Vector> grad;
};

// Instance i is scored against the layer assignments of row rows[i].
// Centroids are constants.
ExemplarLoss exemplar_loss(std::span<const Vector> instances,
                           std::span<const std::size_t> rows, const ExemplarLayers& ex,
                           double temperature);
// rows = 0..n-1.
ExemplarLoss exemplar_loss(std::span<const Vector> instances, const ExemplarLayers& ex,
                           double temperature);

double total_loss(double pair_within, double pair_cross, double exemplar);

// ---------------------------------------------------------------------------
// Batches. Negatives are drawn when the batch is built, so the batch loss is
// a deterministic function of the parameters.
// ---------------------------------------------------------------------------

struct BatchInstance {
  TaggedSequence tagged;
  ContextPositions positions;  // tagged coordinates
  std::string family;          // base sentence id
  std::size_t corpus_row = 0;  // row in the exemplar assignments
  std::string label;           // sentence id and variant, for diagnostics
};

struct BatchItem {
  std::size_t anchor = 0;
  std::size_t partner = 0;
  std::size_t negative = 0;
  bool within = true;
  std::vector<std::size_t> nce_negatives;
};

struct PreparedBatch {
  std::vector<BatchInstance> instances;
  std::vector<BatchItem> items;
};

struct BatchLoss {
  double pair_within = 0.0;
  double pair_cross = 0.0;
  double exemplar = 0.0;
  double total = 0.0;
  std::size_t n_within = 0;
  std::size_t n_cross = 0;
};

// Resolves instance refs against `sentences` (originals and synthetic
// copies) and draws negatives. When no negative is eligible, a random other
// corpus sentence is added to the pool.
PreparedBatch prepare_batch(std::span<const PositivePair> pairs,
                            const std::map<std::string, const Sentence*>& sentences,
                            const Corpus& corpus, std::size_t m, const LossConfig& config,
                            Rng& rng);

// L_w + L_c + exemplar term; the exemplar term is averaged over the batch
// instances. Adds d(total)/d(embeddings) into table_grad when given.
BatchLoss batch_loss(const EncoderParams& params, const PreparedBatch& batch,
                     const ExemplarLayers& exemplars, const LossConfig& config,
                     Matrix* table_grad);

// Splits within and cross pairs into ceil(total / batch_size) batches, each
// receiving a proportional share of both sets. Input order is kept.
std::vector<std::vector<PositivePair>> make_batches(const std::vector<PositivePair>& within,
                                                    const std::vector<PositivePair>& cross,
                                                    std::size_t batch_size);

// ---------------------------------------------------------------------------
// Optimizer and loop.
// ---------------------------------------------------------------------------

struct TrainState {
  EncoderParams params;
  Matrix first_moment;
  Matrix second_moment;
  std::uint64_t step = 0;
  std::size_t epoch = 0;

  static TrainState fresh(EncoderParams params);
};

// Decoupled weight decay with bias-corrected moments.
void adamw_step(TrainState& state, const Matrix& grad, const LossConfig& config);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_pair_loss_w = 0.0;
  double mean_pair_loss_c = 0.0;
  double mean_exem_loss = 0.0;
  double mean_total = 0.0;

  bool operator==(const EpochLog&) const = default;
};

void write_loss_log(std::ostream& out, std::span<const EpochLog> log);

// Within-sentence pairs for a given epoch. Empty when within pairs are off.
using WithinProvider = std::function<WithinPairs(std::size_t epoch)>;

// Fresh dropout and entity-replacement draws every epoch.
WithinProvider resampling_within(const Corpus& corpus, std::size_t m, EntityPool pool,
                                 std::uint64_t seed, bool entity_aug);

struct TrainOptions {
  std::size_t m = 2;
  KMeansOptions kmeans;
  // On a non-finite loss, a checkpoint and the offending batch land here.
  std::optional<std::filesystem::path> diagnostics_dir;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  TrainState state;
  std::vector<EpochLog> log;
};

// Runs epochs state.epoch .. config.epochs-1. Epoch e draws from streams
// derived from (config.seed, e), so a resumed run matches an uninterrupted
// one.
TrainResult train(const Corpus& corpus, const WithinProvider& within,
                  const std::vector<PositivePair>& cross, const LossConfig& config,
                  TrainState state, const TrainOptions& options);

nlohmann::json checkpoint_to_json(const TrainState& state);
TrainState checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Finite-difference check of the analytic gradients.
// ---------------------------------------------------------------------------

enum class LossKind { margin, info_nce, exemplar, encoder_chain };
std::string_view to_string(LossKind k);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t resamples = 0;
};

// Random small instance (dimension <= 8, <= 6 instances), central differences
// with step eps. Instances within 1e-3 of a hinge are redrawn.
GradientCheck gradient_check(LossKind kind, std::uint64_t seed, double eps = 1e-6);

}  // namespace augure
