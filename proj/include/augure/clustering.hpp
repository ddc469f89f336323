#pragma once

// K-Means over relation vectors: exemplar computation during training and
// the final inference clustering.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "augure/common.hpp"
#include "augure/corpus.hpp"
#include "augure/encoder.hpp"

namespace augure {

struct KMeansOptions {
  std::size_t max_iter = 100;
  // Stop once no centroid moves farther than this (Euclidean).
  double tol = 1e-6;
  std::size_t restarts = 1;
};

struct ClusterModel {
  std::size_t k = 0;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  // Assignment of the fitted vectors.
  std::vector<std::size_t> labels;
};

// Greedy D^2-weighted seeding followed by Lloyd iterations. Empty clusters
// are refilled with the point farthest from its centroid. With restarts > 1
// the lowest-inertia fit is returned.
ClusterModel kmeans(std::span<const Vector> vectors, std::size_t k,
                    const KMeansOptions& options, Rng& rng);

// Lloyd iterations from the given seed points (one centroid per index).
ClusterModel kmeans_from_seeds(std::span<const Vector> vectors,
                               std::span<const std::size_t> seed_indices,
                               const KMeansOptions& options);

// Nearest centroid; ties go to the lowest index.
std::vector<std::size_t> assign(std::span<const Vector> vectors, const ClusterModel& model);

// Deterministic-position relation vector for every corpus sentence.
std::vector<Vector> deterministic_representations(const Corpus& corpus,
                                                  const EncoderParams& params,
                                                  std::size_t m);
std::vector<Vector> deterministic_representations(
    const Corpus& corpus, const std::map<std::string, TokenEncodings>& encodings,
    std::size_t m);

// Labels aligned to corpus order.
std::vector<std::size_t> infer_clusters(const Corpus& corpus, const EncoderParams& params,
                                        std::size_t m, std::size_t k,
                                        const KMeansOptions& options, Rng& rng);

}  // namespace augure
