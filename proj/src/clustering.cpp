#include "augure/clustering.hpp"

#include <cmath>
#include <limits>

namespace augure {

namespace {

void check_input(std::span<const Vector> vectors, std::size_t k) {
  if (k < 1) throw ConfigError("k-means: k must be >= 1");
  if (vectors.size() < k) {
    throw ConfigError("k-means: " + std::to_string(vectors.size()) +
                      " vectors cannot form " + std::to_string(k) + " clusters");
  }
  const std::size_t dim = vectors.front().size();
  for (const Vector& v : vectors) {
    if (v.size() != dim) throw ShapeError("k-means: ragged input vectors");
  }
}

std::pair<std::size_t, double> nearest(std::span<const double> v, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(v, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

// Greedy k-means++: each new centre is the best (lowest potential) of
// 2 + floor(ln k) D^2-weighted candidates.
std::vector<std::size_t> greedy_seeds(std::span<const Vector> vectors, std::size_t k,
                                      Rng& rng) {
  const std::size_t n = vectors.size();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<std::size_t> seeds{rng.uniform_index(n)};
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = squared_distance(vectors[i], vectors[seeds[0]]);

  auto draw = [&](double total) {
    if (total <= 0.0) return rng.uniform_index(n);
    const double target = rng.uniform_real() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += closest[i];
      if (acc > target) return i;
    }
    return n - 1;
  };

  while (seeds.size() < k) {
    double total = 0.0;
    for (double d : closest) total += d;
    std::size_t best_candidate = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t candidate = draw(total);
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        potential += std::min(closest[i], squared_distance(vectors[i], vectors[candidate]));
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_candidate = candidate;
      }
    }
    seeds.push_back(best_candidate);
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], squared_distance(vectors[i], vectors[best_candidate]));
    }
  }
  return seeds;
}

}  // namespace

ClusterModel kmeans_from_seeds(std::span<const Vector> vectors,
                               std::span<const std::size_t> seed_indices,
                               const KMeansOptions& options) {
  const std::size_t k = seed_indices.size();
  check_input(vectors, k);
  const std::size_t n = vectors.size();
  const std::size_t dim = vectors.front().size();

  ClusterModel model;
  model.k = k;
  model.centroids = Matrix(k, dim);
  for (std::size_t c = 0; c < k; ++c) {
    const Vector& src = vectors[seed_indices[c]];
    std::copy(src.begin(), src.end(), model.centroids.row(c).begin());
  }
  model.labels.assign(n, 0);
  std::vector<double> dist(n);
  double previous_inertia = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    // Assignment step.
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [label, d] = nearest(vectors[i], model.centroids);
      model.labels[i] = label;
      dist[i] = d;
      ++counts[label];
    }
    // Inertia against the centroids the points were assigned to. Lloyd never
    // increases this quantity; a rise means a bug, not bad data.
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    if (inertia > previous_inertia * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("k-means: inertia increased between iterations");
    }
    previous_inertia = inertia;

    // Empty clusters take the point farthest from its own centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[model.labels[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      --counts[model.labels[far]];
      model.labels[far] = c;
      counts[c] = 1;
      dist[far] = 0.0;
    }

    // Update step; accumulation in data order.
    Matrix next(k, dim);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = next.row(model.labels[i]);
      for (std::size_t j = 0; j < dim; ++j) row[j] += vectors[i][j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = next.row(c);
      for (double& x : row) x /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(squared_distance(row, model.centroids.row(c))));
    }
    model.centroids = std::move(next);
    model.iterations_run = iter + 1;
    if (shift < options.tol) break;
  }

  // Final assignment against the final centroids.
  model.labels = assign(vectors, model);
  model.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    model.inertia += squared_distance(vectors[i], model.centroids.row(model.labels[i]));
  }
  return model;
}

ClusterModel kmeans(std::span<const Vector> vectors, std::size_t k,
                    const KMeansOptions& options, Rng& rng) {
  check_input(vectors, k);
  ClusterModel best;
  best.inertia = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < restarts; ++r) {
    const auto seeds = greedy_seeds(vectors, k, rng);
    ClusterModel fit = kmeans_from_seeds(vectors, seeds, options);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }
  return best;
}

std::vector<std::size_t> assign(std::span<const Vector> vectors, const ClusterModel& model) {
  std::vector<std::size_t> labels;
  labels.reserve(vectors.size());
  for (const Vector& v : vectors) {
    if (v.size() != model.centroids.cols()) {
      throw ShapeError("assign: vector of size " + std::to_string(v.size()) +
                       " against centroids of size " +
                       std::to_string(model.centroids.cols()));
    }
    labels.push_back(nearest(v, model.centroids).first);
  }
  return labels;
}

std::vector<Vector> deterministic_representations(const Corpus& corpus,
                                                  const EncoderParams& params,
                                                  std::size_t m) {
  std::vector<Vector> out;
  out.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences()) {
    const TaggedSequence tagged = tag_entities(s);
    const auto positions = to_tagged(deterministic_positions(s, m), tagged);
    out.push_back(trace_relation(tagged, positions, params).normalized);
  }
  return out;
}

std::vector<Vector> deterministic_representations(
    const Corpus& corpus, const std::map<std::string, TokenEncodings>& encodings,
    std::size_t m) {
  std::vector<Vector> out;
  out.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences()) {
    auto it = encodings.find(s.id);
    if (it == encodings.end()) {
      throw SchemaError("no external encodings for sentence '" + s.id + "'");
    }
    const TaggedSequence tagged = tag_entities(s);
    const auto positions = to_tagged(deterministic_positions(s, m), tagged);
    out.push_back(relation_vector(it->second, positions, Variant::deterministic).values);
  }
  return out;
}

std::vector<std::size_t> infer_clusters(const Corpus& corpus, const EncoderParams& params,
                                        std::size_t m, std::size_t k,
                                        const KMeansOptions& options, Rng& rng) {
  const auto reps = deterministic_representations(corpus, params, m);
  const ClusterModel model = kmeans(reps, k, options, rng);
  return assign(reps, model);
}

}  // namespace augure
