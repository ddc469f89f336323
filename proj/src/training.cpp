#include "augure/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace augure {

void LossConfig::validate() const {
  if (!(margin > 0.0)) throw ConfigError("margin must be > 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (nce_negatives < 1) throw ConfigError("nce_negatives must be >= 1");
  if (exemplar_layer_sizes.empty()) throw ConfigError("need at least one exemplar layer");
  for (std::size_t c : exemplar_layer_sizes) {
    if (c < 2) throw ConfigError("exemplar layer sizes must be >= 2");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a positive number");
  }
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("moment constants must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
}

// ---------------------------------------------------------------------------

namespace {

void check_same_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": input counts differ");
}

void add_scaled(Vector& dst, std::span<const double> src, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * scale;
}

// log(sum exp(z)) - z[target], with the target term subtracted before the
// log so that equal logits give exactly log(n).
double neg_log_softmax(std::span<const double> z, std::size_t target, std::vector<double>& probs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : z) top = std::max(top, x);
  probs.assign(z.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    probs[i] = std::exp(z[i] - top);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return (top - z[target]) + std::log(sum);
}

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine_distance: zero vector");
  return 1.0 - dot(a, b) / (na * nb);
}

Vector cosine_distance_grad(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine_distance: zero vector");
  const double cos = dot(a, b) / (na * nb);
  Vector g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    g[i] = -(b[i] / (na * nb) - cos * a[i] / (na * na));
  }
  return g;
}

MarginLoss margin_pair_loss(std::span<const Vector> anchors,
                            std::span<const Vector> positives,
                            std::span<const Vector> negatives, double margin) {
  check_same_sizes(anchors.size(), positives.size(), "margin_pair_loss");
  check_same_sizes(anchors.size(), negatives.size(), "margin_pair_loss");
  if (anchors.empty()) throw std::invalid_argument("margin_pair_loss: empty batch");
  const std::size_t n = anchors.size();
  const double inv = 1.0 / static_cast<double>(n);
  MarginLoss out;
  out.per_pair.resize(n);
  out.grad_anchor.resize(n);
  out.grad_positive.resize(n);
  out.grad_negative.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& a = anchors[i];
    const Vector& p = positives[i];
    const Vector& q = negatives[i];
    if (p.size() != a.size() || q.size() != a.size()) {
      throw ShapeError("margin_pair_loss: vector sizes differ");
    }
    const double hinge = cosine_distance(a, p) - cosine_distance(a, q) + margin;
    out.grad_anchor[i].assign(a.size(), 0.0);
    out.grad_positive[i].assign(a.size(), 0.0);
    out.grad_negative[i].assign(a.size(), 0.0);
    if (hinge <= 0.0) continue;
    out.per_pair[i] = hinge;
    out.value += hinge * inv;
    add_scaled(out.grad_anchor[i], cosine_distance_grad(a, p), inv);
    add_scaled(out.grad_anchor[i], cosine_distance_grad(a, q), -inv);
    add_scaled(out.grad_positive[i], cosine_distance_grad(p, a), inv);
    add_scaled(out.grad_negative[i], cosine_distance_grad(q, a), -inv);
  }
  return out;
}

NceLoss info_nce_loss(std::span<const Vector> anchors, std::span<const Vector> positives,
                      std::span<const Vector> pool,
                      const std::vector<std::vector<std::size_t>>& negatives,
                      double temperature) {
  check_same_sizes(anchors.size(), positives.size(), "info_nce_loss");
  check_same_sizes(anchors.size(), negatives.size(), "info_nce_loss");
  if (!(temperature > 0.0)) throw ConfigError("info_nce_loss: temperature must be > 0");
  const std::size_t dim = anchors.empty() ? 0 : anchors.front().size();
  NceLoss out;
  out.per_anchor.resize(anchors.size());
  out.grad_anchor.assign(anchors.size(), Vector(dim, 0.0));
  out.grad_positive.assign(anchors.size(), Vector(dim, 0.0));
  out.grad_pool.assign(pool.size(), Vector(dim, 0.0));
  std::vector<double> logits;
  std::vector<double> probs;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Vector& a = anchors[i];
    logits.assign(1, dot(a, positives[i]) / temperature);
    for (std::size_t j : negatives[i]) {
      if (j >= pool.size()) throw std::out_of_range("info_nce_loss: negative index");
      logits.push_back(dot(a, pool[j]) / temperature);
    }
    const double term = neg_log_softmax(logits, 0, probs);
    out.per_anchor[i] = term;
    out.value += term;
    // d term / d logit_j = p_j - [j == 0].
    add_scaled(out.grad_anchor[i], positives[i], (probs[0] - 1.0) / temperature);
    add_scaled(out.grad_positive[i], a, (probs[0] - 1.0) / temperature);
    for (std::size_t k = 0; k < negatives[i].size(); ++k) {
      const std::size_t j = negatives[i][k];
      add_scaled(out.grad_anchor[i], pool[j], probs[k + 1] / temperature);
      add_scaled(out.grad_pool[j], a, probs[k + 1] / temperature);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> sample_nce_negatives(
    std::span<const std::string> pool_families,
    const std::vector<std::vector<std::string>>& excluded, std::size_t negatives,
    Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(excluded.size());
  std::vector<std::size_t> eligible;
  for (const auto& skip : excluded) {
    eligible.clear();
    for (std::size_t j = 0; j < pool_families.size(); ++j) {
      if (std::find(skip.begin(), skip.end(), pool_families[j]) == skip.end()) {
        eligible.push_back(j);
      }
    }
    if (eligible.size() < negatives) {
      throw ConfigError("InfoNCE: pool has " + std::to_string(eligible.size()) +
                        " eligible negatives, need " + std::to_string(negatives));
    }
    std::vector<std::size_t> picked;
    for (std::size_t k : rng.sample_without_replacement(eligible.size(), negatives)) {
      picked.push_back(eligible[k]);
    }
    out.push_back(std::move(picked));
  }
  return out;
}

std::size_t sample_negative(std::span<const std::string> pool_families,
                            std::span<const std::string> excluded, Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < pool_families.size(); ++j) {
    if (std::find(excluded.begin(), excluded.end(), pool_families[j]) == excluded.end()) {
      eligible.push_back(j);
    }
  }
  if (eligible.empty()) {
    throw BatchConstructionError("no eligible negative in a pool of " +
                                 std::to_string(pool_families.size()));
  }
  return eligible[rng.uniform_index(eligible.size())];
}

ExemplarLayers compute_exemplars(std::span<const Vector> representations,
                                 std::span<const std::size_t> layer_sizes,
                                 const KMeansOptions& options, Rng& rng) {
  ExemplarLayers out;
  for (std::size_t c : layer_sizes) {
    if (representations.size() < c) {
      throw ConfigError("exemplars: " + std::to_string(representations.size()) +
                        " instances cannot form " + std::to_string(c) + " clusters");
    }
    ClusterModel model = kmeans(representations, c, options, rng);
    for (std::size_t q = 0; q < c; ++q) {
      auto row = model.centroids.row(q);
      if (l2_norm(row) == 0.0) {
        // Members cancel out exactly; fall back to the first member.
        for (std::size_t i = 0; i < model.labels.size(); ++i) {
          if (model.labels[i] == q) {
            std::copy(representations[i].begin(), representations[i].end(), row.begin());
            break;
          }
        }
      }
      normalize_in_place(row);
    }
    out.assignments.push_back(std::move(model.labels));
    out.centroids.push_back(std::move(model.centroids));
  }
  return out;
}

ExemplarLoss exemplar_loss(std::span<const Vector> instances,
                           std::span<const std::size_t> rows, const ExemplarLayers& ex,
                           double temperature) {
  check_same_sizes(instances.size(), rows.size(), "exemplar_loss");
  if (ex.layers() == 0) throw std::invalid_argument("exemplar_loss: no layers");
  const double inv_layers = 1.0 / static_cast<double>(ex.layers());
  ExemplarLoss out;
  out.per_instance.resize(instances.size());
  out.grad.resize(instances.size());
  std::vector<double> logits;
  std::vector<double> probs;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Vector& h = instances[i];
    out.grad[i].assign(h.size(), 0.0);
    double term = 0.0;
    for (std::size_t l = 0; l < ex.layers(); ++l) {
      const Matrix& e = ex.centroids[l];
      if (e.cols() != h.size()) throw ShapeError("exemplar_loss: dimension mismatch");
      const std::size_t target = ex.assignments[l].at(rows[i]);
      logits.resize(e.rows());
      for (std::size_t q = 0; q < e.rows(); ++q) logits[q] = dot(h, e.row(q)) / temperature;
      term += neg_log_softmax(logits, target, probs) * inv_layers;
      for (std::size_t q = 0; q < e.rows(); ++q) {
        const double w = (probs[q] - (q == target ? 1.0 : 0.0)) * inv_layers / temperature;
        add_scaled(out.grad[i], e.row(q), w);
      }
    }
    out.per_instance[i] = term;
    out.value += term;
  }
  return out;
}

ExemplarLoss exemplar_loss(std::span<const Vector> instances, const ExemplarLayers& ex,
                           double temperature) {
  std::vector<std::size_t> rows(instances.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return exemplar_loss(instances, rows, ex, temperature);
}

double total_loss(double pair_within, double pair_cross, double exemplar) {
  return pair_within + pair_cross + exemplar;
}

// ---------------------------------------------------------------------------

PreparedBatch prepare_batch(std::span<const PositivePair> pairs,
                            const std::map<std::string, const Sentence*>& sentences,
                            const Corpus& corpus, std::size_t m, const LossConfig& config,
                            Rng& rng) {
  PreparedBatch batch;
  std::vector<std::string> families;
  auto add = [&](const InstanceRef& ref) {
    auto it = sentences.find(ref.sentence_id);
    if (it == sentences.end()) {
      throw BatchConstructionError("pair refers to unknown sentence '" + ref.sentence_id + "'");
    }
    const Sentence& s = *it->second;
    BatchInstance inst;
    inst.tagged = tag_entities(s);
    const ContextPositions pos =
        ref.variant == Variant::sampled ? ref.positions : deterministic_positions(s, m);
    inst.positions = to_tagged(pos, inst.tagged);
    inst.family = std::string(base_sentence_id(s.id));
    inst.corpus_row = corpus.index_of(inst.family);
    inst.label = s.id + "/" + std::string(to_string(ref.variant));
    families.push_back(inst.family);
    batch.instances.push_back(std::move(inst));
    return batch.instances.size() - 1;
  };

  for (const PositivePair& pair : pairs) {
    BatchItem item;
    item.anchor = add(pair.anchor);
    item.partner = add(pair.partner);
    item.within = is_within_source(pair.source);
    batch.items.push_back(std::move(item));
  }

  const bool nce = config.use_nce_for_pairs;
  for (BatchItem& item : batch.items) {
    if (nce && item.within) continue;
    const std::array<std::string, 2> excluded{families[item.anchor], families[item.partner]};
    try {
      item.negative = sample_negative(families, excluded, rng);
    } catch (const BatchConstructionError&) {
      // Rebuild: bring in another corpus sentence as the negative.
      std::vector<std::size_t> outside;
      for (std::size_t r = 0; r < corpus.size(); ++r) {
        const std::string& id = corpus.sentences()[r].id;
        if (id != excluded[0] && id != excluded[1]) outside.push_back(r);
      }
      if (outside.empty()) {
        throw BatchConstructionError("corpus has no sentence outside the pair (" +
                                     excluded[0] + ", " + excluded[1] + ")");
      }
      const Sentence& s = corpus.sentences()[outside[rng.uniform_index(outside.size())]];
      item.negative = add(deterministic_instance(s.id));
    }
  }

  if (nce) {
    std::vector<std::vector<std::string>> excluded;
    std::vector<std::size_t> owners;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
      if (!batch.items[i].within) continue;
      excluded.push_back({families[batch.items[i].anchor], families[batch.items[i].partner]});
      owners.push_back(i);
    }
    auto drawn = sample_nce_negatives(families, excluded, config.nce_negatives, rng);
    for (std::size_t k = 0; k < owners.size(); ++k) {
      batch.items[owners[k]].nce_negatives = std::move(drawn[k]);
    }
  }
  return batch;
}

BatchLoss batch_loss(const EncoderParams& params, const PreparedBatch& batch,
                     const ExemplarLayers& exemplars, const LossConfig& config,
                     Matrix* table_grad) {
  const std::size_t n = batch.instances.size();
  std::vector<RelationTrace> traces;
  traces.reserve(n);
  std::vector<Vector> vecs;
  vecs.reserve(n);
  for (const BatchInstance& inst : batch.instances) {
    traces.push_back(trace_relation(inst.tagged, inst.positions, params));
    if (traces.back().norm == 0.0) {
      throw std::domain_error("zero relation vector for " + inst.label);
    }
    vecs.push_back(traces.back().normalized);
  }
  const std::size_t width = vecs.empty() ? 0 : vecs.front().size();
  std::vector<Vector> grads(n, Vector(width, 0.0));

  std::vector<const BatchItem*> within;
  std::vector<const BatchItem*> cross;
  for (const BatchItem& item : batch.items) (item.within ? within : cross).push_back(&item);

  BatchLoss out;
  out.n_within = within.size();
  out.n_cross = cross.size();

  auto margin_part = [&](const std::vector<const BatchItem*>& items) {
    std::vector<Vector> a, p, q;
    for (const BatchItem* it : items) {
      a.push_back(vecs[it->anchor]);
      p.push_back(vecs[it->partner]);
      q.push_back(vecs[it->negative]);
    }
    MarginLoss loss = margin_pair_loss(a, p, q, config.margin);
    for (std::size_t i = 0; i < items.size(); ++i) {
      add_scaled(grads[items[i]->anchor], loss.grad_anchor[i], 1.0);
      add_scaled(grads[items[i]->partner], loss.grad_positive[i], 1.0);
      add_scaled(grads[items[i]->negative], loss.grad_negative[i], 1.0);
    }
    return loss.value;
  };

  if (!within.empty()) {
    if (config.use_nce_for_pairs) {
      std::vector<Vector> a, p;
      std::vector<std::vector<std::size_t>> negs;
      for (const BatchItem* it : within) {
        a.push_back(vecs[it->anchor]);
        p.push_back(vecs[it->partner]);
        negs.push_back(it->nce_negatives);
      }
      NceLoss loss = info_nce_loss(a, p, vecs, negs, config.temperature);
      const double inv = 1.0 / static_cast<double>(within.size());
      out.pair_within = loss.value * inv;
      for (std::size_t i = 0; i < within.size(); ++i) {
        add_scaled(grads[within[i]->anchor], loss.grad_anchor[i], inv);
        add_scaled(grads[within[i]->partner], loss.grad_positive[i], inv);
      }
      for (std::size_t j = 0; j < n; ++j) add_scaled(grads[j], loss.grad_pool[j], inv);
    } else {
      out.pair_within = margin_part(within);
    }
  }
  if (!cross.empty()) out.pair_cross = margin_part(cross);

  if (n > 0) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = batch.instances[i].corpus_row;
    ExemplarLoss ex = exemplar_loss(vecs, rows, exemplars, config.temperature);
    const double inv = 1.0 / static_cast<double>(n);
    out.exemplar = ex.value * inv;
    for (std::size_t i = 0; i < n; ++i) add_scaled(grads[i], ex.grad[i], inv);
  }

  out.total = total_loss(out.pair_within, out.pair_cross, out.exemplar);
  if (table_grad != nullptr) {
    for (std::size_t i = 0; i < n; ++i) backprop_relation(traces[i], grads[i], *table_grad);
  }
  return out;
}

std::vector<std::vector<PositivePair>> make_batches(const std::vector<PositivePair>& within,
                                                    const std::vector<PositivePair>& cross,
                                                    std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::size_t total = within.size() + cross.size();
  const std::size_t count = (total + batch_size - 1) / batch_size;
  std::vector<std::vector<PositivePair>> out(count);
  auto share = [&](const std::vector<PositivePair>& src) {
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t lo = b * src.size() / count;
      const std::size_t hi = (b + 1) * src.size() / count;
      out[b].insert(out[b].end(), src.begin() + static_cast<std::ptrdiff_t>(lo),
                    src.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  };
  share(within);
  share(cross);
  return out;
}

// ---------------------------------------------------------------------------

TrainState TrainState::fresh(EncoderParams params) {
  TrainState s;
  s.first_moment = Matrix(params.embeddings.rows(), params.embeddings.cols());
  s.second_moment = Matrix(params.embeddings.rows(), params.embeddings.cols());
  s.params = std::move(params);
  return s;
}

void adamw_step(TrainState& state, const Matrix& grad, const LossConfig& config) {
  auto& theta = state.params.embeddings.data();
  auto& m1 = state.first_moment.data();
  auto& m2 = state.second_moment.data();
  if (grad.data().size() != theta.size() || m1.size() != theta.size() ||
      m2.size() != theta.size()) {
    throw ShapeError("adamw_step: gradient or moment shape differs from parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const double lr = config.learning_rate;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad.data()[i];
    m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * g;
    m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * g * g;
    theta[i] -= lr * config.weight_decay * theta[i];
    theta[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + config.adam_epsilon);
  }
}

void write_loss_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,mean_pair_loss_w,mean_pair_loss_c,mean_exem_loss,mean_total\n";
  std::ostringstream line;
  line.precision(17);
  for (const EpochLog& e : log) {
    line.str("");
    line << e.epoch << ',' << e.mean_pair_loss_w << ',' << e.mean_pair_loss_c << ','
         << e.mean_exem_loss << ',' << e.mean_total << '\n';
    out << line.str();
  }
}

WithinProvider resampling_within(const Corpus& corpus, std::size_t m, EntityPool pool,
                                 std::uint64_t seed, bool entity_aug) {
  return [&corpus, m, pool = std::move(pool), seed, entity_aug](std::size_t epoch) {
    return build_within_pairs(corpus, m, pool, derive_seed(seed, epoch), entity_aug);
  };
}

namespace {

nlohmann::json batch_to_json(const PreparedBatch& batch, const BatchLoss& loss) {
  nlohmann::json items = nlohmann::json::array();
  for (const BatchItem& item : batch.items) {
    items.push_back({{"anchor", batch.instances[item.anchor].label},
                     {"partner", batch.instances[item.partner].label},
                     {"negative", batch.instances[item.negative].label},
                     {"within", item.within}});
  }
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  };
  return {{"items", items},
          {"pair_within", num(loss.pair_within)},
          {"pair_cross", num(loss.pair_cross)},
          {"exemplar", num(loss.exemplar)},
          {"total", num(loss.total)}};
}

}  // namespace

TrainResult train(const Corpus& corpus, const WithinProvider& within,
                  const std::vector<PositivePair>& cross, const LossConfig& config,
                  TrainState state, const TrainOptions& options) {
  config.validate();
  state.params.validate();
  if (state.first_moment.rows() != state.params.embeddings.rows() ||
      state.first_moment.cols() != state.params.embeddings.cols() ||
      state.second_moment.rows() != state.params.embeddings.rows() ||
      state.second_moment.cols() != state.params.embeddings.cols()) {
    throw ConfigError("optimizer state does not match the embedding table");
  }
  if (!within && cross.empty()) throw ConfigError("no positive pairs");
  for (std::size_t c : config.exemplar_layer_sizes) {
    if (corpus.size() < c) {
      throw ConfigError("exemplar layer of " + std::to_string(c) + " clusters exceeds " +
                        std::to_string(corpus.size()) + " sentences");
    }
  }

  TrainResult result;
  result.state = std::move(state);
  TrainState& st = result.state;
  for (std::size_t epoch = st.epoch; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, "epoch-" + std::to_string(epoch)));
    const auto reps = deterministic_representations(corpus, st.params, options.m);
    const ExemplarLayers exemplars =
        compute_exemplars(reps, config.exemplar_layer_sizes, options.kmeans, rng);

    WithinPairs wp = within ? within(epoch) : WithinPairs{};
    std::map<std::string, const Sentence*> sentences;
    for (const Sentence& s : corpus.sentences()) sentences.emplace(s.id, &s);
    for (const SyntheticSentence& s : wp.synthetic) sentences.emplace(s.sentence.id, &s.sentence);

    std::vector<PositivePair> w = std::move(wp.pairs);
    std::vector<PositivePair> c = cross;
    if (w.empty() && c.empty()) throw ConfigError("no positive pairs");
    rng.shuffle(w);
    rng.shuffle(c);

    const auto batches = make_batches(w, c, config.batch_size);
    double sum_w = 0.0, sum_c = 0.0, sum_ex = 0.0, sum_total = 0.0;
    std::size_t n_w = 0, n_c = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const PreparedBatch prepared =
          prepare_batch(batches[b], sentences, corpus, options.m, config, rng);
      Matrix grad(st.params.embeddings.rows(), st.params.embeddings.cols());
      auto fail = [&](const BatchLoss& loss, const std::string& reason) {
        std::string where;
        if (options.diagnostics_dir) {
          std::filesystem::create_directories(*options.diagnostics_dir);
          save_checkpoint(*options.diagnostics_dir / "nonfinite_checkpoint.json", st);
          std::ofstream(*options.diagnostics_dir / "nonfinite_batch.json")
              << batch_to_json(prepared, loss).dump(1) << '\n';
          where = "; snapshot in " + options.diagnostics_dir->string();
        }
        std::ostringstream msg;
        msg << reason << " at epoch " << epoch << ", batch " << b << " (pair_w "
            << loss.pair_within << ", pair_c " << loss.pair_cross << ", exemplar "
            << loss.exemplar << ", " << prepared.items.size() << " pairs, first anchor "
            << (prepared.instances.empty() ? "-" : prepared.instances.front().label) << ")"
            << where;
        throw TrainingError(msg.str());
      };
      BatchLoss loss;
      try {
        loss = batch_loss(st.params, prepared, exemplars, config, &grad);
      } catch (const std::domain_error& e) {
        // Overflowed parameters normalize to zero vectors.
        const double nan = std::numeric_limits<double>::quiet_NaN();
        fail(BatchLoss{nan, nan, nan, nan, 0, 0}, std::string("non-finite loss (") + e.what() + ")");
      }
      if (!std::isfinite(loss.total)) fail(loss, "non-finite loss");
      adamw_step(st, grad, config);
      if (loss.n_within > 0) {
        sum_w += loss.pair_within;
        ++n_w;
      }
      if (loss.n_cross > 0) {
        sum_c += loss.pair_cross;
        ++n_c;
      }
      sum_ex += loss.exemplar;
      sum_total += loss.total;
    }
    EpochLog entry;
    entry.epoch = epoch;
    const double nb = static_cast<double>(std::max<std::size_t>(1, batches.size()));
    entry.mean_pair_loss_w = n_w > 0 ? sum_w / static_cast<double>(n_w) : 0.0;
    entry.mean_pair_loss_c = n_c > 0 ? sum_c / static_cast<double>(n_c) : 0.0;
    entry.mean_exem_loss = sum_ex / nb;
    entry.mean_total = sum_total / nb;
    result.log.push_back(entry);
    st.epoch = epoch + 1;
    if (options.on_epoch) options.on_epoch(entry);
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCheckpointFormat = "augure-checkpoint";
constexpr int kCheckpointVersion = 1;

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols, const char* what) {
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j.at(r).get<std::vector<double>>();
    if (row.size() != cols) {
      throw SchemaError(std::string("checkpoint: ") + what + " row " + std::to_string(r) +
                        " has " + std::to_string(row.size()) + " values, expected " +
                        std::to_string(cols));
    }
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

nlohmann::json checkpoint_to_json(const TrainState& state) {
  const EncoderParams& p = state.params;
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"encoder",
           {{"dim", p.dim},
            {"window", p.window},
            {"vocab", p.vocab},
            {"embeddings", matrix_to_json(p.embeddings)}}},
          {"optimizer",
           {{"step", state.step},
            {"epoch", state.epoch},
            {"first_moment", matrix_to_json(state.first_moment)},
            {"second_moment", matrix_to_json(state.second_moment)}}}};
}

TrainState checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw SchemaError("checkpoint: unknown format");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw SchemaError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto& enc = j.at("encoder");
    TrainState s;
    EncoderParams& p = s.params;
    p.dim = enc.at("dim").get<std::size_t>();
    p.window = enc.at("window").get<std::size_t>();
    p.vocab = enc.at("vocab").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < p.vocab.size(); ++i) {
      if (!p.index.emplace(p.vocab[i], i).second) {
        throw SchemaError("checkpoint: duplicate vocabulary entry '" + p.vocab[i] + "'");
      }
    }
    p.embeddings = matrix_from_json(enc.at("embeddings"), p.dim, "embeddings");
    const auto& opt = j.at("optimizer");
    s.step = opt.at("step").get<std::uint64_t>();
    s.epoch = opt.at("epoch").get<std::size_t>();
    s.first_moment = matrix_from_json(opt.at("first_moment"), p.dim, "first_moment");
    s.second_moment = matrix_from_json(opt.at("second_moment"), p.dim, "second_moment");
    if (s.first_moment.rows() != p.vocab.size() || s.second_moment.rows() != p.vocab.size()) {
      throw SchemaError("checkpoint: optimizer state does not match the vocabulary");
    }
    p.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(state).dump() << '\n';
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

// ---------------------------------------------------------------------------

std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::margin: return "margin";
    case LossKind::info_nce: return "info_nce";
    case LossKind::exemplar: return "exemplar";
    case LossKind::encoder_chain: return "encoder_chain";
  }
  return "?";
}

namespace {

Vector random_vector(std::size_t dim, Rng& rng) {
  Vector v(dim);
  for (double& x : v) x = rng.normal() / std::sqrt(static_cast<double>(dim));
  return v;
}

// Central differences over every coordinate of `vars`; f reads vars.
double compare(std::vector<Vector>& vars, const std::vector<Vector>& analytic,
               const std::function<double()>& f, double eps, std::size_t& coords) {
  double worst = 0.0;
  for (std::size_t v = 0; v < vars.size(); ++v) {
    for (std::size_t i = 0; i < vars[v].size(); ++i) {
      const double saved = vars[v][i];
      vars[v][i] = saved + eps;
      const double up = f();
      vars[v][i] = saved - eps;
      const double down = f();
      vars[v][i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[v][i];
      worst = std::max(worst, std::abs(numeric - a) / std::max(1e-12, std::abs(a)));
      ++coords;
    }
  }
  return worst;
}

constexpr double kHingeClearance = 1e-3;

GradientCheck check_margin(Rng& rng, double eps) {
  GradientCheck out;
  const std::size_t dim = 2 + rng.uniform_index(7);
  const double margin = 0.75;
  std::vector<Vector> vars;  // a0, a1, p0, p1, n0, n1
  for (;;) {
    vars.clear();
    for (int i = 0; i < 6; ++i) vars.push_back(random_vector(dim, rng));
    bool clear = true;
    bool any_active = false;
    for (std::size_t i = 0; i < 2; ++i) {
      const double h = cosine_distance(vars[i], vars[2 + i]) -
                       cosine_distance(vars[i], vars[4 + i]) + margin;
      clear = clear && std::abs(h) > kHingeClearance;
      any_active = any_active || h > 0.0;
    }
    if (clear && any_active) break;
    ++out.resamples;
  }
  auto value = [&] {
    return margin_pair_loss(std::span(vars).subspan(0, 2), std::span(vars).subspan(2, 2),
                            std::span(vars).subspan(4, 2), margin)
        .value;
  };
  const MarginLoss loss = margin_pair_loss(std::span(vars).subspan(0, 2),
                                           std::span(vars).subspan(2, 2),
                                           std::span(vars).subspan(4, 2), margin);
  std::vector<Vector> analytic = loss.grad_anchor;
  analytic.insert(analytic.end(), loss.grad_positive.begin(), loss.grad_positive.end());
  analytic.insert(analytic.end(), loss.grad_negative.begin(), loss.grad_negative.end());
  out.max_relative_error = compare(vars, analytic, value, eps, out.coordinates);
  return out;
}

GradientCheck check_info_nce(Rng& rng, double eps) {
  GradientCheck out;
  const std::size_t dim = 2 + rng.uniform_index(7);
  const double tau = 0.5;
  std::vector<Vector> vars;  // a0, a1, p0, p1, pool0, pool1
  for (int i = 0; i < 6; ++i) vars.push_back(random_vector(dim, rng));
  const std::vector<std::vector<std::size_t>> negs{{0, 1}, {1, 0}};
  auto run = [&] {
    return info_nce_loss(std::span(vars).subspan(0, 2), std::span(vars).subspan(2, 2),
                         std::span(vars).subspan(4, 2), negs, tau);
  };
  const NceLoss loss = run();
  std::vector<Vector> analytic = loss.grad_anchor;
  analytic.insert(analytic.end(), loss.grad_positive.begin(), loss.grad_positive.end());
  analytic.insert(analytic.end(), loss.grad_pool.begin(), loss.grad_pool.end());
  out.max_relative_error =
      compare(vars, analytic, [&] { return run().value; }, eps, out.coordinates);
  return out;
}

GradientCheck check_exemplar(Rng& rng, double eps) {
  GradientCheck out;
  const std::size_t dim = 2 + rng.uniform_index(7);
  const double tau = 0.5;
  const std::size_t n = 6;
  std::vector<Vector> vars;
  for (std::size_t i = 0; i < n; ++i) vars.push_back(random_vector(dim, rng));
  ExemplarLayers ex;
  for (std::size_t c : {2, 3}) {
    Matrix centroids(c, dim);
    for (std::size_t q = 0; q < c; ++q) {
      const Vector v = random_vector(dim, rng);
      std::copy(v.begin(), v.end(), centroids.row(q).begin());
      normalize_in_place(centroids.row(q));
    }
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.uniform_index(c);
    ex.centroids.push_back(std::move(centroids));
    ex.assignments.push_back(std::move(labels));
  }
  const ExemplarLoss loss = exemplar_loss(vars, ex, tau);
  out.max_relative_error = compare(
      vars, loss.grad, [&] { return exemplar_loss(vars, ex, tau).value; }, eps, out.coordinates);
  return out;
}

Sentence tiny_sentence(std::string id, std::vector<std::string> tokens, Span head,
                       Span tail, std::string head_type, std::string tail_type) {
  Sentence s;
  s.id = std::move(id);
  s.tokens = std::move(tokens);
  s.head = head;
  s.tail = tail;
  s.head_type = std::move(head_type);
  s.tail_type = std::move(tail_type);
  return s;
}

// Margin and exemplar terms pushed through normalization, pooling and the
// embedding table. The margin is above the largest possible distance gap
// so no pair sits on the hinge.
GradientCheck check_encoder_chain(Rng& rng, double eps) {
  GradientCheck out;
  const Corpus corpus({
      tiny_sentence("g0", {"ann", "works", "for", "acme", "today"}, {0, 0}, {3, 3}, "PER", "ORG"),
      tiny_sentence("g1", {"bob", "works", "at", "zeta"}, {0, 0}, {3, 3}, "PER", "ORG"),
      tiny_sentence("g2", {"acme", "is", "based", "in", "rome"}, {0, 0}, {4, 4}, "ORG", "LOC"),
      tiny_sentence("g3", {"zeta", "sits", "in", "oslo"}, {0, 0}, {3, 3}, "ORG", "LOC"),
  });
  const std::size_t m = 2;
  EncoderParams params = EncoderParams::initialize(build_vocabulary(corpus), 2, 1, rng);
  LossConfig config;
  config.margin = 2.5;
  config.temperature = 0.5;
  config.exemplar_layer_sizes = {2};

  std::map<std::string, const Sentence*> sentences;
  for (const Sentence& s : corpus.sentences()) sentences.emplace(s.id, &s);
  std::vector<PositivePair> pairs{
      make_dropout_pair(corpus.sentences()[0], m, rng),
      {deterministic_instance("g2"), deterministic_instance("g3"), PairSource::same_template},
  };
  const PreparedBatch batch = prepare_batch(pairs, sentences, corpus, m, config, rng);
  const auto reps = deterministic_representations(corpus, params, m);
  const ExemplarLayers ex = compute_exemplars(reps, config.exemplar_layer_sizes, {}, rng);

  Matrix grad(params.embeddings.rows(), params.embeddings.cols());
  batch_loss(params, batch, ex, config, &grad);
  std::vector<Vector> vars{params.embeddings.data()};
  std::vector<Vector> analytic{grad.data()};
  out.max_relative_error = compare(
      vars, analytic,
      [&] {
        params.embeddings.data() = vars[0];
        return batch_loss(params, batch, ex, config, nullptr).total;
      },
      eps, out.coordinates);
  return out;
}

}  // namespace

GradientCheck gradient_check(LossKind kind, std::uint64_t seed, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) throw ConfigError("gradient_check: eps outside [1e-6, 1e-4]");
  Rng rng(derive_seed(seed, to_string(kind)));
  switch (kind) {
    case LossKind::margin: return check_margin(rng, eps);
    case LossKind::info_nce: return check_info_nce(rng, eps);
    case LossKind::exemplar: return check_exemplar(rng, eps);
    case LossKind::encoder_chain: return check_encoder_chain(rng, eps);
  }
  return {};
}

}  // namespace augure
