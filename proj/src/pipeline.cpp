#include "augure/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <set>
#include <sstream>

#include "augure/clustering.hpp"
#include "augure/nli.hpp"
#include "augure/pairs_within.hpp"

namespace augure {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config.
// ---------------------------------------------------------------------------

namespace {

#define AUGURE_RUN_FIELDS(X)                                                        \
  X(preset) X(corpus) X(triples) X(nli_scores) X(rewrites) X(encodings) X(output_dir) \
  X(nli_mode) X(nli_host) X(nli_port) X(encoder_mode) X(embedding_dim) X(window)     \
  X(margin) X(temperature) X(nce_negatives) X(learning_rate) X(epochs) X(batch_size) \
  X(weight_decay) X(exemplar_layers) X(m) X(t) X(r) X(f) X(k) X(same_template_cap)   \
  X(kmeans_max_iter) X(kmeans_tol) X(kmeans_restarts) X(no_entity_aug)               \
  X(no_within_pairs) X(no_chatgpt_pairs) X(no_cross_pairs) X(nce_for_pairs) X(seeds)  \
  X(parallel_seeds)

template <class T>
void put(nlohmann::json& j, const char* key, const T& v) {
  j[key] = v;
}
void put(nlohmann::json& j, const char* key, const fs::path& v) { j[key] = v.generic_string(); }

template <class T>
void take(const nlohmann::json& j, const char* key, T& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}
void take(const nlohmann::json& j, const char* key, fs::path& v) {
  if (j.contains(key)) v = j.at(key).get<std::string>();
}

// Integers where the default is an integer, non-negative where unsigned.
bool compatible(const nlohmann::json& def, const nlohmann::json& v) {
  using T = nlohmann::json::value_t;
  switch (def.type()) {
    case T::boolean: return v.is_boolean();
    case T::string: return v.is_string();
    case T::number_float: return v.is_number();
    case T::number_integer: return v.is_number_integer();
    case T::number_unsigned: return v.is_number_unsigned();
    case T::array:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const nlohmann::json& x) {
               return x.is_number_unsigned();
             });
    default: return def.type() == v.type();
  }
}

const std::set<std::string> kNliModes{"lexical_stub", "offline_file", "http_gateway"};
const std::set<std::string> kEncoderModes{"trainable", "external"};

}  // namespace

void RunConfig::validate() const {
  loss_config(0).validate();
  if (corpus.empty()) throw ConfigError("corpus path is required");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (t < 1) throw ConfigError("t must be >= 1");
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("r must lie in (0, 1]");
  if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("f must lie in [0, 1]");
  if (k < 2) throw ConfigError("k must be >= 2");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (kmeans_max_iter < 1) throw ConfigError("kmeans_max_iter must be >= 1");
  if (!(kmeans_tol >= 0.0)) throw ConfigError("kmeans_tol must be >= 0");
  if (!kNliModes.contains(nli_mode)) throw ConfigError("unknown nli_mode '" + nli_mode + "'");
  if (nli_mode == "offline_file" && nli_scores.empty()) {
    throw ConfigError("nli_mode offline_file needs nli_scores");
  }
  if (!kEncoderModes.contains(encoder_mode)) {
    throw ConfigError("unknown encoder_mode '" + encoder_mode + "'");
  }
  if (encoder_mode == "external" && encodings.empty()) {
    throw ConfigError("encoder_mode external needs an encodings file");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (no_within_pairs && no_cross_pairs) throw ConfigError("no positive pairs");
}

std::vector<std::size_t> RunConfig::exemplar_sizes() const {
  if (!exemplar_layers.empty()) return exemplar_layers;
  return {k, 2 * k, 4 * k};
}

LossConfig RunConfig::loss_config(std::uint64_t seed) const {
  LossConfig lc;
  lc.margin = margin;
  lc.temperature = temperature;
  lc.nce_negatives = nce_negatives;
  lc.use_nce_for_pairs = nce_for_pairs;
  lc.exemplar_layer_sizes = exemplar_sizes();
  lc.learning_rate = learning_rate;
  lc.epochs = epochs;
  lc.batch_size = batch_size;
  lc.weight_decay = weight_decay;
  lc.seed = derive_seed(seed, "training");
  return lc;
}

CrossMiningOptions RunConfig::mining_options() const {
  CrossMiningOptions o;
  o.threshold = t;
  o.ratio = r;
  o.rewrite_fraction = f;
  o.cap_per_template = same_template_cap;
  o.use_rewrites = !no_chatgpt_pairs;
  return o;
}

KMeansOptions RunConfig::kmeans_options() const {
  return {kmeans_max_iter, kmeans_tol, kmeans_restarts};
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
#define AUGURE_PUT(name) put(j, #name, c.name);
  AUGURE_RUN_FIELDS(AUGURE_PUT)
#undef AUGURE_PUT
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const nlohmann::json known = to_json(RunConfig{});
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    if (!compatible(known.at(key), value)) {
      throw ConfigError("config key '" + key + "' has the wrong type: " + value.dump());
    }
  }
  if (j.contains("schema_version") && j.at("schema_version") != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version " + j.at("schema_version").dump());
  }
  RunConfig c;
  std::string current;
  try {
#define AUGURE_TAKE(name) current = #name; take(j, #name, c.name);
    AUGURE_RUN_FIELDS(AUGURE_TAKE)
#undef AUGURE_TAKE
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + current + "' has the wrong type: " + j.at(current).dump());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::vector<std::string> preset_names() { return {"default", "nyt-fb", "tacred", "synthetic"}; }

RunConfig apply_preset(RunConfig c, std::string_view name) {
  if (name == "default") {
  } else if (name == "nyt-fb") {
    c.t = 4;
    c.k = 10;
  } else if (name == "tacred") {
    c.t = 2;
    c.k = 10;
  } else if (name == "synthetic") {
    // The toy encoder is a small embedding table trained from scratch; the
    // fine-tuning step size barely moves it.
    c.t = 4;
    c.k = 5;
    c.learning_rate = 0.01;
    c.embedding_dim = 16;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  c.preset = std::string(name);
  return c;
}

namespace {

bool parse_bool(const std::string& v) {
  const std::string s = to_lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

std::uint64_t parse_unsigned(const std::string& v) {
  std::size_t used = 0;
  try {
    if (!v.empty() && v.front() == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a non-negative integer, got '" + v + "'");
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  try {
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a number, got '" + v + "'");
}

}  // namespace

void apply_override(nlohmann::json& config, const std::string& key, const std::string& value) {
  if (!config.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  nlohmann::json& slot = config[key];
  try {
    switch (slot.type()) {
      case nlohmann::json::value_t::boolean: slot = parse_bool(value); break;
      case nlohmann::json::value_t::number_unsigned: slot = parse_unsigned(value); break;
      case nlohmann::json::value_t::number_integer: {
        std::size_t used = 0;
        const long long x = std::stoll(value, &used);
        if (used != value.size()) throw ConfigError("trailing characters");
        slot = x;
        break;
      }
      case nlohmann::json::value_t::number_float: slot = parse_double(value); break;
      case nlohmann::json::value_t::array: {
        nlohmann::json items = nlohmann::json::array();
        std::string item;
        std::istringstream in(value);
        while (std::getline(in, item, ',')) {
          if (!item.empty()) items.push_back(parse_unsigned(item));
        }
        slot = items;
        break;
      }
      default: slot = value; break;
    }
  } catch (const ConfigError& e) {
    throw ConfigError("--" + key + ": " + e.what());
  } catch (const std::exception&) {
    throw ConfigError("--" + key + ": cannot parse '" + value + "'");
  }
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
  return buf;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::mine: return "mine";
    case Stage::train: return "train";
    case Stage::cluster: return "cluster";
    case Stage::evaluate: return "evaluate";
    case Stage::stats: return "stats";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

namespace {

template <class F>
auto in_stage(Stage stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageFailure&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageFailure(stage, e.what(), true);
  } catch (const std::exception& e) {
    throw StageFailure(stage, e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  open_out(path) << j.dump(2) << '\n';
}

void require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw StageDependencyError("missing " + path.string() + " (run '" + std::string(producer) +
                               "' first)");
  }
}

std::vector<PositivePair> read_pairs_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return read_pairs(in, path.string());
}

std::uint64_t within_seed(std::uint64_t seed) { return derive_seed(seed, "within-pairs"); }

}  // namespace

fs::path seed_dir(const RunConfig& c, std::uint64_t seed) {
  return c.output_dir / ("seed-" + std::to_string(seed));
}

Corpus run_ingest(const RunConfig& c) {
  return in_stage(Stage::ingest, [&] {
    Corpus corpus = load_corpus(c.corpus);
    if (corpus.empty()) throw ValidationError("", "corpus " + c.corpus.string() + " is empty");
    fs::create_directories(c.output_dir);
    const EntityPool pool = build_entity_pool(corpus);
    nlohmann::json types;
    for (const auto& [type, bucket] : pool.buckets) types[type] = bucket.size();
    write_json(c.output_dir / "ingest.json",
               {{"sentences", corpus.size()},
                {"entity_surface_forms", types},
                {"gold_relations", corpus.has_gold()},
                {"stop_words", stop_word_list_version()}});
    return corpus;
  });
}

CrossMining run_mine(const RunConfig& c, const Corpus& corpus, std::uint64_t seed) {
  return in_stage(Stage::mine, [&] {
    const fs::path dir = seed_dir(c, seed);
    fs::create_directories(dir);
    std::vector<std::string> diagnostics;

    std::vector<Triple> triples;
    if (c.triples.empty()) {
      triples = extract_all_builtin(corpus);
    } else {
      TripleLoad load = load_external_triples(c.triples, corpus);
      diagnostics.insert(diagnostics.end(), load.diagnostics.begin(), load.diagnostics.end());
      triples = in_corpus_order(load.triples, corpus);
    }

    std::optional<std::map<std::string, RewriteRecord>> rewrites;
    if (!c.rewrites.empty() && !c.no_chatgpt_pairs) {
      RewriteLoad load = load_rewrites(c.rewrites, corpus);
      diagnostics.insert(diagnostics.end(), load.diagnostics.begin(), load.diagnostics.end());
      rewrites = std::move(load.records);
    }

    NliSettings nli{c.nli_mode, c.nli_scores, c.nli_host, c.nli_port};
    auto adapter = make_entailment_adapter(nli);
    CrossMining mined = mine_cross_pairs(corpus, triples, *adapter,
                                         rewrites ? &*rewrites : nullptr, c.mining_options(),
                                         seed);

    std::vector<PositivePair> within;
    if (!c.no_within_pairs) {
      within = build_within_pairs(corpus, c.m, build_entity_pool(corpus),
                                  derive_seed(within_seed(seed), std::uint64_t{0}),
                                  !c.no_entity_aug)
                   .pairs;
    }
    {
      auto out = open_out(dir / "pairs_within.jsonl");
      write_pairs(out, within);
    }
    {
      auto out = open_out(dir / "pairs_cross.jsonl");
      write_pairs(out, mined.all_pairs());
    }
    write_json(dir / "templates.json", to_json(mined.table));
    write_json(dir / "mining_stats.json", to_json(mined.stats));
    open_out(dir / "mining_stats.txt") << render_stats(mined.stats);
    {
      auto out = open_out(dir / "nli_queries.jsonl");
      for (const auto& [p, h] : entailment_queries(mined.table, corpus)) {
        out << nlohmann::json{{"premise", p}, {"hypothesis", h}}.dump() << '\n';
      }
    }
    auto diag = open_out(dir / "mining_diagnostics.txt");
    for (const std::string& d : diagnostics) diag << d << '\n';
    return mined;
  });
}

TrainResult run_train(const RunConfig& c, const Corpus& corpus, std::uint64_t seed) {
  return in_stage(Stage::train, [&] {
    if (c.encoder_mode == "external") {
      throw ConfigError("external encodings are frozen; training is disabled in this mode");
    }
    const fs::path dir = seed_dir(c, seed);
    require(dir / "pairs_cross.jsonl", "mine");
    std::vector<PositivePair> cross;
    if (!c.no_cross_pairs) cross = read_pairs_file(dir / "pairs_cross.jsonl");

    WithinProvider within;
    if (!c.no_within_pairs) {
      within = resampling_within(corpus, c.m, build_entity_pool(corpus), within_seed(seed),
                                 !c.no_entity_aug);
    }
    Rng init(derive_seed(seed, "encoder-init"));
    EncoderParams params =
        EncoderParams::initialize(build_vocabulary(corpus), c.embedding_dim, c.window, init);

    TrainOptions options;
    options.m = c.m;
    options.kmeans = c.kmeans_options();
    options.diagnostics_dir = dir / "diagnostics";
    TrainResult result = train(corpus, within, cross, c.loss_config(seed),
                               TrainState::fresh(std::move(params)), options);
    {
      auto out = open_out(dir / "loss_log.csv");
      write_loss_log(out, result.log);
    }
    save_checkpoint(dir / "checkpoint.json", result.state);
    return result;
  });
}

std::vector<std::size_t> run_cluster(const RunConfig& c, const Corpus& corpus,
                                     std::uint64_t seed) {
  return in_stage(Stage::cluster, [&] {
    const fs::path dir = seed_dir(c, seed);
    fs::create_directories(dir);
    if (c.k > corpus.size()) {
      throw ConfigError("k = " + std::to_string(c.k) + " exceeds the " +
                        std::to_string(corpus.size()) + " corpus sentences");
    }
    std::vector<Vector> reps;
    if (c.encoder_mode == "external") {
      reps = deterministic_representations(corpus, load_external_encodings(c.encodings, corpus),
                                           c.m);
    } else {
      require(dir / "checkpoint.json", "train");
      reps = deterministic_representations(corpus, load_checkpoint(dir / "checkpoint.json").params,
                                           c.m);
    }
    Rng rng(derive_seed(seed, "inference-kmeans"));
    const ClusterModel model = kmeans(reps, c.k, c.kmeans_options(), rng);
    const auto labels = assign(reps, model);
    auto out = open_out(dir / "labels.jsonl");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      out << nlohmann::json{{"id", corpus.sentences()[i].id}, {"label", labels[i]}}.dump()
          << '\n';
    }
    return labels;
  });
}

EvaluationReport run_evaluate(const RunConfig& c, const Corpus& corpus, std::uint64_t seed) {
  return in_stage(Stage::evaluate, [&] {
    const fs::path dir = seed_dir(c, seed);
    require(dir / "labels.jsonl", "cluster");
    std::map<std::string, std::size_t> pred;
    std::ifstream in(dir / "labels.jsonl", std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        pred[j.at("id").get<std::string>()] = j.at("label").get<std::size_t>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "labels.jsonl").string(), line_no, e.what());
      }
    }
    std::map<std::string, std::string> gold;
    for (const Sentence& s : corpus.sentences()) {
      if (s.gold_relation) gold[s.id] = *s.gold_relation;
    }
    const EvaluationReport report = evaluate(pred, gold);
    write_json(dir / "report.json", to_json(report));
    return report;
  });
}

// ---------------------------------------------------------------------------
// Whole runs.
// ---------------------------------------------------------------------------

namespace {

MetricSummary summarize(std::vector<double> xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  s.median = xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
  return s;
}

nlohmann::json to_json(const MetricSummary& s) {
  std::ostringstream text;
  text << std::fixed << std::setprecision(1) << round_percent(s.mean) << " ± "
       << round_percent(s.std);
  return {{"mean", s.mean}, {"std", s.std}, {"median", s.median}, {"x100", text.str()}};
}

}  // namespace

Aggregate aggregate(const std::vector<EvaluationReport>& reports) {
  Aggregate a;
  a.runs = reports.size();
  auto field = [&](double EvaluationReport::*member) {
    std::vector<double> xs;
    for (const auto& r : reports) xs.push_back(r.*member);
    return summarize(std::move(xs));
  };
  a.b3_precision = field(&EvaluationReport::b3_precision);
  a.b3_recall = field(&EvaluationReport::b3_recall);
  a.b3_f1 = field(&EvaluationReport::b3_f1);
  a.homogeneity = field(&EvaluationReport::homogeneity);
  a.completeness = field(&EvaluationReport::completeness);
  a.v_f1 = field(&EvaluationReport::v_f1);
  a.ari = field(&EvaluationReport::ari);
  return a;
}

nlohmann::json to_json(const Aggregate& a) {
  return {{"runs", a.runs},
          {"b3_precision", to_json(a.b3_precision)},
          {"b3_recall", to_json(a.b3_recall)},
          {"b3_f1", to_json(a.b3_f1)},
          {"homogeneity", to_json(a.homogeneity)},
          {"completeness", to_json(a.completeness)},
          {"v_f1", to_json(a.v_f1)},
          {"ari", to_json(a.ari)}};
}

nlohmann::json manifest(const RunConfig& c) {
  return {{"tool", "augure"},
          {"version", kToolVersion},
          {"config_schema", kConfigSchemaVersion},
          {"config_hash", config_hash(c)},
          {"config", to_json(c)},
          {"stop_words", stop_word_list_version()},
          {"training", c.encoder_mode == "external" ? "disabled (external encodings)" : "enabled"}};
}

RunOutcome run_pipeline(const RunConfig& c) {
  c.validate();
  fs::create_directories(c.output_dir);
  write_json(c.output_dir / "config.json", to_json(c));
  write_json(c.output_dir / "manifest.json", manifest(c));

  const Corpus corpus = run_ingest(c);
  if (c.k > corpus.size()) {
    throw ConfigError("k = " + std::to_string(c.k) + " exceeds the " +
                      std::to_string(corpus.size()) + " corpus sentences");
  }
  if (c.encoder_mode == "trainable") {
    for (std::size_t size : c.exemplar_sizes()) {
      if (size > corpus.size()) {
        throw ConfigError("exemplar layer of " + std::to_string(size) + " clusters exceeds the " +
                          std::to_string(corpus.size()) + " corpus sentences");
      }
    }
  }
  bool any_gold = false;
  for (const Sentence& s : corpus.sentences()) any_gold = any_gold || s.gold_relation.has_value();

  auto one_seed = [&](std::uint64_t seed) {
    SeedOutcome out;
    out.seed = seed;
    run_mine(c, corpus, seed);
    if (c.encoder_mode == "trainable") out.log = run_train(c, corpus, seed).log;
    out.labels = run_cluster(c, corpus, seed);
    if (any_gold) out.report = run_evaluate(c, corpus, seed);
    return out;
  };

  RunOutcome outcome;
  if (c.parallel_seeds && c.seeds.size() > 1) {
    std::vector<std::future<SeedOutcome>> jobs;
    for (std::uint64_t seed : c.seeds) jobs.push_back(std::async(std::launch::async, one_seed, seed));
    for (auto& job : jobs) outcome.seeds.push_back(job.get());
  } else {
    for (std::uint64_t seed : c.seeds) outcome.seeds.push_back(one_seed(seed));
  }

  if (any_gold) {
    std::vector<EvaluationReport> reports;
    nlohmann::json per_seed = nlohmann::json::object();
    for (const SeedOutcome& s : outcome.seeds) {
      reports.push_back(*s.report);
      per_seed[std::to_string(s.seed)] = to_json(*s.report);
    }
    outcome.summary = aggregate(reports);
    write_json(c.output_dir / "aggregate.json",
               {{"summary", to_json(*outcome.summary)}, {"per_seed", per_seed}});
  }
  return outcome;
}

std::vector<std::string> ablation_variants() {
  return {"full", "no_entity_aug", "no_within_pairs", "no_chatgpt_pairs", "no_cross_pairs",
          "nce_pairs"};
}

RunConfig ablation_config(const RunConfig& base, const std::string& variant) {
  RunConfig c = base;
  c.output_dir = base.output_dir / variant;
  if (variant == "full") {
  } else if (variant == "no_entity_aug") {
    c.no_entity_aug = true;
  } else if (variant == "no_within_pairs") {
    c.no_within_pairs = true;
  } else if (variant == "no_chatgpt_pairs") {
    c.no_chatgpt_pairs = true;
  } else if (variant == "no_cross_pairs") {
    c.no_cross_pairs = true;
  } else if (variant == "nce_pairs") {
    c.nce_for_pairs = true;
  } else {
    throw ConfigError("unknown ablation variant '" + variant + "'");
  }
  return c;
}

namespace {

std::string variant_label(const std::string& v) {
  if (v == "full") return "Full";
  if (v == "no_entity_aug") return "- Entity Augmentation";
  if (v == "no_within_pairs") return "- Within-Sentence Pairs";
  if (v == "no_chatgpt_pairs") return "- Rewrite-Derived Pairs";
  if (v == "no_cross_pairs") return "- Cross-Sentence Pairs";
  if (v == "nce_pairs") return "Pair loss replaced with NCE";
  return v;
}

}  // namespace

AblationTable run_ablation_suite(const RunConfig& base) {
  base.validate();
  AblationTable table;
  nlohmann::json rows = nlohmann::json::array();
  for (const std::string& v : ablation_variants()) {
    AblationRow row;
    row.variant = v;
    try {
      row.summary = run_pipeline(ablation_config(base, v)).summary;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back({{"variant", v},
                    {"summary", row.summary ? to_json(*row.summary) : nlohmann::json(nullptr)},
                    {"error", row.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(row.error)}});
    table.rows.push_back(std::move(row));
  }
  fs::create_directories(base.output_dir);
  write_json(base.output_dir / "ablation.json", rows);
  open_out(base.output_dir / "ablation.txt") << render_ablation(table);
  return table;
}

std::string render_ablation(const AblationTable& t) {
  std::ostringstream os;
  auto cell = [](const MetricSummary& s) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(1) << round_percent(s.mean) << " ± "
      << round_percent(s.std);
    return c.str();
  };
  os << std::left << std::setw(30) << "Variant" << std::setw(16) << "B3 F1" << std::setw(16)
     << "V F1" << "ARI" << '\n';
  for (const AblationRow& row : t.rows) {
    os << std::left << std::setw(30) << variant_label(row.variant);
    if (row.summary) {
      // "±" is two bytes; pad by hand so columns line up.
      const std::string b3 = cell(row.summary->b3_f1);
      const std::string v = cell(row.summary->v_f1);
      os << b3 << std::string(b3.size() < 17 ? 17 - b3.size() : 1, ' ') << v
         << std::string(v.size() < 17 ? 17 - v.size() : 1, ' ') << cell(row.summary->ari);
    } else if (!row.error.empty()) {
      os << "failed: " << row.error;
    } else {
      os << "no gold labels";
    }
    os << '\n';
  }
  return os.str();
}

std::string emit_stats(const fs::path& run_dir) {
  return in_stage(Stage::stats, [&] {
    std::vector<std::pair<std::uint64_t, fs::path>> found;
    if (fs::is_directory(run_dir)) {
      for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || name.rfind("seed-", 0) != 0) continue;
        const fs::path stats = entry.path() / "mining_stats.json";
        if (!fs::exists(stats)) continue;
        try {
          found.emplace_back(std::stoull(name.substr(5)), stats);
        } catch (const std::exception&) {
        }
      }
    }
    if (found.empty()) {
      throw StageDependencyError("no mining statistics under " + run_dir.string() +
                                 " (run 'mine' first)");
    }
    std::sort(found.begin(), found.end());
    std::ostringstream os;
    for (std::size_t i = 0; i < found.size(); ++i) {
      std::ifstream in(found[i].second, std::ios::binary);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError(found[i].second.string() + ": " + e.what());
      }
      if (i > 0) os << '\n';
      os << "== seed " << found[i].first << " ==\n" << render_stats(mining_stats_from_json(j));
    }
    open_out(run_dir / "stats.txt") << os.str();
    return os.str();
  });
}

}  // namespace augure
