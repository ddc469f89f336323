// augure: command-line driver for the relation extraction pipeline.
//
// Config precedence: built-in defaults < preset < config file < AUGURE_*
// environment variables < command-line flags.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "augure/pipeline.hpp"
#include "augure/synthetic.hpp"

namespace fs = std::filesystem;
using namespace augure;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kIngest = 3,
  kMine = 4,
  kTrain = 5,
  kCluster = 6,
  kEvaluate = 7,
  kStats = 8,
  kOther = 9,
};

int exit_code(Stage s) {
  switch (s) {
    case Stage::ingest: return kIngest;
    case Stage::mine: return kMine;
    case Stage::train: return kTrain;
    case Stage::cluster: return kCluster;
    case Stage::evaluate: return kEvaluate;
    case Stage::stats: return kStats;
  }
  return kOther;
}

std::string kebab(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

// One flag per config key; each pipeline subcommand gets its own set.
struct ConfigFlags {
  std::string config_file;
  std::string preset;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config_file, "JSON run config");
    app.add_option("--preset", preset, "default | nyt-fb | tacred | synthetic");
    const nlohmann::json defaults = to_json(RunConfig{});
    for (const auto& [key, value] : defaults.items()) {
      if (key == "schema_version" || key == "preset") continue;
      const std::string flag = "--" + kebab(key);
      if (value.is_boolean()) {
        options[key] = app.add_flag(flag, switches[key], "default " + value.dump());
      } else {
        const std::string shown = value.is_string() ? value.get<std::string>() : value.dump();
        options[key] = app.add_option(flag, values[key], "default " + shown);
      }
    }
  }

  RunConfig resolve() const {
    nlohmann::json file = nlohmann::json::object();
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot read config " + config_file);
      try {
        in >> file;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + config_file + ": " + e.what());
      }
      run_config_from_json(file);  // key and type check
    }
    std::string chosen = preset;
    if (chosen.empty()) {
      if (const char* env = std::getenv("AUGURE_PRESET")) chosen = env;
    }
    if (chosen.empty() && file.contains("preset")) chosen = file.at("preset").get<std::string>();
    RunConfig base = chosen.empty() ? RunConfig{} : apply_preset(RunConfig{}, chosen);

    nlohmann::json merged = to_json(base);
    for (const auto& [key, value] : file.items()) {
      if (key != "preset") merged[key] = value;
    }
    for (auto& [key, value] : merged.items()) {
      if (key == "schema_version" || key == "preset") continue;
      if (const char* env = std::getenv(("AUGURE_" + to_upper(key)).c_str())) {
        apply_override(merged, key, env);
      }
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      if (switches.contains(key)) {
        merged[key] = switches.at(key);
      } else {
        apply_override(merged, key, values.at(key));
      }
    }
    return run_config_from_json(merged);
  }
};

void write_run_header(const RunConfig& c) {
  fs::create_directories(c.output_dir);
  std::ofstream(c.output_dir / "config.json") << to_json(c).dump(2) << '\n';
  std::ofstream(c.output_dir / "manifest.json") << manifest(c).dump(2) << '\n';
}

void print_report(std::uint64_t seed, const EvaluationReport& r) {
  std::cout << "seed " << seed << ": B3 F1 " << round_percent(r.b3_f1) << "  V F1 "
            << round_percent(r.v_f1) << "  ARI " << round_percent(r.ari) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"augure: unsupervised relation extraction with augmented positive pairs"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "validate the corpus");
  auto* mine = app.add_subcommand("mine", "mine within- and cross-sentence pairs");
  auto* train_cmd = app.add_subcommand("train", "train the encoder on mined pairs");
  auto* cluster = app.add_subcommand("cluster", "cluster sentences with the trained encoder");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score predicted labels against gold");
  auto* all = app.add_subcommand("all", "ingest, mine, train, cluster and evaluate");
  auto* ablate = app.add_subcommand("ablate", "run the ablation variants");
  auto* stats = app.add_subcommand("stats", "render mining statistics of a run");
  std::map<CLI::App*, std::unique_ptr<ConfigFlags>> flags;
  for (CLI::App* sub : {ingest, mine, train_cmd, cluster, evaluate_cmd, all, ablate, stats}) {
    flags[sub] = std::make_unique<ConfigFlags>();
    flags[sub]->attach(*sub);
  }

  auto* synth = app.add_subcommand("synth", "write the synthetic corpus and its rewrites");
  std::string synth_out = "synthetic";
  std::uint64_t synth_seed = 7;
  std::size_t synth_sentences = 300;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--sentences", synth_sentences, "sentence count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) {
      SyntheticOptions options;
      options.sentences = synth_sentences;
      const SyntheticCorpus sc = generate_synthetic(synth_seed, options);
      fs::create_directories(synth_out);
      std::ofstream corpus_out(fs::path(synth_out) / "corpus.jsonl", std::ios::binary);
      write_corpus(corpus_out, sc.corpus);
      std::ofstream rewrites_out(fs::path(synth_out) / "rewrites.jsonl", std::ios::binary);
      for (const RewriteRecord& r : sc.rewrites) {
        rewrites_out << sentence_to_json(r.rewritten).dump() << '\n';
      }
      std::cout << "wrote " << sc.corpus.size() << " sentences to " << synth_out << '\n';
      return kOk;
    }

    const RunConfig c = flags.at(app.get_subcommands().front())->resolve();
    if (!stats->parsed()) c.validate();

    if (all->parsed()) {
      const RunOutcome out = run_pipeline(c);
      for (const SeedOutcome& s : out.seeds) {
        if (s.report) print_report(s.seed, *s.report);
      }
      if (out.summary) {
        std::cout << "aggregate over " << out.summary->runs << " seed(s): "
                  << to_json(*out.summary).dump(2) << '\n';
      }
      return kOk;
    }
    if (ablate->parsed()) {
      std::cout << render_ablation(run_ablation_suite(c));
      return kOk;
    }
    if (stats->parsed()) {
      std::cout << emit_stats(c.output_dir);
      return kOk;
    }

    write_run_header(c);
    const Corpus corpus = run_ingest(c);
    if (ingest->parsed()) {
      std::cout << "ok: " << corpus.size() << " sentences, "
                << corpus.entity_types().size() << " entity types\n";
      return kOk;
    }
    for (std::uint64_t seed : c.seeds) {
      if (mine->parsed()) {
        std::cout << "seed " << seed << '\n' << render_stats(run_mine(c, corpus, seed).stats);
      } else if (train_cmd->parsed()) {
        const TrainResult r = run_train(c, corpus, seed);
        std::cout << "seed " << seed << '\n';
        write_loss_log(std::cout, r.log);
      } else if (cluster->parsed()) {
        const auto labels = run_cluster(c, corpus, seed);
        std::cout << "seed " << seed << ": " << labels.size() << " sentences labelled\n";
      } else if (evaluate_cmd->parsed()) {
        print_report(seed, run_evaluate(c, corpus, seed));
      }
    }
    return kOk;
  } catch (const StageFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.config_error() ? kConfig : exit_code(e.stage());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
