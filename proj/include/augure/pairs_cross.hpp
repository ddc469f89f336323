#pragma once

// Cross-sentence positive pairs: relation templates from (subject, predicate,
// object) triples, mutual-entailment grouping of templates, and pairs mined
// from rewritten sentences.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "augure/corpus.hpp"
#include "augure/nli.hpp"
#include "augure/pairs_within.hpp"
#include "json.hpp"

namespace augure {

struct Triple {
  std::string sentence_id;
  std::vector<std::string> subject;
  std::vector<std::string> predicate;
  std::vector<std::string> object;

  // Lowercased, space-joined predicate.
  std::string template_key() const;
  bool operator==(const Triple&) const = default;
};

inline constexpr std::size_t kBuiltinPredicateCap = 8;

// Predicate = the tokens strictly between the two entities, lowercased.
// Absent when that gap has no non-stop token or is longer than
// kBuiltinPredicateCap.
std::optional<Triple> extract_triples_builtin(const Sentence& s);

struct TripleLoad {
  std::map<std::string, Triple> triples;
  std::vector<std::string> diagnostics;
};

// JSONL {"id", "subject": [...], "predicate": [...], "object": [...]}. Triples
// whose subject/object do not exactly match the sentence's head/tail, or whose
// predicate has no non-stop token, are dropped with a diagnostic. Among valid
// triples for one sentence the shortest predicate wins (first on ties).
TripleLoad load_external_triples(const std::filesystem::path& path,
                                 const Corpus& corpus);

// Built-in extraction over the whole corpus, in corpus order.
std::vector<Triple> extract_all_builtin(const Corpus& corpus);
// Map -> vector in corpus order.
std::vector<Triple> in_corpus_order(const std::map<std::string, Triple>& triples,
                                    const Corpus& corpus);

struct TemplateTable {
  std::size_t threshold = 0;
  // Retained templates only: key -> sentence ids in input order.
  std::map<std::string, std::vector<std::string>> groups;
  // Distinct predicates seen before thresholding.
  std::size_t candidate_templates = 0;

  std::size_t covered_sentences() const;
  const std::vector<std::string>& sentences_of(const std::string& key) const;
};

// Keeps predicates shared by more than `t` sentences.
TemplateTable build_template_table(std::span<const Triple> triples, std::size_t t);

// All unordered pairs inside each group. `cap_per_template` > 0 keeps only
// the first that many pairs of a group.
std::vector<PositivePair> same_template_pairs(const TemplateTable& tbl,
                                              std::size_t cap_per_template = 0);

// Sentence with its head span collapsed to "[h]" and tail span to "[t]".
std::string premise(const Sentence& s);
std::vector<std::string> premise_set(const std::string& tp,
                                     const TemplateTable& tbl,
                                     const Corpus& corpus);
std::string hypothesis(const std::string& tp);

// True iff at least a fraction r of tp1's premises are judged to entail
// hypothesis(tp2).
bool template_entails(const std::string& tp1, const std::string& tp2,
                      const TemplateTable& tbl, const Corpus& corpus,
                      EntailmentAdapter& adapter, double r);

struct EntailedTemplates {
  std::string first;
  std::string second;
};

// Template pairs that entail each other in both directions.
std::vector<EntailedTemplates> mutually_entailed_templates(
    const TemplateTable& tbl, const Corpus& corpus, EntailmentAdapter& adapter,
    double r);

// All cross-group sentence pairs for every mutually entailed template pair.
// No transitive closure.
std::vector<PositivePair> mutual_pairs(const TemplateTable& tbl,
                                       const Corpus& corpus,
                                       EntailmentAdapter& adapter, double r);

// Every (premise, hypothesis) query the grouping step will issue; feeds the
// gateway's batch dump job.
std::vector<std::pair<std::string, std::string>> entailment_queries(
    const TemplateTable& tbl, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Rewrites.
// ---------------------------------------------------------------------------

std::string rewrite_prompt(const Sentence& s);

struct RewriteRecord {
  std::string sentence_id;
  // Rewritten tokens and spans; id equals the original sentence id.
  Sentence rewritten;
};

struct RewriteLoad {
  std::map<std::string, RewriteRecord> records;
  std::vector<std::string> diagnostics;
};

// JSONL {"id", "tokens", "head": {...}, "tail": {...}}. Records with missing
// or invalid spans, unknown ids or mismatched entity types are skipped with a
// diagnostic.
RewriteLoad load_rewrites(const std::filesystem::path& path, const Corpus& original);

struct RewriteMining {
  TemplateTable table;
  // Mapped back to original ids, deduplicated, before sampling.
  std::size_t candidate_pairs = 0;
  std::vector<PositivePair> pairs;
};

// Template + entailment mining over the rewritten sentences; resulting pairs
// are mapped back to the original sentences, deduplicated against
// `already_mined`, and a fraction f of them is kept uniformly at random.
RewriteMining build_rewrite_pairs(const std::map<std::string, RewriteRecord>& rewrites,
                                  std::size_t t, EntailmentAdapter& adapter,
                                  double r, double f, Rng& rng,
                                  std::span<const PositivePair> already_mined);

// ---------------------------------------------------------------------------
// Statistics.
// ---------------------------------------------------------------------------

struct PairCount {
  std::size_t total = 0;
  // Set when every sentence involved carries a gold relation.
  std::optional<std::size_t> correct;
};

struct MiningStats {
  std::size_t sentences = 0;
  std::size_t templates = 0;
  double sentences_per_template = 0.0;
  std::size_t covered_sentences = 0;
  double coverage = 0.0;
  std::optional<std::size_t> rewritten_templates;
  std::optional<double> rewritten_sentences_per_template;
  PairCount same_template;
  PairCount entailed;
  std::optional<PairCount> rewrite_derived;
};

MiningStats mining_stats(const TemplateTable& original,
                         const TemplateTable* rewritten,
                         std::span<const PositivePair> same_template,
                         std::span<const PositivePair> entailed,
                         const std::vector<PositivePair>* rewrite_derived,
                         const Corpus& corpus);

nlohmann::json to_json(const MiningStats& s);
MiningStats mining_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TemplateTable& t);
TemplateTable template_table_from_json(const nlohmann::json& j);
// Plain-text tables: template coverage and pair totals/correctness.
std::string render_stats(const MiningStats& s);

// ---------------------------------------------------------------------------
// Whole cross-sentence stage.
// ---------------------------------------------------------------------------

struct CrossMiningOptions {
  std::size_t threshold = 4;
  double ratio = 0.95;
  double rewrite_fraction = 0.10;
  std::size_t cap_per_template = 0;
  bool use_rewrites = true;
};

struct CrossMining {
  TemplateTable table;
  std::vector<PositivePair> same_template;
  std::vector<PositivePair> entailed;
  std::optional<RewriteMining> rewrite;
  MiningStats stats;

  // same_template + entailed (+ rewrite-derived).
  std::vector<PositivePair> all_pairs() const;
};

CrossMining mine_cross_pairs(const Corpus& corpus, std::span<const Triple> triples,
                             EntailmentAdapter& adapter,
                             const std::map<std::string, RewriteRecord>* rewrites,
                             const CrossMiningOptions& options, std::uint64_t seed);

}  // namespace augure
