#include "augure/pairs_cross.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace augure {

std::string Triple::template_key() const { return to_lower(join(predicate, " ")); }

namespace {

bool has_content_word(std::span<const std::string> tokens) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [](const std::string& t) { return !is_stop_word(t); });
}

}  // namespace

std::optional<Triple> extract_triples_builtin(const Sentence& s) {
  const Span& first = s.tail_first() ? s.tail : s.head;
  const Span& second = s.tail_first() ? s.head : s.tail;
  Triple triple;
  triple.sentence_id = s.id;
  for (std::size_t i = first.end + 1; i < second.start; ++i) {
    triple.predicate.push_back(to_lower(s.tokens[i]));
  }
  if (triple.predicate.empty() || triple.predicate.size() > kBuiltinPredicateCap ||
      !has_content_word(triple.predicate)) {
    return std::nullopt;
  }
  triple.subject = s.head_surface();
  triple.object = s.tail_surface();
  return triple;
}

std::vector<Triple> extract_all_builtin(const Corpus& corpus) {
  std::vector<Triple> out;
  for (const Sentence& s : corpus.sentences()) {
    if (auto t = extract_triples_builtin(s)) out.push_back(std::move(*t));
  }
  return out;
}

std::vector<Triple> in_corpus_order(const std::map<std::string, Triple>& triples,
                                    const Corpus& corpus) {
  std::vector<Triple> out;
  for (const Sentence& s : corpus.sentences()) {
    if (auto it = triples.find(s.id); it != triples.end()) out.push_back(it->second);
  }
  return out;
}

TripleLoad load_external_triples(const std::filesystem::path& path,
                                 const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open triples file " + path.string());
  TripleLoad out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Triple t;
    try {
      const auto j = nlohmann::json::parse(line);
      t.sentence_id = j.at("id").get<std::string>();
      t.subject = j.at("subject").get<std::vector<std::string>>();
      t.predicate = j.at("predicate").get<std::vector<std::string>>();
      t.object = j.at("object").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    const Sentence* s = corpus.find(t.sentence_id);
    if (s == nullptr) {
      out.diagnostics.push_back(where + ": unknown sentence '" + t.sentence_id + "'");
      continue;
    }
    if (t.subject != s->head_surface()) {
      out.diagnostics.push_back(where + ": subject does not match head entity");
      continue;
    }
    if (t.object != s->tail_surface()) {
      out.diagnostics.push_back(where + ": object does not match tail entity");
      continue;
    }
    if (t.predicate.empty() || !has_content_word(t.predicate)) {
      out.diagnostics.push_back(where + ": predicate has no content word");
      continue;
    }
    auto it = out.triples.find(t.sentence_id);
    if (it == out.triples.end()) {
      const std::string id = t.sentence_id;
      out.triples.emplace(id, std::move(t));
    } else if (t.predicate.size() < it->second.predicate.size()) {
      it->second = std::move(t);
    }
  }
  return out;
}

std::size_t TemplateTable::covered_sentences() const {
  std::size_t n = 0;
  for (const auto& [key, ids] : groups) n += ids.size();
  return n;
}

const std::vector<std::string>& TemplateTable::sentences_of(const std::string& key) const {
  auto it = groups.find(key);
  if (it == groups.end()) {
    throw std::out_of_range("template '" + key + "' not in table");
  }
  return it->second;
}

TemplateTable build_template_table(std::span<const Triple> triples, std::size_t t) {
  if (t < 1) throw ConfigError("template threshold t must be >= 1");
  std::map<std::string, std::vector<std::string>> all;
  std::set<std::string> seen_ids;
  for (const Triple& triple : triples) {
    // One template per sentence.
    if (!seen_ids.insert(triple.sentence_id).second) continue;
    all[triple.template_key()].push_back(triple.sentence_id);
  }
  TemplateTable table;
  table.threshold = t;
  table.candidate_templates = all.size();
  for (auto& [key, ids] : all) {
    if (ids.size() > t) table.groups.emplace(key, std::move(ids));
  }
  return table;
}

std::vector<PositivePair> same_template_pairs(const TemplateTable& tbl,
                                              std::size_t cap_per_template) {
  std::vector<PositivePair> out;
  for (const auto& [key, ids] : tbl.groups) {
    std::size_t emitted = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        if (cap_per_template > 0 && emitted == cap_per_template) break;
        out.push_back({deterministic_instance(ids[i]),
                       deterministic_instance(ids[j]), PairSource::same_template});
        ++emitted;
      }
    }
  }
  return out;
}

std::string premise(const Sentence& s) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (s.head.contains(i)) {
      if (i == s.head.start) tokens.emplace_back("[h]");
    } else if (s.tail.contains(i)) {
      if (i == s.tail.start) tokens.emplace_back("[t]");
    } else {
      tokens.push_back(s.tokens[i]);
    }
  }
  return join(tokens, " ");
}

std::vector<std::string> premise_set(const std::string& tp, const TemplateTable& tbl,
                                     const Corpus& corpus) {
  std::vector<std::string> out;
  for (const std::string& id : tbl.sentences_of(tp)) out.push_back(premise(corpus.at(id)));
  return out;
}

std::string hypothesis(const std::string& tp) { return "[h] " + tp + " [t]"; }

bool template_entails(const std::string& tp1, const std::string& tp2,
                      const TemplateTable& tbl, const Corpus& corpus,
                      EntailmentAdapter& adapter, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("entailment ratio r must be in (0, 1]");
  const auto premises = premise_set(tp1, tbl, corpus);
  if (premises.empty()) return false;
  const std::string hypo = hypothesis(tp2);
  std::size_t entailed = 0;
  for (const std::string& p : premises) {
    NliScores scores;
    try {
      scores = adapter.score(p, hypo);
    } catch (const MiningError&) {
      throw;
    } catch (const std::exception& e) {
      throw MiningError("entailment adapter failed on premise \"" + p + "\": " + e.what());
    }
    check_probabilities(scores, "premise \"" + p + "\"");
    if (scores.verdict() == NliLabel::entailment) ++entailed;
  }
  // Slack so that e.g. 19 of 20 still meets r = 0.95 after rounding.
  const double needed = r * static_cast<double>(premises.size());
  return static_cast<double>(entailed) >= needed - 1e-9;
}

std::vector<EntailedTemplates> mutually_entailed_templates(const TemplateTable& tbl,
                                                           const Corpus& corpus,
                                                           EntailmentAdapter& adapter,
                                                           double r) {
  std::vector<std::string> keys;
  for (const auto& [key, ids] : tbl.groups) keys.push_back(key);
  std::vector<EntailedTemplates> out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      if (template_entails(keys[i], keys[j], tbl, corpus, adapter, r) &&
          template_entails(keys[j], keys[i], tbl, corpus, adapter, r)) {
        out.push_back({keys[i], keys[j]});
      }
    }
  }
  return out;
}

std::vector<PositivePair> mutual_pairs(const TemplateTable& tbl, const Corpus& corpus,
                                       EntailmentAdapter& adapter, double r) {
  std::vector<PositivePair> out;
  for (const auto& [a, b] : mutually_entailed_templates(tbl, corpus, adapter, r)) {
    for (const std::string& x : tbl.sentences_of(a)) {
      for (const std::string& y : tbl.sentences_of(b)) {
        out.push_back({deterministic_instance(x), deterministic_instance(y),
                       PairSource::entailed_template});
      }
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> entailment_queries(
    const TemplateTable& tbl, const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [tp1, ids] : tbl.groups) {
    const auto premises = premise_set(tp1, tbl, corpus);
    for (const auto& [tp2, unused] : tbl.groups) {
      if (tp1 == tp2) continue;
      const std::string hypo = hypothesis(tp2);
      for (const std::string& p : premises) {
        if (seen.emplace(p, hypo).second) out.emplace_back(p, hypo);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string rewrite_prompt(const Sentence& s) {
  return "Given the context " + s.text() + ", what is the relationship between " +
         join(s.head_surface(), " ") + " and " + join(s.tail_surface(), " ") +
         " (as short as possible)?";
}

RewriteLoad load_rewrites(const std::filesystem::path& path, const Corpus& original) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open rewrites file " + path.string());
  RewriteLoad out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    Sentence s;
    try {
      s = sentence_from_json(j, where);
      validate_sentence(s);
    } catch (const std::exception& e) {
      out.diagnostics.push_back(where + ": skipped rewrite: " + e.what());
      continue;
    }
    s.gold_relation.reset();
    const Sentence* orig = original.find(s.id);
    if (orig == nullptr) {
      out.diagnostics.push_back(where + ": rewrite for unknown sentence '" + s.id + "'");
      continue;
    }
    if (s.head_type != orig->head_type || s.tail_type != orig->tail_type) {
      out.diagnostics.push_back(where + ": rewrite changes entity types");
      continue;
    }
    std::string id = s.id;
    out.records.insert_or_assign(id, RewriteRecord{id, std::move(s)});
  }
  return out;
}

namespace {

std::pair<std::string, std::string> unordered_key(const PositivePair& p) {
  std::string a(base_sentence_id(p.anchor.sentence_id));
  std::string b(base_sentence_id(p.partner.sentence_id));
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

}  // namespace

RewriteMining build_rewrite_pairs(const std::map<std::string, RewriteRecord>& rewrites,
                                  std::size_t t, EntailmentAdapter& adapter, double r,
                                  double f, Rng& rng,
                                  std::span<const PositivePair> already_mined) {
  if (!(f > 0.0 && f <= 1.0)) throw ConfigError("rewrite fraction f must be in (0, 1]");
  std::vector<Sentence> sentences;
  for (const auto& [id, record] : rewrites) sentences.push_back(record.rewritten);
  const Corpus rewritten(std::move(sentences));

  RewriteMining out;
  out.table = build_template_table(extract_all_builtin(rewritten), t);
  std::vector<PositivePair> candidates = same_template_pairs(out.table);
  for (auto& p : mutual_pairs(out.table, rewritten, adapter, r)) {
    candidates.push_back(std::move(p));
  }

  std::set<std::pair<std::string, std::string>> seen;
  for (const PositivePair& p : already_mined) seen.insert(unordered_key(p));
  std::vector<PositivePair> fresh;
  for (PositivePair& p : candidates) {
    // Rewritten sentences keep their original ids, so the mapping back is
    // the identity on ids.
    if (!seen.insert(unordered_key(p)).second) continue;
    p.source = PairSource::rewrite_derived;
    fresh.push_back(std::move(p));
  }
  out.candidate_pairs = fresh.size();

  const auto keep = static_cast<std::size_t>(
      std::llround(f * static_cast<double>(fresh.size())));
  std::vector<std::size_t> chosen = rng.sample_without_replacement(fresh.size(), keep);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) out.pairs.push_back(fresh[i]);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

PairCount count_pairs(std::span<const PositivePair> pairs, const Corpus& corpus) {
  PairCount c;
  c.total = pairs.size();
  std::size_t correct = 0;
  for (const PositivePair& p : pairs) {
    const Sentence* a = corpus.find(base_sentence_id(p.anchor.sentence_id));
    const Sentence* b = corpus.find(base_sentence_id(p.partner.sentence_id));
    if (a == nullptr || b == nullptr || !a->gold_relation || !b->gold_relation) {
      return c;
    }
    if (*a->gold_relation == *b->gold_relation) ++correct;
  }
  c.correct = correct;
  return c;
}

double per_template(const TemplateTable& t) {
  return t.groups.empty() ? 0.0
                          : static_cast<double>(t.covered_sentences()) /
                                static_cast<double>(t.groups.size());
}

nlohmann::json to_json(const PairCount& c) {
  nlohmann::json j{{"total", c.total}};
  j["correct"] = c.correct ? nlohmann::json(*c.correct) : nlohmann::json(nullptr);
  return j;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string percent(std::size_t part, std::size_t whole) {
  if (whole == 0) return "0.0%";
  return fixed(100.0 * static_cast<double>(part) / static_cast<double>(whole), 1) + "%";
}

}  // namespace

MiningStats mining_stats(const TemplateTable& original, const TemplateTable* rewritten,
                         std::span<const PositivePair> same_template,
                         std::span<const PositivePair> entailed,
                         const std::vector<PositivePair>* rewrite_derived,
                         const Corpus& corpus) {
  MiningStats s;
  s.sentences = corpus.size();
  s.templates = original.groups.size();
  s.sentences_per_template = per_template(original);
  s.covered_sentences = original.covered_sentences();
  s.coverage = corpus.empty() ? 0.0
                              : static_cast<double>(s.covered_sentences) /
                                    static_cast<double>(corpus.size());
  if (rewritten != nullptr) {
    s.rewritten_templates = rewritten->groups.size();
    s.rewritten_sentences_per_template = per_template(*rewritten);
  }
  s.same_template = count_pairs(same_template, corpus);
  s.entailed = count_pairs(entailed, corpus);
  if (rewrite_derived != nullptr) s.rewrite_derived = count_pairs(*rewrite_derived, corpus);
  return s;
}

nlohmann::json to_json(const MiningStats& s) {
  nlohmann::json j;
  j["sentences"] = s.sentences;
  j["templates"] = s.templates;
  j["sentences_per_template"] = s.sentences_per_template;
  j["covered_sentences"] = s.covered_sentences;
  j["coverage"] = s.coverage;
  j["rewritten_templates"] = s.rewritten_templates ? nlohmann::json(*s.rewritten_templates)
                                                   : nlohmann::json(nullptr);
  j["rewritten_sentences_per_template"] =
      s.rewritten_sentences_per_template
          ? nlohmann::json(*s.rewritten_sentences_per_template)
          : nlohmann::json(nullptr);
  j["same_template_pairs"] = to_json(s.same_template);
  j["entailed_pairs"] = to_json(s.entailed);
  j["rewrite_derived_pairs"] =
      s.rewrite_derived ? to_json(*s.rewrite_derived) : nlohmann::json(nullptr);
  return j;
}

MiningStats mining_stats_from_json(const nlohmann::json& j) {
  auto count = [](const nlohmann::json& c) {
    PairCount out;
    out.total = c.at("total").get<std::size_t>();
    if (!c.at("correct").is_null()) out.correct = c.at("correct").get<std::size_t>();
    return out;
  };
  try {
    MiningStats s;
    s.sentences = j.at("sentences").get<std::size_t>();
    s.templates = j.at("templates").get<std::size_t>();
    s.sentences_per_template = j.at("sentences_per_template").get<double>();
    s.covered_sentences = j.at("covered_sentences").get<std::size_t>();
    s.coverage = j.at("coverage").get<double>();
    if (!j.at("rewritten_templates").is_null()) {
      s.rewritten_templates = j.at("rewritten_templates").get<std::size_t>();
    }
    if (!j.at("rewritten_sentences_per_template").is_null()) {
      s.rewritten_sentences_per_template =
          j.at("rewritten_sentences_per_template").get<double>();
    }
    s.same_template = count(j.at("same_template_pairs"));
    s.entailed = count(j.at("entailed_pairs"));
    if (!j.at("rewrite_derived_pairs").is_null()) {
      s.rewrite_derived = count(j.at("rewrite_derived_pairs"));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("mining stats: ") + e.what());
  }
}

nlohmann::json to_json(const TemplateTable& t) {
  return {{"threshold", t.threshold},
          {"candidate_templates", t.candidate_templates},
          {"groups", t.groups}};
}

TemplateTable template_table_from_json(const nlohmann::json& j) {
  TemplateTable t;
  t.threshold = j.at("threshold").get<std::size_t>();
  t.candidate_templates = j.at("candidate_templates").get<std::size_t>();
  t.groups = j.at("groups").get<std::map<std::string, std::vector<std::string>>>();
  return t;
}

std::string render_stats(const MiningStats& s) {
  std::ostringstream os;
  auto row = [&](const std::string& label, const std::string& a, const std::string& b) {
    os << std::left << std::setw(34) << label << std::setw(14) << a << b << '\n';
  };
  os << "Relation templates\n";
  row("", "Original", "Rewritten");
  row("# templates", std::to_string(s.templates),
      s.rewritten_templates ? std::to_string(*s.rewritten_templates) : "absent");
  row("avg # sentences per template", fixed(s.sentences_per_template, 2),
      s.rewritten_sentences_per_template ? fixed(*s.rewritten_sentences_per_template, 2)
                                         : "absent");
  row("# sentences covered",
      std::to_string(s.covered_sentences) + "/" + std::to_string(s.sentences),
      percent(s.covered_sentences, s.sentences));
  os << '\n' << "Mined pairs\n";
  row("", "Total", "Correct");
  auto pair_row = [&](const std::string& label, const std::optional<PairCount>& c) {
    if (!c) {
      row(label, "absent", "absent");
      return;
    }
    row(label, std::to_string(c->total),
        c->correct ? std::to_string(*c->correct) + " (" + percent(*c->correct, c->total) + ")"
                   : "n/a");
  };
  pair_row("# same-template pairs", s.same_template);
  pair_row("# mutually entailed pairs", s.entailed);
  pair_row("# rewrite-derived pairs", s.rewrite_derived);
  return os.str();
}

// ---------------------------------------------------------------------------

std::vector<PositivePair> CrossMining::all_pairs() const {
  std::vector<PositivePair> out = same_template;
  out.insert(out.end(), entailed.begin(), entailed.end());
  if (rewrite) out.insert(out.end(), rewrite->pairs.begin(), rewrite->pairs.end());
  return out;
}

CrossMining mine_cross_pairs(const Corpus& corpus, std::span<const Triple> triples,
                             EntailmentAdapter& adapter,
                             const std::map<std::string, RewriteRecord>* rewrites,
                             const CrossMiningOptions& options, std::uint64_t seed) {
  CrossMining out;
  out.table = build_template_table(triples, options.threshold);
  out.same_template = same_template_pairs(out.table, options.cap_per_template);
  out.entailed = mutual_pairs(out.table, corpus, adapter, options.ratio);
  if (rewrites != nullptr && options.use_rewrites) {
    std::vector<PositivePair> mined = out.same_template;
    mined.insert(mined.end(), out.entailed.begin(), out.entailed.end());
    Rng rng(derive_seed(seed, "rewrite-sampling"));
    out.rewrite = build_rewrite_pairs(*rewrites, options.threshold, adapter, options.ratio,
                                      options.rewrite_fraction, rng, mined);
  }
  out.stats = mining_stats(out.table, out.rewrite ? &out.rewrite->table : nullptr,
                           out.same_template, out.entailed,
                           out.rewrite ? &out.rewrite->pairs : nullptr, corpus);
  return out;
}

}  // namespace augure
