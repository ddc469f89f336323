#include "augure/synthetic.hpp"

#include <array>
#include <cstdio>

#include "augure/common.hpp"

namespace augure {

namespace {

struct RelationSpec {
  const char* name;
  const char* head_type;
  const char* tail_type;
  std::array<const char*, 3> templates;
};

constexpr std::array<RelationSpec, 5> kRelations{{
    {"works_for", "PERSON", "ORG", {"works for", "is employed by", "is on the payroll of"}},
    {"founded", "PERSON", "ORG", {"founded", "established", "is the creator of"}},
    {"born_in", "PERSON", "LOC", {"was born in", "is a native of", "hails from"}},
    {"headquartered_in", "ORG", "LOC",
     {"is headquartered in", "is based in", "has its head office in"}},
    {"acquired", "ORG", "ORG", {"acquired", "bought", "took over"}},
}};

constexpr std::array<const char*, 30> kPeople{
    "alice",       "bruno",      "chen wei",     "dana",        "elif",
    "farid",       "greta",      "hiro tanaka",  "ines",        "jonas",
    "kofi mensah", "lena",       "marta",        "nadia",       "omar",
    "priya shah",  "quentin",    "rosa",         "sven",        "tara",
    "umar",        "vera novak", "wes",          "ximena",      "yusuf",
    "zoe",         "ana lima",   "boris",        "carla ruiz",  "dev"};

constexpr std::array<const char*, 20> kOrgs{
    "acme",         "globex corp", "initech",     "umbrella",   "hooli",
    "vandelay",     "stark labs",  "wayne group", "tyrell",     "cyberdyne",
    "soylent",      "massive dynamic", "oscorp",  "gringotts",  "wonka",
    "duff",         "monarch",     "nakatomi",    "aperture",   "krusty co"};

constexpr std::array<const char*, 15> kPlaces{
    "paris",  "lagos",      "osaka", "lima",       "oslo",
    "cairo",  "new york",   "quito", "hanoi",      "perth",
    "dublin", "buenos aires", "riga", "kathmandu", "accra"};

constexpr std::array<const char*, 24> kFiller{
    "yesterday",  "reportedly", "officially", "notably",  "locally",
    "according",  "records",    "sources",    "analysts", "reporters",
    "earlier",    "recently",   "meanwhile",  "today",    "publicly",
    "documents",  "insiders",   "filings",    "press",    "observers",
    "critics",    "archives",   "interviews", "briefly"};

constexpr std::array<const char*, 4> kAdverbs{"still", "quietly", "once", "allegedly"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& items, Rng& rng) {
  return items[rng.uniform_index(N)];
}

const char* pick_entity(std::string_view type, Rng& rng) {
  if (type == "PERSON") return pick(kPeople, rng);
  if (type == "ORG") return pick(kOrgs, rng);
  return pick(kPlaces, rng);
}

void append_words(std::vector<std::string>& out, std::string_view text) {
  for (auto& w : split_whitespace(text)) out.push_back(std::move(w));
}

Span append_entity(std::vector<std::string>& out, std::string_view text) {
  const std::size_t start = out.size();
  append_words(out, text);
  return {start, out.size() - 1};
}

}  // namespace

SyntheticCorpus generate_synthetic(std::uint64_t seed, const SyntheticOptions& options) {
  Rng rng(derive_seed(seed, "synthetic-corpus"));
  SyntheticCorpus out;
  for (const RelationSpec& r : kRelations) out.relations.emplace_back(r.name);

  std::vector<Sentence> sentences;
  for (std::size_t i = 0; i < options.sentences; ++i) {
    const RelationSpec& rel = kRelations[i % kRelations.size()];
    const std::size_t form = rng.uniform_index(rel.templates.size());
    const char* head = pick_entity(rel.head_type, rng);
    const char* tail = pick_entity(rel.tail_type, rng);
    while (std::string_view(tail) == head) tail = pick_entity(rel.tail_type, rng);

    Sentence s;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%04zu", i);
    s.id = id;
    s.head_type = rel.head_type;
    s.tail_type = rel.tail_type;
    s.gold_relation = rel.name;

    const std::size_t filler = 1 + rng.uniform_index(3);
    for (std::size_t f = 0; f < filler; ++f) s.tokens.emplace_back(pick(kFiller, rng));
    s.head = append_entity(s.tokens, head);
    if (rng.uniform_real() < options.adverb_rate) s.tokens.emplace_back(pick(kAdverbs, rng));
    append_words(s.tokens, rel.templates[form]);
    s.tail = append_entity(s.tokens, tail);
    append_words(s.tokens, ", a tie also phrased as");
    for (std::size_t t = 0; t < rel.templates.size(); ++t) {
      if (t > 0) s.tokens.emplace_back(t + 1 == rel.templates.size() ? "or" : ",");
      append_words(s.tokens, rel.templates[t]);
    }

    Sentence rewritten;
    rewritten.id = s.id;
    rewritten.head_type = s.head_type;
    rewritten.tail_type = s.tail_type;
    rewritten.head = append_entity(rewritten.tokens, head);
    append_words(rewritten.tokens, rel.templates[0]);
    rewritten.tail = append_entity(rewritten.tokens, tail);
    out.rewrites.push_back({s.id, std::move(rewritten)});

    sentences.push_back(std::move(s));
  }
  out.corpus = Corpus(std::move(sentences));
  return out;
}

}  // namespace augure
