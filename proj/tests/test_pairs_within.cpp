#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "augure/pairs_within.hpp"
#include "doctest.h"

using namespace augure;

namespace {

const std::string kFixtures = AUGURE_FIXTURES;

Sentence make(std::string id, std::vector<std::string> tokens, Span head, Span tail,
              std::string head_type = "PERSON", std::string tail_type = "ORG") {
  Sentence s;
  s.id = std::move(id);
  s.tokens = std::move(tokens);
  s.head = head;
  s.tail = tail;
  s.head_type = std::move(head_type);
  s.tail_type = std::move(tail_type);
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("five intermediate words, m = 2: uniform inclusion") {
  const Sentence s = make("s", {"Paul", "alpha", "beta", "gamma", "delta", "epsilon", "Library"},
                          {0, 0}, {6, 6});
  Rng rng(1234);
  std::map<std::size_t, int> hits;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const ContextPositions p = sample_intermediate_positions(s, 2, rng);
    REQUIRE(p.indices.size() == 2);
    REQUIRE(p.indices[0] < p.indices[1]);
    for (std::size_t k : p.indices) ++hits[k];
  }
  REQUIRE(hits.size() == 5);
  for (const auto& [pos, n] : hits) {
    CHECK(pos >= 1);
    CHECK(pos <= 5);
    CHECK(std::abs(n / static_cast<double>(draws) - 0.4) <= 0.02);
  }
}

TEST_CASE("exactly m intermediate words are forced") {
  const Sentence s = make("s", {"Paul", "is", "chief", "executive", "of", "Library"}, {0, 0},
                          {5, 5});
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    CHECK(sample_intermediate_positions(s, 2, rng) == ContextPositions{{2, 3}, 2});
  }
  // Both draws of a dropout pair coincide.
  const PositivePair p = make_dropout_pair(s, 2, rng);
  CHECK(p.anchor.positions == p.partner.positions);
  CHECK(p.anchor.sentence_id == "s");
  CHECK(p.partner.sentence_id == "s");
  CHECK(p.source == PairSource::dropout);
  CHECK(p.anchor.variant == Variant::sampled);
}

TEST_CASE("fallback to outside words, then padding") {
  const Sentence s = make("s", {"Paul", "of", "the", "Library", "grew"}, {0, 0}, {3, 3});
  Rng rng(2);
  const ContextPositions p = sample_intermediate_positions(s, 2, rng);
  CHECK(p.indices == std::vector<std::size_t>{4});
  CHECK(p.slots == 2);
  CHECK(p.padding() == 1);
}

TEST_CASE("dropout pairs are seed-deterministic") {
  const Corpus c = load_corpus(kFixtures + "/corpus40.jsonl");
  const EntityPool pool = build_entity_pool(c);
  const WithinPairs a = build_within_pairs(c, 2, pool, 99);
  const WithinPairs b = build_within_pairs(c, 2, pool, 99);
  const WithinPairs other = build_within_pairs(c, 2, pool, 100);
  CHECK(a.pairs == b.pairs);
  CHECK(a.pairs != other.pairs);
}

TEST_CASE("replace_entities swaps in other surfaces of the same type") {
  const Sentence paul = make("s1", {"Paul", "works", "for", "Library"}, {0, 0}, {3, 3});
  const Sentence mary = make("s2", {"Mary", "runs", "NYT"}, {0, 0}, {2, 2});
  EntityPool pool = build_entity_pool(Corpus({paul, mary}));
  Rng rng(3);
  const auto out = replace_entities(paul, pool, rng);
  REQUIRE(out);
  CHECK(out->sentence.tokens == std::vector<std::string>{"Mary", "works", "for", "NYT"});
  CHECK(out->sentence.id == "s1#aug");
  CHECK(out->parent_id == "s1");
  CHECK(out->replaced_head == std::vector<std::string>{"Mary"});

  // Multi-token replacement widens the span and shifts what follows.
  pool.buckets["ORG"] = {{{"New", "York", "Times"}, "x"}, {{"Library"}, "s1"}};
  const Sentence later = make("s3", {"Paul", "joined", "Library", "in", "May"}, {0, 0}, {2, 2});
  const auto wide = replace_entities(later, pool, rng);
  REQUIRE(wide);
  const Sentence& w = wide->sentence;
  CHECK(w.tail == Span{2, 4});
  CHECK(w.tail_surface() == std::vector<std::string>{"New", "York", "Times"});
  // Context tokens outside the entities are unchanged and in order.
  auto context = [](const Sentence& s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (!s.head.contains(i) && !s.tail.contains(i)) out.push_back(s.tokens[i]);
    }
    return out;
  };
  CHECK(context(w) == context(later));
  CHECK_NOTHROW(validate_sentence(w));

  // A singleton bucket has no alternative.
  EntityPool lonely;
  lonely.buckets["PERSON"] = {{{"Paul"}, "s1"}, {{"Mary"}, "s2"}};
  lonely.buckets["ORG"] = {{{"Library"}, "s1"}};
  CHECK_FALSE(replace_entities(paul, lonely, rng));
}

TEST_CASE("within pairs on the fixture") {
  const Corpus c = load_corpus(kFixtures + "/corpus40.jsonl");
  const EntityPool pool = build_entity_pool(c);
  const WithinPairs w = build_within_pairs(c, 2, pool, 7);
  CHECK(w.pairs.size() == 80);
  CHECK(w.synthetic.size() == 40);
  std::map<std::string, std::multiset<PairSource>> per;
  for (const PositivePair& p : w.pairs) per[p.anchor.sentence_id].insert(p.source);
  CHECK(per.size() == 40);
  for (const auto& [id, sources] : per) {
    CHECK(sources == std::multiset<PairSource>{PairSource::dropout, PairSource::entity_aug});
  }
  for (const SyntheticSentence& s : w.synthetic) {
    const Sentence& parent = c.at(s.parent_id);
    CHECK(s.sentence.head_type == parent.head_type);
    CHECK(s.sentence.tail_type == parent.tail_type);
    CHECK(s.sentence.head_surface() != parent.head_surface());
    CHECK(s.sentence.tail_surface() != parent.tail_surface());
  }
  CHECK(build_within_pairs(c, 2, pool, 7, false).pairs.size() == 40);
}

TEST_CASE("within pairs match the committed seed-1 dump") {
  const Corpus c = load_corpus(kFixtures + "/corpus40.jsonl");
  const auto seed = derive_seed(derive_seed(1, "within-pairs"), std::uint64_t{0});
  const WithinPairs w = build_within_pairs(c, 2, build_entity_pool(c), seed);
  std::ostringstream out;
  write_pairs(out, w.pairs);
  CHECK(out.str() == slurp(kFixtures + "/expected/pairs_within_seed1.jsonl"));
}

TEST_CASE("singleton types contribute only the dropout pair") {
  const Sentence a = make("a", {"Paul", "works", "for", "Library"}, {0, 0}, {3, 3});
  const Sentence b = make("b", {"Mary", "works", "for", "Library"}, {0, 0}, {3, 3});
  const Sentence odd =
      make("c", {"Tom", "visited", "Rome"}, {0, 0}, {2, 2}, "PERSON", "LOC");
  const Corpus c({a, b, odd});
  const WithinPairs w = build_within_pairs(c, 2, build_entity_pool(c), 1);
  std::map<std::string, int> count;
  for (const PositivePair& p : w.pairs) ++count[p.anchor.sentence_id];
  // ORG and LOC each have a single surface, so nobody gets an entity_aug pair.
  CHECK(count == std::map<std::string, int>{{"a", 1}, {"b", 1}, {"c", 1}});
  CHECK(build_within_pairs(Corpus(), 2, EntityPool{}, 1).pairs.empty());
}

TEST_CASE("pair json round trip") {
  const Corpus c = load_corpus(kFixtures + "/corpus40.jsonl");
  const WithinPairs w = build_within_pairs(c, 2, build_entity_pool(c), 5);
  std::ostringstream out;
  write_pairs(out, w.pairs);
  std::istringstream in(out.str());
  CHECK(read_pairs(in, "mem") == w.pairs);
  std::istringstream bad("{\"anchor\":1}\n");
  CHECK_THROWS_AS(read_pairs(bad, "bad"), ParseError);
  CHECK(parse_pair_source("entailed_template") == PairSource::entailed_template);
  CHECK(is_within_source(PairSource::entity_aug));
  CHECK_FALSE(is_within_source(PairSource::same_template));
  CHECK(base_sentence_id("x#aug") == "x");
  CHECK(base_sentence_id("x") == "x");
}
