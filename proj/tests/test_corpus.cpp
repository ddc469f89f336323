#include <sstream>

#include "augure/corpus.hpp"
#include "doctest.h"

using namespace augure;

namespace {

const std::string kFixtures = AUGURE_FIXTURES;

Sentence paul() {
  Sentence s;
  s.id = "s1";
  s.tokens = {"Paul", "works", "for", "Library"};
  s.head = {0, 0};
  s.tail = {3, 3};
  s.head_type = "PERSON";
  s.tail_type = "ORG";
  return s;
}

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in, "inline");
}

}  // namespace

TEST_CASE("minimal line loads") {
  const Corpus c = parse(
      R"({"id":"s1","tokens":["Paul","works","for","Library"],)"
      R"("head":{"start":0,"end":0,"type":"PERSON"},"tail":{"start":3,"end":3,"type":"ORG"}})"
      "\n");
  REQUIRE(c.size() == 1);
  CHECK(c.sentences()[0] == paul());
  CHECK_FALSE(c.sentences()[0].gold_relation);
  CHECK_FALSE(c.has_gold());
}

TEST_CASE("span past the end is a validation error naming the sentence") {
  const std::string line =
      R"({"id":"bad","tokens":["Paul","works","for","Library"],)"
      R"("head":{"start":5,"end":6,"type":"PERSON"},"tail":{"start":3,"end":3,"type":"ORG"}})";
  try {
    parse(line + "\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.sentence_id() == "bad");
    CHECK(std::string(e.what()).find("span out of range") != std::string::npos);
  }
}

TEST_CASE("other invariants") {
  Sentence s = paul();
  s.tail = {0, 1};
  CHECK_THROWS_AS(validate_sentence(s), ValidationError);  // overlap
  s = paul();
  s.head = {2, 1};
  CHECK_THROWS_AS(validate_sentence(s), ValidationError);  // inverted
  s = paul();
  s.tail_type.clear();
  CHECK_THROWS_AS(validate_sentence(s), ValidationError);
  CHECK_THROWS_AS(Corpus({paul(), paul()}), ValidationError);  // duplicate id
}

TEST_CASE("malformed json reports the line number") {
  const std::string good =
      R"({"id":"s1","tokens":["a","b"],"head":{"start":0,"end":0,"type":"X"},)"
      R"("tail":{"start":1,"end":1,"type":"Y"}})";
  try {
    parse(good + "\n\n{not json\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse(R"({"id":"s1","tokens":"oops"})" "\n"), Error);
}

TEST_CASE("json round trip keeps gold") {
  Sentence s = paul();
  s.gold_relation = "works_for";
  const Corpus c({s});
  std::ostringstream out;
  write_corpus(out, c);
  const Corpus back = parse(out.str());
  CHECK(back == c);
  CHECK(back.has_gold());
}

TEST_CASE("fixture corpus") {
  const Corpus c = load_corpus(kFixtures + "/corpus40.jsonl");
  CHECK(c.size() == 40);
  CHECK(c.entity_types() == std::set<std::string>{"LOC", "ORG", "PERSON"});
  CHECK(c.has_gold());
  CHECK(c.index_of("fx-17") == 16);
  CHECK(c.at("fx-19").tail_surface() == std::vector<std::string>{"new", "york"});
  CHECK(c.find("missing") == nullptr);
  CHECK_THROWS_AS(c.at("missing"), std::out_of_range);

  // Hand count: 30 distinct people, 20 organisations, 15 places ("alice",
  // "dana", "acme", "paris" and a few others repeat).
  const EntityPool pool = build_entity_pool(c);
  CHECK(pool.buckets.size() == 3);
  CHECK(pool.bucket("PERSON")->size() == 30);
  CHECK(pool.bucket("ORG")->size() == 20);
  CHECK(pool.bucket("LOC")->size() == 15);
  CHECK(pool.bucket("PERSON")->front().source_id == "fx-01");
  CHECK(pool.bucket("DATE") == nullptr);
}

TEST_CASE("tag_entities inserts typed markers") {
  const TaggedSequence t = tag_entities(paul());
  CHECK(t.tokens == std::vector<std::string>{"<e1:PERSON>", "Paul", "</e1:PERSON>", "works",
                                             "for", "<e2:ORG>", "Library", "</e2:ORG>"});
  CHECK(t.head_marker() == 0);
  CHECK(t.tail_marker() == 5);
  CHECK(strip_markers(t) == paul().tokens);
  CHECK(t.original_index == std::vector<std::size_t>{1, 3, 4, 6});
}

TEST_CASE("tail before head") {
  Sentence s;
  s.id = "rev";
  s.tokens = {"Library", "hired", "Paul", "Smith", "today"};
  s.head = {2, 3};
  s.tail = {0, 0};
  s.head_type = "PERSON";
  s.tail_type = "ORG";
  const TaggedSequence t = tag_entities(s);
  CHECK(t.tokens == std::vector<std::string>{"<e2:ORG>", "Library", "</e2:ORG>", "hired",
                                             "<e1:PERSON>", "Paul", "Smith", "</e1:PERSON>",
                                             "today"});
  CHECK(t.tokens[t.head_marker() + 1] == "Paul");
  CHECK(t.tokens[t.tail_marker() + 1] == "Library");
  CHECK(strip_markers(t) == s.tokens);
}

TEST_CASE("adjacent spans") {
  Sentence s;
  s.id = "adj";
  s.tokens = {"Paul", "Library"};
  s.head = {0, 0};
  s.tail = {1, 1};
  s.head_type = "PERSON";
  s.tail_type = "ORG";
  const TaggedSequence t = tag_entities(s);
  CHECK(t.tokens.size() == 6);
  CHECK(t.tokens == std::vector<std::string>{"<e1:PERSON>", "Paul", "</e1:PERSON>",
                                             "<e2:ORG>", "Library", "</e2:ORG>"});
  CHECK(strip_markers(t) == s.tokens);

  s.tokens = {"the", "Paul", "Library", "x"};
  s.head = {1, 1};
  s.tail = {2, 2};
  const TaggedSequence u = tag_entities(s);
  CHECK(u.tokens.size() == 8);
  CHECK(u.tokens[3] == "</e1:PERSON>");
  CHECK(u.tokens[4] == "<e2:ORG>");
  CHECK(strip_markers(u) == s.tokens);
}

TEST_CASE("marker tokens") {
  CHECK(marker_token(Marker::tail_close, "LOC") == "</e2:LOC>");
  CHECK(is_marker_token("<e1:PERSON>"));
  CHECK(is_marker_token("</e2:ORG>"));
  CHECK_FALSE(is_marker_token("<e3:ORG>"));
  CHECK_FALSE(is_marker_token("Paul"));
}

TEST_CASE("to_tagged shifts indices") {
  const TaggedSequence t = tag_entities(paul());
  const ContextPositions p{{1, 2}, 2};
  CHECK(to_tagged(p, t) == ContextPositions{{3, 4}, 2});
  CHECK_THROWS_AS(to_tagged(ContextPositions{{9}, 2}, t), std::out_of_range);
}

TEST_CASE("entity pool from a small corpus") {
  Sentence a = paul();
  Sentence b = paul();
  b.id = "s2";
  b.tokens[0] = "Mary";
  Sentence c = paul();
  c.id = "s3";
  const EntityPool pool = build_entity_pool(Corpus({a, b, c}));
  REQUIRE(pool.bucket("PERSON")->size() == 2);
  CHECK(pool.bucket("PERSON")->at(0).surface == std::vector<std::string>{"Paul"});
  CHECK(pool.bucket("PERSON")->at(1).surface == std::vector<std::string>{"Mary"});
  CHECK(pool.bucket("ORG")->size() == 1);
}

TEST_CASE("stop words") {
  CHECK(is_stop_word("the"));
  CHECK(is_stop_word("The"));
  CHECK_FALSE(is_stop_word("CEO"));
  CHECK(is_stop_word(","));
  CHECK(is_stop_word("--"));
  CHECK_FALSE(is_stop_word("2001"));
  CHECK(stop_word_list().size() == 179);
  CHECK(stop_word_list_version() == "en-179-v1");
}

TEST_CASE("content positions") {
  Sentence s;
  s.id = "ceo";
  s.tokens = {"today", "Paul", "is", "chief", "executive", "of", "Library", "again"};
  s.head = {1, 1};
  s.tail = {6, 6};
  s.head_type = "PERSON";
  s.tail_type = "ORG";
  CHECK(intermediate_content_positions(s) == std::vector<std::size_t>{3, 4});
  CHECK(outside_content_positions(s) == std::vector<std::size_t>{0});
}
