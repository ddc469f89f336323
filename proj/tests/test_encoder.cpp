#include <cmath>
#include <fstream>

#include "augure/encoder.hpp"
#include "doctest.h"

using namespace augure;

namespace {

const std::string kFixtures = AUGURE_FIXTURES;

Sentence make(std::string id, std::vector<std::string> tokens, Span head, Span tail) {
  Sentence s;
  s.id = std::move(id);
  s.tokens = std::move(tokens);
  s.head = head;
  s.tail = tail;
  s.head_type = "PERSON";
  s.tail_type = "ORG";
  return s;
}

EncoderParams params_for(const std::vector<std::string>& tokens, std::size_t dim,
                         std::size_t window, std::uint64_t seed) {
  Rng rng(seed);
  return EncoderParams::initialize(tokens, dim, window, rng);
}

TaggedSequence plain(std::vector<std::string> tokens) {
  TaggedSequence t;
  t.tokens = std::move(tokens);
  t.origin = "plain";
  return t;
}

}  // namespace

TEST_CASE("initialize builds the vocabulary") {
  const EncoderParams p = params_for({"a", "b", "a", "c"}, 4, 1, 1);
  CHECK(p.vocab == std::vector<std::string>{"<unk>", "a", "b", "c"});
  CHECK(p.lookup("b") == 2);
  CHECK(p.lookup("zzz") == 0);
  CHECK(p.embeddings.rows() == 4);
  CHECK(p.embeddings.cols() == 4);
  CHECK_NOTHROW(p.validate());
  Rng rng(1);
  CHECK_THROWS_AS(EncoderParams::initialize({"a"}, 0, 1, rng), ConfigError);
}

TEST_CASE("vocabulary covers markers of every type") {
  const Corpus c({make("s", {"Paul", "works", "for", "Library"}, {0, 0}, {3, 3})});
  const auto vocab = build_vocabulary(c);
  for (const char* tok : {"<e1:ORG>", "</e2:PERSON>", "<e2:ORG>", "Paul", "works"}) {
    CHECK(std::find(vocab.begin(), vocab.end(), tok) != vocab.end());
  }
}

TEST_CASE("window 0 returns the embedding rows") {
  const EncoderParams p = params_for({"a", "b", "c"}, 3, 0, 2);
  const TokenEncodings enc = encode_tokens(plain({"c", "a", "zzz"}), p);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(enc.vectors(0, k) == p.embeddings(3, k));
    CHECK(enc.vectors(1, k) == p.embeddings(1, k));
    CHECK(enc.vectors(2, k) == p.embeddings(0, k));
  }
}

TEST_CASE("identical tokens, window 1") {
  const EncoderParams p = params_for({"x"}, 5, 1, 3);
  const TokenEncodings enc = encode_tokens(plain({"x", "x", "x"}), p);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(enc.vectors(i, k) == doctest::Approx(p.embeddings(1, k)).epsilon(1e-15));
    }
  }
}

TEST_CASE("window 1 mean on a random sequence") {
  const std::vector<std::string> toks{"t1", "t2", "t3", "t4", "t5"};
  const EncoderParams p = params_for(toks, 6, 1, 4);
  const TokenEncodings enc = encode_tokens(plain(toks), p);
  for (std::size_t k = 0; k < 6; ++k) {
    const double mean = (p.embeddings(2, k) + p.embeddings(3, k) + p.embeddings(4, k)) / 3.0;
    CHECK(enc.vectors(2, k) == doctest::Approx(mean).epsilon(1e-12));
    // Clipped at the edges.
    const double first = (p.embeddings(1, k) + p.embeddings(2, k)) / 2.0;
    CHECK(enc.vectors(0, k) == doctest::Approx(first).epsilon(1e-12));
  }
}

TEST_CASE("encoding is linear in the table") {
  const std::vector<std::string> toks{"u", "v", "w", "u", "x"};
  EncoderParams a = params_for(toks, 4, 2, 5);
  EncoderParams b = params_for(toks, 4, 2, 6);
  EncoderParams sum = a;
  for (std::size_t i = 0; i < sum.embeddings.data().size(); ++i) {
    sum.embeddings.data()[i] += b.embeddings.data()[i];
  }
  const auto ea = encode_tokens(plain(toks), a);
  const auto eb = encode_tokens(plain(toks), b);
  const auto es = encode_tokens(plain(toks), sum);
  for (std::size_t i = 0; i < es.vectors.data().size(); ++i) {
    CHECK(es.vectors.data()[i] ==
          doctest::Approx(ea.vectors.data()[i] + eb.vectors.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("relation vector concatenates markers and context") {
  TokenEncodings enc;
  enc.vectors = Matrix(4, 2);
  // rows: head marker, tail marker, word, word
  enc.vectors(0, 0) = 1;
  enc.vectors(1, 1) = 1;
  enc.vectors(2, 0) = 1;
  enc.vectors(2, 1) = 1;
  enc.vectors(3, 0) = 2;
  enc.marker_positions = {0, 0, 1, 1};
  const RelationVector rv = relation_vector(enc, {{2, 3}, 2}, Variant::deterministic);
  const Vector raw{1, 0, 0, 1, 1, 1, 2, 0};
  const double norm = std::sqrt(1 + 1 + 1 + 1 + 4.0);
  REQUIRE(rv.values.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(rv.values[i] == doctest::Approx(raw[i] / norm));

  // Padding slots are zero.
  const RelationVector pad = relation_vector(enc, {{}, 2}, Variant::sampled);
  const Vector padded{1, 0, 0, 1, 0, 0, 0, 0};
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(pad.values[i] == doctest::Approx(padded[i] / std::sqrt(2.0)));
  }
  CHECK(pad.variant == Variant::sampled);

  CHECK_THROWS_AS(relation_vector(enc, {{7}, 2}, Variant::sampled), std::out_of_range);
}

TEST_CASE("relation vectors of one sentence share the marker prefix") {
  const Sentence s = make("s", {"Paul", "is", "chief", "executive", "officer", "of", "Library"},
                          {0, 0}, {6, 6});
  const Corpus c({s});
  const EncoderParams p = params_for(build_vocabulary(c), 4, 1, 8);
  const TaggedSequence t = tag_entities(s);
  const TokenEncodings enc = encode_tokens(t, p);
  const RelationVector a = relation_vector(enc, to_tagged({{2, 3}, 2}, t), Variant::sampled);
  const RelationVector b = relation_vector(enc, to_tagged({{3, 4}, 2}, t), Variant::sampled);
  CHECK(a.values != b.values);
  CHECK(l2_norm(a.values) == doctest::Approx(1.0).epsilon(1e-9));
  // Same norm scaling is not guaranteed, so compare directions of the prefix.
  const double sa = l2_norm(std::span<const double>(a.values).subspan(0, 8));
  const double sb = l2_norm(std::span<const double>(b.values).subspan(0, 8));
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a.values[i] / sa == doctest::Approx(b.values[i] / sb).epsilon(1e-12));
  }
  // Unnormalized prefixes are identical.
  const RelationTrace ta = trace_relation(t, to_tagged({{2, 3}, 2}, t), p);
  const RelationTrace tb = trace_relation(t, to_tagged({{3, 4}, 2}, t), p);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ta.normalized[i] * ta.norm == doctest::Approx(tb.normalized[i] * tb.norm));
  }
}

TEST_CASE("deterministic positions") {
  const Sentence ceo = make("ceo", {"Paul", "is", "chief", "executive", "of", "Library"},
                            {0, 0}, {5, 5});
  CHECK(deterministic_positions(ceo, 2) == ContextPositions{{2, 3}, 2});
  CHECK(deterministic_positions(ceo, 1) == ContextPositions{{2}, 1});

  // Nothing between the entities: nearest outside content words.
  const Sentence outside = make("out", {"reportedly", "Paul", "of", "Library", "said", "twice"},
                                {1, 1}, {3, 3});
  CHECK(deterministic_positions(outside, 2) == ContextPositions{{0, 4}, 2});

  const Sentence single = make("one", {"Paul", "the", "Library", "grew"}, {0, 0}, {2, 2});
  const ContextPositions p = deterministic_positions(single, 2);
  CHECK(p.indices == std::vector<std::size_t>{3});
  CHECK(p.padding() == 1);

  // Tail first: nearest the head means from the right end of the gap.
  const Sentence rev = make("rev", {"Library", "quietly", "hired", "new", "Paul"}, {4, 4},
                            {0, 0});
  CHECK(deterministic_positions(rev, 2) == ContextPositions{{2, 3}, 2});
}

TEST_CASE("external encodings") {
  const Corpus mini = load_corpus(kFixtures + "/mini5.jsonl");
  const auto enc = load_external_encodings(kFixtures + "/mini5_encodings.jsonl", mini);
  CHECK(enc.size() == 5);
  for (const Sentence& s : mini.sentences()) {
    const TokenEncodings& e = enc.at(s.id);
    CHECK(e.vectors.rows() == s.tokens.size() + 4);
    CHECK(e.vectors.cols() == 3);
    CHECK(e.marker_positions == tag_entities(s).marker_positions);
  }

  const std::string dir = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp");
  const Sentence& s = mini.sentences().front();
  const std::size_t rows = s.tokens.size() + 4;
  auto write = [&](const std::string& name, std::size_t n, std::size_t width) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path);
    out << R"({"dim":3})" << '\n';
    nlohmann::json vecs = nlohmann::json::array();
    for (std::size_t r = 0; r < n; ++r) vecs.push_back(std::vector<double>(width, 0.5));
    out << nlohmann::json{{"id", s.id}, {"vectors", vecs}}.dump() << '\n';
    return path;
  };
  CHECK(load_external_encodings(write("enc_ok.jsonl", rows, 3), mini).size() == 1);
  try {
    load_external_encodings(write("enc_short.jsonl", rows - 1, 3), mini);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find(s.id) != std::string::npos);
  }
  CHECK_THROWS_AS(load_external_encodings(write("enc_dim.jsonl", rows, 2), mini), SchemaError);
}

TEST_CASE("relation gradient matches finite differences") {
  const Sentence s = make("g", {"Paul", "is", "chief", "executive", "of", "Library", "now"},
                          {0, 0}, {5, 5});
  const Corpus c({s});
  EncoderParams p = params_for(build_vocabulary(c), 5, 1, 21);
  const TaggedSequence t = tag_entities(s);
  const ContextPositions pos = to_tagged({{2, 3}, 2}, t);

  Rng rng(22);
  Vector w(4 * 5);
  for (double& x : w) x = rng.normal();
  auto f = [&](const EncoderParams& q) { return dot(trace_relation(t, pos, q).normalized, w); };

  Matrix grad(p.embeddings.rows(), p.embeddings.cols());
  backprop_relation(trace_relation(t, pos, p), w, grad);

  double worst = 0.0;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < p.embeddings.data().size(); ++i) {
    const double keep = p.embeddings.data()[i];
    p.embeddings.data()[i] = keep + eps;
    const double up = f(p);
    p.embeddings.data()[i] = keep - eps;
    const double down = f(p);
    p.embeddings.data()[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    const double analytic = grad.data()[i];
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("variant names") {
  CHECK(parse_variant(to_string(Variant::synthetic)) == Variant::synthetic);
  CHECK_THROWS_AS(parse_variant("other"), SchemaError);
}
