#pragma once

// Relation encoder. The reference encoder is a trainable embedding table
// with a mean-pooling context window; externally computed contextual
// vectors can be loaded in its place (frozen).

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "augure/common.hpp"
#include "augure/corpus.hpp"

namespace augure {

inline constexpr std::string_view kUnknownToken = "<unk>";

struct EncoderParams {
  // Row index -> token; row 0 is always kUnknownToken.
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> index;
  Matrix embeddings;  // |vocab| x dim
  std::size_t dim = 0;
  std::size_t window = 1;

  std::size_t lookup(const std::string& token) const;
  // Throws ConfigError when an invariant is broken.
  void validate() const;

  // Random N(0, 1/dim) rows.
  static EncoderParams initialize(std::vector<std::string> tokens,
                                  std::size_t dim, std::size_t window, Rng& rng);
};

// Every token of every sentence plus the four markers of every entity type.
std::vector<std::string> build_vocabulary(const Corpus& corpus);

struct TokenEncodings {
  Matrix vectors;  // one row per tagged token
  std::array<std::size_t, 4> marker_positions{};
  std::string origin;
};

// Row i is the mean of the embedding rows at positions i-w .. i+w, clipped.
TokenEncodings encode_tokens(const TaggedSequence& t, const EncoderParams& p);

enum class Variant { deterministic, sampled, synthetic };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

struct RelationVector {
  Vector values;
  std::string origin;
  Variant variant = Variant::deterministic;
};

// [h_<e1> | h_<e2> | h_p1 | ... | h_pm], L2-normalized. `positions` are in
// tagged coordinates; padding slots contribute zeros.
RelationVector relation_vector(const TokenEncodings& enc,
                               const ContextPositions& positions,
                               Variant variant);

// [h_<e1> | h_<e2> | every row], the variable-length form. Not used for
// training or clustering.
Vector full_relation_encoding(const TokenEncodings& enc);

// The m non-stop tokens between the entities that sit closest to the head,
// then the closest non-stop tokens elsewhere, then padding. Sentence
// coordinates, ascending.
ContextPositions deterministic_positions(const Sentence& s, std::size_t m);

// JSONL: header {"dim": d}, then {"id", "vectors": [[...], ...]} per
// sentence, rows aligned to tag_entities(sentence).
std::map<std::string, TokenEncodings> load_external_encodings(
    const std::filesystem::path& path, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Differentiable path used by training. Computes only the rows the relation
// vector needs and remembers enough to push gradients back into the table.
// ---------------------------------------------------------------------------

struct RelationTrace {
  Vector normalized;
  double norm = 0.0;
  // Vocabulary rows averaged into each slot; empty for a padding slot.
  std::vector<std::vector<std::size_t>> slot_rows;
};

RelationTrace trace_relation(const TaggedSequence& t,
                             const ContextPositions& tagged_positions,
                             const EncoderParams& p);

// Adds d(loss)/d(embeddings) given d(loss)/d(normalized vector).
void backprop_relation(const RelationTrace& trace,
                       std::span<const double> grad_normalized,
                       Matrix& table_grad);

}  // namespace augure
