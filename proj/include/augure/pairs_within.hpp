#pragma once

// Within-sentence positive pairs: two independent context-word samples of
// one sentence, and a sentence paired with a copy whose entities were swapped
// for other entities of the same types.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "augure/corpus.hpp"
#include "augure/encoder.hpp"
#include "json.hpp"

namespace augure {

enum class PairSource {
  dropout,
  entity_aug,
  same_template,
  entailed_template,
  rewrite_derived,
};

std::string_view to_string(PairSource s);
PairSource parse_pair_source(std::string_view s);
bool is_within_source(PairSource s);

// One encodable instance: a sentence (original or synthetic) plus how its
// context words are chosen. `positions` is only meaningful for sampled
// instances; the others use deterministic_positions at encode time.
struct InstanceRef {
  std::string sentence_id;
  Variant variant = Variant::deterministic;
  ContextPositions positions;

  bool operator==(const InstanceRef&) const = default;
};

InstanceRef deterministic_instance(std::string sentence_id);

struct PositivePair {
  InstanceRef anchor;
  InstanceRef partner;
  PairSource source = PairSource::dropout;

  bool operator==(const PositivePair&) const = default;
};

nlohmann::json to_json(const InstanceRef& ref);
nlohmann::json to_json(const PositivePair& pair);
PositivePair pair_from_json(const nlohmann::json& j);
// One JSON object per line.
void write_pairs(std::ostream& out, const std::vector<PositivePair>& pairs);
std::vector<PositivePair> read_pairs(std::istream& in, const std::string& source);

struct SyntheticSentence {
  Sentence sentence;
  std::string parent_id;
  std::vector<std::string> replaced_head;
  std::vector<std::string> replaced_tail;
};

// "<parent>#aug".
std::string synthetic_id(std::string_view parent_id);
// Strips a trailing "#aug".
std::string_view base_sentence_id(std::string_view id);

// m distinct non-stop positions drawn uniformly from the tokens between the
// entities, topped up uniformly from the rest of the sentence, then padded.
ContextPositions sample_intermediate_positions(const Sentence& s, std::size_t m,
                                               Rng& rng);

PositivePair make_dropout_pair(const Sentence& s, std::size_t m, Rng& rng);

// nullopt when either entity type has no alternative surface form.
std::optional<SyntheticSentence> replace_entities(const Sentence& s,
                                                  const EntityPool& pool,
                                                  Rng& rng);

struct WithinPairs {
  std::vector<PositivePair> pairs;
  std::vector<SyntheticSentence> synthetic;
};

// Per sentence: one dropout pair and, when replacement succeeds and
// `entity_aug` is set, one entity_aug pair. Each sentence draws from its own
// stream derived from (seed, sentence id).
WithinPairs build_within_pairs(const Corpus& c, std::size_t m,
                               const EntityPool& pool, std::uint64_t seed,
                               bool entity_aug = true);

}  // namespace augure
