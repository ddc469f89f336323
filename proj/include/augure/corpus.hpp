#pragma once

// Sentence data model, JSONL ingestion, entity-marker tagging, stop words and
// the type-indexed entity pool.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "augure/common.hpp"
#include "json.hpp"

namespace augure {

// Inclusive token range [start, end].
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t i) const { return i >= start && i <= end; }
  bool operator==(const Span&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  Span head;
  Span tail;
  std::string head_type;
  std::string tail_type;
  // Evaluation only. Nothing under mining or training reads this field.
  std::optional<std::string> gold_relation;

  std::vector<std::string> head_surface() const;
  std::vector<std::string> tail_surface() const;
  // Space-joined tokens.
  std::string text() const;
  // True when the tail span comes before the head span.
  bool tail_first() const { return tail.start < head.start; }

  bool operator==(const Sentence&) const = default;
};

// Throws ValidationError when spans are out of range, inverted or overlap.
void validate_sentence(const Sentence& s);

class Corpus {
 public:
  Corpus() = default;
  // Validates every sentence and the id-uniqueness invariant.
  explicit Corpus(std::vector<Sentence> sentences);

  const std::vector<Sentence>& sentences() const { return sentences_; }
  const std::set<std::string>& entity_types() const { return entity_types_; }
  std::size_t size() const { return sentences_.size(); }
  bool empty() const { return sentences_.empty(); }

  const Sentence* find(std::string_view id) const;
  // Throws std::out_of_range for unknown ids.
  const Sentence& at(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;
  bool has_gold() const;

  bool operator==(const Corpus& other) const {
    return sentences_ == other.sentences_;
  }

 private:
  std::vector<Sentence> sentences_;
  std::set<std::string> entity_types_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Schema: {"id", "tokens", "head": {"start","end","type"}, "tail": {...},
// "gold_relation": str|null}. `where` names the record in error messages.
Sentence sentence_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json sentence_to_json(const Sentence& s);

Corpus parse_corpus(std::istream& in, const std::string& source_name);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Entity markers.
// ---------------------------------------------------------------------------

enum class Marker { head_open = 0, head_close = 1, tail_open = 2, tail_close = 3 };

// "<e1:TYPE>", "</e1:TYPE>", "<e2:TYPE>", "</e2:TYPE>".
std::string marker_token(Marker marker, std::string_view type);
bool is_marker_token(std::string_view token);

struct TaggedSequence {
  std::vector<std::string> tokens;
  // Indexed by Marker.
  std::array<std::size_t, 4> marker_positions{};
  std::string origin;
  // original_index[i] is the tagged position of original token i.
  std::vector<std::size_t> original_index;

  std::size_t head_marker() const {
    return marker_positions[static_cast<std::size_t>(Marker::head_open)];
  }
  std::size_t tail_marker() const {
    return marker_positions[static_cast<std::size_t>(Marker::tail_open)];
  }
};

TaggedSequence tag_entities(const Sentence& s);
std::vector<std::string> strip_markers(const TaggedSequence& t);

// ---------------------------------------------------------------------------
// Context-word positions for the fixed-length relation vector. `indices` are
// ascending and distinct; the remaining `slots - indices.size()` slots are
// zero padding.
// ---------------------------------------------------------------------------

struct ContextPositions {
  std::vector<std::size_t> indices;
  std::size_t slots = 0;

  std::size_t padding() const { return slots - indices.size(); }
  bool operator==(const ContextPositions&) const = default;
};

// Sentence coordinates -> tagged-sequence coordinates.
ContextPositions to_tagged(const ContextPositions& p, const TaggedSequence& t);

// ---------------------------------------------------------------------------
// Stop words.
// ---------------------------------------------------------------------------

// Case-insensitive membership in the shipped English list. Tokens made only
// of punctuation count as stop words too.
bool is_stop_word(std::string_view token);
std::string_view stop_word_list_version();
const std::vector<std::string_view>& stop_word_list();

// Non-stop, non-entity token indices strictly between the two spans.
std::vector<std::size_t> intermediate_content_positions(const Sentence& s);
// Non-stop tokens outside both spans and outside the gap between them.
std::vector<std::size_t> outside_content_positions(const Sentence& s);

// ---------------------------------------------------------------------------
// Entity pool.
// ---------------------------------------------------------------------------

struct PooledEntity {
  std::vector<std::string> surface;
  std::string source_id;
  bool operator==(const PooledEntity&) const = default;
};

// type -> entities in first-seen corpus order, deduplicated by surface form.
struct EntityPool {
  std::map<std::string, std::vector<PooledEntity>> buckets;

  const std::vector<PooledEntity>* bucket(std::string_view type) const;
};

EntityPool build_entity_pool(const Corpus& c);

}  // namespace augure
