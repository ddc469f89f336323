#include "augure/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace augure {

std::vector<std::string> Sentence::head_surface() const {
  return {tokens.begin() + static_cast<std::ptrdiff_t>(head.start),
          tokens.begin() + static_cast<std::ptrdiff_t>(head.end) + 1};
}

std::vector<std::string> Sentence::tail_surface() const {
  return {tokens.begin() + static_cast<std::ptrdiff_t>(tail.start),
          tokens.begin() + static_cast<std::ptrdiff_t>(tail.end) + 1};
}

std::string Sentence::text() const { return join(tokens, " "); }

void validate_sentence(const Sentence& s) {
  if (s.id.empty()) throw ValidationError(s.id, "empty id");
  const std::size_t n = s.tokens.size();
  if (n == 0) throw ValidationError(s.id, "no tokens");
  auto check = [&](const Span& span, const char* which) {
    if (span.start > span.end) {
      throw ValidationError(s.id, std::string(which) + " span inverted");
    }
    if (span.end >= n) {
      throw ValidationError(s.id, std::string(which) + " span out of range");
    }
  };
  check(s.head, "head");
  check(s.tail, "tail");
  if (s.head.start <= s.tail.end && s.tail.start <= s.head.end) {
    throw ValidationError(s.id, "head and tail spans overlap");
  }
  if (s.head_type.empty() || s.tail_type.empty()) {
    throw ValidationError(s.id, "missing entity type");
  }
}

Corpus::Corpus(std::vector<Sentence> sentences)
    : sentences_(std::move(sentences)) {
  index_.reserve(sentences_.size());
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    const Sentence& s = sentences_[i];
    validate_sentence(s);
    if (!index_.emplace(s.id, i).second) {
      throw ValidationError(s.id, "duplicate sentence id");
    }
    entity_types_.insert(s.head_type);
    entity_types_.insert(s.tail_type);
  }
}

const Sentence* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &sentences_[it->second];
}

const Sentence& Corpus::at(std::string_view id) const {
  const Sentence* s = find(id);
  if (s == nullptr) {
    throw std::out_of_range("unknown sentence id '" + std::string(id) + "'");
  }
  return *s;
}

std::size_t Corpus::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) {
    throw std::out_of_range("unknown sentence id '" + std::string(id) + "'");
  }
  return it->second;
}

bool Corpus::has_gold() const {
  return !sentences_.empty() &&
         std::all_of(sentences_.begin(), sentences_.end(),
                     [](const Sentence& s) { return s.gold_relation.has_value(); });
}

namespace {

std::size_t read_index(const nlohmann::json& j, const char* key,
                       const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw SchemaError(where + ": missing integer field '" + key + "'");
  }
  const auto v = j.at(key).get<long long>();
  if (v < 0) {
    throw SchemaError(where + ": negative index in '" + key + "'");
  }
  return static_cast<std::size_t>(v);
}

std::pair<Span, std::string> read_entity(const nlohmann::json& j,
                                         const char* key,
                                         const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_object()) {
    throw SchemaError(where + ": missing object field '" + key + "'");
  }
  const auto& e = j.at(key);
  const std::string ctx = where + "." + key;
  Span span{read_index(e, "start", ctx), read_index(e, "end", ctx)};
  if (!e.contains("type") || !e.at("type").is_string()) {
    throw SchemaError(ctx + ": missing string field 'type'");
  }
  return {span, to_upper(e.at("type").get<std::string>())};
}

}  // namespace

Sentence sentence_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");
  Sentence s;
  if (!j.contains("id") || !j.at("id").is_string()) {
    throw SchemaError(where + ": missing string field 'id'");
  }
  s.id = j.at("id").get<std::string>();
  if (!j.contains("tokens") || !j.at("tokens").is_array()) {
    throw SchemaError(where + ": missing array field 'tokens'");
  }
  for (const auto& tok : j.at("tokens")) {
    if (!tok.is_string()) throw SchemaError(where + ": non-string token");
    s.tokens.push_back(tok.get<std::string>());
  }
  std::tie(s.head, s.head_type) = read_entity(j, "head", where);
  std::tie(s.tail, s.tail_type) = read_entity(j, "tail", where);
  if (j.contains("gold_relation") && !j.at("gold_relation").is_null()) {
    s.gold_relation = j.at("gold_relation").get<std::string>();
  }
  return s;
}

nlohmann::json sentence_to_json(const Sentence& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["tokens"] = s.tokens;
  j["head"] = {{"start", s.head.start}, {"end", s.head.end}, {"type", s.head_type}};
  j["tail"] = {{"start", s.tail.start}, {"end", s.tail.end}, {"type", s.tail_type}};
  j["gold_relation"] = s.gold_relation ? nlohmann::json(*s.gold_relation)
                                       : nlohmann::json(nullptr);
  return j;
}

Corpus parse_corpus(std::istream& in, const std::string& source_name) {
  std::vector<Sentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    try {
      sentences.push_back(
          sentence_from_json(j, source_name + ":" + std::to_string(line_no)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  return Corpus(std::move(sentences));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Sentence& s : corpus.sentences()) {
    out << sentence_to_json(s).dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string marker_token(Marker marker, std::string_view type) {
  switch (marker) {
    case Marker::head_open:
      return "<e1:" + std::string(type) + ">";
    case Marker::head_close:
      return "</e1:" + std::string(type) + ">";
    case Marker::tail_open:
      return "<e2:" + std::string(type) + ">";
    case Marker::tail_close:
      return "</e2:" + std::string(type) + ">";
  }
  return {};
}

bool is_marker_token(std::string_view token) {
  if (token.size() < 6 || token.back() != '>') return false;
  return token.starts_with("<e1:") || token.starts_with("<e2:") ||
         token.starts_with("</e1:") || token.starts_with("</e2:");
}

TaggedSequence tag_entities(const Sentence& s) {
  TaggedSequence t;
  t.origin = s.id;
  t.tokens.reserve(s.tokens.size() + 4);
  t.original_index.resize(s.tokens.size());
  auto place = [&](Marker m, std::string_view type) {
    t.marker_positions[static_cast<std::size_t>(m)] = t.tokens.size();
    t.tokens.push_back(marker_token(m, type));
  };
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i == s.head.start) place(Marker::head_open, s.head_type);
    if (i == s.tail.start) place(Marker::tail_open, s.tail_type);
    t.original_index[i] = t.tokens.size();
    t.tokens.push_back(s.tokens[i]);
    if (i == s.head.end) place(Marker::head_close, s.head_type);
    if (i == s.tail.end) place(Marker::tail_close, s.tail_type);
  }
  return t;
}

std::vector<std::string> strip_markers(const TaggedSequence& t) {
  std::vector<std::string> out;
  out.reserve(t.tokens.size());
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    if (std::find(t.marker_positions.begin(), t.marker_positions.end(), i) !=
        t.marker_positions.end()) {
      continue;
    }
    out.push_back(t.tokens[i]);
  }
  return out;
}

ContextPositions to_tagged(const ContextPositions& p, const TaggedSequence& t) {
  ContextPositions out;
  out.slots = p.slots;
  out.indices.reserve(p.indices.size());
  for (std::size_t i : p.indices) {
    if (i >= t.original_index.size()) {
      throw std::out_of_range("context position " + std::to_string(i) +
                              " outside sentence '" + t.origin + "'");
    }
    out.indices.push_back(t.original_index[i]);
  }
  return out;
}

std::vector<std::size_t> intermediate_content_positions(const Sentence& s) {
  const Span& first = s.tail_first() ? s.tail : s.head;
  const Span& second = s.tail_first() ? s.head : s.tail;
  std::vector<std::size_t> out;
  for (std::size_t i = first.end + 1; i < second.start; ++i) {
    if (!is_stop_word(s.tokens[i])) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> outside_content_positions(const Sentence& s) {
  const Span& first = s.tail_first() ? s.tail : s.head;
  const Span& second = s.tail_first() ? s.head : s.tail;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i >= first.start && i <= second.end) continue;
    if (!is_stop_word(s.tokens[i])) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<PooledEntity>* EntityPool::bucket(std::string_view type) const {
  auto it = buckets.find(std::string(type));
  return it == buckets.end() ? nullptr : &it->second;
}

EntityPool build_entity_pool(const Corpus& c) {
  EntityPool pool;
  auto add = [&](const std::string& type, std::vector<std::string> surface,
                 const std::string& source) {
    auto& bucket = pool.buckets[type];
    const bool seen = std::any_of(
        bucket.begin(), bucket.end(),
        [&](const PooledEntity& e) { return e.surface == surface; });
    if (!seen) bucket.push_back({std::move(surface), source});
  };
  for (const Sentence& s : c.sentences()) {
    add(s.head_type, s.head_surface(), s.id);
    add(s.tail_type, s.tail_surface(), s.id);
  }
  return pool;
}

}  // namespace augure
