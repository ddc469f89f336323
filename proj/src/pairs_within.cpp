#include "augure/pairs_within.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace augure {

std::string_view to_string(PairSource s) {
  switch (s) {
    case PairSource::dropout:
      return "dropout";
    case PairSource::entity_aug:
      return "entity_aug";
    case PairSource::same_template:
      return "same_template";
    case PairSource::entailed_template:
      return "entailed_template";
    case PairSource::rewrite_derived:
      return "rewrite_derived";
  }
  return "dropout";
}

PairSource parse_pair_source(std::string_view s) {
  for (PairSource p : {PairSource::dropout, PairSource::entity_aug,
                       PairSource::same_template, PairSource::entailed_template,
                       PairSource::rewrite_derived}) {
    if (to_string(p) == s) return p;
  }
  throw SchemaError("unknown pair source '" + std::string(s) + "'");
}

bool is_within_source(PairSource s) {
  return s == PairSource::dropout || s == PairSource::entity_aug;
}

InstanceRef deterministic_instance(std::string sentence_id) {
  InstanceRef ref;
  ref.variant = base_sentence_id(sentence_id).size() == sentence_id.size()
                    ? Variant::deterministic
                    : Variant::synthetic;
  ref.sentence_id = std::move(sentence_id);
  return ref;
}

nlohmann::json to_json(const InstanceRef& ref) {
  nlohmann::json j;
  j["id"] = ref.sentence_id;
  j["variant"] = std::string(to_string(ref.variant));
  if (ref.variant == Variant::sampled) {
    j["positions"] = ref.positions.indices;
    j["slots"] = ref.positions.slots;
  }
  return j;
}

nlohmann::json to_json(const PositivePair& pair) {
  // nlohmann objects are key-sorted, so dumps are byte-stable.
  return {{"anchor", to_json(pair.anchor)},
          {"partner", to_json(pair.partner)},
          {"source", std::string(to_string(pair.source))}};
}

namespace {
InstanceRef instance_from_json(const nlohmann::json& j) {
  InstanceRef ref;
  ref.sentence_id = j.at("id").get<std::string>();
  ref.variant = parse_variant(j.at("variant").get<std::string>());
  if (ref.variant == Variant::sampled) {
    ref.positions.indices = j.at("positions").get<std::vector<std::size_t>>();
    ref.positions.slots = j.at("slots").get<std::size_t>();
  }
  return ref;
}
}  // namespace

PositivePair pair_from_json(const nlohmann::json& j) {
  return {instance_from_json(j.at("anchor")), instance_from_json(j.at("partner")),
          parse_pair_source(j.at("source").get<std::string>())};
}

void write_pairs(std::ostream& out, const std::vector<PositivePair>& pairs) {
  for (const PositivePair& p : pairs) out << to_json(p).dump() << '\n';
}

std::vector<PositivePair> read_pairs(std::istream& in, const std::string& source) {
  std::vector<PositivePair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(pair_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

std::string synthetic_id(std::string_view parent_id) {
  return std::string(parent_id) + "#aug";
}

std::string_view base_sentence_id(std::string_view id) {
  constexpr std::string_view kSuffix = "#aug";
  if (id.ends_with(kSuffix)) id.remove_suffix(kSuffix.size());
  return id;
}

ContextPositions sample_intermediate_positions(const Sentence& s, std::size_t m,
                                               Rng& rng) {
  if (m == 0) throw std::invalid_argument("sample_intermediate_positions: m must be >= 1");
  ContextPositions out;
  out.slots = m;
  const std::vector<std::size_t> between = intermediate_content_positions(s);
  if (between.size() >= m) {
    for (std::size_t k : rng.sample_without_replacement(between.size(), m)) {
      out.indices.push_back(between[k]);
    }
  } else {
    out.indices = between;
    const std::vector<std::size_t> outside = outside_content_positions(s);
    const std::size_t need = std::min(m - between.size(), outside.size());
    for (std::size_t k : rng.sample_without_replacement(outside.size(), need)) {
      out.indices.push_back(outside[k]);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

PositivePair make_dropout_pair(const Sentence& s, std::size_t m, Rng& rng) {
  PositivePair pair;
  pair.source = PairSource::dropout;
  pair.anchor = {s.id, Variant::sampled, sample_intermediate_positions(s, m, rng)};
  pair.partner = {s.id, Variant::sampled, sample_intermediate_positions(s, m, rng)};
  return pair;
}

namespace {

const PooledEntity* draw_alternative(const EntityPool& pool,
                                     const std::string& type,
                                     const std::vector<std::string>& current,
                                     Rng& rng) {
  const auto* bucket = pool.bucket(type);
  if (bucket == nullptr) return nullptr;
  std::vector<const PooledEntity*> options;
  for (const PooledEntity& e : *bucket) {
    if (e.surface != current) options.push_back(&e);
  }
  if (options.empty()) return nullptr;
  return options[rng.uniform_index(options.size())];
}

}  // namespace

std::optional<SyntheticSentence> replace_entities(const Sentence& s,
                                                  const EntityPool& pool,
                                                  Rng& rng) {
  const PooledEntity* head = draw_alternative(pool, s.head_type, s.head_surface(), rng);
  const PooledEntity* tail = draw_alternative(pool, s.tail_type, s.tail_surface(), rng);
  if (head == nullptr || tail == nullptr) return std::nullopt;

  SyntheticSentence out;
  out.parent_id = s.id;
  out.replaced_head = head->surface;
  out.replaced_tail = tail->surface;
  Sentence& x = out.sentence;
  x.id = synthetic_id(s.id);
  x.head_type = s.head_type;
  x.tail_type = s.tail_type;
  for (std::size_t i = 0; i < s.tokens.size();) {
    if (i == s.head.start) {
      x.head.start = x.tokens.size();
      x.tokens.insert(x.tokens.end(), head->surface.begin(), head->surface.end());
      x.head.end = x.tokens.size() - 1;
      i = s.head.end + 1;
    } else if (i == s.tail.start) {
      x.tail.start = x.tokens.size();
      x.tokens.insert(x.tokens.end(), tail->surface.begin(), tail->surface.end());
      x.tail.end = x.tokens.size() - 1;
      i = s.tail.end + 1;
    } else {
      x.tokens.push_back(s.tokens[i]);
      ++i;
    }
  }
  return out;
}

WithinPairs build_within_pairs(const Corpus& c, std::size_t m,
                               const EntityPool& pool, std::uint64_t seed,
                               bool entity_aug) {
  WithinPairs out;
  for (const Sentence& s : c.sentences()) {
    Rng rng(derive_seed(seed, s.id));
    out.pairs.push_back(make_dropout_pair(s, m, rng));
    if (!entity_aug) continue;
    auto synthetic = replace_entities(s, pool, rng);
    if (!synthetic) continue;
    PositivePair pair;
    pair.source = PairSource::entity_aug;
    pair.anchor = deterministic_instance(s.id);
    pair.partner = deterministic_instance(synthetic->sentence.id);
    out.pairs.push_back(std::move(pair));
    out.synthetic.push_back(std::move(*synthetic));
  }
  return out;
}

}  // namespace augure
