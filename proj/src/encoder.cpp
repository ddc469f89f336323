#include "augure/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace augure {

std::size_t EncoderParams::lookup(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? 0 : it->second;
}

void EncoderParams::validate() const {
  if (dim == 0) throw ConfigError("encoder: embedding width must be positive");
  if (vocab.empty() || vocab.front() != kUnknownToken) {
    throw ConfigError("encoder: vocabulary must start with the unknown token");
  }
  if (embeddings.rows() != vocab.size() || embeddings.cols() != dim) {
    throw ConfigError("encoder: embedding table shape does not match vocab");
  }
  for (double x : embeddings.data()) {
    if (!std::isfinite(x)) throw ConfigError("encoder: non-finite embedding");
  }
}

EncoderParams EncoderParams::initialize(std::vector<std::string> tokens,
                                        std::size_t dim, std::size_t window,
                                        Rng& rng) {
  if (dim == 0) throw ConfigError("encoder: embedding width must be positive");
  EncoderParams p;
  p.dim = dim;
  p.window = window;
  p.vocab.emplace_back(kUnknownToken);
  for (auto& tok : tokens) {
    if (tok == kUnknownToken || p.index.contains(tok)) continue;
    p.index.emplace(tok, p.vocab.size());
    p.vocab.push_back(std::move(tok));
  }
  p.index.emplace(std::string(kUnknownToken), 0);
  p.embeddings = Matrix(p.vocab.size(), dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : p.embeddings.data()) x = rng.normal() * scale;
  return p;
}

std::vector<std::string> build_vocabulary(const Corpus& corpus) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& tok) {
    if (seen.insert(tok).second) out.push_back(tok);
  };
  for (const std::string& type : corpus.entity_types()) {
    add(marker_token(Marker::head_open, type));
    add(marker_token(Marker::head_close, type));
    add(marker_token(Marker::tail_open, type));
    add(marker_token(Marker::tail_close, type));
  }
  for (const Sentence& s : corpus.sentences()) {
    for (const std::string& tok : s.tokens) add(tok);
  }
  return out;
}

namespace {

std::pair<std::size_t, std::size_t> window_bounds(std::size_t i, std::size_t n,
                                                  std::size_t w) {
  const std::size_t lo = i >= w ? i - w : 0;
  const std::size_t hi = std::min(n - 1, i + w);
  return {lo, hi};
}

}  // namespace

TokenEncodings encode_tokens(const TaggedSequence& t, const EncoderParams& p) {
  TokenEncodings enc;
  enc.origin = t.origin;
  enc.marker_positions = t.marker_positions;
  const std::size_t n = t.tokens.size();
  enc.vectors = Matrix(n, p.dim);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = p.lookup(t.tokens[i]);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = window_bounds(i, n, p.window);
    auto out = enc.vectors.row(i);
    for (std::size_t j = lo; j <= hi; ++j) {
      const auto src = p.embeddings.row(rows[j]);
      for (std::size_t k = 0; k < p.dim; ++k) out[k] += src[k];
    }
    const double count = static_cast<double>(hi - lo + 1);
    for (double& x : out) x /= count;
  }
  return enc;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::deterministic:
      return "deterministic";
    case Variant::sampled:
      return "sampled";
    case Variant::synthetic:
      return "synthetic";
  }
  return "deterministic";
}

Variant parse_variant(std::string_view s) {
  if (s == "deterministic") return Variant::deterministic;
  if (s == "sampled") return Variant::sampled;
  if (s == "synthetic") return Variant::synthetic;
  throw SchemaError("unknown variant '" + std::string(s) + "'");
}

namespace {

void check_positions(const ContextPositions& positions, std::size_t rows) {
  if (positions.indices.size() > positions.slots) {
    throw std::invalid_argument("more context positions than slots");
  }
  for (std::size_t i = 0; i < positions.indices.size(); ++i) {
    if (positions.indices[i] >= rows) {
      throw std::out_of_range("context position " +
                              std::to_string(positions.indices[i]) +
                              " out of range (" + std::to_string(rows) +
                              " rows)");
    }
  }
}

std::vector<std::size_t> sorted_unique(const std::vector<std::size_t>& in) {
  std::vector<std::size_t> out = in;
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw std::invalid_argument("duplicate context position");
  }
  return out;
}

}  // namespace

RelationVector relation_vector(const TokenEncodings& enc,
                               const ContextPositions& positions,
                               Variant variant) {
  check_positions(positions, enc.vectors.rows());
  const std::size_t d = enc.vectors.cols();
  RelationVector rv;
  rv.origin = enc.origin;
  rv.variant = variant;
  rv.values.assign((2 + positions.slots) * d, 0.0);
  auto copy_row = [&](std::size_t row, std::size_t slot) {
    const auto src = enc.vectors.row(row);
    std::copy(src.begin(), src.end(), rv.values.begin() + slot * d);
  };
  copy_row(enc.marker_positions[static_cast<std::size_t>(Marker::head_open)], 0);
  copy_row(enc.marker_positions[static_cast<std::size_t>(Marker::tail_open)], 1);
  const auto ordered = sorted_unique(positions.indices);
  for (std::size_t i = 0; i < ordered.size(); ++i) copy_row(ordered[i], 2 + i);
  normalize_in_place(rv.values);
  return rv;
}

Vector full_relation_encoding(const TokenEncodings& enc) {
  const std::size_t d = enc.vectors.cols();
  Vector out;
  out.reserve((2 + enc.vectors.rows()) * d);
  for (Marker m : {Marker::head_open, Marker::tail_open}) {
    const auto row = enc.vectors.row(enc.marker_positions[static_cast<std::size_t>(m)]);
    out.insert(out.end(), row.begin(), row.end());
  }
  out.insert(out.end(), enc.vectors.data().begin(), enc.vectors.data().end());
  return out;
}

ContextPositions deterministic_positions(const Sentence& s, std::size_t m) {
  if (m == 0) throw std::invalid_argument("deterministic_positions: m must be >= 1");
  ContextPositions out;
  out.slots = m;
  std::vector<std::size_t> between = intermediate_content_positions(s);
  // Nearest the head: from the left when the head comes first, else from the
  // right.
  if (s.tail_first()) std::reverse(between.begin(), between.end());
  for (std::size_t i = 0; i < between.size() && out.indices.size() < m; ++i) {
    out.indices.push_back(between[i]);
  }
  if (out.indices.size() < m) {
    std::vector<std::size_t> outside = outside_content_positions(s);
    auto distance = [&](std::size_t i) {
      return i < s.head.start ? s.head.start - i : i - s.head.end;
    };
    std::stable_sort(outside.begin(), outside.end(),
                     [&](std::size_t a, std::size_t b) {
                       return distance(a) < distance(b);
                     });
    for (std::size_t i = 0; i < outside.size() && out.indices.size() < m; ++i) {
      out.indices.push_back(outside[i]);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

std::map<std::string, TokenEncodings> load_external_encodings(
    const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open encodings file " + path.string());
  const std::string source = path.string();
  std::map<std::string, TokenEncodings> out;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> dim;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (!dim) {
      if (!j.contains("dim") || !j.at("dim").is_number_integer() ||
          j.at("dim").get<long long>() <= 0) {
        throw SchemaError(source + ": first line must be {\"dim\": positive int}");
      }
      dim = j.at("dim").get<std::size_t>();
      continue;
    }
    if (!j.contains("id") || !j.contains("vectors") || !j.at("vectors").is_array()) {
      throw SchemaError(source + ":" + std::to_string(line_no) +
                        ": expected {\"id\", \"vectors\"}");
    }
    const std::string id = j.at("id").get<std::string>();
    const Sentence* s = corpus.find(id);
    if (s == nullptr) {
      throw SchemaError("encodings for unknown sentence '" + id + "'");
    }
    const TaggedSequence tagged = tag_entities(*s);
    const auto& rows = j.at("vectors");
    if (rows.size() != tagged.tokens.size()) {
      throw SchemaError("sentence '" + id + "': " + std::to_string(rows.size()) +
                        " vectors for " + std::to_string(tagged.tokens.size()) +
                        " tagged tokens");
    }
    TokenEncodings enc;
    enc.origin = id;
    enc.marker_positions = tagged.marker_positions;
    enc.vectors = Matrix(rows.size(), *dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].is_array() || rows[r].size() != *dim) {
        throw SchemaError("sentence '" + id + "': row " + std::to_string(r) +
                          " does not have dim " + std::to_string(*dim));
      }
      for (std::size_t c = 0; c < *dim; ++c) {
        const double v = rows[r][c].get<double>();
        if (!std::isfinite(v)) {
          throw SchemaError("sentence '" + id + "': non-finite value");
        }
        enc.vectors(r, c) = v;
      }
    }
    out.insert_or_assign(id, std::move(enc));
  }
  if (!dim) throw SchemaError(source + ": missing {\"dim\": ...} header");
  return out;
}

// ---------------------------------------------------------------------------

RelationTrace trace_relation(const TaggedSequence& t,
                             const ContextPositions& tagged_positions,
                             const EncoderParams& p) {
  const std::size_t n = t.tokens.size();
  check_positions(tagged_positions, n);
  RelationTrace trace;
  trace.slot_rows.resize(2 + tagged_positions.slots);
  auto rows_for = [&](std::size_t position) {
    const auto [lo, hi] = window_bounds(position, n, p.window);
    std::vector<std::size_t> rows;
    rows.reserve(hi - lo + 1);
    for (std::size_t j = lo; j <= hi; ++j) rows.push_back(p.lookup(t.tokens[j]));
    return rows;
  };
  trace.slot_rows[0] = rows_for(t.head_marker());
  trace.slot_rows[1] = rows_for(t.tail_marker());
  const auto ordered = sorted_unique(tagged_positions.indices);
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    trace.slot_rows[2 + i] = rows_for(ordered[i]);
  }

  const std::size_t d = p.dim;
  Vector raw(trace.slot_rows.size() * d, 0.0);
  for (std::size_t slot = 0; slot < trace.slot_rows.size(); ++slot) {
    const auto& rows = trace.slot_rows[slot];
    if (rows.empty()) continue;
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      const auto src = p.embeddings.row(r);
      for (std::size_t k = 0; k < d; ++k) raw[slot * d + k] += src[k] * inv;
    }
  }
  trace.norm = l2_norm(raw);
  trace.normalized = std::move(raw);
  if (trace.norm > 0.0) {
    for (double& x : trace.normalized) x /= trace.norm;
  }
  return trace;
}

void backprop_relation(const RelationTrace& trace,
                       std::span<const double> grad_normalized,
                       Matrix& table_grad) {
  if (grad_normalized.size() != trace.normalized.size()) {
    throw ShapeError("backprop_relation: gradient size mismatch");
  }
  if (trace.norm == 0.0) {
    throw std::domain_error("backprop_relation: zero relation vector");
  }
  const std::size_t d = table_grad.cols();
  // d(u/|u|)/du applied to g: (g - u_hat (u_hat . g)) / |u|.
  const double proj = dot(trace.normalized, grad_normalized);
  Vector g_raw(grad_normalized.size());
  for (std::size_t i = 0; i < g_raw.size(); ++i) {
    g_raw[i] = (grad_normalized[i] - trace.normalized[i] * proj) / trace.norm;
  }
  for (std::size_t slot = 0; slot < trace.slot_rows.size(); ++slot) {
    const auto& rows = trace.slot_rows[slot];
    if (rows.empty()) continue;
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      auto dst = table_grad.row(r);
      for (std::size_t k = 0; k < d; ++k) dst[k] += g_raw[slot * d + k] * inv;
    }
  }
}

}  // namespace augure
