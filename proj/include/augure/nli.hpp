#pragma once

// Entailment adapters behind the template-grouping step. Three modes:
// an offline scores file, an HTTP gateway, and a lexical stub that needs no
// model at all.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>

namespace augure {

enum class NliLabel { entailment, neutral, contradiction };

struct NliScores {
  double entail = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;

  // Argmax; ties resolve in the order entailment, neutral, contradiction.
  NliLabel verdict() const;
};

// Throws MiningError unless all three are finite, non-negative and sum to
// 1 within 1e-6.
void check_probabilities(const NliScores& s, const std::string& context);

class EntailmentAdapter {
 public:
  virtual ~EntailmentAdapter() = default;
  virtual NliScores score(const std::string& premise,
                          const std::string& hypothesis) = 0;
  virtual std::string_view mode() const = 0;
};

// Entails iff the hypothesis predicate tokens (everything except the [h] and
// [t] placeholders) form a case-insensitive subsequence of the premise
// tokens. Returns (1, 0, 0) or (0, 1, 0).
class LexicalStubAdapter : public EntailmentAdapter {
 public:
  NliScores score(const std::string& premise,
                  const std::string& hypothesis) override;
  std::string_view mode() const override { return "lexical_stub"; }
};

// JSONL {"premise", "hypothesis", "p_entail", "p_neutral", "p_contra"}.
class OfflineNliAdapter : public EntailmentAdapter {
 public:
  explicit OfflineNliAdapter(const std::filesystem::path& path);
  NliScores score(const std::string& premise,
                  const std::string& hypothesis) override;
  std::string_view mode() const override { return "offline_file"; }
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, NliScores> scores_;
};

// POST {base_url}/nli with {"premise", "hypothesis"}; expects
// {"p_entail", "p_neutral", "p_contra"}. Answers are memoized per query.
class HttpNliAdapter : public EntailmentAdapter {
 public:
  HttpNliAdapter(std::string host, int port, double timeout_seconds = 30.0);
  NliScores score(const std::string& premise,
                  const std::string& hypothesis) override;
  std::string_view mode() const override { return "http_gateway"; }

 private:
  std::string host_;
  int port_;
  double timeout_seconds_;
  std::map<std::pair<std::string, std::string>, NliScores> cache_;
};

struct NliSettings {
  std::string mode = "lexical_stub";  // lexical_stub | offline_file | http_gateway
  std::filesystem::path scores_path;
  std::string host = "127.0.0.1";
  int port = 8080;
};

std::unique_ptr<EntailmentAdapter> make_entailment_adapter(const NliSettings& s);

}  // namespace augure
