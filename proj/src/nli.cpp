#include "augure/nli.hpp"

#include <cmath>
#include <fstream>

#include "augure/common.hpp"
#include "httplib.h"
#include "json.hpp"

namespace augure {

NliLabel NliScores::verdict() const {
  if (entail >= neutral && entail >= contradiction) return NliLabel::entailment;
  if (neutral >= contradiction) return NliLabel::neutral;
  return NliLabel::contradiction;
}

void check_probabilities(const NliScores& s, const std::string& context) {
  for (double p : {s.entail, s.neutral, s.contradiction}) {
    if (!std::isfinite(p) || p < 0.0) {
      throw MiningError(context + ": invalid entailment probability");
    }
  }
  if (std::abs(s.entail + s.neutral + s.contradiction - 1.0) > 1e-6) {
    throw MiningError(context + ": entailment probabilities do not sum to 1");
  }
}

namespace {
bool is_placeholder(const std::string& tok) { return tok == "[h]" || tok == "[t]"; }
}  // namespace

NliScores LexicalStubAdapter::score(const std::string& premise,
                                    const std::string& hypothesis) {
  const auto premise_tokens = split_whitespace(to_lower(premise));
  std::vector<std::string> needle;
  for (auto& tok : split_whitespace(to_lower(hypothesis))) {
    if (!is_placeholder(tok)) needle.push_back(std::move(tok));
  }
  std::size_t matched = 0;
  for (const auto& tok : premise_tokens) {
    if (matched < needle.size() && tok == needle[matched]) ++matched;
  }
  if (!needle.empty() && matched == needle.size()) return {1.0, 0.0, 0.0};
  return {0.0, 1.0, 0.0};
}

OfflineNliAdapter::OfflineNliAdapter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open NLI scores file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      NliScores s{j.at("p_entail").get<double>(), j.at("p_neutral").get<double>(),
                  j.at("p_contra").get<double>()};
      check_probabilities(s, path.string() + ":" + std::to_string(line_no));
      scores_.insert_or_assign(
          {j.at("premise").get<std::string>(), j.at("hypothesis").get<std::string>()},
          s);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

NliScores OfflineNliAdapter::score(const std::string& premise,
                                   const std::string& hypothesis) {
  auto it = scores_.find({premise, hypothesis});
  if (it == scores_.end()) {
    throw MiningError("no offline entailment score for premise \"" + premise +
                      "\" / hypothesis \"" + hypothesis + "\"");
  }
  return it->second;
}

HttpNliAdapter::HttpNliAdapter(std::string host, int port, double timeout_seconds)
    : host_(std::move(host)), port_(port), timeout_seconds_(timeout_seconds) {}

NliScores HttpNliAdapter::score(const std::string& premise,
                                const std::string& hypothesis) {
  auto key = std::make_pair(premise, hypothesis);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  httplib::Client client(host_, port_);
  const auto timeout = std::chrono::duration<double>(timeout_seconds_);
  client.set_connection_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  const nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
  auto res = client.Post("/nli", body.dump(), "application/json");
  if (!res) {
    throw MiningError("entailment gateway unreachable at " + host_ + ":" +
                      std::to_string(port_) + " for premise \"" + premise + "\"");
  }
  if (res->status != 200) {
    throw MiningError("entailment gateway returned HTTP " +
                      std::to_string(res->status) + " for premise \"" + premise +
                      "\"");
  }
  NliScores s;
  try {
    const auto j = nlohmann::json::parse(res->body);
    s = {j.at("p_entail").get<double>(), j.at("p_neutral").get<double>(),
         j.at("p_contra").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw MiningError(std::string("malformed entailment gateway response: ") +
                      e.what());
  }
  check_probabilities(s, "entailment gateway");
  cache_.emplace(std::move(key), s);
  return s;
}

std::unique_ptr<EntailmentAdapter> make_entailment_adapter(const NliSettings& s) {
  if (s.mode == "lexical_stub") return std::make_unique<LexicalStubAdapter>();
  if (s.mode == "offline_file") {
    return std::make_unique<OfflineNliAdapter>(s.scores_path);
  }
  if (s.mode == "http_gateway") {
    return std::make_unique<HttpNliAdapter>(s.host, s.port);
  }
  throw ConfigError("unknown entailment adapter mode '" + s.mode + "'");
}

}  // namespace augure
