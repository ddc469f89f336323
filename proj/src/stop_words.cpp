#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "augure/corpus.hpp"

namespace augure {

namespace {

// English function words, 179 entries. Bump kVersion on any edit: mined
// templates and within-sentence samples depend on this list.
constexpr std::string_view kVersion = "en-179-v1";

const std::vector<std::string_view>& words() {
  static const std::vector<std::string_view> list = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
      "you're", "you've", "you'll", "you'd", "your", "yours", "yourself",
      "yourselves", "he", "him", "his", "himself", "she", "she's", "her",
      "hers", "herself", "it", "it's", "its", "itself", "they", "them",
      "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
      "that", "that'll", "these", "those", "am", "is", "are", "was", "were",
      "be", "been", "being", "have", "has", "had", "having", "do", "does",
      "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because",
      "as", "until", "while", "of", "at", "by", "for", "with", "about",
      "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off",
      "over", "under", "again", "further", "then", "once", "here", "there",
      "when", "where", "why", "how", "all", "any", "both", "each", "few",
      "more", "most", "other", "some", "such", "no", "nor", "not", "only",
      "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
      "just", "don", "don't", "should", "should've", "now", "d", "ll", "m",
      "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't",
      "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn",
      "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn",
      "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
      "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won",
      "won't", "wouldn", "wouldn't"};
  return list;
}

const std::unordered_set<std::string_view>& lookup() {
  static const std::unordered_set<std::string_view> set(words().begin(),
                                                        words().end());
  return set;
}

}  // namespace

std::string_view stop_word_list_version() { return kVersion; }

const std::vector<std::string_view>& stop_word_list() { return words(); }

bool is_stop_word(std::string_view token) {
  if (token.empty()) return true;
  if (std::all_of(token.begin(), token.end(), [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
      })) {
    return true;
  }
  const std::string lowered = to_lower(token);
  return lookup().contains(lowered);
}

}  // namespace augure
