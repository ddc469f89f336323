#pragma once

// Generated corpus with known relations, used by the end-to-end harness.
// Five relations, three surface templates each, typed entities, random
// leading filler. Every sentence closes with a clause listing all templates
// of its relation, so the lexical entailment stub can link them.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "augure/corpus.hpp"
#include "augure/pairs_cross.hpp"

namespace augure {

struct SyntheticOptions {
  std::size_t sentences = 300;
  // Share of sentences with an adverb inside the template, which moves them
  // into small template groups.
  double adverb_rate = 0.15;
};

struct SyntheticCorpus {
  Corpus corpus;
  // One canonical-phrase rewrite per sentence.
  std::vector<RewriteRecord> rewrites;
  std::vector<std::string> relations;
};

SyntheticCorpus generate_synthetic(std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace augure
