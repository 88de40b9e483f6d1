#pragma once

// Seeded generator for trigger corpora: every entity occurrence is preceded
// by a type-specific trigger word, and entity names reappear as plain words
// in distractor sentences, so a model can only resolve entities through the
// trigger. Used to turn qualitative relevance claims into testable ones.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tagscope/corpus.hpp"

namespace tagscope {

struct EntityClass {
  std::string type;                // e.g. "PER"
  std::string trigger;             // cue word preceding every entity
  std::vector<std::string> names;  // single-token entity surface forms
};

struct SyntheticSpec {
  std::vector<EntityClass> classes;
  std::vector<std::string> fillers;
  int sentences = 500;
  double trigger_prob = 1.0;        // chance the cue is actually planted
  double distractor_fraction = 0.3; // entity-free sentences
  double name_as_filler_prob = 0.2; // entity names appearing as plain words
  int min_pre = 0, max_pre = 4;     // filler run before the trigger
  int min_post = 4, max_post = 8;   // filler run after the entity

  static SyntheticSpec defaults();
};

// Deterministic per (spec, seed). Each entity sentence carries exactly one
// single-token entity span.
ParsedCorpus gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Every distinct normalized token of the corpus, sorted, with seeded random
// vectors — a self-contained embedding file for the generated data.
void write_synthetic_embeddings(const std::vector<Sentence>& sentences,
                                int dim, std::uint64_t seed,
                                std::ostream& out);

}  // namespace tagscope
