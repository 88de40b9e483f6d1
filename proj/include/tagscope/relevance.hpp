#pragma once

// Context-word relevance scoring: how much does a non-entity word influence
// the model's treatment of nearby entities?  Three families:
//
//  - WF / WF_INV: corpus statistics only — windowed co-occurrence counts,
//    optionally reweighted by inverse frequency.
//  - SLL: erase the word and measure the relative change of the whole
//    sentence's gold-path negative log likelihood.
//  - LRC: erase the word and measure the relative change of the entity
//    token's left- or right-side score margin over the false tags.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tagscope/corpus.hpp"
#include "tagscope/embeddings.hpp"
#include "tagscope/nn.hpp"

namespace tagscope {

enum class Method { WF, WF_INV, SLL, LRC };
enum class Measure { DOT, KL, PCC };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
std::string measure_name(Measure m);
Measure measure_from_name(const std::string& name);

struct RelevanceEntry {
  double score = 0;
  long support = 0;  // windowed count (WF), sentence count (SLL), instance count (LRC)
};

struct RelevanceTable {
  Method method = Method::WF;
  Measure measure = Measure::DOT;  // meaningful for LRC only
  std::uint64_t seed = 0;
  // entity type -> normalized word -> entry; std::map keeps iteration stable.
  std::map<std::string, std::map<std::string, RelevanceEntry>> by_type;

  const RelevanceEntry* find(const std::string& etype,
                             const std::string& word) const;
  // Words of one entity type sorted by score descending, ties by word.
  std::vector<std::pair<std::string, RelevanceEntry>> ranked(
      const std::string& etype) const;
  // 1-based rank of word under ranked(); 0 when absent.
  int rank_of(const std::string& etype, const std::string& word) const;

  // CSV with header method,measure,word,entity_type,score,support; rows
  // ordered by entity type, then score descending, then word.
  std::string csv() const;
  static RelevanceTable from_csv(const std::string& text);
};

// Windowed context-word counts per entity type.
struct CountTable {
  // entity type -> normalized word -> count A.
  std::map<std::string, std::map<std::string, long>> counts;
  long total(const std::string& etype) const;
  long word_total(const std::string& word) const;
  long grand_total() const;
};

CountTable build_window_counts(const std::vector<Sentence>& sentences,
                               const TagSet& tagset, int halfwidth);

// Frequency relevance. Plain: per-type normalized window counts. Inverse
// adds the factor grand_total / (word's count summed over all types + k).
RelevanceTable score_wf(const std::vector<Sentence>& sentences,
                        const TagSet& tagset, int halfwidth = 5,
                        bool inverse = false, long k = 1);

// How erased words are replaced.
enum class ReplacementMode {
  PerRun,    // one shared random vector for the whole run (default)
  PerWord,   // fresh vector per erased word, seeded per sentence
  SelfTest,  // the word's own vector — a no-op that must score exactly 0
};

struct ErasureOptions {
  std::uint64_t seed = 1;
  ReplacementMode mode = ReplacementMode::PerRun;
  bool single_occurrence = false;  // SLL: erase only the first occurrence
  int threads = 1;
};

// Sentence-likelihood relevance: for each context word w and entity type e
// co-occurring in a sentence, average (L2 - L1) / L1 where L1/L2 are the
// gold-path NLLs before/after erasing w.
RelevanceTable score_sll(const ModelParams& model,
                         const std::vector<Sentence>& sentences,
                         const TagSet& tagset, const EmbeddingTable& embeddings,
                         const ErasureOptions& options);

// Which hidden half carries the context word's influence on the entity token.
inline Side lrc_side(int context_index, int entity_index) {
  return context_index < entity_index ? Side::Left : Side::Right;
}

// Similarity between a tag's side weights and the side hidden state.
double side_similarity(const ModelParams& model, const HiddenStates& states,
                       int token, int tag, Side side, Measure measure);

// Mean side similarity over the false tags at the entity token.
double avg_sum(const ModelParams& model, const HiddenStates& states,
               int context_index, int entity_index, int true_tag,
               Measure measure);

// Relative margin of the true tag over the false-tag mean, one side.
double lrc_margin(const ModelParams& model, const HiddenStates& states,
                  int entity_index, int true_tag, Side side, Measure measure);

// The same score computed from already-encoded intact and erased states,
// for callers that erase one token and score many entity tokens.
double lrc_pair_score(const ModelParams& model, const HiddenStates& intact,
                      const HiddenStates& erased, int context_index,
                      int entity_index, int true_tag, Measure measure);

// Relative change of the margin when the context token is erased:
// (margin_intact - margin_erased) / margin_erased, re-encoding the sentence.
double lrc_instance_score(const ModelParams& model,
                          const std::vector<Eigen::VectorXd>& xs,
                          int context_index, int entity_index, int true_tag,
                          const Eigen::VectorXd& replacement, Measure measure);

// Margin-change relevance averaged over every (context token, entity token)
// pair, grouped by context word and the entity token's type.
RelevanceTable score_lrc(const ModelParams& model,
                         const std::vector<Sentence>& sentences,
                         const TagSet& tagset, const EmbeddingTable& embeddings,
                         Measure measure, const ErasureOptions& options);

// One sentence's scores laid out word-by-word with a column per entity type.
struct SentenceReport {
  Method method = Method::SLL;
  Measure measure = Measure::DOT;
  std::vector<std::string> words;   // distinct context words, sentence order
  std::vector<std::string> etypes;  // column labels
  Eigen::MatrixXd scores;           // words x etypes
  Eigen::MatrixXi support;          // contributing instance counts
  std::string csv() const;
};

SentenceReport sentence_report(const ModelParams& model,
                               const Sentence& sentence, const TagSet& tagset,
                               const EmbeddingTable& embeddings, Method method,
                               Measure measure, const ErasureOptions& options);

}  // namespace tagscope
