#pragma once

// Cross-model assembly: heatmap grids over relevance tables, positional
// probes with constructed sentences, per-sentence probes on real data, and
// error reports tying mistaken predictions to suspicious context words.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "tagscope/corpus.hpp"
#include "tagscope/embeddings.hpp"
#include "tagscope/nn.hpp"
#include "tagscope/relevance.hpp"

namespace tagscope {

// A relevance table annotated with the model it came from.
struct LabeledTable {
  std::string model;
  RelevanceTable table;
};

// Grid axes: word, model, entity, method, measure. Two become the grid
// dimensions, the rest are fixed (or left free when unambiguous).
struct HeatmapGrid {
  std::string row_axis;
  std::string col_axis;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;                    // rows x cols
  std::vector<std::vector<bool>> present;    // false = missing cell
  std::map<std::string, std::string> fixed;  // axis -> pinned value

  std::string csv() const;  // corner cell "rows\cols", missing cells empty
  std::string svg() const;  // one rect per cell, 5-step diverging scale
};

HeatmapGrid build_heatmap(const std::vector<LabeledTable>& tables,
                          const std::map<std::string, std::string>& fix,
                          const std::string& rows, const std::string& cols);

// Reads back what HeatmapGrid::csv wrote (fixed-axis info is not part of
// the textual form).
HeatmapGrid heatmap_from_csv(const std::string& text);

enum class FillerPolicy {
  FixedOov,      // every filler slot is one out-of-vocabulary token
  RandomInVocab  // fillers drawn from the vocabulary, averaged over 10 draws
};

struct ProbeResult {
  std::string context_word;
  std::string entity_word;
  std::string entity_type;
  std::vector<std::string> models;
  std::vector<int> distances;   // 1..max_distance
  Eigen::MatrixXd scores;       // models x distances
  std::string csv() const;      // distance column, then one column per model
};

// Scores [context, filler*(n-1), entity, terminator] sentences at each
// distance n: the margin-change score of the context word for the entity
// token, per model.
ProbeResult positional_probe(
    const std::vector<std::pair<std::string, ModelParams>>& models,
    const TagSet& tagset, const EmbeddingTable& embeddings,
    const std::string& context_word, const std::string& entity_word,
    const std::string& entity_type, int max_distance, FillerPolicy filler,
    std::uint64_t seed, Measure measure = Measure::DOT,
    const std::string& terminator = ".");

struct SentenceProbeRow {
  int sentence_id = 0;
  std::vector<double> scores;  // one per model; 0 when the type is absent
  int instances = 0;           // (occurrence, entity token) pairs scored
};

struct SentenceProbeResult {
  std::string context_word;
  std::string entity_type;
  std::vector<std::string> models;
  std::vector<SentenceProbeRow> rows;  // sentences containing the word
  std::string csv() const;
};

// For every sentence containing the context word (as an O-tagged token):
// the mean margin-change score against entity tokens of the requested type.
SentenceProbeResult real_sentence_probe(
    const std::vector<std::pair<std::string, ModelParams>>& models,
    const std::vector<Sentence>& sentences, const TagSet& tagset,
    const EmbeddingTable& embeddings, const std::string& context_word,
    const std::string& entity_type, const ErasureOptions& options,
    Measure measure = Measure::DOT);

struct SuspectWord {
  std::string word;
  double gold_score = 0;        // corpus-level score for the gold type
  double max_false_score = 0;   // best corpus-level score among other types
  std::string false_type;       // type attaining it
  double sentence_score = 0;    // this sentence's instance score, gold type
};

struct ErrorCase {
  int sentence_id = 0;
  int token_index = 0;
  std::string token;
  int gold_tag = -1;
  int predicted_tag = -1;
  std::vector<SuspectWord> suspects;  // sorted by false - gold descending
};

std::string error_report_csv(const std::vector<ErrorCase>& cases,
                             const TagSet& tagset);

// Decode every sentence; for each entity token tagged wrongly, collect
// context words whose corpus-level relevance favors the predicted type over
// the gold type, plus words whose in-sentence score for the gold type is
// negative (the model does better with them erased).
std::vector<ErrorCase> error_report(const ModelParams& model,
                                    const std::vector<Sentence>& sentences,
                                    const TagSet& tagset,
                                    const EmbeddingTable& embeddings,
                                    const RelevanceTable& lrc_table,
                                    const ErasureOptions& options);

}  // namespace tagscope
