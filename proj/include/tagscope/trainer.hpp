#pragma once

// SGD training of the tagger and span-level evaluation.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tagscope/corpus.hpp"
#include "tagscope/embeddings.hpp"
#include "tagscope/nn.hpp"

namespace tagscope {

struct SpanScore {
  long gold = 0;       // gold spans
  long predicted = 0;  // predicted spans
  long correct = 0;    // exact boundary + type matches
  double precision() const;  // percent
  double recall() const;
  double f1() const;
};

struct EvalReport {
  std::map<std::string, SpanScore> per_type;
  SpanScore overall;        // micro-averaged
  double token_accuracy = 0;
  std::string summary() const;
};

struct EpochStats {
  int epoch = 0;        // 1-based
  double mean_nll = 0;  // over training sentences
  double dev_f1 = 0;    // percent; 0 when no dev set
};

struct TrainResult {
  ModelParams final_model;
  ModelParams best_model;  // highest dev F1 (final when no dev set)
  int best_epoch = 0;
  std::vector<EpochStats> trace;
};

// One sentence per update, seed-shuffled order each epoch, global-norm
// gradient clipping. Progress lines "epoch<TAB>mean_nll<TAB>dev_f1" go to
// `progress` when given. Throws on non-finite loss, naming epoch/sentence.
TrainResult train(const std::vector<Sentence>& train_set,
                  const std::vector<Sentence>& dev_set, const TagSet& tagset,
                  const EmbeddingTable& embeddings, const Hyperparams& hp,
                  std::ostream* progress = nullptr);

// Viterbi predictions scored by exact span match (boundaries and type).
// Parallel over sentences; the result is independent of the schedule.
EvalReport evaluate(const ModelParams& model,
                    const std::vector<Sentence>& sentences,
                    const TagSet& tagset, const EmbeddingTable& embeddings,
                    int threads = 1);

// Predicted tag sequences, one per sentence, in input order.
std::vector<std::vector<int>> predict_tags(const ModelParams& model,
                                           const std::vector<Sentence>& sentences,
                                           const EmbeddingTable& embeddings,
                                           int threads = 1);

}  // namespace tagscope
