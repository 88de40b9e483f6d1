#include "tagscope/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tagscope/crf.hpp"
#include "tagscope/format.hpp"
#include "tagscope/parallel.hpp"
#include "tagscope/rng.hpp"

namespace tagscope {

namespace {

std::vector<Eigen::VectorXd> sentence_vectors(const Sentence& sentence,
                                              const EmbeddingTable& embeddings) {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) xs.push_back(embeddings.lookup(tok));
  return xs;
}

std::vector<int> gold_tags(const Sentence& sentence) {
  std::vector<int> tags;
  tags.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) tags.push_back(tok.gold_tag);
  return tags;
}

void apply_update(ModelParams& model, const ModelGrads& g, double lr,
                  bool freeze_transitions) {
  auto step_cell = [lr](CellParams& cell, const CellGrads& cg) {
    cell.w_input -= lr * cg.w_input;
    cell.w_hidden -= lr * cg.w_hidden;
    cell.bias -= lr * cg.bias;
  };
  step_cell(model.forward_cell, g.forward_cell);
  step_cell(model.backward_cell, g.backward_cell);
  model.projection -= lr * g.projection;
  model.bias -= lr * g.bias;
  if (!freeze_transitions) model.transitions -= lr * g.transitions;
}

}  // namespace

double SpanScore::precision() const {
  return predicted > 0 ? 100.0 * static_cast<double>(correct) /
                             static_cast<double>(predicted)
                       : 0.0;
}

double SpanScore::recall() const {
  return gold > 0
             ? 100.0 * static_cast<double>(correct) / static_cast<double>(gold)
             : 0.0;
}

double SpanScore::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::string EvalReport::summary() const {
  std::ostringstream out;
  auto line = [&out](const std::string& label, const SpanScore& s) {
    out << label << ": P " << format_double(s.precision()) << " R "
        << format_double(s.recall()) << " F1 " << format_double(s.f1())
        << " (gold " << s.gold << ", predicted " << s.predicted << ", correct "
        << s.correct << ")\n";
  };
  for (const auto& [etype, score] : per_type) line(etype, score);
  line("overall", overall);
  out << "token accuracy: " << format_double(token_accuracy) << "\n";
  return out.str();
}

TrainResult train(const std::vector<Sentence>& train_set,
                  const std::vector<Sentence>& dev_set, const TagSet& tagset,
                  const EmbeddingTable& embeddings, const Hyperparams& hp,
                  std::ostream* progress) {
  if (train_set.empty()) throw std::runtime_error("train: empty training set");
  if (hp.epochs < 1) throw std::runtime_error("train: epochs must be >= 1");
  if (hp.lr <= 0) throw std::runtime_error("train: learning rate must be > 0");
  if (embeddings.dim() != hp.embed_dim)
    throw std::runtime_error("train: embedding file has dimension " +
                             std::to_string(embeddings.dim()) +
                             ", config says " + std::to_string(hp.embed_dim));
  for (const auto& s : train_set)
    if (s.tokens.empty())
      throw std::runtime_error("train: empty sentence " + std::to_string(s.id));

  TrainResult result;
  ModelParams model = ModelParams::init(hp, tagset.size());
  result.best_epoch = 0;
  double best_f1 = -1.0;

  const int n = static_cast<int>(train_set.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(mix_seed(hp.seed, kSeedStreamShuffle),
                             static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    double nll_sum = 0;
    for (int k = 0; k < n; ++k) {
      const Sentence& sentence = train_set[order[k]];
      auto xs = sentence_vectors(sentence, embeddings);
      auto gold = gold_tags(sentence);

      ForwardCache cache = forward_pass(model, std::move(xs));
      const double nll = sentence_nll(cache.emission, model.transitions, gold);
      if (!std::isfinite(nll))
        throw std::runtime_error(
            "train: loss diverged at epoch " + std::to_string(epoch) +
            ", sentence " + std::to_string(sentence.id));
      nll_sum += nll;

      CrfGrad chain = sentence_nll_grad(cache.emission, model.transitions, gold);
      ModelGrads grads = backward_from_emissions(model, cache, chain.d_emissions);
      grads.transitions = chain.d_transitions;

      if (hp.clip_norm > 0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > hp.clip_norm) grads.scale(hp.clip_norm / norm);
      }
      apply_update(model, grads, hp.lr, hp.freeze_transitions);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_nll = nll_sum / static_cast<double>(n);
    if (!dev_set.empty())
      stats.dev_f1 = evaluate(model, dev_set, tagset, embeddings).overall.f1();
    result.trace.push_back(stats);
    if (progress)
      *progress << epoch << '\t' << format_double(stats.mean_nll) << '\t'
                << format_double(stats.dev_f1) << '\n';

    if (stats.dev_f1 > best_f1) {
      best_f1 = stats.dev_f1;
      result.best_model = model;
      result.best_epoch = epoch;
    }
  }

  result.final_model = std::move(model);
  if (dev_set.empty()) {
    result.best_model = result.final_model;
    result.best_epoch = hp.epochs;
  }
  return result;
}

std::vector<std::vector<int>> predict_tags(const ModelParams& model,
                                           const std::vector<Sentence>& sentences,
                                           const EmbeddingTable& embeddings,
                                           int threads) {
  std::vector<std::vector<int>> predictions(sentences.size());
  parallel_for(static_cast<int>(sentences.size()), threads, [&](int i) {
    if (sentences[i].tokens.empty()) return;
    auto xs = sentence_vectors(sentences[i], embeddings);
    HiddenStates states = encode_bidirectional(model, xs);
    predictions[i] = viterbi(emissions(model, states), model.transitions);
  });
  return predictions;
}

EvalReport evaluate(const ModelParams& model,
                    const std::vector<Sentence>& sentences,
                    const TagSet& tagset, const EmbeddingTable& embeddings,
                    int threads) {
  auto predictions = predict_tags(model, sentences, embeddings, threads);

  EvalReport report;
  long tokens_total = 0, tokens_correct = 0;
  for (size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& sentence = sentences[i];
    if (sentence.tokens.empty()) continue;
    const auto& pred = predictions[i];
    for (size_t j = 0; j < sentence.tokens.size(); ++j) {
      ++tokens_total;
      if (pred[j] == sentence.tokens[j].gold_tag) ++tokens_correct;
    }

    auto gold_spans = extract_spans(sentence, tagset);
    Sentence relabeled = sentence;
    for (size_t j = 0; j < relabeled.tokens.size(); ++j)
      relabeled.tokens[j].gold_tag = pred[j];
    auto pred_spans = extract_spans(relabeled, tagset);

    for (const auto& span : gold_spans)
      report.per_type[tagset.entity_type(span.etype)].gold += 1;
    for (const auto& span : pred_spans) {
      auto& score = report.per_type[tagset.entity_type(span.etype)];
      score.predicted += 1;
      if (std::find(gold_spans.begin(), gold_spans.end(), span) !=
          gold_spans.end())
        score.correct += 1;
    }
  }

  for (const auto& [etype, score] : report.per_type) {
    (void)etype;
    report.overall.gold += score.gold;
    report.overall.predicted += score.predicted;
    report.overall.correct += score.correct;
  }
  report.token_accuracy =
      tokens_total > 0
          ? static_cast<double>(tokens_correct) / static_cast<double>(tokens_total)
          : 0.0;
  return report;
}

}  // namespace tagscope
