#pragma once

// Shared fixtures for the unit tests and the acceptance checks: random
// model/sentence builders, a generic parameter walker, a central
// finite-difference gradient check, an independent recount oracle for the
// frequency scores, and a bank of fixture corpora.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tagscope/corpus.hpp"
#include "tagscope/crf.hpp"
#include "tagscope/embeddings.hpp"
#include "tagscope/nn.hpp"
#include "tagscope/relevance.hpp"
#include "tagscope/rng.hpp"
#include "tagscope/synthetic.hpp"

namespace tagscope::testing {

inline ModelParams random_model(CellKind kind, int dim, int hidden,
                                int num_tags, std::uint64_t seed) {
  Hyperparams hp;
  hp.cell = kind;
  hp.embed_dim = dim;
  hp.hidden = hidden;
  hp.seed = seed;
  return ModelParams::init(hp, num_tags);
}

inline std::vector<Eigen::VectorXd> random_inputs(int length, int dim,
                                                  Rng& rng) {
  std::vector<Eigen::VectorXd> xs(length);
  for (auto& x : xs) {
    x.resize(dim);
    for (int i = 0; i < dim; ++i) x(i) = rng.uniform(-1.0, 1.0);
  }
  return xs;
}

inline std::vector<int> random_tags(int length, int num_tags, Rng& rng) {
  std::vector<int> tags(length);
  for (int& t : tags) t = rng.uniform_int(num_tags);
  return tags;
}

// Every learnable scalar, in a fixed order shared with grad_entries.
inline std::vector<double*> param_entries(ModelParams& m) {
  std::vector<double*> out;
  auto add = [&out](Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) out.push_back(mat.data() + i);
  };
  auto addv = [&out](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v.data() + i);
  };
  add(m.forward_cell.w_input);
  add(m.forward_cell.w_hidden);
  addv(m.forward_cell.bias);
  add(m.backward_cell.w_input);
  add(m.backward_cell.w_hidden);
  addv(m.backward_cell.bias);
  add(m.projection);
  addv(m.bias);
  add(m.transitions);
  return out;
}

inline std::vector<double> grad_entries(const ModelGrads& g) {
  std::vector<double> out;
  auto add = [&out](const Eigen::MatrixXd& mat) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) out.push_back(mat.data()[i]);
  };
  auto addv = [&out](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v.data()[i]);
  };
  add(g.forward_cell.w_input);
  add(g.forward_cell.w_hidden);
  addv(g.forward_cell.bias);
  add(g.backward_cell.w_input);
  add(g.backward_cell.w_hidden);
  addv(g.backward_cell.bias);
  add(g.projection);
  addv(g.bias);
  add(g.transitions);
  return out;
}

inline ModelGrads analytic_grads(const ModelParams& model,
                                 const std::vector<Eigen::VectorXd>& xs,
                                 const std::vector<int>& tags) {
  ForwardCache cache = forward_pass(model, xs);
  CrfGrad chain = sentence_nll_grad(cache.emission, model.transitions, tags);
  ModelGrads grads = backward_from_emissions(model, cache, chain.d_emissions);
  grads.transitions = chain.d_transitions;
  return grads;
}

// Worst relative mismatch between analytic and central-difference gradients
// over every parameter, with |denominator| >= 1.
inline double gradcheck_max_rel_error(ModelParams model,
                                      const std::vector<Eigen::VectorXd>& xs,
                                      const std::vector<int>& tags,
                                      double step = 1e-4) {
  const std::vector<double> analytic = grad_entries(analytic_grads(model, xs, tags));
  std::vector<double*> params = param_entries(model);
  double worst = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + step;
    const double up = model_sentence_nll(model, xs, tags);
    *params[i] = saved - step;
    const double down = model_sentence_nll(model, xs, tags);
    *params[i] = saved;
    const double numeric = (up - down) / (2 * step);
    const double denom =
        std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

// ---- frequency-score recount oracle ----------------------------------------

struct BruteSpan {
  int start, end, etype;
};

// Fresh span scanner, written against the tagging definitions rather than
// sharing code with extract_spans.
inline std::vector<BruteSpan> brute_spans(const Sentence& s, const TagSet& ts) {
  std::vector<BruteSpan> spans;
  const int n = static_cast<int>(s.tokens.size());
  int i = 0;
  while (i < n) {
    int tag = s.tokens[i].gold_tag;
    if (ts.kind(tag) == TagKind::O) {
      ++i;
      continue;
    }
    int e = ts.etype(tag);
    int j = i + 1;
    while (j < n) {
      int next = s.tokens[j].gold_tag;
      if (ts.kind(next) != TagKind::I || ts.etype(next) != e) break;
      ++j;
    }
    spans.push_back({i, j - 1, e});
    i = j;
  }
  return spans;
}

// Windowed co-occurrence counts recomputed with plain loops; returns
// etype-name -> word -> count.
inline std::map<std::string, std::map<std::string, long>> brute_window_counts(
    const std::vector<Sentence>& sentences, const TagSet& ts, int halfwidth) {
  std::map<std::string, std::map<std::string, long>> a;
  for (const Sentence& s : sentences) {
    const int n = static_cast<int>(s.tokens.size());
    auto spans = brute_spans(s, ts);
    std::vector<bool> inside(n, false);
    for (const auto& sp : spans)
      for (int t = sp.start; t <= sp.end; ++t) inside[t] = true;
    for (const auto& sp : spans) {
      for (int t = std::max(0, sp.start - halfwidth);
           t <= std::min(n - 1, sp.end + halfwidth); ++t) {
        if (inside[t]) continue;
        a[ts.entity_type(sp.etype)][s.tokens[t].normalized] += 1;
      }
    }
  }
  return a;
}

// Frequency relevance recomputed from the brute counts.
inline RelevanceTable brute_wf(const std::vector<Sentence>& sentences,
                               const TagSet& ts, int halfwidth, bool inverse,
                               long k) {
  auto a = brute_window_counts(sentences, ts, halfwidth);
  long grand = 0;
  std::map<std::string, long> word_total;
  for (const auto& [etype, words] : a)
    for (const auto& [word, count] : words) {
      grand += count;
      word_total[word] += count;
    }
  RelevanceTable table;
  table.method = inverse ? Method::WF_INV : Method::WF;
  for (const auto& [etype, words] : a) {
    long type_total = 0;
    for (const auto& [word, count] : words) type_total += count;
    if (type_total == 0) continue;
    for (const auto& [word, count] : words) {
      double score = static_cast<double>(count) / static_cast<double>(type_total);
      if (inverse)
        score *= static_cast<double>(grand) /
                 static_cast<double>(word_total[word] + k);
      table.by_type[etype][word] = RelevanceEntry{score, count};
    }
  }
  return table;
}

// True when both tables hold the same keys with equal supports and scores
// within 1e-12; appends a description of the first difference otherwise.
inline bool tables_match(const RelevanceTable& got, const RelevanceTable& want,
                         std::string* diff = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (diff) *diff = msg;
    return false;
  };
  if (got.by_type.size() != want.by_type.size())
    return fail("different entity-type sets");
  for (const auto& [etype, words] : want.by_type) {
    auto it = got.by_type.find(etype);
    if (it == got.by_type.end()) return fail("missing type " + etype);
    if (it->second.size() != words.size())
      return fail("different word sets under " + etype);
    for (const auto& [word, entry] : words) {
      auto wit = it->second.find(word);
      if (wit == it->second.end())
        return fail("missing " + etype + "/" + word);
      if (wit->second.support != entry.support)
        return fail("support mismatch at " + etype + "/" + word);
      if (std::abs(wit->second.score - entry.score) > 1e-12)
        return fail("score mismatch at " + etype + "/" + word);
    }
  }
  return true;
}

// ---- fixture corpora -------------------------------------------------------

// 25 corpora exercising schemes, span shapes, and window collisions.
// Index 0 is the classic hand-worked sentence.
inline ParsedCorpus fixture_corpus(int index) {
  switch (index) {
    case 0:
      return parse_conll(
          "John B-PER\nlives O\nin O\nParis B-LOC\n. O\n");
    case 1:  // multi-token spans
      return parse_conll(
          "the O\nNew B-LOC\nYork I-LOC\nPhilharmonic O\nvisited O\n"
          "Aix B-LOC\nen I-LOC\nProvence I-LOC\n. O\n\n"
          "Anna B-PER\nMaria I-PER\nSmith I-PER\nspoke O\n. O\n");
    case 2:  // IOB1: leading I- opens spans, B- splits runs
      return parse_conll(
          "x I-PER\ny I-PER\nz B-PER\nsaid O\nhi O\n\n"
          "in O\nparis I-LOC\nterms O\n",
          -1, nullptr, TagScheme::IOB1);
    case 3:  // adjacent spans of different types share their windows
      return parse_conll(
          "word O\nX B-PER\nY B-LOC\nother O\nX B-PER\nend O\n\n"
          "only O\nwords O\nhere O\n");
    case 4:  // a type with no context words at all stays unscored
      return parse_conll("X B-PER\n\nplain O\nwords O\n\nY B-LOC\nnear O\n");
    default: {
      SyntheticSpec spec = SyntheticSpec::defaults();
      spec.sentences = 20 + 7 * index;
      spec.trigger_prob = index % 3 == 0 ? 0.7 : 1.0;
      spec.distractor_fraction = index % 2 == 0 ? 0.4 : 0.2;
      spec.name_as_filler_prob = index % 4 == 0 ? 0.5 : 0.2;
      return gen_synthetic(spec, 1000 + static_cast<std::uint64_t>(index));
    }
  }
}

inline constexpr int kFixtureCount = 25;

// A generated corpus with matching embeddings attached, for suites that
// need realistic data without touching the filesystem.
struct SynthWorld {
  ParsedCorpus corpus;
  EmbeddingTable embeddings;
};

inline SynthWorld make_synth_world(int sentences, int dim,
                                   std::uint64_t seed) {
  SyntheticSpec spec = SyntheticSpec::defaults();
  spec.sentences = sentences;
  SynthWorld w{gen_synthetic(spec, seed), EmbeddingTable()};
  std::ostringstream embtext;
  write_synthetic_embeddings(w.corpus.sentences, dim, seed, embtext);
  std::istringstream in(embtext.str());
  w.embeddings = EmbeddingTable::load(in, seed);
  w.embeddings.attach(w.corpus.sentences);
  return w;
}

}  // namespace tagscope::testing
