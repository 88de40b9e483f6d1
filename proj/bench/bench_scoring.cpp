// Times the sentence-parallel scoring paths — span evaluation and both
// erasure scorers — at one thread and at many, and fails if the two
// settings disagree anywhere: these paths promise results independent of
// thread count and schedule, so the benchmark doubles as that check.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "tagscope/embeddings.hpp"
#include "tagscope/nn.hpp"
#include "tagscope/relevance.hpp"
#include "tagscope/synthetic.hpp"
#include "tagscope/trainer.hpp"

namespace {

using namespace tagscope;

// Exact digests (hexfloat) so a one-bit difference between runs is caught;
// the CSV writers round and could mask one.
std::string digest(const RelevanceTable& table) {
  std::ostringstream out;
  out << std::hexfloat;
  for (const auto& [etype, words] : table.by_type)
    for (const auto& [word, entry] : words)
      out << etype << ' ' << word << ' ' << entry.score << ' '
          << entry.support << '\n';
  return out.str();
}

std::string digest(const EvalReport& report) {
  std::ostringstream out;
  out << std::hexfloat << report.token_accuracy << '\n';
  auto span = [&out](const std::string& name, const SpanScore& s) {
    out << name << ' ' << s.gold << ' ' << s.predicted << ' ' << s.correct
        << '\n';
  };
  span("overall", report.overall);
  for (const auto& [etype, s] : report.per_type) span(etype, s);
  return out.str();
}

// Best-of-N wall time in milliseconds; the result digest comes from the
// last run (all runs must agree for the timing to mean anything, and the
// caller verifies exactly that across thread settings).
template <class F>
double best_ms(int repeats, F&& work, std::string* digest_out) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    auto start = std::chrono::steady_clock::now();
    *digest_out = work();
    auto stop = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(stop - start)
                        .count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int sentences = 300;
  int dim = 32;
  int hidden = 32;
  int threads = 2;
#ifdef _OPENMP
  threads = std::max(2, omp_get_max_threads());
#endif
  int repeats = 3;

  CLI::App app{"benchmark serial vs parallel scoring"};
  app.add_option("--sentences", sentences, "synthetic corpus size");
  app.add_option("--emb-dim", dim, "embedding dimension");
  app.add_option("--hidden", hidden, "hidden units per direction");
  app.add_option("--threads", threads, "parallel thread count");
  app.add_option("--repeats", repeats, "runs per measurement (best-of)");
  CLI11_PARSE(app, argc, argv);

  SyntheticSpec spec = SyntheticSpec::defaults();
  spec.sentences = sentences;
  ParsedCorpus corpus = gen_synthetic(spec, 1);

  std::stringstream embtext;
  write_synthetic_embeddings(corpus.sentences, dim, 1, embtext);
  EmbeddingTable embeddings = EmbeddingTable::load(embtext, 1);
  embeddings.attach(corpus.sentences);

  // Untrained weights: scoring cost does not depend on what the weights
  // have learned, so initialization is enough for timing.
  Hyperparams hp;
  hp.cell = CellKind::LSTM;
  hp.embed_dim = dim;
  hp.hidden = hidden;
  hp.seed = 1;
  ModelParams model = ModelParams::init(hp, corpus.tagset.size());

  auto options_for = [](int t) {
    ErasureOptions o;
    o.seed = 1;
    o.mode = ReplacementMode::PerWord;
    o.threads = t;
    return o;
  };

  struct Workload {
    std::string name;
    std::function<std::string(int)> run;  // thread count -> digest
  };
  const std::vector<Workload> workloads = {
      {"span evaluation (viterbi)",
       [&](int t) {
         return digest(
             evaluate(model, corpus.sentences, corpus.tagset, embeddings, t));
       }},
      {"erasure, sentence likelihood",
       [&](int t) {
         return digest(score_sll(model, corpus.sentences, corpus.tagset,
                                 embeddings, options_for(t)));
       }},
      {"erasure, emission margin (dot)",
       [&](int t) {
         return digest(score_lrc(model, corpus.sentences, corpus.tagset,
                                 embeddings, Measure::DOT, options_for(t)));
       }},
  };

  std::printf("%d sentences, embed %d, hidden %d, best of %d\n\n", sentences,
              dim, hidden, repeats);
  std::printf("%-32s %12s %12s %9s  %s\n", "workload", "1 thread",
              (std::to_string(threads) + " threads").c_str(), "speedup",
              "results");

  bool all_same = true;
  for (const auto& w : workloads) {
    std::string serial_digest, parallel_digest;
    double serial = best_ms(repeats, [&] { return w.run(1); }, &serial_digest);
    double parallel =
        best_ms(repeats, [&] { return w.run(threads); }, &parallel_digest);
    const bool same = serial_digest == parallel_digest;
    all_same = all_same && same;
    std::printf("%-32s %9.1f ms %9.1f ms %8.2fx  %s\n", w.name.c_str(), serial,
                parallel, serial / parallel,
                same ? "identical" : "DIFFER");
  }

  if (!all_same) {
    std::cerr << "\nerror: parallel results differ from serial\n";
    return 1;
  }
  std::printf("\nall results identical across thread counts\n");
  return 0;
}
