#include <doctest.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tagscope/checkpoint.hpp"
#include "tagscope/synthetic.hpp"
#include "tagscope/trainer.hpp"

using namespace tagscope;
namespace tst = tagscope::testing;

namespace {

using World = tst::SynthWorld;

World make_world(int sentences, int dim, std::uint64_t seed) {
  return tst::make_synth_world(sentences, dim, seed);
}

std::string model_bytes(const ModelParams& m, const TagSet& ts) {
  std::ostringstream out;
  save_checkpoint(Checkpoint{m, ts, 0}, out);
  return out.str();
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("span score arithmetic") {
  SpanScore s;
  s.gold = 2;
  s.predicted = 1;
  s.correct = 1;
  CHECK(s.precision() == doctest::Approx(100.0));
  CHECK(s.recall() == doctest::Approx(50.0));
  CHECK(s.f1() == doctest::Approx(200.0 / 3.0));

  SpanScore zero;
  CHECK(zero.precision() == 0.0);
  CHECK(zero.recall() == 0.0);
  CHECK(zero.f1() == 0.0);
}

TEST_CASE("evaluation matches an independent span recount") {
  World w = make_world(30, 6, 71);
  ModelParams model = tst::random_model(CellKind::GRU, 6, 5,
                                        w.corpus.tagset.size(), 73);
  EvalReport report = evaluate(model, w.corpus.sentences, w.corpus.tagset,
                               w.embeddings);

  auto predictions =
      predict_tags(model, w.corpus.sentences, w.embeddings);
  std::map<std::string, SpanScore> want;
  long tok_total = 0, tok_correct = 0;
  for (size_t i = 0; i < w.corpus.sentences.size(); ++i) {
    Sentence pred_sent = w.corpus.sentences[i];
    for (size_t j = 0; j < pred_sent.tokens.size(); ++j) {
      ++tok_total;
      if (predictions[i][j] == pred_sent.tokens[j].gold_tag) ++tok_correct;
      pred_sent.tokens[j].gold_tag = predictions[i][j];
    }
    auto gold = tst::brute_spans(w.corpus.sentences[i], w.corpus.tagset);
    auto pred = tst::brute_spans(pred_sent, w.corpus.tagset);
    for (const auto& g : gold)
      want[w.corpus.tagset.entity_type(g.etype)].gold += 1;
    for (const auto& p : pred) {
      auto& sc = want[w.corpus.tagset.entity_type(p.etype)];
      sc.predicted += 1;
      for (const auto& g : gold)
        if (g.start == p.start && g.end == p.end && g.etype == p.etype) {
          sc.correct += 1;
          break;
        }
    }
  }
  REQUIRE(report.per_type.size() == want.size());
  long gold_sum = 0, pred_sum = 0, correct_sum = 0;
  for (const auto& [etype, sc] : want) {
    REQUIRE(report.per_type.count(etype) == 1);
    const SpanScore& got = report.per_type.at(etype);
    CHECK(got.gold == sc.gold);
    CHECK(got.predicted == sc.predicted);
    CHECK(got.correct == sc.correct);
    gold_sum += sc.gold;
    pred_sum += sc.predicted;
    correct_sum += sc.correct;
  }
  CHECK(report.overall.gold == gold_sum);
  CHECK(report.overall.predicted == pred_sum);
  CHECK(report.overall.correct == correct_sum);
  CHECK(report.token_accuracy ==
        doctest::Approx(static_cast<double>(tok_correct) /
                        static_cast<double>(tok_total))
            .epsilon(1e-15));
}

TEST_CASE("evaluation is independent of the thread count") {
  World w = make_world(20, 6, 81);
  ModelParams model = tst::random_model(CellKind::LSTM, 6, 5,
                                        w.corpus.tagset.size(), 83);
  EvalReport serial = evaluate(model, w.corpus.sentences, w.corpus.tagset,
                               w.embeddings, 1);
  EvalReport parallel = evaluate(model, w.corpus.sentences, w.corpus.tagset,
                                 w.embeddings, 4);
  CHECK(serial.summary() == parallel.summary());
}

TEST_CASE("a small corpus is memorized to perfect accuracy") {
  World w = make_world(8, 8, 91);
  Hyperparams hp;
  hp.cell = CellKind::LSTM;
  hp.embed_dim = 8;
  hp.hidden = 12;
  hp.lr = 0.1;
  hp.epochs = 120;
  hp.seed = 91;
  TrainResult result = train(w.corpus.sentences, {}, w.corpus.tagset,
                             w.embeddings, hp, nullptr);
  // Mean NLL decreases substantially from the first epoch to the last.
  REQUIRE(result.trace.size() == 120);
  CHECK(result.trace.back().mean_nll < 0.5 * result.trace.front().mean_nll);

  EvalReport report = evaluate(result.final_model, w.corpus.sentences,
                               w.corpus.tagset, w.embeddings);
  CHECK(report.token_accuracy == 1.0);
  CHECK(report.overall.f1() == doctest::Approx(100.0));
}

TEST_CASE("training twice with one seed gives identical weights") {
  World w = make_world(10, 6, 95);
  Hyperparams hp;
  hp.cell = CellKind::GRU;
  hp.embed_dim = 6;
  hp.hidden = 5;
  hp.epochs = 3;
  hp.seed = 7;
  TrainResult a = train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                        hp, nullptr);
  TrainResult b = train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                        hp, nullptr);
  CHECK(model_bytes(a.final_model, w.corpus.tagset) ==
        model_bytes(b.final_model, w.corpus.tagset));

  hp.seed = 8;
  TrainResult c = train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                        hp, nullptr);
  CHECK(model_bytes(a.final_model, w.corpus.tagset) !=
        model_bytes(c.final_model, w.corpus.tagset));
}

TEST_CASE("progress lines and dev-set model selection") {
  World w = make_world(14, 6, 97);
  std::vector<Sentence> dev(w.corpus.sentences.begin(),
                            w.corpus.sentences.begin() + 4);
  std::vector<Sentence> train_set(w.corpus.sentences.begin() + 4,
                                  w.corpus.sentences.end());
  Hyperparams hp;
  hp.cell = CellKind::RNN;
  hp.embed_dim = 6;
  hp.hidden = 5;
  hp.epochs = 4;
  hp.seed = 11;
  std::ostringstream progress;
  TrainResult result =
      train(train_set, dev, w.corpus.tagset, w.embeddings, hp, &progress);

  REQUIRE(result.trace.size() == 4);
  CHECK(result.best_epoch >= 1);
  CHECK(result.best_epoch <= 4);
  // The kept model is the one with the highest dev F1, earliest on ties.
  double best = result.trace[result.best_epoch - 1].dev_f1;
  for (const auto& stats : result.trace) CHECK(stats.dev_f1 <= best);
  for (int e = 0; e < result.best_epoch - 1; ++e)
    CHECK(result.trace[e].dev_f1 < best);

  // One tab-separated line per epoch.
  std::istringstream lines(progress.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    CHECK(line.find('\t') != std::string::npos);
    CHECK(line.rfind(std::to_string(count) + "\t", 0) == 0);
  }
  CHECK(count == 4);

  // Without a dev set the final model is the kept one.
  TrainResult plain =
      train(train_set, {}, w.corpus.tagset, w.embeddings, hp, nullptr);
  CHECK(plain.best_epoch == 4);
  CHECK(model_bytes(plain.best_model, w.corpus.tagset) ==
        model_bytes(plain.final_model, w.corpus.tagset));
}

TEST_CASE("bad configurations are rejected up front") {
  World w = make_world(5, 6, 99);
  Hyperparams hp;
  hp.embed_dim = 6;
  hp.hidden = 4;
  CHECK_THROWS(train({}, {}, w.corpus.tagset, w.embeddings, hp, nullptr));
  Hyperparams bad_lr = hp;
  bad_lr.lr = 0;
  CHECK_THROWS(train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                     bad_lr, nullptr));
  Hyperparams bad_epochs = hp;
  bad_epochs.epochs = 0;
  CHECK_THROWS(train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                     bad_epochs, nullptr));
  Hyperparams bad_dim = hp;
  bad_dim.embed_dim = 7;
  CHECK_THROWS(train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                     bad_dim, nullptr));
}

TEST_CASE("runaway loss stops training with a located error") {
  World w = make_world(10, 6, 101);
  Hyperparams hp;
  hp.cell = CellKind::RNN;
  hp.embed_dim = 6;
  hp.hidden = 4;
  hp.lr = 1e300;
  hp.clip_norm = 0;  // clipping off, so the update really explodes
  hp.epochs = 2;
  hp.seed = 1;
  try {
    train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings, hp, nullptr);
    FAIL("expected the diverged-loss error");
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK(msg.find("diverged") != std::string::npos);
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("sentence") != std::string::npos);
  }
}

TEST_CASE("clipping keeps the same direction but caps the norm") {
  World w = make_world(10, 6, 103);
  Hyperparams with_clip;
  with_clip.cell = CellKind::LSTM;
  with_clip.embed_dim = 6;
  with_clip.hidden = 5;
  with_clip.epochs = 2;
  with_clip.seed = 3;
  with_clip.clip_norm = 1e-3;  // so small that every step is rescaled
  Hyperparams without = with_clip;
  without.clip_norm = 0;
  TrainResult a = train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                        with_clip, nullptr);
  TrainResult b = train(w.corpus.sentences, {}, w.corpus.tagset, w.embeddings,
                        without, nullptr);
  CHECK(model_bytes(a.final_model, w.corpus.tagset) !=
        model_bytes(b.final_model, w.corpus.tagset));
}

TEST_CASE("frozen transitions stay at zero through training") {
  World w = make_world(8, 6, 107);
  Hyperparams hp;
  hp.cell = CellKind::RNN;
  hp.embed_dim = 6;
  hp.hidden = 4;
  hp.epochs = 3;
  hp.seed = 5;
  hp.freeze_transitions = true;
  TrainResult result = train(w.corpus.sentences, {}, w.corpus.tagset,
                             w.embeddings, hp, nullptr);
  CHECK(result.final_model.transitions.isZero(0));
}

}  // TEST_SUITE
