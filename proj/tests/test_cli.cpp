#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "tagscope/checkpoint.hpp"
#include "tagscope/cli.hpp"
#include "tagscope/csv.hpp"
#include "tagscope/synthetic.hpp"

using namespace tagscope;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::path("/tmp") / ("tagscope_cli_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const {
    return (path / name).string();
  }
};

struct CliRun {
  int status = 0;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.status = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors and help") {
  CliRun none = cli({});
  CHECK(none.status == 2);
  CHECK(none.err.find("subcommand is required") != std::string::npos);
  CHECK(none.err.find("run with --help") != std::string::npos);

  CliRun help = cli({"--help"});
  CHECK(help.status == 0);
  CHECK(help.out.find("train") != std::string::npos);
  CHECK(help.out.find("score-wf") != std::string::npos);
  CHECK(help.out.find("heatmap") != std::string::npos);

  CliRun bogus = cli({"gen-synthetic", "--bogus"});
  CHECK(bogus.status == 2);
  CHECK(bogus.err.find("run with --help") != std::string::npos);

  CliRun missing_required = cli({"score-wf"});
  CHECK(missing_required.status == 2);
}

TEST_CASE("gen-synthetic writes exactly the generated corpus") {
  TempDir dir("gen");
  CliRun r = cli({"gen-synthetic", "--sentences", "25", "--seed", "9",
                  "--emb-dim", "5", "--out", dir / ""});
  REQUIRE(r.status == 0);
  CHECK(r.out.find("synthetic.conll") != std::string::npos);
  CHECK(r.err.find("seed 9 -> derived streams:") != std::string::npos);

  SyntheticSpec spec = SyntheticSpec::defaults();
  spec.sentences = 25;
  ParsedCorpus want = gen_synthetic(spec, 9);
  CHECK(slurp_file(dir / "synthetic.conll") ==
        serialize_conll(want.sentences, want.tagset));
  std::ostringstream emb;
  write_synthetic_embeddings(want.sentences, 5, 9, emb);
  CHECK(slurp_file(dir / "synthetic.emb") == emb.str());
}

TEST_CASE("config files fill in flags the command line omits") {
  TempDir dir("config");
  write_text(dir / "run.cfg",
             "# generator settings\n"
             "sentences=7\n"
             "\n"
             "seed=11\n");

  REQUIRE(cli({"gen-synthetic", "--config", dir / "run.cfg", "--out",
               dir / ""})
              .status == 0);
  SyntheticSpec spec = SyntheticSpec::defaults();
  spec.sentences = 7;
  ParsedCorpus want = gen_synthetic(spec, 11);
  CHECK(slurp_file(dir / "synthetic.conll") ==
        serialize_conll(want.sentences, want.tagset));

  // An explicit flag beats the config value; other keys still apply.
  REQUIRE(cli({"gen-synthetic", "--config", dir / "run.cfg",
               "--sentences=4", "--out", dir / ""})
              .status == 0);
  spec.sentences = 4;
  ParsedCorpus smaller = gen_synthetic(spec, 11);
  CHECK(slurp_file(dir / "synthetic.conll") ==
        serialize_conll(smaller.sentences, smaller.tagset));

  write_text(dir / "bad.cfg", "sentences\n");
  CliRun bad = cli({"gen-synthetic", "--config", dir / "bad.cfg"});
  CHECK(bad.status == 2);
  CHECK(bad.err.find("expected key=value") != std::string::npos);

  CHECK(cli({"gen-synthetic", "--config"}).status == 2);
  CliRun gone = cli({"gen-synthetic", "--config", dir / "absent.cfg"});
  CHECK(gone.status == 2);
  CHECK(gone.err.find("cannot read") != std::string::npos);
}

TEST_CASE("score-wf reproduces the library result") {
  TempDir dir("wf");
  const std::string text =
      "the O\nttl O\nanna B-PER\nmaria I-PER\nwent O\nhome O\n\n"
      "near O\nltr O\nbergen B-LOC\nlies O\nthe O\nsea O\n";
  write_text(dir / "tiny.conll", text);
  CliRun r = cli({"score-wf", "--data", dir / "tiny.conll", "--window", "2",
                  "--out", dir / ""});
  REQUIRE(r.status == 0);
  ParsedCorpus corpus = parse_conll(text);
  CHECK(slurp_file(dir / "wf.csv") ==
        score_wf(corpus.sentences, corpus.tagset, 2).csv());

  CliRun inv = cli({"score-wf", "--data", dir / "tiny.conll", "--window", "2",
                    "--inverse", "--k", "3", "--out", dir / ""});
  REQUIRE(inv.status == 0);
  CHECK(slurp_file(dir / "wf.csv") ==
        score_wf(corpus.sentences, corpus.tagset, 2, true, 3).csv());

  CHECK(cli({"score-wf", "--data", dir / "tiny.conll", "--scheme", "foo"})
            .status == 2);
  CHECK(cli({"score-wf", "--data", dir / "missing.conll"}).status == 2);
}

TEST_CASE("the full pipeline runs out of one directory") {
  TempDir dir("pipeline");
  REQUIRE(cli({"gen-synthetic", "--sentences", "30", "--seed", "3",
               "--emb-dim", "8", "--out", dir / ""})
              .status == 0);
  const std::string data = dir / "synthetic.conll";
  const std::string emb = dir / "synthetic.emb";

  CliRun trained = cli({"train", "--train", data, "--emb", emb, "--cell",
                        "rnn", "--hidden", "6", "--epochs", "2", "--lr",
                        "0.05", "--seed", "3", "--out", dir / ""});
  REQUIRE(trained.status == 0);
  CHECK(trained.out.find("trained rnn for 2 epochs") != std::string::npos);
  const std::string model = dir / "model.ckpt";
  REQUIRE(fs::exists(model));
  REQUIRE(fs::exists(dir / "model_best.ckpt"));

  Checkpoint ckpt = load_checkpoint_file(model);
  CHECK(ckpt.model.hp.cell == CellKind::RNN);
  CHECK(ckpt.model.hp.hidden == 6);
  CHECK(ckpt.model.hp.epochs == 2);
  CHECK(ckpt.embedding_fingerprint == content_fingerprint(slurp_file(emb)));

  auto trace = csv_parse(slurp_file(dir / "trace.csv"));
  REQUIRE(trace.size() == 3);
  CHECK(trace[0] == std::vector<std::string>{"epoch", "mean_nll", "dev_f1"});
  CHECK(trace[1][0] == "1");
  CHECK(trace[2][0] == "2");

  CliRun eval = cli({"evaluate", "--model", model, "--emb", emb, "--data",
                     data});
  CHECK(eval.status == 0);
  CHECK(eval.out.find("overall F1") != std::string::npos);

  // Relevance tables: identical bytes on a second run with the same seed.
  REQUIRE(cli({"score-lrc", "--model", model, "--emb", emb, "--data", data,
               "--out", dir / ""})
              .status == 0);
  const std::string lrc_bytes = slurp_file(dir / "lrc.csv");
  RelevanceTable lrc = RelevanceTable::from_csv(lrc_bytes);
  CHECK(lrc.method == Method::LRC);
  TempDir again("pipeline_again");
  REQUIRE(cli({"score-lrc", "--model", model, "--emb", emb, "--data", data,
               "--out", again / ""})
              .status == 0);
  CHECK(slurp_file(again / "lrc.csv") == lrc_bytes);

  REQUIRE(cli({"score-sll", "--model", model, "--emb", emb, "--data", data,
               "--out", dir / ""})
              .status == 0);
  CHECK(RelevanceTable::from_csv(slurp_file(dir / "sll.csv")).method ==
        Method::SLL);

  CliRun corr = cli({"correlate", "--model", model, "--emb", emb, "--data",
                     data, "--sentence", "0", "--token", "0", "--side", "L",
                     "--out", dir / ""});
  REQUIRE(corr.status == 0);
  auto corr_rows = csv_parse(slurp_file(dir / "corr.csv"));
  CHECK(corr_rows[0] == std::vector<std::string>{"tag", "dot", "kl", "pcc"});
  CHECK(corr_rows.size() == ckpt.tagset.size() + 1u);
  CHECK(cli({"correlate", "--model", model, "--emb", emb, "--data", data,
             "--sentence", "0", "--token", "0", "--side", "X"})
            .status == 2);

  REQUIRE(cli({"report-sentence", "--model", model, "--emb", emb, "--data",
               data, "--sentence", "0", "--method", "lrc", "--out",
               dir / ""})
              .status == 0);
  CHECK(fs::exists(dir / "report.csv"));

  CliRun probe = cli({"probe-position", "--models", std::string("m=") + model,
                      "--emb", emb, "--context", "ttl", "--entity", "anna",
                      "--type", "PER", "--max-distance", "3", "--filler",
                      "fixed", "--out", dir / ""});
  REQUIRE(probe.status == 0);
  auto probe_rows = csv_parse(slurp_file(dir / "probe.csv"));
  REQUIRE(probe_rows.size() == 4);
  CHECK(probe_rows[0] == std::vector<std::string>{"distance", "m"});
  CHECK(cli({"probe-position", "--models", model, "--emb", emb, "--context",
             "ttl", "--entity", "anna", "--type", "PER", "--filler", "zig"})
            .status == 2);

  // An unlabeled model path is labeled by its file stem.
  REQUIRE(cli({"probe-word", "--models", model, "--emb", emb, "--data", data,
               "--word", ".", "--type", "PER", "--out", dir / ""})
              .status == 0);
  auto word_rows = csv_parse(slurp_file(dir / "probe.csv"));
  CHECK(word_rows[0] ==
        std::vector<std::string>{"sentence_id", "model", "instances"});

  REQUIRE(cli({"error-report", "--model", model, "--emb", emb, "--data", data,
               "--lrc", dir / "lrc.csv", "--out", dir / ""})
              .status == 0);
  auto err_rows = csv_parse(slurp_file(dir / "errors.csv"));
  CHECK(err_rows[0][0] == "sentence_id");
  CHECK(err_rows[0][5] == "suspect");

  CliRun heat = cli({"heatmap", "--tables", std::string("m=") + dir / "lrc.csv",
                     "--rows", "word", "--cols", "entity", "--out", dir / ""});
  REQUIRE(heat.status == 0);
  CHECK(fs::exists(dir / "heatmap.csv"));
  CHECK(fs::exists(dir / "heatmap.svg"));
  REQUIRE(cli({"heatmap", "--tables", std::string("m=") + dir / "lrc.csv",
               "--rows", "word", "--cols", "entity", "--no-svg", "--out",
               again / ""})
              .status == 0);
  CHECK(fs::exists(again / "heatmap.csv"));
  CHECK(!fs::exists(again / "heatmap.svg"));
  CHECK(cli({"heatmap", "--tables", std::string("m=") + dir / "lrc.csv",
             "--rows", "word", "--cols", "banana"})
            .status == 2);

  // A different embedding file triggers the provenance warning.
  write_text(dir / "other.emb",
             slurp_file(emb) + "zzzunused 0 0 0 0 0 0 0 0\n");
  CliRun warned = cli({"evaluate", "--model", model, "--emb",
                       dir / "other.emb", "--data", data});
  CHECK(warned.status == 0);
  CHECK(warned.err.find("not the embedding file") != std::string::npos);
}

TEST_CASE("missing inputs are configuration errors") {
  TempDir dir("missing");
  CHECK(cli({"train", "--train", dir / "no.conll", "--emb", dir / "no.emb"})
            .status == 2);
  CliRun r = cli({"evaluate", "--model", dir / "no.ckpt", "--emb",
                  dir / "no.emb", "--data", dir / "no.conll"});
  CHECK(r.status == 2);
  CHECK(r.err.find("cannot read") != std::string::npos);

  // Corrupt contents, by contrast, are runtime failures.
  write_text(dir / "bad.ckpt", "not a checkpoint\n");
  write_text(dir / "tiny.emb", "a 0.1\n");
  write_text(dir / "tiny.conll", "a O\n");
  CliRun corrupt = cli({"evaluate", "--model", dir / "bad.ckpt", "--emb",
                        dir / "tiny.emb", "--data", dir / "tiny.conll"});
  CHECK(corrupt.status == 1);
  CHECK(corrupt.err.find("unsupported format") != std::string::npos);
}

}  // TEST_SUITE
