#include "tagscope/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tagscope/analysis.hpp"
#include "tagscope/checkpoint.hpp"
#include "tagscope/corpus.hpp"
#include "tagscope/correlation.hpp"
#include "tagscope/csv.hpp"
#include "tagscope/embeddings.hpp"
#include "tagscope/format.hpp"
#include "tagscope/relevance.hpp"
#include "tagscope/rng.hpp"
#include "tagscope/synthetic.hpp"
#include "tagscope/trainer.hpp"

namespace tagscope {

namespace {

namespace fs = std::filesystem;

// Thrown for problems the user can fix in the invocation (exit status 2),
// as opposed to failures during execution (exit status 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// "name=path" picks the label explicitly; otherwise the file stem is used.
std::pair<std::string, std::string> labeled_path(const std::string& arg) {
  auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0)
    return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {fs::path(arg).stem().string(), arg};
}

TagScheme scheme_from_name(const std::string& name) {
  if (name == "bio2") return TagScheme::BIO2;
  if (name == "iob1") return TagScheme::IOB1;
  throw ConfigError("unknown scheme '" + name + "' (expected bio2 or iob1)");
}

ReplacementMode mode_from_name(const std::string& name) {
  if (name == "per-run") return ReplacementMode::PerRun;
  if (name == "per-word") return ReplacementMode::PerWord;
  if (name == "self-test") return ReplacementMode::SelfTest;
  throw ConfigError("unknown replacement mode '" + name +
                    "' (expected per-run, per-word, or self-test)");
}

void log_derived_seeds(std::ostream& err, std::uint64_t seed) {
  std::ostringstream line;
  line << "seed " << seed << " -> derived streams:" << std::hex;
  line << " init=" << mix_seed(seed, kSeedStreamInit);
  line << " shuffle=" << mix_seed(seed, kSeedStreamShuffle);
  line << " replacement=" << mix_seed(seed, kSeedStreamReplacement);
  line << " oov=" << mix_seed(seed, kSeedStreamOov);
  line << " synthetic=" << mix_seed(seed, kSeedStreamSynthetic);
  line << " filler=" << mix_seed(seed, kSeedStreamFiller);
  err << line.str() << '\n';
}

EmbeddingTable load_embeddings(const std::string& path, std::uint64_t seed) {
  std::istringstream in(slurp(path));
  return EmbeddingTable::load(in, seed);
}

// Loads a checkpoint and warns when the embedding file is not the one the
// model was trained with.
Checkpoint load_model(const std::string& ckpt_path,
                      const std::string& emb_path, std::ostream& err) {
  // Read through slurp so a missing path is a configuration error, like
  // every other input file; only malformed content is a runtime failure.
  std::istringstream ckpt_in(slurp(ckpt_path));
  Checkpoint ckpt = load_checkpoint(ckpt_in);
  const std::uint64_t fp = content_fingerprint(slurp(emb_path));
  if (ckpt.embedding_fingerprint != 0 && fp != ckpt.embedding_fingerprint)
    err << "warning: " << emb_path
        << " is not the embedding file this model was trained with\n";
  return ckpt;
}

ParsedCorpus load_data(const std::string& path, int tag_column,
                       const TagSet* hint, TagScheme scheme, bool fold) {
  return parse_conll(slurp(path), tag_column, hint, scheme, fold);
}

// Flat key=value configuration file. Lines that are blank or start with '#'
// are skipped. Values already given on the command line win.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw ConfigError("--config needs a file path");
      config_path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;

  std::istringstream in(slurp(config_path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    auto eq = trimmed.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(config_path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    const std::string key = trimmed.substr(0, eq);
    const std::string flag = "--" + key;
    bool overridden = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        overridden = true;
        break;
      }
    if (!overridden) args.push_back(flag + "=" + trimmed.substr(eq + 1));
  }
  return args;
}

// Shared flag bundles ------------------------------------------------------

struct DataFlags {
  std::string path;
  int tag_column = -1;
  std::string scheme = "bio2";
  bool no_digit_fold = false;

  void add(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--data", path, "dataset in CoNLL column format");
    if (required) opt->required();
    cmd->add_option("--tag-column", tag_column,
                    "column holding the tag (negative counts from the end)");
    cmd->add_option("--scheme", scheme, "tagging scheme: bio2 or iob1");
    cmd->add_flag("--no-digit-fold", no_digit_fold,
                  "keep digits instead of folding runs to 0");
  }
  ParsedCorpus load(const TagSet* hint) const {
    return load_data(path, tag_column, hint,
                     hint ? hint->scheme() : scheme_from_name(scheme),
                     !no_digit_fold);
  }
};

struct ErasureFlags {
  std::uint64_t seed = 1;
  std::string mode = "per-run";
  bool single_occurrence = false;
  int threads = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "run seed; all randomness derives from it");
    cmd->add_option("--mode", mode,
                    "replacement mode: per-run, per-word, or self-test");
    cmd->add_flag("--single-occurrence", single_occurrence,
                  "erase only the first occurrence of a word");
    cmd->add_option("--threads", threads,
                    "worker threads (1 = serial reference path)");
  }
  ErasureOptions options() const {
    ErasureOptions o;
    o.seed = seed;
    o.mode = mode_from_name(mode);
    o.single_occurrence = single_occurrence;
    o.threads = threads;
    return o;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"sequence-tagger relevance analysis toolkit"};
  app.require_subcommand(1);

  // ---- train -------------------------------------------------------------
  struct {
    std::string train_path, dev_path, emb_path, out_dir = ".";
    std::string cell = "lstm";
    int dim = 0, hidden = 50, epochs = 21, tag_column = -1;
    double lr = 0.05, clip = 5.0;
    std::uint64_t seed = 1;
    std::string scheme = "bio2";
    bool no_digit_fold = false, freeze_transitions = false;
  } tr;
  auto* train_cmd = app.add_subcommand("train", "train a tagger");
  train_cmd->add_option("--train", tr.train_path, "training data")->required();
  train_cmd->add_option("--dev", tr.dev_path, "validation data");
  train_cmd->add_option("--emb", tr.emb_path, "embedding file")->required();
  train_cmd->add_option("--cell", tr.cell, "cell kind: rnn, lstm, or gru");
  train_cmd->add_option("--dim", tr.dim,
                        "embedding dimension (0 = take it from the file)");
  train_cmd->add_option("--hidden", tr.hidden, "hidden units per direction");
  train_cmd->add_option("--lr", tr.lr, "learning rate");
  train_cmd->add_option("--epochs", tr.epochs, "training epochs");
  train_cmd->add_option("--clip", tr.clip,
                        "gradient L2 clip threshold (0 disables)");
  train_cmd->add_option("--seed", tr.seed, "run seed");
  train_cmd->add_option("--tag-column", tr.tag_column, "tag column");
  train_cmd->add_option("--scheme", tr.scheme, "tagging scheme");
  train_cmd->add_flag("--no-digit-fold", tr.no_digit_fold,
                      "keep digits instead of folding runs to 0");
  train_cmd->add_flag("--freeze-transitions", tr.freeze_transitions,
                      "keep transition scores at zero");
  train_cmd->add_option("--out", tr.out_dir, "output directory");

  // ---- evaluate ----------------------------------------------------------
  struct {
    std::string model, emb;
    DataFlags data;
    int threads = 1;
    std::uint64_t seed = 1;
  } ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "span-level P/R/F1");
  eval_cmd->add_option("--model", ev.model, "model checkpoint")->required();
  eval_cmd->add_option("--emb", ev.emb, "embedding file")->required();
  ev.data.add(eval_cmd);
  eval_cmd->add_option("--threads", ev.threads, "worker threads");
  eval_cmd->add_option("--seed", ev.seed, "run seed (OOV vector)");

  // ---- score-wf ----------------------------------------------------------
  struct {
    DataFlags data;
    int window = 5;
    long k = 1;
    bool inverse = false;
    std::string out_dir = ".";
  } wf;
  auto* wf_cmd = app.add_subcommand("score-wf", "windowed frequency relevance");
  wf.data.add(wf_cmd);
  wf_cmd->add_option("--window", wf.window, "half width of the context window");
  wf_cmd->add_option("--k", wf.k, "inverse-frequency smoothing constant");
  wf_cmd->add_flag("--inverse", wf.inverse, "apply inverse frequency weighting");
  wf_cmd->add_option("--out", wf.out_dir, "output directory");

  // ---- score-sll ---------------------------------------------------------
  struct {
    std::string model, emb, out_dir = ".";
    DataFlags data;
    ErasureFlags erasure;
  } sll;
  auto* sll_cmd =
      app.add_subcommand("score-sll", "sentence-likelihood erasure relevance");
  sll_cmd->add_option("--model", sll.model, "model checkpoint")->required();
  sll_cmd->add_option("--emb", sll.emb, "embedding file")->required();
  sll.data.add(sll_cmd);
  sll.erasure.add(sll_cmd);
  sll_cmd->add_option("--out", sll.out_dir, "output directory");

  // ---- score-lrc ---------------------------------------------------------
  struct {
    std::string model, emb, out_dir = ".", measure = "dot";
    DataFlags data;
    ErasureFlags erasure;
  } lrc;
  auto* lrc_cmd =
      app.add_subcommand("score-lrc", "side-score margin erasure relevance");
  lrc_cmd->add_option("--model", lrc.model, "model checkpoint")->required();
  lrc_cmd->add_option("--emb", lrc.emb, "embedding file")->required();
  lrc.data.add(lrc_cmd);
  lrc.erasure.add(lrc_cmd);
  lrc_cmd->add_option("--measure", lrc.measure, "similarity: dot, kl, or pcc");
  lrc_cmd->add_option("--out", lrc.out_dir, "output directory");

  // ---- correlate ---------------------------------------------------------
  struct {
    std::string model, emb, out_dir = ".", side = "L";
    DataFlags data;
    int sentence = 0, token = 0;
    std::uint64_t seed = 1;
  } corr;
  auto* corr_cmd = app.add_subcommand(
      "correlate", "per-tag weight/hidden similarity for one token");
  corr_cmd->add_option("--model", corr.model, "model checkpoint")->required();
  corr_cmd->add_option("--emb", corr.emb, "embedding file")->required();
  corr.data.add(corr_cmd);
  corr_cmd->add_option("--sentence", corr.sentence, "sentence id")->required();
  corr_cmd->add_option("--token", corr.token, "token index")->required();
  corr_cmd->add_option("--side", corr.side, "hidden half: L or R");
  corr_cmd->add_option("--seed", corr.seed, "run seed (OOV vector)");
  corr_cmd->add_option("--out", corr.out_dir, "output directory");

  // ---- report-sentence ---------------------------------------------------
  struct {
    std::string model, emb, out_dir = ".", method = "lrc", measure = "dot";
    DataFlags data;
    ErasureFlags erasure;
    int sentence = 0;
  } rep;
  auto* rep_cmd = app.add_subcommand("report-sentence",
                                     "word-by-word scores for one sentence");
  rep_cmd->add_option("--model", rep.model, "model checkpoint")->required();
  rep_cmd->add_option("--emb", rep.emb, "embedding file")->required();
  rep.data.add(rep_cmd);
  rep_cmd->add_option("--sentence", rep.sentence, "sentence id")->required();
  rep_cmd->add_option("--method", rep.method, "sll or lrc");
  rep_cmd->add_option("--measure", rep.measure, "lrc similarity");
  rep.erasure.add(rep_cmd);
  rep_cmd->add_option("--out", rep.out_dir, "output directory");

  // ---- probe-position ----------------------------------------------------
  struct {
    std::vector<std::string> models;
    std::string emb, out_dir = ".", context, entity, type, filler = "fixed";
    std::string terminator = ".", measure = "dot";
    int max_distance = 10;
    std::uint64_t seed = 1;
  } pp;
  auto* pp_cmd = app.add_subcommand(
      "probe-position", "score a context word at controlled distances");
  pp_cmd->add_option("--models", pp.models,
                     "model checkpoints (label with name=path)")
      ->required();
  pp_cmd->add_option("--emb", pp.emb, "embedding file")->required();
  pp_cmd->add_option("--context", pp.context, "context word")->required();
  pp_cmd->add_option("--entity", pp.entity, "entity word")->required();
  pp_cmd->add_option("--type", pp.type, "entity type")->required();
  pp_cmd->add_option("--max-distance", pp.max_distance, "largest distance");
  pp_cmd->add_option("--filler", pp.filler, "filler policy: fixed or random");
  pp_cmd->add_option("--terminator", pp.terminator, "sentence-final token");
  pp_cmd->add_option("--measure", pp.measure, "similarity: dot, kl, or pcc");
  pp_cmd->add_option("--seed", pp.seed, "run seed");
  pp_cmd->add_option("--out", pp.out_dir, "output directory");

  // ---- probe-word --------------------------------------------------------
  struct {
    std::vector<std::string> models;
    std::string emb, out_dir = ".", word, type, measure = "dot";
    DataFlags data;
    ErasureFlags erasure;
  } pw;
  auto* pw_cmd = app.add_subcommand(
      "probe-word", "per-sentence scores of one word on real data");
  pw_cmd->add_option("--models", pw.models,
                     "model checkpoints (label with name=path)")
      ->required();
  pw_cmd->add_option("--emb", pw.emb, "embedding file")->required();
  pw.data.add(pw_cmd);
  pw_cmd->add_option("--word", pw.word, "context word")->required();
  pw_cmd->add_option("--type", pw.type, "entity type")->required();
  pw_cmd->add_option("--measure", pw.measure, "similarity: dot, kl, or pcc");
  pw.erasure.add(pw_cmd);
  pw_cmd->add_option("--out", pw.out_dir, "output directory");

  // ---- error-report ------------------------------------------------------
  struct {
    std::string model, emb, table, out_dir = ".";
    DataFlags data;
    ErasureFlags erasure;
  } er;
  auto* er_cmd = app.add_subcommand(
      "error-report", "context words implicated in wrong predictions");
  er_cmd->add_option("--model", er.model, "model checkpoint")->required();
  er_cmd->add_option("--emb", er.emb, "embedding file")->required();
  er.data.add(er_cmd);
  er_cmd->add_option("--lrc", er.table, "corpus-level relevance table CSV")
      ->required();
  er.erasure.add(er_cmd);
  er_cmd->add_option("--out", er.out_dir, "output directory");

  // ---- heatmap -----------------------------------------------------------
  struct {
    std::vector<std::string> tables;
    std::string fix, rows, cols, out_dir = ".";
    bool no_svg = false;
  } hm;
  auto* hm_cmd =
      app.add_subcommand("heatmap", "grid view over relevance tables");
  hm_cmd->add_option("--tables", hm.tables,
                     "relevance table CSVs (label with name=path)")
      ->required();
  hm_cmd->add_option("--fix", hm.fix,
                     "fixed axes, e.g. word=minister,method=lrc");
  hm_cmd->add_option("--rows", hm.rows, "row axis")->required();
  hm_cmd->add_option("--cols", hm.cols, "column axis")->required();
  hm_cmd->add_flag("--no-svg", hm.no_svg, "write only the CSV");
  hm_cmd->add_option("--out", hm.out_dir, "output directory");

  // ---- gen-synthetic -----------------------------------------------------
  struct {
    int sentences = 500, emb_dim = 16;
    std::uint64_t seed = 1;
    double distractor_frac = 0.3, trigger_prob = 1.0;
    std::string out_dir = ".";
  } gs;
  auto* gs_cmd =
      app.add_subcommand("gen-synthetic", "generate a trigger corpus");
  gs_cmd->add_option("--sentences", gs.sentences, "sentence count");
  gs_cmd->add_option("--emb-dim", gs.emb_dim, "embedding dimension");
  gs_cmd->add_option("--seed", gs.seed, "run seed");
  gs_cmd->add_option("--distractor-frac", gs.distractor_frac,
                     "fraction of entity-free sentences");
  gs_cmd->add_option("--trigger-prob", gs.trigger_prob,
                     "chance an entity gets its trigger");
  gs_cmd->add_option("--out", gs.out_dir, "output directory");

  // ---- parse -------------------------------------------------------------
  std::vector<std::string> args;
  try {
    args = merge_config_file(raw_args);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    // CLI11 wants argv order reversed.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    // train
    if (train_cmd->parsed()) {
      log_derived_seeds(err, tr.seed);
      EmbeddingTable emb = load_embeddings(tr.emb_path, tr.seed);
      if (tr.dim == 0) tr.dim = emb.dim();
      if (tr.dim != emb.dim())
        throw ConfigError("--dim " + std::to_string(tr.dim) +
                          " does not match the embedding file (" +
                          std::to_string(emb.dim()) + ")");
      Hyperparams hp;
      hp.cell = cell_kind_from_name(tr.cell);
      hp.embed_dim = tr.dim;
      hp.hidden = tr.hidden;
      hp.seed = tr.seed;
      hp.lr = tr.lr;
      hp.epochs = tr.epochs;
      hp.clip_norm = tr.clip;
      hp.freeze_transitions = tr.freeze_transitions;
      if (hp.hidden < 1) throw ConfigError("--hidden must be positive");
      if (hp.epochs < 1) throw ConfigError("--epochs must be >= 1");
      if (hp.lr <= 0) throw ConfigError("--lr must be > 0");

      ParsedCorpus train_data =
          load_data(tr.train_path, tr.tag_column, nullptr,
                    scheme_from_name(tr.scheme), !tr.no_digit_fold);
      std::vector<Sentence> dev;
      if (!tr.dev_path.empty())
        dev = load_data(tr.dev_path, tr.tag_column, &train_data.tagset,
                        train_data.tagset.scheme(), !tr.no_digit_fold)
                  .sentences;

      TrainResult result =
          train(train_data.sentences, dev, train_data.tagset, emb, hp, &err);

      const std::uint64_t fp = content_fingerprint(slurp(tr.emb_path));
      save_checkpoint_file({result.final_model, train_data.tagset, fp},
                           fs::path(tr.out_dir) / "model.ckpt");
      save_checkpoint_file({result.best_model, train_data.tagset, fp},
                           fs::path(tr.out_dir) / "model_best.ckpt");
      std::string trace = "epoch,mean_nll,dev_f1\n";
      for (const auto& row : result.trace)
        trace += csv_row({std::to_string(row.epoch),
                          format_double(row.mean_nll),
                          format_double(row.dev_f1)});
      write_file(fs::path(tr.out_dir) / "trace.csv", trace);
      out << "trained " << tr.cell << " for " << hp.epochs
          << " epochs; best dev F1 "
          << format_double(result.trace[result.best_epoch - 1].dev_f1)
          << " at epoch " << result.best_epoch << "; wrote model.ckpt, "
          << "model_best.ckpt, trace.csv under " << tr.out_dir << "\n";
      return 0;
    }

    // evaluate
    if (eval_cmd->parsed()) {
      log_derived_seeds(err, ev.seed);
      Checkpoint ckpt = load_model(ev.model, ev.emb, err);
      EmbeddingTable emb = load_embeddings(ev.emb, ev.seed);
      ParsedCorpus data = ev.data.load(&ckpt.tagset);
      EvalReport report =
          evaluate(ckpt.model, data.sentences, ckpt.tagset, emb, ev.threads);
      out << report.summary();
      out << "evaluated " << data.sentences.size() << " sentences; overall F1 "
          << format_double(report.overall.f1()) << "\n";
      return 0;
    }

    // score-wf
    if (wf_cmd->parsed()) {
      ParsedCorpus data = wf.data.load(nullptr);
      RelevanceTable table =
          score_wf(data.sentences, data.tagset, wf.window, wf.inverse, wf.k);
      write_file(fs::path(wf.out_dir) / "wf.csv", table.csv());
      out << "scored " << data.sentences.size() << " sentences with "
          << method_name(table.method) << "; wrote wf.csv under " << wf.out_dir
          << "\n";
      return 0;
    }

    // score-sll
    if (sll_cmd->parsed()) {
      log_derived_seeds(err, sll.erasure.seed);
      Checkpoint ckpt = load_model(sll.model, sll.emb, err);
      EmbeddingTable emb = load_embeddings(sll.emb, sll.erasure.seed);
      ParsedCorpus data = sll.data.load(&ckpt.tagset);
      RelevanceTable table = score_sll(ckpt.model, data.sentences, ckpt.tagset,
                                       emb, sll.erasure.options());
      write_file(fs::path(sll.out_dir) / "sll.csv", table.csv());
      out << "scored " << data.sentences.size()
          << " sentences with sll; wrote sll.csv under " << sll.out_dir << "\n";
      return 0;
    }

    // score-lrc
    if (lrc_cmd->parsed()) {
      log_derived_seeds(err, lrc.erasure.seed);
      Checkpoint ckpt = load_model(lrc.model, lrc.emb, err);
      EmbeddingTable emb = load_embeddings(lrc.emb, lrc.erasure.seed);
      ParsedCorpus data = lrc.data.load(&ckpt.tagset);
      RelevanceTable table =
          score_lrc(ckpt.model, data.sentences, ckpt.tagset, emb,
                    measure_from_name(lrc.measure), lrc.erasure.options());
      write_file(fs::path(lrc.out_dir) / "lrc.csv", table.csv());
      out << "scored " << data.sentences.size()
          << " sentences with lrc/" << lrc.measure << "; wrote lrc.csv under "
          << lrc.out_dir << "\n";
      return 0;
    }

    // correlate
    if (corr_cmd->parsed()) {
      log_derived_seeds(err, corr.seed);
      Checkpoint ckpt = load_model(corr.model, corr.emb, err);
      EmbeddingTable emb = load_embeddings(corr.emb, corr.seed);
      ParsedCorpus data = corr.data.load(&ckpt.tagset);
      if (corr.side != "L" && corr.side != "R")
        throw ConfigError("--side must be L or R");
      const Sentence* sentence = nullptr;
      for (const auto& s : data.sentences)
        if (s.id == corr.sentence) sentence = &s;
      if (!sentence)
        throw std::runtime_error("no sentence with id " +
                                 std::to_string(corr.sentence));
      if (corr.token < 0 ||
          corr.token >= static_cast<int>(sentence->tokens.size()))
        throw std::runtime_error("token index out of range");
      std::vector<Eigen::VectorXd> xs;
      for (const auto& tok : sentence->tokens) xs.push_back(emb.lookup(tok));
      HiddenStates states = encode_bidirectional(ckpt.model, xs);
      auto triples = correlate_instance(ckpt.model, states, corr.token,
                                        corr.side == "L" ? Side::Left
                                                         : Side::Right);
      std::string csv = "tag,dot,kl,pcc\n";
      for (const auto& t : triples)
        csv += csv_row({ckpt.tagset.name(t.tag), format_double(t.dot),
                        format_double(t.kl),
                        t.pcc ? format_double(*t.pcc) : ""});
      write_file(fs::path(corr.out_dir) / "corr.csv", csv);
      out << "correlated token " << corr.token << " of sentence "
          << corr.sentence << " (side " << corr.side
          << "); wrote corr.csv under " << corr.out_dir << "\n";
      return 0;
    }

    // report-sentence
    if (rep_cmd->parsed()) {
      log_derived_seeds(err, rep.erasure.seed);
      Checkpoint ckpt = load_model(rep.model, rep.emb, err);
      EmbeddingTable emb = load_embeddings(rep.emb, rep.erasure.seed);
      ParsedCorpus data = rep.data.load(&ckpt.tagset);
      const Sentence* sentence = nullptr;
      for (const auto& s : data.sentences)
        if (s.id == rep.sentence) sentence = &s;
      if (!sentence)
        throw std::runtime_error("no sentence with id " +
                                 std::to_string(rep.sentence));
      SentenceReport report = sentence_report(
          ckpt.model, *sentence, ckpt.tagset, emb,
          method_from_name(rep.method), measure_from_name(rep.measure),
          rep.erasure.options());
      write_file(fs::path(rep.out_dir) / "report.csv", report.csv());
      out << "reported sentence " << rep.sentence << " under " << rep.method
          << "; wrote report.csv under " << rep.out_dir << "\n";
      return 0;
    }

    // probe-position
    if (pp_cmd->parsed()) {
      log_derived_seeds(err, pp.seed);
      if (pp.filler != "fixed" && pp.filler != "random")
        throw ConfigError("--filler must be fixed or random");
      EmbeddingTable emb = load_embeddings(pp.emb, pp.seed);
      std::vector<std::pair<std::string, ModelParams>> models;
      TagSet tagset;
      for (const auto& arg : pp.models) {
        auto [name, path] = labeled_path(arg);
        Checkpoint ckpt = load_model(path, pp.emb, err);
        if (models.empty())
          tagset = ckpt.tagset;
        else if (!(tagset == ckpt.tagset))
          throw ConfigError("models disagree on the tag inventory");
        models.emplace_back(name, std::move(ckpt.model));
      }
      ProbeResult probe = positional_probe(
          models, tagset, emb, pp.context, pp.entity, pp.type, pp.max_distance,
          pp.filler == "fixed" ? FillerPolicy::FixedOov
                               : FillerPolicy::RandomInVocab,
          pp.seed, measure_from_name(pp.measure), pp.terminator);
      write_file(fs::path(pp.out_dir) / "probe.csv", probe.csv());
      out << "probed '" << pp.context << "' vs '" << pp.entity
          << "' at distances 1.." << pp.max_distance
          << "; wrote probe.csv under " << pp.out_dir << "\n";
      return 0;
    }

    // probe-word
    if (pw_cmd->parsed()) {
      log_derived_seeds(err, pw.erasure.seed);
      EmbeddingTable emb = load_embeddings(pw.emb, pw.erasure.seed);
      std::vector<std::pair<std::string, ModelParams>> models;
      TagSet tagset;
      for (const auto& arg : pw.models) {
        auto [name, path] = labeled_path(arg);
        Checkpoint ckpt = load_model(path, pw.emb, err);
        if (models.empty())
          tagset = ckpt.tagset;
        else if (!(tagset == ckpt.tagset))
          throw ConfigError("models disagree on the tag inventory");
        models.emplace_back(name, std::move(ckpt.model));
      }
      ParsedCorpus data = pw.data.load(&tagset);
      SentenceProbeResult probe = real_sentence_probe(
          models, data.sentences, tagset, emb, pw.word, pw.type,
          pw.erasure.options(), measure_from_name(pw.measure));
      write_file(fs::path(pw.out_dir) / "probe.csv", probe.csv());
      out << "probed '" << pw.word << "' for " << pw.type << " across "
          << probe.rows.size() << " sentences; wrote probe.csv under "
          << pw.out_dir << "\n";
      return 0;
    }

    // error-report
    if (er_cmd->parsed()) {
      log_derived_seeds(err, er.erasure.seed);
      Checkpoint ckpt = load_model(er.model, er.emb, err);
      EmbeddingTable emb = load_embeddings(er.emb, er.erasure.seed);
      ParsedCorpus data = er.data.load(&ckpt.tagset);
      RelevanceTable table = RelevanceTable::from_csv(slurp(er.table));
      auto cases = error_report(ckpt.model, data.sentences, ckpt.tagset, emb,
                                table, er.erasure.options());
      write_file(fs::path(er.out_dir) / "errors.csv",
                 error_report_csv(cases, ckpt.tagset));
      out << "found " << cases.size()
          << " mistagged entity tokens; wrote errors.csv under " << er.out_dir
          << "\n";
      return 0;
    }

    // heatmap
    if (hm_cmd->parsed()) {
      std::vector<LabeledTable> tables;
      for (const auto& arg : hm.tables) {
        auto [name, path] = labeled_path(arg);
        tables.push_back({name, RelevanceTable::from_csv(slurp(path))});
      }
      std::map<std::string, std::string> fix;
      std::istringstream fixes(hm.fix);
      std::string pair;
      while (std::getline(fixes, pair, ',')) {
        if (pair.empty()) continue;
        auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0)
          throw ConfigError("--fix expects axis=value pairs, got '" + pair +
                            "'");
        fix[pair.substr(0, eq)] = pair.substr(eq + 1);
      }
      HeatmapGrid grid;
      try {
        grid = build_heatmap(tables, fix, hm.rows, hm.cols);
      } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
      }
      write_file(fs::path(hm.out_dir) / "heatmap.csv", grid.csv());
      if (!hm.no_svg)
        write_file(fs::path(hm.out_dir) / "heatmap.svg", grid.svg());
      out << "built a " << grid.row_labels.size() << "x"
          << grid.col_labels.size() << " grid (" << hm.rows << " x " << hm.cols
          << "); wrote heatmap.csv" << (hm.no_svg ? "" : ", heatmap.svg")
          << " under " << hm.out_dir << "\n";
      return 0;
    }

    // gen-synthetic
    if (gs_cmd->parsed()) {
      log_derived_seeds(err, gs.seed);
      SyntheticSpec spec = SyntheticSpec::defaults();
      spec.sentences = gs.sentences;
      spec.distractor_fraction = gs.distractor_frac;
      spec.trigger_prob = gs.trigger_prob;
      ParsedCorpus corpus = gen_synthetic(spec, gs.seed);
      write_file(fs::path(gs.out_dir) / "synthetic.conll",
                 serialize_conll(corpus.sentences, corpus.tagset));
      std::ostringstream emb;
      write_synthetic_embeddings(corpus.sentences, gs.emb_dim, gs.seed, emb);
      write_file(fs::path(gs.out_dir) / "synthetic.emb", emb.str());
      out << "generated " << corpus.sentences.size()
          << " sentences; wrote synthetic.conll, synthetic.emb under "
          << gs.out_dir << "\n";
      return 0;
    }

    err << "error: no command executed\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tagscope
