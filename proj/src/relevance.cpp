#include "tagscope/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tagscope/correlation.hpp"
#include "tagscope/crf.hpp"
#include "tagscope/csv.hpp"
#include "tagscope/format.hpp"
#include "tagscope/log.hpp"
#include "tagscope/parallel.hpp"
#include "tagscope/rng.hpp"

namespace tagscope {

namespace {

constexpr double kDenomEpsilon = 1e-8;

// Small denominators are clamped to +/- epsilon, keeping the sign
// (zero counts as positive) so ratios stay finite without flipping.
double guard_denominator(double x) {
  if (std::abs(x) >= kDenomEpsilon) return x;
  return x < 0 ? -kDenomEpsilon : kDenomEpsilon;
}

std::vector<Eigen::VectorXd> sentence_vectors(const Sentence& sentence,
                                              const EmbeddingTable& embeddings) {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) xs.push_back(embeddings.lookup(tok));
  return xs;
}

// Entity types (by name) with at least one token in the sentence.
std::set<std::string> entity_types_present(const Sentence& sentence,
                                           const TagSet& tagset) {
  std::set<std::string> present;
  for (const auto& tok : sentence.tokens) {
    int e = tagset.etype(tok.gold_tag);
    if (e >= 0) present.insert(tagset.entity_type(e));
  }
  return present;
}

struct Contribution {
  std::string etype;
  std::string word;
  double score = 0;
};

// Merge per-sentence contributions in sentence order and average.
RelevanceTable reduce_contributions(
    Method method, Measure measure, std::uint64_t seed,
    const std::vector<std::vector<Contribution>>& per_sentence) {
  std::map<std::string, std::map<std::string, std::pair<double, long>>> acc;
  for (const auto& batch : per_sentence)
    for (const auto& c : batch) {
      auto& cell = acc[c.etype][c.word];
      cell.first += c.score;
      cell.second += 1;
    }
  RelevanceTable table;
  table.method = method;
  table.measure = measure;
  table.seed = seed;
  for (const auto& [etype, words] : acc)
    for (const auto& [word, cell] : words)
      table.by_type[etype][word] =
          RelevanceEntry{cell.first / static_cast<double>(cell.second),
                         cell.second};
  return table;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::WF: return "wf";
    case Method::WF_INV: return "wf_inv";
    case Method::SLL: return "sll";
    case Method::LRC: return "lrc";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "wf") return Method::WF;
  if (name == "wf_inv") return Method::WF_INV;
  if (name == "sll") return Method::SLL;
  if (name == "lrc") return Method::LRC;
  throw std::runtime_error("unknown method '" + name +
                           "' (expected wf, wf_inv, sll, or lrc)");
}

std::string measure_name(Measure m) {
  switch (m) {
    case Measure::DOT: return "dot";
    case Measure::KL: return "kl";
    case Measure::PCC: return "pcc";
  }
  return "?";
}

Measure measure_from_name(const std::string& name) {
  if (name == "dot") return Measure::DOT;
  if (name == "kl") return Measure::KL;
  if (name == "pcc") return Measure::PCC;
  throw std::runtime_error("unknown measure '" + name +
                           "' (expected dot, kl, or pcc)");
}

const RelevanceEntry* RelevanceTable::find(const std::string& etype,
                                           const std::string& word) const {
  auto it = by_type.find(etype);
  if (it == by_type.end()) return nullptr;
  auto jt = it->second.find(word);
  if (jt == it->second.end()) return nullptr;
  return &jt->second;
}

std::vector<std::pair<std::string, RelevanceEntry>> RelevanceTable::ranked(
    const std::string& etype) const {
  std::vector<std::pair<std::string, RelevanceEntry>> rows;
  auto it = by_type.find(etype);
  if (it == by_type.end()) return rows;
  rows.assign(it->second.begin(), it->second.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.score != b.second.score) return a.second.score > b.second.score;
    return a.first < b.first;
  });
  return rows;
}

int RelevanceTable::rank_of(const std::string& etype,
                            const std::string& word) const {
  auto rows = ranked(etype);
  for (size_t i = 0; i < rows.size(); ++i)
    if (rows[i].first == word) return static_cast<int>(i) + 1;
  return 0;
}

std::string RelevanceTable::csv() const {
  std::string out = "method,measure,word,entity_type,score,support\n";
  const std::string m = method_name(method);
  const std::string mm = method == Method::LRC ? measure_name(measure) : "-";
  for (const auto& [etype, words] : by_type) {
    (void)words;
    for (const auto& [word, entry] : ranked(etype))
      out += csv_row({m, mm, word, etype, format_double(entry.score),
                      std::to_string(entry.support)});
  }
  return out;
}

RelevanceTable RelevanceTable::from_csv(const std::string& text) {
  auto rows = csv_parse(text);
  if (rows.empty() || rows[0] !=
                          std::vector<std::string>{"method", "measure", "word",
                                                   "entity_type", "score",
                                                   "support"})
    throw std::runtime_error("relevance table: bad or missing CSV header");
  RelevanceTable table;
  bool first = true;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 6)
      throw std::runtime_error("relevance table row " + std::to_string(i + 1) +
                               ": expected 6 fields, got " +
                               std::to_string(r.size()));
    Method m = method_from_name(r[0]);
    Measure mm = r[1] == "-" ? Measure::DOT : measure_from_name(r[1]);
    if (first) {
      table.method = m;
      table.measure = mm;
      first = false;
    } else if (m != table.method || (m == Method::LRC && mm != table.measure)) {
      throw std::runtime_error("relevance table row " + std::to_string(i + 1) +
                               ": mixed methods in one table");
    }
    RelevanceEntry entry;
    entry.score = parse_double_strict(r[4]);
    entry.support = parse_long_strict(r[5]);
    table.by_type[r[3]][r[2]] = entry;
  }
  return table;
}

long CountTable::total(const std::string& etype) const {
  auto it = counts.find(etype);
  if (it == counts.end()) return 0;
  long t = 0;
  for (const auto& [word, c] : it->second) t += c;
  return t;
}

long CountTable::word_total(const std::string& word) const {
  long t = 0;
  for (const auto& [etype, words] : counts) {
    auto it = words.find(word);
    if (it != words.end()) t += it->second;
  }
  return t;
}

long CountTable::grand_total() const {
  long t = 0;
  for (const auto& [etype, words] : counts)
    for (const auto& [word, c] : words) t += c;
  return t;
}

CountTable build_window_counts(const std::vector<Sentence>& sentences,
                               const TagSet& tagset, int halfwidth) {
  CountTable table;
  for (const auto& sentence : sentences) {
    auto spans = extract_spans(sentence, tagset);
    for (const auto& [token, etype] : context_windows(sentence, spans, halfwidth))
      table.counts[tagset.entity_type(etype)]
                  [sentence.tokens[token].normalized] += 1;
  }
  return table;
}

RelevanceTable score_wf(const std::vector<Sentence>& sentences,
                        const TagSet& tagset, int halfwidth, bool inverse,
                        long k) {
  if (sentences.empty()) throw std::runtime_error("score_wf: empty dataset");
  CountTable counts = build_window_counts(sentences, tagset, halfwidth);

  // Entity types that occur in the data but have no context words at all
  // (e.g. entities always filling whole sentences) have undefined scores.
  std::set<std::string> seen_types;
  for (const auto& sentence : sentences)
    for (const auto& type : entity_types_present(sentence, tagset))
      seen_types.insert(type);
  for (const auto& type : seen_types)
    if (counts.total(type) == 0)
      log_warn("frequency scores undefined for entity type '" + type +
               "': no context words in any window");

  const double grand = static_cast<double>(counts.grand_total());
  RelevanceTable table;
  table.method = inverse ? Method::WF_INV : Method::WF;
  for (const auto& [etype, words] : counts.counts) {
    const double type_total = static_cast<double>(counts.total(etype));
    if (type_total == 0) continue;
    for (const auto& [word, count] : words) {
      double score = static_cast<double>(count) / type_total;
      if (inverse)
        score *= grand /
                 static_cast<double>(counts.word_total(word) + k);
      table.by_type[etype][word] = RelevanceEntry{score, count};
    }
  }
  return table;
}

RelevanceTable score_sll(const ModelParams& model,
                         const std::vector<Sentence>& sentences,
                         const TagSet& tagset, const EmbeddingTable& embeddings,
                         const ErasureOptions& options) {
  const Eigen::VectorXd shared = random_replacement(
      embeddings.dim(), mix_seed(options.seed, kSeedStreamReplacement));

  const int n = static_cast<int>(sentences.size());
  std::vector<std::vector<Contribution>> per_sentence(n);

  parallel_for(n, options.threads, [&](int si) {
    const Sentence& sentence = sentences[si];
    if (sentence.tokens.empty()) return;
    auto xs = sentence_vectors(sentence, embeddings);
    std::vector<int> gold;
    gold.reserve(xs.size());
    for (const auto& tok : sentence.tokens) gold.push_back(tok.gold_tag);

    auto present = entity_types_present(sentence, tagset);
    if (present.empty()) return;

    // Context words: distinct normalized forms among O-tagged tokens.
    std::map<std::string, std::vector<int>> occurrences;
    for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i)
      if (sentence.tokens[i].gold_tag == tagset.o_tag())
        occurrences[sentence.tokens[i].normalized].push_back(i);
    if (occurrences.empty()) return;

    const double l1 = model_sentence_nll(model, xs, gold);
    if (l1 == 0) {
      log_warn("sentence " + std::to_string(sentence.id) +
               ": gold path has likelihood 1, skipping erasure scores");
      return;
    }

    Rng word_rng(mix_seed(mix_seed(options.seed, kSeedStreamReplacement),
                          static_cast<std::uint64_t>(sentence.id)));
    for (const auto& [word, positions] : occurrences) {
      Eigen::VectorXd repl;
      if (options.mode == ReplacementMode::PerWord) {
        repl.resize(embeddings.dim());
        for (Eigen::Index j = 0; j < repl.size(); ++j)
          repl[j] = word_rng.uniform(-0.25, 0.25);
      } else if (options.mode == ReplacementMode::PerRun) {
        repl = shared;
      }
      auto erased = xs;
      for (int pos : positions) {
        // Every occurrence of the word form is erased, so repeats do not
        // leave a copy of the signal in place.
        bool own = options.mode == ReplacementMode::SelfTest;
        erased[pos] = own ? xs[pos] : repl;
        if (options.single_occurrence) break;
      }
      const double l2 = model_sentence_nll(model, erased, gold);
      const double score = (l2 - l1) / l1;
      for (const auto& etype : present)
        per_sentence[si].push_back({etype, word, score});
    }
  });

  return reduce_contributions(Method::SLL, Measure::DOT, options.seed,
                              per_sentence);
}

double side_similarity(const ModelParams& model, const HiddenStates& states,
                       int token, int tag, Side side, Measure measure) {
  switch (measure) {
    case Measure::DOT:
      return side_score(model, states, token, tag, side);
    case Measure::KL:
      return -kl_divergence(
          normalize_distribution(side_weights(model, tag, side)),
          normalize_distribution(side_hidden(states, token, side)));
    case Measure::PCC:
      return pearson(side_weights(model, tag, side),
                     side_hidden(states, token, side));
  }
  throw std::runtime_error("side_similarity: bad measure");
}

namespace {

double false_tag_mean(const ModelParams& model, const HiddenStates& states,
                      int entity_index, int true_tag, Side side,
                      Measure measure) {
  const int t_count = model.num_tags();
  if (t_count < 2)
    throw std::runtime_error(
        "relevance: need at least two tags to form a false-tag mean");
  double sum = 0;
  for (int t = 0; t < t_count; ++t)
    if (t != true_tag)
      sum += side_similarity(model, states, entity_index, t, side, measure);
  return sum / static_cast<double>(t_count - 1);
}

}  // namespace

double avg_sum(const ModelParams& model, const HiddenStates& states,
               int context_index, int entity_index, int true_tag,
               Measure measure) {
  if (context_index == entity_index)
    throw std::runtime_error("avg_sum: context and entity token coincide");
  const Side side = lrc_side(context_index, entity_index);
  return false_tag_mean(model, states, entity_index, true_tag, side, measure);
}

double lrc_margin(const ModelParams& model, const HiddenStates& states,
                  int entity_index, int true_tag, Side side, Measure measure) {
  const double avg =
      false_tag_mean(model, states, entity_index, true_tag, side, measure);
  const double own =
      side_similarity(model, states, entity_index, true_tag, side, measure);
  return (own - avg) / guard_denominator(avg);
}

double lrc_pair_score(const ModelParams& model, const HiddenStates& intact,
                      const HiddenStates& erased, int context_index,
                      int entity_index, int true_tag, Measure measure) {
  if (context_index == entity_index)
    throw std::runtime_error(
        "lrc_pair_score: context and entity token coincide");
  const Side side = lrc_side(context_index, entity_index);
  const double l1 =
      lrc_margin(model, intact, entity_index, true_tag, side, measure);
  const double l2 =
      lrc_margin(model, erased, entity_index, true_tag, side, measure);
  return (l1 - l2) / guard_denominator(l2);
}

double lrc_instance_score(const ModelParams& model,
                          const std::vector<Eigen::VectorXd>& xs,
                          int context_index, int entity_index, int true_tag,
                          const Eigen::VectorXd& replacement, Measure measure) {
  HiddenStates intact = encode_bidirectional(model, xs);
  auto erased = xs;
  erased[context_index] = replacement;
  HiddenStates after = encode_bidirectional(model, erased);
  return lrc_pair_score(model, intact, after, context_index, entity_index,
                        true_tag, measure);
}

RelevanceTable score_lrc(const ModelParams& model,
                         const std::vector<Sentence>& sentences,
                         const TagSet& tagset, const EmbeddingTable& embeddings,
                         Measure measure, const ErasureOptions& options) {
  const Eigen::VectorXd shared = random_replacement(
      embeddings.dim(), mix_seed(options.seed, kSeedStreamReplacement));

  const int n = static_cast<int>(sentences.size());
  std::vector<std::vector<Contribution>> per_sentence(n);

  parallel_for(n, options.threads, [&](int si) {
    const Sentence& sentence = sentences[si];
    const int len = static_cast<int>(sentence.tokens.size());
    if (len == 0) return;

    std::vector<int> context_tokens, entity_tokens;
    for (int i = 0; i < len; ++i) {
      if (sentence.tokens[i].gold_tag == tagset.o_tag())
        context_tokens.push_back(i);
      else
        entity_tokens.push_back(i);
    }
    if (context_tokens.empty() || entity_tokens.empty()) return;

    auto xs = sentence_vectors(sentence, embeddings);
    HiddenStates intact = encode_bidirectional(model, xs);

    Rng word_rng(mix_seed(mix_seed(options.seed, kSeedStreamReplacement),
                          static_cast<std::uint64_t>(sentence.id)));
    for (int c : context_tokens) {
      Eigen::VectorXd repl;
      if (options.mode == ReplacementMode::SelfTest) {
        repl = xs[c];
      } else if (options.mode == ReplacementMode::PerWord) {
        repl.resize(embeddings.dim());
        for (Eigen::Index j = 0; j < repl.size(); ++j)
          repl[j] = word_rng.uniform(-0.25, 0.25);
      } else {
        repl = shared;
      }
      auto erased = xs;
      erased[c] = repl;
      HiddenStates after = encode_bidirectional(model, erased);

      for (int e : entity_tokens) {
        const int tag = sentence.tokens[e].gold_tag;
        const double score =
            lrc_pair_score(model, intact, after, c, e, tag, measure);
        per_sentence[si].push_back(
            {tagset.entity_type(tagset.etype(tag)),
             sentence.tokens[c].normalized, score});
      }
    }
  });

  return reduce_contributions(Method::LRC, measure, options.seed, per_sentence);
}

std::string SentenceReport::csv() const {
  std::vector<std::string> header{"word"};
  for (const auto& e : etypes) {
    header.push_back("score_" + e);
    header.push_back("support_" + e);
  }
  std::string out = csv_row(header);
  for (size_t i = 0; i < words.size(); ++i) {
    std::vector<std::string> row{words[i]};
    for (size_t j = 0; j < etypes.size(); ++j) {
      row.push_back(format_double(scores(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(j))));
      row.push_back(std::to_string(support(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(j))));
    }
    out += csv_row(row);
  }
  return out;
}

SentenceReport sentence_report(const ModelParams& model,
                               const Sentence& sentence, const TagSet& tagset,
                               const EmbeddingTable& embeddings, Method method,
                               Measure measure, const ErasureOptions& options) {
  if (method != Method::SLL && method != Method::LRC)
    throw std::runtime_error(
        "sentence_report: only the erasure methods work per sentence");

  SentenceReport report;
  report.method = method;
  report.measure = measure;

  // Distinct context words in sentence order.
  std::set<std::string> seen;
  for (const auto& tok : sentence.tokens)
    if (tok.gold_tag == tagset.o_tag() && seen.insert(tok.normalized).second)
      report.words.push_back(tok.normalized);

  ErasureOptions local = options;
  local.threads = 1;
  std::vector<Sentence> one{sentence};

  if (method == Method::SLL) {
    auto present = entity_types_present(sentence, tagset);
    report.etypes.assign(present.begin(), present.end());
    RelevanceTable table =
        score_sll(model, one, tagset, embeddings, local);
    report.scores = Eigen::MatrixXd::Zero(report.words.size(),
                                          report.etypes.size());
    report.support = Eigen::MatrixXi::Zero(report.words.size(),
                                           report.etypes.size());
    for (size_t i = 0; i < report.words.size(); ++i)
      for (size_t j = 0; j < report.etypes.size(); ++j)
        if (const auto* entry = table.find(report.etypes[j], report.words[i])) {
          report.scores(i, j) = entry->score;
          report.support(i, j) = static_cast<int>(entry->support);
        }
    return report;
  }

  // LRC keeps a column for every entity type the tagset knows; types absent
  // from the sentence stay at zero support rather than disappearing.
  report.etypes = tagset.entity_types();
  RelevanceTable table =
      score_lrc(model, one, tagset, embeddings, measure, local);
  report.scores =
      Eigen::MatrixXd::Zero(report.words.size(), report.etypes.size());
  report.support =
      Eigen::MatrixXi::Zero(report.words.size(), report.etypes.size());
  for (size_t i = 0; i < report.words.size(); ++i)
    for (size_t j = 0; j < report.etypes.size(); ++j)
      if (const auto* entry = table.find(report.etypes[j], report.words[i])) {
        report.scores(i, j) = entry->score;
        report.support(i, j) = static_cast<int>(entry->support);
      }
  return report;
}

}  // namespace tagscope
