#include "tagscope/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <stdexcept>

#include "tagscope/csv.hpp"
#include "tagscope/format.hpp"
#include "tagscope/parallel.hpp"
#include "tagscope/rng.hpp"
#include "tagscope/trainer.hpp"

namespace tagscope {

namespace {

const std::vector<std::string> kAxes = {"word", "model", "entity", "method",
                                        "measure"};

bool valid_axis(const std::string& axis) {
  return std::find(kAxes.begin(), kAxes.end(), axis) != kAxes.end();
}

std::string table_measure_label(const RelevanceTable& t) {
  return t.method == Method::LRC ? measure_name(t.measure) : "-";
}

std::vector<Eigen::VectorXd> sentence_vectors(const Sentence& sentence,
                                              const EmbeddingTable& embeddings) {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) xs.push_back(embeddings.lookup(tok));
  return xs;
}

// Replacement vector for one erased token, honoring the erasure mode.
Eigen::VectorXd replacement_for(const ErasureOptions& options,
                                const Eigen::VectorXd& shared, Rng& word_rng,
                                const Eigen::VectorXd& original) {
  switch (options.mode) {
    case ReplacementMode::SelfTest: return original;
    case ReplacementMode::PerWord: {
      Eigen::VectorXd v(original.size());
      for (Eigen::Index j = 0; j < v.size(); ++j)
        v[j] = word_rng.uniform(-0.25, 0.25);
      return v;
    }
    case ReplacementMode::PerRun: break;
  }
  return shared;
}

// Short numeric form for SVG cell text.
std::string display_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

HeatmapGrid build_heatmap(const std::vector<LabeledTable>& tables,
                          const std::map<std::string, std::string>& fix,
                          const std::string& rows, const std::string& cols) {
  if (!valid_axis(rows) || !valid_axis(cols))
    throw std::runtime_error(
        "heatmap: axes must be one of word, model, entity, method, measure");
  if (rows == cols) throw std::runtime_error("heatmap: row axis equals column axis");
  for (const auto& [axis, value] : fix) {
    (void)value;
    if (!valid_axis(axis))
      throw std::runtime_error("heatmap: unknown fixed axis '" + axis + "'");
    if (axis == rows || axis == cols)
      throw std::runtime_error("heatmap: axis '" + axis +
                               "' is both fixed and a grid dimension");
  }
  if (tables.empty()) throw std::runtime_error("heatmap: no tables supplied");

  // Axis labels come from everything the tables contain, so a fixed value
  // absent from the data still yields a full (all-missing) grid.
  std::vector<std::string> model_labels;
  std::set<std::string> entity_labels, word_labels;
  std::set<std::string> methods_seen, measures_seen;
  for (const auto& lt : tables) {
    if (std::find(model_labels.begin(), model_labels.end(), lt.model) ==
        model_labels.end())
      model_labels.push_back(lt.model);
    methods_seen.insert(method_name(lt.table.method));
    measures_seen.insert(table_measure_label(lt.table));
    for (const auto& [etype, words] : lt.table.by_type) {
      entity_labels.insert(etype);
      for (const auto& [word, entry] : words) {
        (void)entry;
        word_labels.insert(word);
      }
    }
  }
  auto axis_labels = [&](const std::string& axis) -> std::vector<std::string> {
    if (axis == "model") return model_labels;
    if (axis == "entity")
      return {entity_labels.begin(), entity_labels.end()};
    if (axis == "word") return {word_labels.begin(), word_labels.end()};
    if (axis == "method") {
      std::vector<std::string> out;
      for (const char* m : {"wf", "wf_inv", "sll", "lrc"})
        if (methods_seen.count(m)) out.push_back(m);
      return out;
    }
    std::vector<std::string> out;
    for (const char* m : {"dot", "kl", "pcc", "-"})
      if (measures_seen.count(m)) out.push_back(m);
    return out;
  };

  HeatmapGrid grid;
  grid.row_axis = rows;
  grid.col_axis = cols;
  grid.row_labels = axis_labels(rows);
  grid.col_labels = axis_labels(cols);
  grid.fixed = fix;
  const int r = static_cast<int>(grid.row_labels.size());
  const int c = static_cast<int>(grid.col_labels.size());
  grid.values = Eigen::MatrixXd::Zero(r, c);
  grid.present.assign(r, std::vector<bool>(c, false));

  auto index_of = [](const std::vector<std::string>& labels,
                     const std::string& v) {
    auto it = std::find(labels.begin(), labels.end(), v);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
  };

  for (const auto& lt : tables) {
    for (const auto& [etype, words] : lt.table.by_type) {
      for (const auto& [word, entry] : words) {
        const std::map<std::string, std::string> coords = {
            {"word", word},
            {"model", lt.model},
            {"entity", etype},
            {"method", method_name(lt.table.method)},
            {"measure", table_measure_label(lt.table)}};
        bool matches = true;
        for (const auto& [axis, value] : fix)
          if (coords.at(axis) != value) {
            matches = false;
            break;
          }
        if (!matches) continue;
        const int ri = index_of(grid.row_labels, coords.at(rows));
        const int ci = index_of(grid.col_labels, coords.at(cols));
        if (ri < 0 || ci < 0) continue;
        if (grid.present[ri][ci] && grid.values(ri, ci) != entry.score)
          throw std::runtime_error(
              "heatmap: cell (" + grid.row_labels[ri] + ", " +
              grid.col_labels[ci] +
              ") matches several tables with different scores; fix more axes");
        grid.values(ri, ci) = entry.score;
        grid.present[ri][ci] = true;
      }
    }
  }
  return grid;
}

std::string HeatmapGrid::csv() const {
  std::vector<std::string> header{row_axis + "\\" + col_axis};
  header.insert(header.end(), col_labels.begin(), col_labels.end());
  std::string out = csv_row(header);
  for (size_t i = 0; i < row_labels.size(); ++i) {
    std::vector<std::string> row{row_labels[i]};
    for (size_t j = 0; j < col_labels.size(); ++j)
      row.push_back(present[i][j]
                        ? format_double(values(static_cast<Eigen::Index>(i),
                                               static_cast<Eigen::Index>(j)))
                        : "");
    out += csv_row(row);
  }
  return out;
}

HeatmapGrid heatmap_from_csv(const std::string& text) {
  auto rows = csv_parse(text);
  if (rows.empty()) throw std::runtime_error("heatmap CSV: empty file");
  HeatmapGrid grid;
  const std::string& corner = rows[0].at(0);
  auto sep = corner.find('\\');
  if (sep == std::string::npos)
    throw std::runtime_error("heatmap CSV: corner cell must be rows\\cols");
  grid.row_axis = corner.substr(0, sep);
  grid.col_axis = corner.substr(sep + 1);
  grid.col_labels.assign(rows[0].begin() + 1, rows[0].end());
  const int c = static_cast<int>(grid.col_labels.size());
  const int r = static_cast<int>(rows.size()) - 1;
  grid.values = Eigen::MatrixXd::Zero(r, c);
  grid.present.assign(r, std::vector<bool>(c, false));
  for (int i = 0; i < r; ++i) {
    const auto& row = rows[i + 1];
    if (static_cast<int>(row.size()) != c + 1)
      throw std::runtime_error("heatmap CSV: row " + std::to_string(i + 2) +
                               " has the wrong number of fields");
    grid.row_labels.push_back(row[0]);
    for (int j = 0; j < c; ++j) {
      if (row[j + 1].empty()) continue;
      grid.values(i, j) = parse_double_strict(row[j + 1]);
      grid.present[i][j] = true;
    }
  }
  return grid;
}

std::string HeatmapGrid::svg() const {
  static const char* kPalette[5] = {"#2166ac", "#92c5de", "#f7f7f7", "#f4a582",
                                    "#b2182b"};
  const int rows = static_cast<int>(row_labels.size());
  const int cols = static_cast<int>(col_labels.size());
  const int cell_w = 96, cell_h = 36, left = 150, top = 64;
  const int width = left + cols * cell_w + 16;
  const int height = top + rows * cell_h + 16;

  double lo = 0, hi = 0;
  bool any = false;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (present[i][j]) {
        const double v = values(i, j);
        if (!any || v < lo) lo = v;
        if (!any || v > hi) hi = v;
        any = true;
      }

  auto bucket = [&](double v) {
    if (hi == lo) return 2;
    int b = static_cast<int>((v - lo) / (hi - lo) * 5.0);
    return std::clamp(b, 0, 4);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  std::string title;
  for (const auto& [axis, value] : fixed) {
    if (!title.empty()) title += "  ";
    title += axis + "=" + value;
  }
  if (!title.empty())
    out += "<text x=\"8\" y=\"20\" font-size=\"14\">" + xml_escape(title) +
           "</text>\n";

  for (int j = 0; j < cols; ++j)
    out += "<text x=\"" + std::to_string(left + j * cell_w + cell_w / 2) +
           "\" y=\"" + std::to_string(top - 10) +
           "\" text-anchor=\"middle\">" + xml_escape(col_labels[j]) +
           "</text>\n";
  for (int i = 0; i < rows; ++i)
    out += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" +
           std::to_string(top + i * cell_h + cell_h / 2 + 4) +
           "\" text-anchor=\"end\">" + xml_escape(row_labels[i]) + "</text>\n";

  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int x = left + j * cell_w;
      const int y = top + i * cell_h;
      if (!present[i][j]) {
        out += "<rect x=\"" + std::to_string(x) + "\" y=\"" +
               std::to_string(y) + "\" width=\"" + std::to_string(cell_w) +
               "\" height=\"" + std::to_string(cell_h) +
               "\" fill=\"#d9d9d9\" stroke=\"white\"/>\n";
        continue;
      }
      const int b = bucket(values(i, j));
      out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(cell_w) + "\" height=\"" +
             std::to_string(cell_h) + "\" fill=\"" + kPalette[b] +
             "\" stroke=\"white\"/>\n";
      const char* text_color = (b == 0 || b == 4) ? "white" : "black";
      out += "<text x=\"" + std::to_string(x + cell_w / 2) + "\" y=\"" +
             std::to_string(y + cell_h / 2 + 4) +
             "\" text-anchor=\"middle\" fill=\"" + text_color + "\">" +
             display_value(values(i, j)) + "</text>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::string ProbeResult::csv() const {
  std::vector<std::string> header{"distance"};
  header.insert(header.end(), models.begin(), models.end());
  std::string out = csv_row(header);
  for (size_t d = 0; d < distances.size(); ++d) {
    std::vector<std::string> row{std::to_string(distances[d])};
    for (size_t m = 0; m < models.size(); ++m)
      row.push_back(format_double(scores(static_cast<Eigen::Index>(m),
                                         static_cast<Eigen::Index>(d))));
    out += csv_row(row);
  }
  return out;
}

ProbeResult positional_probe(
    const std::vector<std::pair<std::string, ModelParams>>& models,
    const TagSet& tagset, const EmbeddingTable& embeddings,
    const std::string& context_word, const std::string& entity_word,
    const std::string& entity_type, int max_distance, FillerPolicy filler,
    std::uint64_t seed, Measure measure, const std::string& terminator) {
  if (models.empty()) throw std::runtime_error("positional_probe: no models");
  if (max_distance < 1)
    throw std::runtime_error("positional_probe: max distance must be >= 1");
  const int e = tagset.find_entity_type(entity_type);
  if (e < 0)
    throw std::runtime_error("positional_probe: entity type '" + entity_type +
                             "' not in the tagset");
  // Some inventories carry no B- tag for a type; fall back to its I- tag.
  int entity_tag = tagset.begin_tag(e);
  if (entity_tag < 0) entity_tag = tagset.inside_tag(e);
  if (entity_tag < 0)
    throw std::runtime_error("positional_probe: entity type '" + entity_type +
                             "' has no usable tag");
  for (const auto& [name, model] : models)
    if (model.num_tags() != tagset.size())
      throw std::runtime_error("positional_probe: model '" + name +
                               "' does not match the tagset");

  const Eigen::VectorXd replacement = random_replacement(
      embeddings.dim(), mix_seed(seed, kSeedStreamReplacement));
  const Eigen::VectorXd context_vec =
      embeddings.row(embeddings.index_of(normalize_token(context_word)));
  const Eigen::VectorXd entity_vec =
      embeddings.row(embeddings.index_of(normalize_token(entity_word)));
  const Eigen::VectorXd terminator_vec =
      embeddings.row(embeddings.index_of(normalize_token(terminator)));

  constexpr int kFillerDraws = 10;

  ProbeResult result;
  result.context_word = normalize_token(context_word);
  result.entity_word = normalize_token(entity_word);
  result.entity_type = entity_type;
  for (const auto& [name, model] : models) {
    (void)model;
    result.models.push_back(name);
  }
  result.distances.resize(max_distance);
  result.scores =
      Eigen::MatrixXd::Zero(static_cast<int>(models.size()), max_distance);

  for (int n = 1; n <= max_distance; ++n) {
    result.distances[n - 1] = n;
    // [context, filler x (n-1), entity, terminator]
    std::vector<Eigen::VectorXd> base(n + 2, Eigen::VectorXd());
    base[0] = context_vec;
    base[n] = entity_vec;
    base[n + 1] = terminator_vec;

    const int draws = filler == FillerPolicy::FixedOov ? 1 : kFillerDraws;
    for (int d = 0; d < draws; ++d) {
      auto xs = base;
      if (filler == FillerPolicy::FixedOov) {
        for (int p = 1; p < n; ++p) xs[p] = embeddings.row(embeddings.oov_row());
      } else {
        Rng rng(mix_seed(mix_seed(mix_seed(seed, kSeedStreamFiller),
                                  static_cast<std::uint64_t>(n)),
                         static_cast<std::uint64_t>(d)));
        for (int p = 1; p < n; ++p)
          xs[p] = embeddings.row(rng.uniform_int(embeddings.vocab_size()));
      }
      for (size_t m = 0; m < models.size(); ++m)
        result.scores(static_cast<Eigen::Index>(m), n - 1) +=
            lrc_instance_score(models[m].second, xs, 0, n, entity_tag,
                               replacement, measure);
    }
    result.scores.col(n - 1) /= static_cast<double>(draws);
  }
  return result;
}

std::string SentenceProbeResult::csv() const {
  std::vector<std::string> header{"sentence_id"};
  header.insert(header.end(), models.begin(), models.end());
  header.push_back("instances");
  std::string out = csv_row(header);
  for (const auto& row : rows) {
    std::vector<std::string> fields{std::to_string(row.sentence_id)};
    for (double s : row.scores) fields.push_back(format_double(s));
    fields.push_back(std::to_string(row.instances));
    out += csv_row(fields);
  }
  return out;
}

SentenceProbeResult real_sentence_probe(
    const std::vector<std::pair<std::string, ModelParams>>& models,
    const std::vector<Sentence>& sentences, const TagSet& tagset,
    const EmbeddingTable& embeddings, const std::string& context_word,
    const std::string& entity_type, const ErasureOptions& options,
    Measure measure) {
  if (models.empty()) throw std::runtime_error("real_sentence_probe: no models");
  const int e = tagset.find_entity_type(entity_type);
  if (e < 0)
    throw std::runtime_error("real_sentence_probe: entity type '" +
                             entity_type + "' not in the tagset");
  const std::string word = normalize_token(context_word);
  const Eigen::VectorXd shared = random_replacement(
      embeddings.dim(), mix_seed(options.seed, kSeedStreamReplacement));

  const int n = static_cast<int>(sentences.size());
  // One slot per sentence; sentences without the word stay empty.
  std::vector<std::optional<SentenceProbeRow>> slots(n);

  parallel_for(n, options.threads, [&](int si) {
    const Sentence& sentence = sentences[si];
    std::vector<int> occurrences, entity_tokens;
    for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i) {
      const Token& tok = sentence.tokens[i];
      if (tok.gold_tag == tagset.o_tag() && tok.normalized == word)
        occurrences.push_back(i);
      else if (tagset.etype(tok.gold_tag) == e)
        entity_tokens.push_back(i);
    }
    if (occurrences.empty()) return;

    SentenceProbeRow row;
    row.sentence_id = sentence.id;
    row.scores.assign(models.size(), 0.0);
    row.instances = 0;
    if (!entity_tokens.empty()) {
      auto xs = sentence_vectors(sentence, embeddings);
      Rng word_rng(mix_seed(mix_seed(options.seed, kSeedStreamReplacement),
                            static_cast<std::uint64_t>(sentence.id)));
      std::vector<HiddenStates> intact;
      intact.reserve(models.size());
      for (const auto& [name, model] : models) {
        (void)name;
        intact.push_back(encode_bidirectional(model, xs));
      }
      for (int c : occurrences) {
        auto erased = xs;
        erased[c] = replacement_for(options, shared, word_rng, xs[c]);
        for (size_t m = 0; m < models.size(); ++m) {
          HiddenStates after = encode_bidirectional(models[m].second, erased);
          for (int t : entity_tokens)
            row.scores[m] += lrc_pair_score(models[m].second, intact[m], after,
                                            c, t, sentence.tokens[t].gold_tag,
                                            measure);
        }
      }
      row.instances =
          static_cast<int>(occurrences.size() * entity_tokens.size());
      for (double& s : row.scores) s /= static_cast<double>(row.instances);
    }
    slots[si] = std::move(row);
  });

  SentenceProbeResult result;
  result.context_word = word;
  result.entity_type = entity_type;
  for (const auto& [name, model] : models) {
    (void)model;
    result.models.push_back(name);
  }
  for (auto& slot : slots)
    if (slot) result.rows.push_back(std::move(*slot));
  return result;
}

std::string error_report_csv(const std::vector<ErrorCase>& cases,
                             const TagSet& tagset) {
  std::string out = csv_row({"sentence_id", "token_index", "token", "gold_tag",
                             "predicted_tag", "suspect", "gold_type_score",
                             "false_type", "false_type_score",
                             "sentence_score"});
  for (const auto& c : cases) {
    const std::string base_cols[] = {
        std::to_string(c.sentence_id), std::to_string(c.token_index), c.token,
        tagset.name(c.gold_tag), tagset.name(c.predicted_tag)};
    if (c.suspects.empty()) {
      out += csv_row({base_cols[0], base_cols[1], base_cols[2], base_cols[3],
                      base_cols[4], "", "", "", "", ""});
      continue;
    }
    for (const auto& s : c.suspects)
      out += csv_row({base_cols[0], base_cols[1], base_cols[2], base_cols[3],
                      base_cols[4], s.word, format_double(s.gold_score),
                      s.false_type, format_double(s.max_false_score),
                      format_double(s.sentence_score)});
  }
  return out;
}

std::vector<ErrorCase> error_report(const ModelParams& model,
                                    const std::vector<Sentence>& sentences,
                                    const TagSet& tagset,
                                    const EmbeddingTable& embeddings,
                                    const RelevanceTable& lrc_table,
                                    const ErasureOptions& options) {
  auto predictions =
      predict_tags(model, sentences, embeddings, options.threads);
  const Eigen::VectorXd shared = random_replacement(
      embeddings.dim(), mix_seed(options.seed, kSeedStreamReplacement));

  const int n = static_cast<int>(sentences.size());
  std::vector<std::vector<ErrorCase>> per_sentence(n);

  parallel_for(n, options.threads, [&](int si) {
    const Sentence& sentence = sentences[si];
    const auto& pred = predictions[si];

    std::vector<int> wrong_entities;
    for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i)
      if (tagset.etype(sentence.tokens[i].gold_tag) >= 0 &&
          pred[i] != sentence.tokens[i].gold_tag)
        wrong_entities.push_back(i);
    if (wrong_entities.empty()) return;

    std::map<std::string, std::vector<int>> context_words;
    for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i)
      if (sentence.tokens[i].gold_tag == tagset.o_tag())
        context_words[sentence.tokens[i].normalized].push_back(i);

    // One erased encoding per context token, shared across entity tokens.
    auto xs = sentence_vectors(sentence, embeddings);
    HiddenStates intact = encode_bidirectional(model, xs);
    std::map<int, HiddenStates> erased_states;
    Rng word_rng(mix_seed(mix_seed(options.seed, kSeedStreamReplacement),
                          static_cast<std::uint64_t>(sentence.id)));
    for (const auto& [word, positions] : context_words) {
      (void)word;
      for (int c : positions) {
        auto erased = xs;
        erased[c] = replacement_for(options, shared, word_rng, xs[c]);
        erased_states.emplace(c, encode_bidirectional(model, erased));
      }
    }

    for (int entity : wrong_entities) {
      ErrorCase ec;
      ec.sentence_id = sentence.id;
      ec.token_index = entity;
      ec.token = sentence.tokens[entity].surface;
      ec.gold_tag = sentence.tokens[entity].gold_tag;
      ec.predicted_tag = pred[entity];

      const std::string gold_type =
          tagset.entity_type(tagset.etype(ec.gold_tag));
      const int pred_etype = tagset.etype(ec.predicted_tag);
      const std::string pred_type =
          pred_etype >= 0 ? tagset.entity_type(pred_etype) : "";

      for (const auto& [word, positions] : context_words) {
        const auto* gold_entry = lrc_table.find(gold_type, word);
        const double gold_score = gold_entry ? gold_entry->score : 0.0;

        double max_false = 0.0;
        std::string false_type;
        for (const auto& [etype, words] : lrc_table.by_type) {
          if (etype == gold_type) continue;
          auto it = words.find(word);
          if (it == words.end()) continue;
          if (false_type.empty() || it->second.score > max_false) {
            max_false = it->second.score;
            false_type = etype;
          }
        }

        double sentence_score = 0;
        for (int c : positions)
          sentence_score +=
              lrc_pair_score(model, intact, erased_states.at(c), c, entity,
                             ec.gold_tag, Measure::DOT);
        sentence_score /= static_cast<double>(positions.size());

        const auto* pred_entry =
            pred_type.empty() ? nullptr : lrc_table.find(pred_type, word);
        const bool favors_wrong_type =
            pred_entry && pred_entry->score > gold_score;
        const bool hurts_in_sentence = sentence_score < 0;
        if (!favors_wrong_type && !hurts_in_sentence) continue;

        SuspectWord s;
        s.word = word;
        s.gold_score = gold_score;
        s.max_false_score = max_false;
        s.false_type = false_type;
        s.sentence_score = sentence_score;
        ec.suspects.push_back(std::move(s));
      }
      std::stable_sort(ec.suspects.begin(), ec.suspects.end(),
                       [](const SuspectWord& a, const SuspectWord& b) {
                         return a.max_false_score - a.gold_score >
                                b.max_false_score - b.gold_score;
                       });
      per_sentence[si].push_back(std::move(ec));
    }
  });

  std::vector<ErrorCase> cases;
  for (auto& batch : per_sentence)
    for (auto& ec : batch) cases.push_back(std::move(ec));
  return cases;
}

}  // namespace tagscope
