#include "tagscope/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace tagscope {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(std::move(field));
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string normalize_token(std::string_view surface, bool fold_digits) {
  std::string out;
  out.reserve(surface.size());
  bool in_digits = false;
  for (unsigned char c : surface) {
    if (fold_digits && std::isdigit(c)) {
      if (!in_digits) out.push_back('0');
      in_digits = true;
    } else {
      in_digits = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

TagSet TagSet::from_names(const std::vector<std::string>& names,
                          TagScheme scheme) {
  TagSet ts;
  ts.scheme_ = scheme;

  auto add_tag = [&ts](const std::string& name) {
    if (ts.find(name) >= 0)
      throw std::runtime_error("duplicate tag name: " + name);
    TagKind kind;
    std::string etype;
    if (name == "O") {
      kind = TagKind::O;
    } else if (name.size() > 2 && (name[0] == 'B' || name[0] == 'I') &&
               name[1] == '-') {
      kind = name[0] == 'B' ? TagKind::B : TagKind::I;
      etype = name.substr(2);
    } else {
      throw std::runtime_error("tag '" + name +
                               "' is not of the form B-X, I-X, or O");
    }
    int id = static_cast<int>(ts.names_.size());
    ts.names_.push_back(name);
    ts.kinds_.push_back(kind);
    if (kind == TagKind::O) {
      if (ts.o_tag_ >= 0) throw std::runtime_error("more than one O tag");
      ts.o_tag_ = id;
      ts.etype_of_.push_back(-1);
      return;
    }
    int e = ts.find_entity_type(etype);
    if (e < 0) {
      e = static_cast<int>(ts.entity_types_.size());
      ts.entity_types_.push_back(etype);
      ts.begin_of_.push_back(-1);
      ts.inside_of_.push_back(-1);
    }
    ts.etype_of_.push_back(e);
    if (kind == TagKind::B)
      ts.begin_of_[e] = id;
    else
      ts.inside_of_[e] = id;
  };

  for (const auto& name : names) add_tag(name);
  if (ts.o_tag_ < 0) throw std::runtime_error("tag inventory has no O tag");

  if (scheme == TagScheme::BIO2) {
    // Complete the inventory so each type carries both positional tags.
    for (int e = 0; e < ts.num_entity_types(); ++e) {
      if (ts.begin_of_[e] < 0) add_tag("B-" + ts.entity_types_[e]);
      if (ts.inside_of_[e] < 0) add_tag("I-" + ts.entity_types_[e]);
    }
  }
  return ts;
}

int TagSet::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (names_[i] == name) return i;
  return -1;
}

int TagSet::find_entity_type(const std::string& name) const {
  for (int i = 0; i < num_entity_types(); ++i)
    if (entity_types_[i] == name) return i;
  return -1;
}

bool TagSet::operator==(const TagSet& other) const {
  return names_ == other.names_ && scheme_ == other.scheme_;
}

ParsedCorpus parse_conll(const std::string& text, int tag_column,
                         const TagSet* tagset_hint, TagScheme scheme,
                         bool fold_digits) {
  struct RawToken {
    std::string surface;
    std::string tag;
  };
  std::vector<std::vector<RawToken>> raw_sentences;
  std::vector<RawToken> current;
  std::vector<std::string> observed_tags;

  auto observe = [&observed_tags](const std::string& tag) {
    if (std::find(observed_tags.begin(), observed_tags.end(), tag) ==
        observed_tags.end())
      observed_tags.push_back(tag);
  };

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) {
      if (!current.empty()) raw_sentences.push_back(std::move(current));
      current.clear();
      continue;
    }
    auto cols = split_ws(line);
    int idx = tag_column < 0 ? static_cast<int>(cols.size()) + tag_column
                             : tag_column;
    if (idx < 0 || idx >= static_cast<int>(cols.size()))
      throw std::runtime_error("line " + std::to_string(line_no) + ": has " +
                               std::to_string(cols.size()) +
                               " columns, tag column " +
                               std::to_string(tag_column) + " out of range");
    observe(cols[idx]);
    current.push_back({cols[0], cols[idx]});
  }
  if (!current.empty()) raw_sentences.push_back(std::move(current));

  ParsedCorpus corpus;
  corpus.tagset = tagset_hint ? *tagset_hint
                              : TagSet::from_names(observed_tags, scheme);
  const TagSet& ts = corpus.tagset;

  for (size_t s = 0; s < raw_sentences.size(); ++s) {
    Sentence sent;
    sent.id = static_cast<int>(s);
    int prev_tag = -1;
    for (size_t i = 0; i < raw_sentences[s].size(); ++i) {
      const auto& rt = raw_sentences[s][i];
      int tag = ts.find(rt.tag);
      if (tag < 0)
        throw std::runtime_error("sentence " + std::to_string(s) +
                                 ": unknown tag '" + rt.tag + "'");
      if (scheme == TagScheme::BIO2 && ts.kind(tag) == TagKind::I) {
        bool continues = prev_tag >= 0 && ts.kind(prev_tag) != TagKind::O &&
                         ts.etype(prev_tag) == ts.etype(tag);
        if (!continues)
          throw std::runtime_error(
              "sentence " + std::to_string(s) + ", token " +
              std::to_string(i) + ": " + rt.tag +
              " does not continue a same-type phrase (scheme bio2)");
      }
      Token tok;
      tok.surface = rt.surface;
      tok.normalized = normalize_token(rt.surface, fold_digits);
      tok.gold_tag = tag;
      sent.tokens.push_back(std::move(tok));
      prev_tag = tag;
    }
    corpus.sentences.push_back(std::move(sent));
  }
  return corpus;
}

std::string serialize_conll(const std::vector<Sentence>& sentences,
                            const TagSet& tagset) {
  std::string out;
  for (size_t s = 0; s < sentences.size(); ++s) {
    if (s > 0) out.push_back('\n');
    for (const auto& tok : sentences[s].tokens) {
      out += tok.surface;
      out.push_back(' ');
      out += tagset.name(tok.gold_tag);
      out.push_back('\n');
    }
  }
  return out;
}

std::vector<EntitySpan> extract_spans(const Sentence& sentence,
                                      const TagSet& tagset) {
  std::vector<EntitySpan> spans;
  int open_start = -1;
  int open_type = -1;
  auto close = [&](int end) {
    if (open_start >= 0) spans.push_back({open_start, end, open_type});
    open_start = -1;
    open_type = -1;
  };
  for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i) {
    int tag = sentence.tokens[i].gold_tag;
    if (tag < 0 || tag >= tagset.size())
      throw std::runtime_error("extract_spans: unknown tag id " +
                               std::to_string(tag));
    TagKind kind = tagset.kind(tag);
    if (kind == TagKind::O) {
      close(i - 1);
      continue;
    }
    int e = tagset.etype(tag);
    if (kind == TagKind::B) {
      // Starts a phrase; under IOB1 this also splits adjacent same-type ones.
      close(i - 1);
      open_start = i;
      open_type = e;
    } else {
      if (open_start >= 0 && open_type == e) continue;  // extends
      close(i - 1);
      open_start = i;  // leading I-X starts a phrase
      open_type = e;
    }
  }
  close(static_cast<int>(sentence.tokens.size()) - 1);
  return spans;
}

std::vector<std::pair<int, int>> context_windows(
    const Sentence& sentence, const std::vector<EntitySpan>& spans,
    int halfwidth) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(sentence.tokens.size());
  auto inside_any = [&spans](int j) {
    for (const auto& s : spans)
      if (j >= s.start && j <= s.end) return true;
    return false;
  };
  // A maximal span list covers exactly the non-O tokens, so excluding span
  // members leaves the O-tagged context words.
  for (const auto& span : spans) {
    int lo = std::max(0, span.start - halfwidth);
    int hi = std::min(n - 1, span.end + halfwidth);
    for (int j = lo; j <= hi; ++j) {
      if (inside_any(j)) continue;
      out.emplace_back(j, span.etype);
    }
  }
  return out;
}

std::vector<int> tags_from_spans(int length,
                                 const std::vector<EntitySpan>& spans,
                                 const TagSet& tagset) {
  std::vector<int> tags(length, tagset.o_tag());
  for (const auto& span : spans) {
    int b = tagset.begin_tag(span.etype);
    int ins = tagset.inside_tag(span.etype);
    tags[span.start] = b >= 0 ? b : ins;
    for (int i = span.start + 1; i <= span.end; ++i)
      tags[i] = ins >= 0 ? ins : b;
  }
  return tags;
}

}  // namespace tagscope
