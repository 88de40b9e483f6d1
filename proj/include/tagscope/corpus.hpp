#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tagscope {

enum class TagScheme { IOB1, BIO2 };

enum class TagKind { B, I, O };

struct Token {
  std::string surface;
  std::string normalized;
  int vocab_index = -1;  // row of the embedding table; -1 until resolved
  int gold_tag = -1;
};

struct Sentence {
  int id = 0;
  std::vector<Token> tokens;
};

// Tag inventory with BIO structure. Tag ids index the emission rows of a
// model, so the order is part of a trained model's identity.
class TagSet {
 public:
  TagSet() = default;

  // Builds from explicit tag names ("B-PER", "I-PER", ..., "O").
  // For BIO2 the inventory is completed so every entity type has both its
  // B- and I- tag.
  static TagSet from_names(const std::vector<std::string>& names,
                           TagScheme scheme);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int tag) const { return names_[tag]; }
  const std::vector<std::string>& names() const { return names_; }
  TagKind kind(int tag) const { return kinds_[tag]; }
  // Entity-type index for non-O tags, -1 for O.
  int etype(int tag) const { return etype_of_[tag]; }
  int o_tag() const { return o_tag_; }
  TagScheme scheme() const { return scheme_; }

  int num_entity_types() const { return static_cast<int>(entity_types_.size()); }
  const std::string& entity_type(int e) const { return entity_types_[e]; }
  const std::vector<std::string>& entity_types() const { return entity_types_; }
  int find_entity_type(const std::string& name) const;

  // -1 when the name is not in the inventory.
  int find(const std::string& name) const;
  // -1 when the type has no such tag (possible for IOB1 inventories).
  int begin_tag(int etype) const { return begin_of_[etype]; }
  int inside_tag(int etype) const { return inside_of_[etype]; }

  bool operator==(const TagSet& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<TagKind> kinds_;
  std::vector<int> etype_of_;
  std::vector<std::string> entity_types_;
  std::vector<int> begin_of_;
  std::vector<int> inside_of_;
  int o_tag_ = -1;
  TagScheme scheme_ = TagScheme::BIO2;
};

struct EntitySpan {
  int start = 0;  // token index
  int end = 0;    // inclusive
  int etype = 0;

  bool operator==(const EntitySpan&) const = default;
};

struct ParsedCorpus {
  std::vector<Sentence> sentences;
  TagSet tagset;
};

// Lowercases ASCII letters and folds each maximal digit run to a single "0".
// Idempotent. Folding can be disabled for corpora that keep digits.
std::string normalize_token(std::string_view surface, bool fold_digits = true);

// CoNLL column format: one token per line, whitespace-separated columns,
// blank line between sentences. tag_column < 0 counts from the end
// (-1 = last). Tag inventory is inferred from the observed tags unless a
// hint is given. Tag sequences are validated against the scheme.
ParsedCorpus parse_conll(const std::string& text, int tag_column = -1,
                         const TagSet* tagset_hint = nullptr,
                         TagScheme scheme = TagScheme::BIO2,
                         bool fold_digits = true);

// Two-column "surface tag" form; parse_conll(serialize_conll(c)) preserves
// token and tag content.
std::string serialize_conll(const std::vector<Sentence>& sentences,
                            const TagSet& tagset);

// Maximal entity phrases under the tagset's scheme. IOB1 treats a leading
// I-X as a span start; B-X splits adjacent same-type spans.
std::vector<EntitySpan> extract_spans(const Sentence& sentence,
                                      const TagSet& tagset);

// (token index, entity type) pairs: every O-tagged token within `halfwidth`
// positions of a span boundary, one pair per (token, span).
std::vector<std::pair<int, int>> context_windows(
    const Sentence& sentence, const std::vector<EntitySpan>& spans,
    int halfwidth);

// Rebuilds a tag sequence from spans (BIO2 conventions); used to check span
// extraction round-trips.
std::vector<int> tags_from_spans(int length,
                                 const std::vector<EntitySpan>& spans,
                                 const TagSet& tagset);

}  // namespace tagscope
