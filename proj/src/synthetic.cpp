#include "tagscope/synthetic.hpp"

#include <set>
#include <stdexcept>

#include "tagscope/format.hpp"
#include "tagscope/rng.hpp"

namespace tagscope {

SyntheticSpec SyntheticSpec::defaults() {
  SyntheticSpec spec;
  spec.classes = {
      {"PER",
       "ttl",
       {"anna", "boris", "clara", "dmitri", "elena", "farid", "greta",
        "henrik"}},
      {"LOC",
       "ltr",
       {"astana", "bergen", "cadiz", "dresden", "eldoret", "fargo", "goa",
        "hobart"}},
  };
  spec.fillers = {"the",    "a",      "of",    "to",     "and",   "was",
                  "is",     "for",    "on",    "with",   "at",    "by",
                  "from",   "had",    "near",  "after",  "before", "over",
                  "under",  "about",  "into",  "during", "said",  "went",
                  "came",   "stood",  "old",   "new",    "early", "late",
                  "quiet",  "narrow", "grey",  "slow",   "broad", "kind"};
  return spec;
}

namespace {

void validate(const SyntheticSpec& spec) {
  if (spec.sentences < 1)
    throw std::runtime_error("gen_synthetic: need at least one sentence");
  if (spec.classes.empty())
    throw std::runtime_error("gen_synthetic: no entity classes");
  if (spec.fillers.empty())
    throw std::runtime_error("gen_synthetic: empty filler vocabulary");
  for (const auto& cls : spec.classes) {
    if (cls.type.empty() || cls.trigger.empty())
      throw std::runtime_error("gen_synthetic: entity class needs a type and "
                               "a trigger word");
    if (cls.names.empty())
      throw std::runtime_error("gen_synthetic: entity class '" + cls.type +
                               "' has an empty name vocabulary");
  }
  if (spec.trigger_prob < 0 || spec.trigger_prob > 1 ||
      spec.distractor_fraction < 0 || spec.distractor_fraction > 1 ||
      spec.name_as_filler_prob < 0 || spec.name_as_filler_prob > 1)
    throw std::runtime_error("gen_synthetic: probabilities must be in [0,1]");
  if (spec.min_pre < 0 || spec.max_pre < spec.min_pre || spec.min_post < 0 ||
      spec.max_post < spec.min_post)
    throw std::runtime_error("gen_synthetic: bad filler run bounds");
}

Token make_token(const std::string& surface, int tag) {
  Token tok;
  tok.surface = surface;
  tok.normalized = normalize_token(surface);
  tok.gold_tag = tag;
  return tok;
}

}  // namespace

ParsedCorpus gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);

  std::vector<std::string> tag_names{"O"};
  for (const auto& cls : spec.classes) tag_names.push_back("B-" + cls.type);
  TagSet tagset = TagSet::from_names(tag_names, TagScheme::BIO2);
  const int o_tag = tagset.o_tag();

  // All entity names, for sprinkling into ordinary positions.
  std::vector<std::string> all_names;
  for (const auto& cls : spec.classes)
    all_names.insert(all_names.end(), cls.names.begin(), cls.names.end());

  Rng rng(mix_seed(seed, kSeedStreamSynthetic));
  auto plain_word = [&]() -> std::string {
    if (rng.uniform() < spec.name_as_filler_prob)
      return all_names[rng.uniform_int(static_cast<int>(all_names.size()))];
    return spec.fillers[rng.uniform_int(static_cast<int>(spec.fillers.size()))];
  };
  auto run_length = [&rng](int lo, int hi) {
    return lo + rng.uniform_int(hi - lo + 1);
  };

  ParsedCorpus corpus;
  corpus.tagset = tagset;
  for (int i = 0; i < spec.sentences; ++i) {
    Sentence sentence;
    sentence.id = i;
    if (rng.uniform() < spec.distractor_fraction) {
      const int len = run_length(5, 10);
      for (int j = 0; j < len; ++j)
        sentence.tokens.push_back(make_token(plain_word(), o_tag));
    } else {
      const auto& cls =
          spec.classes[rng.uniform_int(static_cast<int>(spec.classes.size()))];
      const int pre = run_length(spec.min_pre, spec.max_pre);
      for (int j = 0; j < pre; ++j)
        sentence.tokens.push_back(make_token(plain_word(), o_tag));
      if (rng.uniform() < spec.trigger_prob)
        sentence.tokens.push_back(make_token(cls.trigger, o_tag));
      else
        sentence.tokens.push_back(make_token(plain_word(), o_tag));
      const std::string& name =
          cls.names[rng.uniform_int(static_cast<int>(cls.names.size()))];
      sentence.tokens.push_back(
          make_token(name, tagset.find("B-" + cls.type)));
      const int post = run_length(spec.min_post, spec.max_post);
      for (int j = 0; j < post; ++j)
        sentence.tokens.push_back(make_token(plain_word(), o_tag));
    }
    sentence.tokens.push_back(make_token(".", o_tag));
    corpus.sentences.push_back(std::move(sentence));
  }
  return corpus;
}

void write_synthetic_embeddings(const std::vector<Sentence>& sentences,
                                int dim, std::uint64_t seed,
                                std::ostream& out) {
  if (dim < 1)
    throw std::runtime_error("synthetic embeddings: dimension must be >= 1");
  std::set<std::string> vocab;
  for (const auto& sentence : sentences)
    for (const auto& tok : sentence.tokens) vocab.insert(tok.normalized);
  if (vocab.empty())
    throw std::runtime_error("synthetic embeddings: no tokens");

  out << vocab.size() << ' ' << dim << '\n';
  Rng rng(mix_seed(seed, kSeedStreamSyntheticEmb));
  for (const auto& word : vocab) {
    out << word;
    for (int j = 0; j < dim; ++j)
      out << ' ' << format_double(rng.uniform(-0.25, 0.25));
    out << '\n';
  }
}

}  // namespace tagscope
