#pragma once

// Seeded synthetic corpora with gold trees and gold frames. Roles are a
// deterministic function of the generated dependency structure: the agent
// noun phrase is always the subj dependent of the verb and receives A0, the
// patient is the obj dependent and receives A1. A subset of verbs places the
// agent after the verb, so surface position alone does not determine roles;
// the verb's syntactic pattern does.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/error.hpp"

namespace srlkit {

struct SyntheticConfig {
  unsigned long seed = 1;
  int srl_train = 50;
  int srl_dev = 20;
  int dep_train = 100;
  int dep_dev = 20;
  bool word_mode = false;  // arguments reduced to their head token
};

struct SyntheticCorpus {
  std::vector<AnnotatedSentence> srl_train, srl_dev, dep_train, dep_dev;
};

namespace detail {

inline const std::vector<std::string>& syn_nouns() {
  static const std::vector<std::string> v{
      "farmer", "teacher", "pilot",  "nurse",  "singer", "miner",
      "tiger",  "rabbit",  "pigeon", "lizard", "report", "ladder",
      "bottle", "engine",  "garden", "bridge", "camera", "ticket",
      "window", "basket",  "hammer", "wallet", "anchor", "candle"};
  return v;
}

// First six verbs are "inverse": their agent follows the verb.
inline const std::vector<std::string>& syn_verbs() {
  static const std::vector<std::string> v{
      "pleases", "worries", "annoys",  "delights", "scares",  "amuses",
      "lifts",   "paints",  "carries", "watches",  "repairs", "throws",
      "cleans",  "guards",  "borrows", "measures"};
  return v;
}
inline bool syn_verb_inverse(int verb_index) { return verb_index < 6; }

inline const std::vector<std::string>& syn_adjectives() {
  static const std::vector<std::string> v{"old", "red", "tall", "busy", "quiet", "heavy"};
  return v;
}
inline const std::vector<std::string>& syn_tmp_words() {
  static const std::vector<std::string> v{"yesterday", "today",  "tomorrow", "earlier",
                                          "recently",  "tonight", "nowadays", "soon"};
  return v;
}
inline const std::vector<std::string>& syn_loc_words() {
  static const std::vector<std::string> v{"here",    "there",    "upstairs", "outside",
                                          "nearby",  "downtown", "indoors",  "abroad"};
  return v;
}

struct NounPhrase {
  std::vector<std::string> words;  // [adj]? noun
  int head_offset;                 // offset of the noun within words
};

inline NounPhrase sample_np(std::mt19937_64& rng) {
  NounPhrase np;
  if (rng() % 3 == 0) {
    np.words.push_back(syn_adjectives()[rng() % syn_adjectives().size()]);
  }
  np.words.push_back(syn_nouns()[rng() % syn_nouns().size()]);
  np.head_offset = static_cast<int>(np.words.size()) - 1;
  return np;
}

}  // namespace detail

// One sentence: [tmp]? NP1 verb NP2 [loc]?, with the gold tree and frame.
inline AnnotatedSentence gen_synthetic_sentence(std::mt19937_64& rng, bool word_mode) {
  bool has_tmp = rng() % 3 == 0;
  bool has_loc = rng() % 3 == 0;
  int verb_index = static_cast<int>(rng() % detail::syn_verbs().size());
  detail::NounPhrase np1 = detail::sample_np(rng);
  detail::NounPhrase np2 = detail::sample_np(rng);

  AnnotatedSentence s;
  int tmp_pos = 0, loc_pos = 0;
  if (has_tmp) {
    s.tokens.push_back(detail::syn_tmp_words()[rng() % detail::syn_tmp_words().size()]);
    tmp_pos = s.size();
  }
  int np1_start = s.size() + 1;
  for (const auto& w : np1.words) s.tokens.push_back(w);
  int np1_head = np1_start + np1.head_offset;
  int np1_end = s.size();
  s.tokens.push_back(detail::syn_verbs()[verb_index]);
  int verb_pos = s.size();
  int np2_start = s.size() + 1;
  for (const auto& w : np2.words) s.tokens.push_back(w);
  int np2_head = np2_start + np2.head_offset;
  int np2_end = s.size();
  if (has_loc) {
    s.tokens.push_back(detail::syn_loc_words()[rng() % detail::syn_loc_words().size()]);
    loc_pos = s.size();
  }

  bool inverse = detail::syn_verb_inverse(verb_index);
  s.dep.assign(s.size(), DepArc{});
  s.has_dep = true;
  auto set_arc = [&](int tok, int head, const std::string& rel) {
    s.dep[tok - 1] = DepArc{head, rel};
  };
  set_arc(verb_pos, 0, "root");
  set_arc(np1_head, verb_pos, inverse ? "obj" : "subj");
  set_arc(np2_head, verb_pos, inverse ? "subj" : "obj");
  if (np1.head_offset > 0) set_arc(np1_start, np1_head, "amod");
  if (np2.head_offset > 0) set_arc(np2_start, np2_head, "amod");
  if (has_tmp) set_arc(tmp_pos, verb_pos, "tmp");
  if (has_loc) set_arc(loc_pos, verb_pos, "loc");

  PredicateFrame f;
  f.predicate = verb_pos;
  f.sense = detail::syn_verbs()[verb_index] + ".01";
  auto span_of = [&](int start, int end, int head, const std::string& role) {
    if (word_mode) return SpanArg{head, head, role};
    return SpanArg{start, end, role};
  };
  // agent carries A0, patient carries A1, wherever each sits
  if (inverse) {
    f.arguments.push_back(span_of(np2_start, np2_end, np2_head, "A0"));
    f.arguments.push_back(span_of(np1_start, np1_end, np1_head, "A1"));
  } else {
    f.arguments.push_back(span_of(np1_start, np1_end, np1_head, "A0"));
    f.arguments.push_back(span_of(np2_start, np2_end, np2_head, "A1"));
  }
  if (has_tmp) f.arguments.push_back(span_of(tmp_pos, tmp_pos, tmp_pos, "TMP"));
  if (has_loc) f.arguments.push_back(span_of(loc_pos, loc_pos, loc_pos, "LOC"));
  std::sort(f.arguments.begin(), f.arguments.end(),
            [](const SpanArg& a, const SpanArg& b) { return a.start < b.start; });
  s.frames.push_back(std::move(f));
  fill_chars(s);
  return s;
}

inline SyntheticCorpus gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.srl_train < 1 || cfg.srl_dev < 1 || cfg.dep_train < 1 || cfg.dep_dev < 1)
    throw ConfigError("synthetic corpus sizes must be at least 1");
  std::mt19937_64 rng(cfg.seed);
  SyntheticCorpus out;
  std::set<std::string> used;

  auto draw_unique = [&](bool word_mode) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      AnnotatedSentence s = gen_synthetic_sentence(rng, word_mode);
      std::string key;
      for (const auto& t : s.tokens) key += t + " ";
      if (used.insert(key).second) return s;
    }
    throw ConfigError("synthetic generator exhausted unique sentences; lower the sizes");
  };

  for (int i = 0; i < cfg.srl_train; ++i) out.srl_train.push_back(draw_unique(cfg.word_mode));
  for (int i = 0; i < cfg.srl_dev; ++i) out.srl_dev.push_back(draw_unique(cfg.word_mode));
  for (int i = 0; i < cfg.dep_train; ++i) {
    AnnotatedSentence s = draw_unique(cfg.word_mode);
    s.frames.clear();
    out.dep_train.push_back(std::move(s));
  }
  for (int i = 0; i < cfg.dep_dev; ++i) {
    AnnotatedSentence s = draw_unique(cfg.word_mode);
    s.frames.clear();
    out.dep_dev.push_back(std::move(s));
  }
  return out;
}

}  // namespace srlkit
