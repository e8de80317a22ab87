#pragma once

// Scoring: exact-match micro P/R/F1 for span and word predictions, the
// randomized stratified-shuffling comparison, and the breakdown tables.
// Pure functions over immutable corpora; percentages are kept in full
// precision and rounded only at rendering time.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/error.hpp"

namespace srlkit {

enum class SrlSetup { end_to_end, gold_predicates };

inline SrlSetup parse_setup(const std::string& s) {
  if (s == "end-to-end") return SrlSetup::end_to_end;
  if (s == "gold-predicates") return SrlSetup::gold_predicates;
  throw ConfigError("unknown setup: " + s + " (want end-to-end or gold-predicates)");
}

struct SentenceCounts {
  long gold = 0;
  long predicted = 0;
  long matched = 0;
};

struct PrfRow {
  std::string key;
  long gold = 0, predicted = 0, matched = 0;
  double precision = 0, recall = 0, f1 = 0;
};

struct EvalReport {
  long gold = 0, predicted = 0, matched = 0;
  double precision = 0, recall = 0, f1 = 0;  // percentages
  std::vector<PrfRow> roles;
  std::vector<PrfRow> buckets;
  std::vector<double> sentence_f1;
};

namespace detail {

inline void prf(long gold, long predicted, long matched, double& p, double& r,
                double& f1) {
  p = predicted == 0 ? 0.0 : 100.0 * matched / predicted;
  r = gold == 0 ? 0.0 : 100.0 * matched / gold;
  f1 = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// A sentence with nothing to find and nothing predicted counts as perfect.
inline double sentence_f1_of(const SentenceCounts& c) {
  if (c.gold == 0 && c.predicted == 0) return 100.0;
  double p, r, f1;
  prf(c.gold, c.predicted, c.matched, p, r, f1);
  return f1;
}

// Tuple keys per sentence. Span tuples are (predicate,start,end,role); the
// predicate itself joins as a V tuple only in the end-to-end setup. Word
// tuples are (predicate,token,role) plus an optional sense tuple.
inline std::vector<std::string> span_tuples(const AnnotatedSentence& s,
                                            SrlSetup setup) {
  std::vector<std::string> out;
  for (const auto& f : s.frames) {
    if (setup == SrlSetup::end_to_end)
      out.push_back(std::to_string(f.predicate) + "|V");
    for (const auto& a : f.arguments)
      out.push_back(std::to_string(f.predicate) + "|" + std::to_string(a.start) +
                    "|" + std::to_string(a.end) + "|" + a.role);
  }
  return out;
}

inline std::vector<std::string> word_tuples(const AnnotatedSentence& s,
                                            bool include_sense) {
  std::vector<std::string> out;
  for (const auto& f : s.frames) {
    if (include_sense)
      out.push_back(std::to_string(f.predicate) + "|SENSE|" + f.sense);
    for (const auto& a : f.arguments)
      out.push_back(std::to_string(f.predicate) + "|" + std::to_string(a.start) +
                    "|" + a.role);
  }
  return out;
}

// Tuples are scored as sets: repeated identical tuples count once.
inline void dedupe(std::vector<std::string>& xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
}

inline long intersection_size(std::vector<std::string> a, std::vector<std::string> b) {
  dedupe(a);
  dedupe(b);
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(both));
  return static_cast<long>(both.size());
}

// role of a tuple key is its last |-separated field
inline std::string role_of(const std::string& key) {
  return key.substr(key.rfind('|') + 1);
}

template <class TupleFn>
EvalReport score_corpora(const std::vector<AnnotatedSentence>& gold,
                         const std::vector<AnnotatedSentence>& pred,
                         TupleFn tuples, const std::vector<int>* bucket_edges) {
  if (gold.size() != pred.size())
    throw DimError("evaluation: gold has " + std::to_string(gold.size()) +
                   " sentences, predictions have " + std::to_string(pred.size()));
  EvalReport rep;
  std::map<std::string, PrfRow> roles;
  std::vector<int> edges =
      bucket_edges ? *bucket_edges : std::vector<int>{10, 20, 30, 40};
  for (size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw ConfigError("length bucket edges must be strictly increasing");
  std::vector<PrfRow> buckets(edges.size() + 1);
  auto bucket_of = [&](int n) {
    for (size_t b = 0; b < edges.size(); ++b)
      if (n <= edges[b]) return b;
    return edges.size();
  };

  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tokens != pred[i].tokens)
      throw DimError("evaluation: sentence " + std::to_string(i) +
                     " tokens differ between gold and predictions");
    auto gt = tuples(gold[i]);
    auto pt = tuples(pred[i]);
    dedupe(gt);
    dedupe(pt);
    long m = intersection_size(gt, pt);
    rep.gold += gt.size();
    rep.predicted += pt.size();
    rep.matched += m;
    rep.sentence_f1.push_back(sentence_f1_of(
        {static_cast<long>(gt.size()), static_cast<long>(pt.size()), m}));

    size_t b = bucket_of(gold[i].size());
    buckets[b].gold += gt.size();
    buckets[b].predicted += pt.size();
    buckets[b].matched += m;

    std::vector<std::string> both;
    std::set_intersection(gt.begin(), gt.end(), pt.begin(), pt.end(),
                          std::back_inserter(both));
    for (const auto& t : gt) roles[role_of(t)].gold++;
    for (const auto& t : pt) roles[role_of(t)].predicted++;
    for (const auto& t : both) roles[role_of(t)].matched++;
  }

  prf(rep.gold, rep.predicted, rep.matched, rep.precision, rep.recall, rep.f1);
  for (auto& [role, row] : roles) {
    row.key = role;
    prf(row.gold, row.predicted, row.matched, row.precision, row.recall, row.f1);
    rep.roles.push_back(row);
  }
  for (size_t b = 0; b < buckets.size(); ++b) {
    PrfRow& row = buckets[b];
    int lo = b == 0 ? 1 : edges[b - 1] + 1;
    row.key = b < edges.size() ? std::to_string(lo) + "-" + std::to_string(edges[b])
                               : std::to_string(lo) + "+";
    prf(row.gold, row.predicted, row.matched, row.precision, row.recall, row.f1);
    rep.buckets.push_back(row);
  }
  return rep;
}

template <class TupleFn>
std::vector<SentenceCounts> corpus_counts(const std::vector<AnnotatedSentence>& gold,
                                          const std::vector<AnnotatedSentence>& pred,
                                          TupleFn tuples) {
  if (gold.size() != pred.size())
    throw DimError("evaluation: corpus sizes differ");
  std::vector<SentenceCounts> out;
  for (size_t i = 0; i < gold.size(); ++i) {
    auto gt = tuples(gold[i]);
    auto pt = tuples(pred[i]);
    dedupe(gt);
    dedupe(pt);
    out.push_back({static_cast<long>(gt.size()), static_cast<long>(pt.size()),
                   intersection_size(gt, pt)});
  }
  return out;
}

inline double micro_f1(const std::vector<SentenceCounts>& counts) {
  long g = 0, p = 0, m = 0;
  for (const auto& c : counts) {
    g += c.gold;
    p += c.predicted;
    m += c.matched;
  }
  double pp, rr, f1;
  prf(g, p, m, pp, rr, f1);
  return f1;
}

}  // namespace detail

inline EvalReport span_f1(const std::vector<AnnotatedSentence>& gold,
                          const std::vector<AnnotatedSentence>& pred,
                          SrlSetup setup = SrlSetup::gold_predicates,
                          const std::vector<int>* bucket_edges = nullptr) {
  return detail::score_corpora(
      gold, pred,
      [setup](const AnnotatedSentence& s) { return detail::span_tuples(s, setup); },
      bucket_edges);
}

inline EvalReport word_f1(const std::vector<AnnotatedSentence>& gold,
                          const std::vector<AnnotatedSentence>& pred,
                          bool include_sense = false,
                          const std::vector<int>* bucket_edges = nullptr) {
  return detail::score_corpora(
      gold, pred,
      [include_sense](const AnnotatedSentence& s) {
        return detail::word_tuples(s, include_sense);
      },
      bucket_edges);
}

inline std::vector<SentenceCounts> span_counts(
    const std::vector<AnnotatedSentence>& gold,
    const std::vector<AnnotatedSentence>& pred, SrlSetup setup) {
  return detail::corpus_counts(gold, pred, [setup](const AnnotatedSentence& s) {
    return detail::span_tuples(s, setup);
  });
}

inline std::vector<SentenceCounts> word_counts(
    const std::vector<AnnotatedSentence>& gold,
    const std::vector<AnnotatedSentence>& pred, bool include_sense) {
  return detail::corpus_counts(gold, pred, [include_sense](const AnnotatedSentence& s) {
    return detail::word_tuples(s, include_sense);
  });
}

struct SignificanceResult {
  double f1_a = 0, f1_b = 0;
  double delta = 0;        // observed F1_A - F1_B
  long exceeding = 0;      // shuffles with |delta'| >= |delta|
  long iterations = 0;
  unsigned long seed = 0;
  double p = 1.0;          // (exceeding + 1) / (iterations + 1)
};

// Stratified shuffling: per iteration each sentence's two outputs swap with
// probability 1/2; swap decisions derive only from (seed, iteration).
inline SignificanceResult significance(const std::vector<SentenceCounts>& a,
                                       const std::vector<SentenceCounts>& b,
                                       long iterations, unsigned long seed) {
  if (a.size() != b.size())
    throw DimError("significance: systems cover different sentence counts");
  if (iterations < 1) throw ConfigError("significance: iterations must be positive");
  SignificanceResult res;
  res.iterations = iterations;
  res.seed = seed;
  res.f1_a = detail::micro_f1(a);
  res.f1_b = detail::micro_f1(b);
  res.delta = res.f1_a - res.f1_b;
  double target = std::fabs(res.delta);

  for (long t = 0; t < iterations; ++t) {
    // splitmix-style mix keeps iterations independent of each other
    unsigned long z = seed + 0x9e3779b97f4a7c15ULL * static_cast<unsigned long>(t + 1);
    std::mt19937_64 rng(z);
    long ga = 0, pa = 0, ma = 0, gb = 0, pb = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      bool swap = rng() & 1ULL;
      const SentenceCounts& ca = swap ? b[i] : a[i];
      const SentenceCounts& cb = swap ? a[i] : b[i];
      ga += ca.gold; pa += ca.predicted; ma += ca.matched;
      gb += cb.gold; pb += cb.predicted; mb += cb.matched;
    }
    double p1, r1, f1a, p2, r2, f1b;
    detail::prf(ga, pa, ma, p1, r1, f1a);
    detail::prf(gb, pb, mb, p2, r2, f1b);
    if (std::fabs(f1a - f1b) >= target) ++res.exceeding;
  }
  res.p = static_cast<double>(res.exceeding + 1) / static_cast<double>(iterations + 1);
  return res;
}

// Per-sentence F1 pairs for the two-system comparison plot.
inline std::vector<std::pair<double, double>> sentence_scatter(
    const std::vector<SentenceCounts>& a, const std::vector<SentenceCounts>& b) {
  if (a.size() != b.size())
    throw DimError("sentence_scatter: systems cover different sentence counts");
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < a.size(); ++i)
    out.emplace_back(detail::sentence_f1_of(a[i]), detail::sentence_f1_of(b[i]));
  return out;
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

namespace detail {
inline std::string pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}
}  // namespace detail

inline std::string render_report_text(const EvalReport& rep, bool breakdowns) {
  std::ostringstream os;
  os << "gold " << rep.gold << "  predicted " << rep.predicted << "  matched "
     << rep.matched << "\n";
  os << "P " << detail::pct(rep.precision) << "  R " << detail::pct(rep.recall)
     << "  F1 " << detail::pct(rep.f1) << "\n";
  if (breakdowns) {
    os << "\nby role:\n";
    for (const auto& r : rep.roles)
      os << "  " << r.key << "\tgold " << r.gold << "\tpred " << r.predicted
         << "\tP " << detail::pct(r.precision) << "\tR " << detail::pct(r.recall)
         << "\tF1 " << detail::pct(r.f1) << "\n";
    os << "\nby sentence length:\n";
    for (const auto& b : rep.buckets)
      os << "  " << b.key << "\tgold " << b.gold << "\tpred " << b.predicted
         << "\tP " << detail::pct(b.precision) << "\tR " << detail::pct(b.recall)
         << "\tF1 " << detail::pct(b.f1) << "\n";
  }
  return os.str();
}

inline std::string render_report_tsv(const EvalReport& rep, bool breakdowns) {
  std::ostringstream os;
  os << "section\tkey\tgold\tpredicted\tmatched\tprecision\trecall\tf1\n";
  os << "overall\t-\t" << rep.gold << "\t" << rep.predicted << "\t" << rep.matched
     << "\t" << detail::pct(rep.precision) << "\t" << detail::pct(rep.recall) << "\t"
     << detail::pct(rep.f1) << "\n";
  if (breakdowns) {
    for (const auto& r : rep.roles)
      os << "role\t" << r.key << "\t" << r.gold << "\t" << r.predicted << "\t"
         << r.matched << "\t" << detail::pct(r.precision) << "\t"
         << detail::pct(r.recall) << "\t" << detail::pct(r.f1) << "\n";
    for (const auto& b : rep.buckets)
      os << "length\t" << b.key << "\t" << b.gold << "\t" << b.predicted << "\t"
         << b.matched << "\t" << detail::pct(b.precision) << "\t"
         << detail::pct(b.recall) << "\t" << detail::pct(b.f1) << "\n";
  }
  return os.str();
}

}  // namespace srlkit
