#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/dropout.hpp"
#include "srlkit/encoder.hpp"
#include "srlkit/error.hpp"
#include "srlkit/graph.hpp"
#include "srlkit/rnn.hpp"

namespace srlkit {

struct SrlConfig {
  int mlp_hidden = 150;
  int mlp_depth = 1;
  double lambda_p = 0.4;
  double lambda_a = 0.8;
  int max_width = 30;  // W; forced to 1 in word mode
  bool word_mode = false;
  bool gold_predicates = false;        // evaluation setup
  bool force_gold_candidates = false;  // keep pruned-away gold spans anyway

  int width() const { return word_mode ? 1 : max_width; }
};

// ceil(lambda * n) computed away from representation noise.
inline int keep_count(double lambda, int n, int available) {
  int k = static_cast<int>(std::ceil(lambda * n - 1e-9));
  return std::min(available, std::max(k, 0));
}

struct LabeledSpan {
  int start = 0, end = 0;
  std::string role;
  double score = 0.0;
};

// Greedy resolution: descending score, drop spans overlapping a kept one.
// Ties broken toward smaller start then end for determinism.
inline std::vector<LabeledSpan> resolve_overlaps(std::vector<LabeledSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const LabeledSpan& a, const LabeledSpan& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
  std::vector<LabeledSpan> kept;
  for (const auto& s : spans) {
    bool clash = false;
    for (const auto& k : kept)
      clash |= (s.start <= k.end && k.start <= s.end);
    if (!clash) kept.push_back(s);
  }
  std::sort(kept.begin(), kept.end(), [](const LabeledSpan& a, const LabeledSpan& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  return kept;
}

struct PruneStats {
  long gold_tuples = 0;
  long covered_tuples = 0;  // gold tuples whose predicate and span survived
  double recall() const {
    return gold_tuples == 0 ? 1.0
                            : static_cast<double>(covered_tuples) / gold_tuples;
  }
};

// The span scoring model: unary predicate/argument scorers for pruning, a
// relation scorer over surviving pairs, the training loss and the decoder.
class SrlModel {
 public:
  SrlModel(ParameterStore& store, const std::string& prefix, const Vocabulary& vocab,
           std::shared_ptr<Encoder> encoder, SrlConfig cfg, std::mt19937_64& rng)
      : cfg_(cfg), vocab_(&vocab), enc_(std::move(encoder)), prefix_(prefix) {
    int d = enc_->config().output_dim();
    int roles = vocab.n_real_roles();
    if (roles < 1) throw ConfigError("role vocabulary is empty");
    mlp_p_ = Mlp::create(store, prefix + ".pred_mlp", d, cfg_.mlp_hidden,
                         cfg_.mlp_depth, 1, rng);
    mlp_a_ = Mlp::create(store, prefix + ".arg_mlp", d, cfg_.mlp_hidden,
                         cfg_.mlp_depth, 1, rng);
    mlp_r_ = Mlp::create(store, prefix + ".rel_mlp", 2 * d, cfg_.mlp_hidden,
                         cfg_.mlp_depth, roles, rng);
    collect_registry();
  }

  const SrlConfig& config() const { return cfg_; }
  Encoder& encoder() { return *enc_; }
  const Encoder& encoder() const { return *enc_; }
  std::shared_ptr<Encoder> encoder_ptr() { return enc_; }
  const std::vector<Parameter*>& registry() const { return registry_; }

  struct Scored {
    int n = 0;
    EncodedSentence encoded;
    Var hidden;                                // (n x d) top-layer matrix
    std::vector<std::pair<int, int>> spans;    // all candidates, 1-based
    Var pred_scores;                           // (n)
    Var span_scores;                           // (#spans)
    std::vector<int> kept_preds;               // token indices, ascending
    std::vector<int> kept_spans;               // indices into spans, ascending
    Var rel_scores;  // (|kept_preds|*|kept_spans| x roles), row-major pairs
    int pair_index(int pi, int ai) const {
      return pi * static_cast<int>(kept_spans.size()) + ai;
    }
  };

  // rep_a over a span is the mean of the top-layer outputs inside it.
  Var span_rep(Graph& g, Var hidden, int start, int end) const {
    int n = g.value(hidden).rows();
    if (start < 1 || end > n || start > end)
      throw DimError("span (" + std::to_string(start) + "," + std::to_string(end) +
                     ") out of bounds for sentence of length " + std::to_string(n));
    if (start == end) return g.row(hidden, start - 1);
    return g.mean_rows(g.slice_rows(hidden, start - 1, end));
  }

  Scored score(Graph& g, const AnnotatedSentence& s, const DropoutPlan& drop,
               std::mt19937_64& rng, const std::vector<Var>* syn_reps = nullptr) const {
    Scored out;
    out.n = s.size();
    out.encoded = enc_->encode(g, s, drop, rng, syn_reps);
    out.hidden = g.stack_rows(out.encoded.top());

    int W = cfg_.width();
    for (int j = 1; j <= out.n; ++j)
      for (int k = j; k <= std::min(out.n, j + W - 1); ++k)
        out.spans.emplace_back(j, k);

    out.pred_scores = g.col(mlp_p_.apply_rows(g, out.hidden, &drop, &rng), 0);
    std::vector<Var> reps;
    reps.reserve(out.spans.size());
    for (auto [j, k] : out.spans) reps.push_back(span_rep(g, out.hidden, j, k));
    Var span_mat = g.stack_rows(reps);
    out.span_scores = g.col(mlp_a_.apply_rows(g, span_mat, &drop, &rng), 0);

    prune(g, s, out, drop.training);

    // relation scores over surviving pairs
    std::vector<Var> pair_reps;
    pair_reps.reserve(out.kept_preds.size() * out.kept_spans.size());
    for (int p : out.kept_preds) {
      Var rp = g.row(out.hidden, p - 1);
      for (int ai : out.kept_spans) {
        auto [j, k] = out.spans[ai];
        pair_reps.push_back(g.concat({rp, span_rep(g, out.hidden, j, k)}));
      }
    }
    if (!pair_reps.empty())
      out.rel_scores = mlp_r_.apply_rows(g, g.stack_rows(pair_reps), &drop, &rng);
    return out;
  }

  // Full tuple score row over R union {null}: phi_p + phi_a + phi_r per real
  // role, and the fixed 0 for the null label in the last position.
  Var tuple_logits(Graph& g, const Scored& sc, int pi, int ai) const {
    Var unary = g.add(g.pick(sc.pred_scores, sc.kept_preds[pi] - 1),
                      g.pick(sc.span_scores, sc.kept_spans[ai]));
    Var row = g.row(sc.rel_scores, sc.pair_index(pi, ai));
    return g.concat({g.add_scalarv(row, unary), g.constant_scalar(0.0)});
  }

  // Sum of per-pair cross-entropies over surviving pairs. Gold tuples whose
  // predicate or span was pruned away are excluded and reported via stats.
  Var loss(Graph& g, const AnnotatedSentence& s, const Scored& sc,
           PruneStats* stats = nullptr) const {
    std::map<std::pair<int, std::pair<int, int>>, int> gold;  // (p,(j,k)) -> role id
    for (const auto& f : s.frames)
      for (const auto& a : f.arguments)
        gold[{f.predicate, {a.start, a.end}}] = vocab_->role(a.role);

    std::map<int, int> pred_pos, span_pos;
    for (size_t i = 0; i < sc.kept_preds.size(); ++i) pred_pos[sc.kept_preds[i]] = i;
    for (size_t i = 0; i < sc.kept_spans.size(); ++i) span_pos[sc.kept_spans[i]] = i;
    std::map<std::pair<int, int>, int> span_index;  // (j,k) -> candidate index
    for (size_t i = 0; i < sc.spans.size(); ++i) span_index[sc.spans[i]] = i;

    if (stats) {
      for (const auto& [key, role] : gold) {
        (void)role;
        ++stats->gold_tuples;
        auto si = span_index.find(key.second);
        if (pred_pos.count(key.first) && si != span_index.end() &&
            span_pos.count(si->second))
          ++stats->covered_tuples;
      }
    }

    int roles = vocab_->n_real_roles();
    Var total = g.constant_scalar(0.0);
    for (size_t pi = 0; pi < sc.kept_preds.size(); ++pi) {
      for (size_t ai = 0; ai < sc.kept_spans.size(); ++ai) {
        auto key = std::make_pair(sc.kept_preds[pi], sc.spans[sc.kept_spans[ai]]);
        auto it = gold.find(key);
        int gold_pos = roles;  // null label slot
        if (it != gold.end()) gold_pos = it->second - 1;
        Var logits = tuple_logits(g, sc, pi, ai);
        total = g.add(total, g.pick_neg_log_softmax(logits, gold_pos));
      }
    }
    return total;
  }

  // Argmax role per surviving pair, greedy overlap resolution per predicate.
  // Frames without arguments are kept only under the gold-predicates setup.
  std::vector<PredicateFrame> decode(Graph& g, const AnnotatedSentence& s,
                                     const Scored& sc) const {
    int roles = vocab_->n_real_roles();
    std::vector<PredicateFrame> out;
    for (size_t pi = 0; pi < sc.kept_preds.size(); ++pi) {
      std::vector<LabeledSpan> picked;
      for (size_t ai = 0; ai < sc.kept_spans.size(); ++ai) {
        double unary = g.value(sc.pred_scores).at(sc.kept_preds[pi] - 1) +
                       g.value(sc.span_scores).at(sc.kept_spans[ai]);
        int best = roles;  // null
        double best_score = 0.0;
        for (int r = 0; r < roles; ++r) {
          double v = g.value(sc.rel_scores).at(sc.pair_index(pi, ai), r) + unary;
          if (v > best_score) {
            best_score = v;
            best = r;
          }
        }
        if (best == roles) continue;
        auto [j, k] = sc.spans[sc.kept_spans[ai]];
        picked.push_back({j, k, vocab_->roles[best + 1], best_score});
      }
      auto kept = resolve_overlaps(std::move(picked));
      if (kept.empty() && !cfg_.gold_predicates) continue;
      PredicateFrame f;
      f.predicate = sc.kept_preds[pi];
      for (const auto& a : kept) f.arguments.push_back({a.start, a.end, a.role});
      // senses are never modeled; carry the gold sense through when present
      for (const auto& gf : s.frames)
        if (gf.predicate == f.predicate) f.sense = gf.sense;
      out.push_back(std::move(f));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.predicate < b.predicate;
    });
    return out;
  }

 private:
  void prune(Graph& g, const AnnotatedSentence& s, Scored& sc, bool training) const {
    if (cfg_.gold_predicates) {
      for (const auto& f : s.frames) sc.kept_preds.push_back(f.predicate);
      std::sort(sc.kept_preds.begin(), sc.kept_preds.end());
      sc.kept_preds.erase(std::unique(sc.kept_preds.begin(), sc.kept_preds.end()),
                          sc.kept_preds.end());
    } else {
      int kp = keep_count(cfg_.lambda_p, sc.n, sc.n);
      std::vector<int> order(sc.n);
      for (int i = 0; i < sc.n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        double sa = g.value(sc.pred_scores).at(a), sb = g.value(sc.pred_scores).at(b);
        return sa != sb ? sa > sb : a < b;
      });
      sc.kept_preds.assign(order.begin(), order.begin() + kp);
      for (int& p : sc.kept_preds) ++p;  // token indices are 1-based
      std::sort(sc.kept_preds.begin(), sc.kept_preds.end());
    }

    // lambda_a = 1 turns argument pruning off entirely so that no gold span
    // can be lost; below 1 the keep count follows the ceiling formula.
    int ka = cfg_.lambda_a >= 1.0
                 ? static_cast<int>(sc.spans.size())
                 : keep_count(cfg_.lambda_a, sc.n, static_cast<int>(sc.spans.size()));
    std::vector<int> order(sc.spans.size());
    for (size_t i = 0; i < sc.spans.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double sa = g.value(sc.span_scores).at(a), sb = g.value(sc.span_scores).at(b);
      if (sa != sb) return sa > sb;
      if (sc.spans[a].first != sc.spans[b].first)
        return sc.spans[a].first < sc.spans[b].first;
      return sc.spans[a].second < sc.spans[b].second;
    });
    sc.kept_spans.assign(order.begin(), order.begin() + ka);
    // gold spans are forced in during training only; decoding stays honest
    if (cfg_.force_gold_candidates && training) {
      std::map<std::pair<int, int>, int> span_index;
      for (size_t i = 0; i < sc.spans.size(); ++i) span_index[sc.spans[i]] = i;
      for (const auto& f : s.frames)
        for (const auto& a : f.arguments) {
          auto it = span_index.find({a.start, a.end});
          if (it != span_index.end() &&
              std::find(sc.kept_spans.begin(), sc.kept_spans.end(), it->second) ==
                  sc.kept_spans.end())
            sc.kept_spans.push_back(it->second);
        }
    }
    std::sort(sc.kept_spans.begin(), sc.kept_spans.end());
  }

  void collect_registry() {
    for (auto* p : enc_->registry()) registry_.push_back(p);
    for (const Mlp* m : {&mlp_p_, &mlp_a_, &mlp_r_}) {
      for (auto* w : m->ws) registry_.push_back(w);
      for (auto* b : m->bs) registry_.push_back(b);
      registry_.push_back(m->w_out);
      registry_.push_back(m->b_out);
    }
  }

  SrlConfig cfg_;
  const Vocabulary* vocab_;
  std::shared_ptr<Encoder> enc_;
  std::string prefix_;
  Mlp mlp_p_, mlp_a_, mlp_r_;
  std::vector<Parameter*> registry_;
};

}  // namespace srlkit
