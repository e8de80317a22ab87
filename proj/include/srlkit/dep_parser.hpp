#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/dropout.hpp"
#include "srlkit/encoder.hpp"
#include "srlkit/error.hpp"
#include "srlkit/graph.hpp"

namespace srlkit {

struct DepConfig {
  int arc_mlp = 500;
  int label_mlp = 100;
};

// Arc score matrix is (n+1) x n: rows are head candidates (0 = root),
// columns are modifiers 1..n. Self-head cells carry a -1e30 mask.
struct ArcScores {
  int n = 0;
  Var arc;
  std::vector<Var> label;  // one (n+1) x n matrix per relation label
};

struct DecodedTree {
  std::vector<int> heads;   // per modifier, 0 = root
  std::vector<int> labels;  // relation ids
};

namespace detail {

constexpr double kArcMask = -1e30;

// Max spanning arborescence rooted at node 0 over a dense score matrix
// (Chu-Liu/Edmonds with recursive cycle contraction). S[h][m] scores the
// arc h -> m; column 0 is ignored. Returns heads for nodes 1..K.
inline std::vector<int> max_arborescence(const std::vector<std::vector<double>>& S) {
  int K = static_cast<int>(S.size()) - 1;
  std::vector<int> best(K + 1, 0);
  if (K == 0) return best;
  for (int m = 1; m <= K; ++m) {
    double bs = -std::numeric_limits<double>::infinity();
    for (int h = 0; h <= K; ++h)
      if (h != m && S[h][m] > bs) {
        bs = S[h][m];
        best[m] = h;
      }
  }
  // cycle detection over the best-incoming graph
  std::vector<int> color(K + 1, 0);  // 0 fresh, 1 on path, 2 done
  std::vector<int> cycle;
  color[0] = 2;
  for (int start = 1; start <= K && cycle.empty(); ++start) {
    if (color[start]) continue;
    std::vector<int> path;
    int cur = start;
    while (color[cur] == 0) {
      color[cur] = 1;
      path.push_back(cur);
      cur = best[cur];
    }
    if (color[cur] == 1) {
      auto it = std::find(path.begin(), path.end(), cur);
      cycle.assign(it, path.end());
    }
    for (int v : path) color[v] = 2;
  }
  if (cycle.empty()) return best;

  // contract the cycle into one supernode
  std::vector<char> in_cycle(K + 1, 0);
  for (int v : cycle) in_cycle[v] = 1;
  std::vector<int> keep;  // old ids of surviving non-root nodes
  for (int v = 1; v <= K; ++v)
    if (!in_cycle[v]) keep.push_back(v);
  int K2 = static_cast<int>(keep.size()) + 1;  // + supernode
  int super = K2;                              // new id of the contracted node
  std::vector<int> old_of(K2 + 1, 0);
  std::vector<int> new_of(K + 1, -1);
  for (size_t i = 0; i < keep.size(); ++i) {
    old_of[i + 1] = keep[i];
    new_of[keep[i]] = static_cast<int>(i + 1);
  }

  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> S2(K2 + 1, std::vector<double>(K2 + 1, ninf));
  std::vector<int> enter_at(K2 + 1, -1);  // cycle node broken if x -> super wins
  std::vector<int> leave_src(K2 + 1, -1); // cycle node used for super -> x
  for (int x2 = 0; x2 < K2; ++x2) {       // includes root 0
    int x = x2 == 0 ? 0 : old_of[x2];
    for (int y2 = 1; y2 < K2; ++y2) {
      int y = old_of[y2];
      if (x != y) S2[x2][y2] = S[x][y];
    }
    // entering the cycle: reweight by the cycle edge that gets displaced
    for (int m : cycle) {
      double w = S[x][m] - S[best[m]][m];
      if (x != m && w > S2[x2][super]) {
        S2[x2][super] = w;
        enter_at[x2] = m;
      }
    }
  }
  for (int y2 = 1; y2 < K2; ++y2) {
    int y = old_of[y2];
    for (int m : cycle)
      if (S[m][y] > S2[super][y2]) {
        S2[super][y2] = S[m][y];
        leave_src[y2] = m;
      }
  }

  std::vector<int> sub = max_arborescence(S2);

  std::vector<int> heads(K + 1, 0);
  for (int y2 = 1; y2 < K2; ++y2) {
    int y = old_of[y2];
    heads[y] = sub[y2] == super ? leave_src[y2] : (sub[y2] == 0 ? 0 : old_of[sub[y2]]);
  }
  int parent2 = sub[super];
  int broken = enter_at[parent2];
  for (int m : cycle) heads[m] = (m == broken) ? (parent2 == 0 ? 0 : old_of[parent2])
                                               : best[m];
  return heads;
}

// Max arborescence under the constraint that the root has exactly one child.
inline std::vector<int> single_root_arborescence(
    const std::vector<std::vector<double>>& S) {
  int K = static_cast<int>(S.size()) - 1;
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<int> best_heads;
  double best_total = ninf;
  for (int r = 1; r <= K; ++r) {
    auto S2 = S;
    for (int m = 1; m <= K; ++m)
      if (m != r) S2[0][m] = ninf;
    for (int h = 1; h <= K; ++h) S2[h][r] = ninf;  // r attaches to root only
    auto heads = max_arborescence(S2);
    double total = 0.0;
    for (int m = 1; m <= K; ++m) total += S[heads[m]][m];
    if (total > best_total) {
      best_total = total;
      best_heads = heads;
    }
  }
  return best_heads;
}

}  // namespace detail

// Biaffine arc/label scorer over the shared highway BiLSTM encoder, with a
// learned root sentinel entering at the scorer (not the BiLSTM).
class DepParser {
 public:
  DepParser(ParameterStore& store, const std::string& prefix, const Vocabulary& vocab,
            std::shared_ptr<Encoder> encoder, DepConfig cfg, std::mt19937_64& rng)
      : cfg_(cfg), vocab_(&vocab), enc_(std::move(encoder)), prefix_(prefix) {
    if (vocab.n_rels() < 1) throw ConfigError("relation vocabulary is empty");
    int d = enc_->config().output_dim();
    int A = cfg_.arc_mlp, B = cfg_.label_mlp, L = vocab.n_rels();
    root_ = own(store.add(prefix + ".root", {d}, Init::uniform_small, rng));
    arc_head_w_ = own(store.add(prefix + ".arc_head.W", {A, d}, Init::glorot, rng));
    arc_head_b_ = own(store.add(prefix + ".arc_head.b", {A}, Init::zeros, rng));
    arc_mod_w_ = own(store.add(prefix + ".arc_mod.W", {A, d}, Init::glorot, rng));
    arc_mod_b_ = own(store.add(prefix + ".arc_mod.b", {A}, Init::zeros, rng));
    arc_u_ = own(store.add(prefix + ".arc_U", {A, A}, Init::glorot, rng));
    arc_bias_ = own(store.add(prefix + ".arc_bias", {A}, Init::zeros, rng));
    lab_head_w_ = own(store.add(prefix + ".lab_head.W", {B, d}, Init::glorot, rng));
    lab_head_b_ = own(store.add(prefix + ".lab_head.b", {B}, Init::zeros, rng));
    lab_mod_w_ = own(store.add(prefix + ".lab_mod.W", {B, d}, Init::glorot, rng));
    lab_mod_b_ = own(store.add(prefix + ".lab_mod.b", {B}, Init::zeros, rng));
    for (int l = 0; l < L; ++l)
      lab_u_.push_back(own(store.add(prefix + ".lab_U" + std::to_string(l), {B, B},
                                     Init::glorot, rng)));
    lab_head_lin_ = own(store.add(prefix + ".lab_head_lin", {L, B}, Init::glorot, rng));
    lab_mod_lin_ = own(store.add(prefix + ".lab_mod_lin", {L, B}, Init::glorot, rng));
    lab_bias_ = own(store.add(prefix + ".lab_bias", {L}, Init::zeros, rng));
    for (auto* p : enc_->registry()) registry_.push_back(p);
  }

  const DepConfig& config() const { return cfg_; }
  Encoder& encoder() { return *enc_; }
  std::shared_ptr<Encoder> encoder_ptr() { return enc_; }
  const std::vector<Parameter*>& registry() const { return registry_; }

  ArcScores score(Graph& g, const AnnotatedSentence& s, const DropoutPlan& drop,
                  std::mt19937_64& rng) const {
    EncodedSentence encoded = enc_->encode(g, s, drop, rng);
    return score_encoded(g, encoded, drop, rng);
  }

  // Scoring over an already-encoded sentence (the encoder may be shared).
  ArcScores score_encoded(Graph& g, const EncodedSentence& encoded,
                          const DropoutPlan& drop, std::mt19937_64& rng) const {
    int n = encoded.size();
    if (n == 0) throw DimError("biaffine_score: empty sentence");
    std::vector<Var> head_rows{g.param(*root_)};
    for (const auto& h : encoded.top()) head_rows.push_back(h);
    Var heads = g.stack_rows(head_rows);                  // (n+1) x d
    Var mods = g.stack_rows(encoded.top());               // n x d

    auto project = [&](Var x, Parameter& w, Parameter& b) {
      Var y = g.relu(g.add_rowvec(g.matmul(x, g.transpose(g.param(w))), g.param(b)));
      if (drop.training && drop.hidden_rate > 0.0) {
        const Tensor& t = g.value(y);
        Tensor mask({t.rows(), t.cols()});
        double keep = 1.0 - drop.hidden_rate;
        for (double& e : mask.v)
          e = rand_uniform(rng, 0.0, 1.0) < keep ? 1.0 / keep : 0.0;
        y = g.cmult(y, g.input(std::move(mask)));
      }
      return y;
    };
    Var ah = project(heads, *arc_head_w_, *arc_head_b_);  // (n+1) x A
    Var am = project(mods, *arc_mod_w_, *arc_mod_b_);     // n x A

    ArcScores out;
    out.n = n;
    Var bilinear = g.matmul(g.matmul(ah, g.param(*arc_u_)), g.transpose(am));
    Var head_term = g.matmul(ah, g.param(*arc_bias_));    // (n+1)
    Tensor mask({n + 1, n});
    for (int m = 1; m <= n; ++m) mask.at(m, m - 1) = detail::kArcMask;
    out.arc = g.add(g.add_colvec(bilinear, head_term), g.input(std::move(mask)));

    Var lh = project(heads, *lab_head_w_, *lab_head_b_);  // (n+1) x B
    Var lm = project(mods, *lab_mod_w_, *lab_mod_b_);     // n x B
    int L = vocab_->n_rels();
    for (int l = 0; l < L; ++l) {
      Var bl = g.matmul(g.matmul(lh, g.param(*lab_u_[l])), g.transpose(lm));
      Var hc = g.matmul(lh, g.row(g.param(*lab_head_lin_), l));  // (n+1)
      Var mr = g.matmul(lm, g.row(g.param(*lab_mod_lin_), l));   // (n)
      Var sl = g.add_rowvec(g.add_colvec(bl, hc), mr);
      out.label.push_back(g.add_scalarv(sl, g.pick(g.param(*lab_bias_), l)));
    }
    return out;
  }

  // Per-modifier cross-entropy over head candidates plus label cross-entropy
  // at the gold head.
  Var loss(Graph& g, const AnnotatedSentence& s, const ArcScores& sc) const {
    if (!s.has_dep) throw TrainError("parser loss requires a gold dependency tree");
    Var total = g.constant_scalar(0.0);
    for (int m = 1; m <= sc.n; ++m) {
      int gold_head = s.dep[m - 1].head;
      Var head_logits = g.col(sc.arc, m - 1);  // (n+1)
      total = g.add(total, g.pick_neg_log_softmax(head_logits, gold_head));
      std::vector<Var> lab;
      lab.reserve(sc.label.size());
      for (const auto& sl : sc.label) lab.push_back(g.pick2(sl, gold_head, m - 1));
      total = g.add(total,
                    g.pick_neg_log_softmax(g.concat(lab), vocab_->rel(s.dep[m - 1].rel)));
    }
    return total;
  }

  // Greedy argmax per modifier; if the result is not a single-rooted tree,
  // repair with a single-root-constrained maximum spanning arborescence.
  static DecodedTree decode(Graph& g, const ArcScores& sc) {
    int n = sc.n;
    const Tensor& arc = g.value(sc.arc);
    DecodedTree out;
    out.heads.assign(n, 0);
    for (int m = 1; m <= n; ++m) {
      double best = -std::numeric_limits<double>::infinity();
      for (int h = 0; h <= n; ++h) {
        if (h == m) continue;
        if (arc.at(h, m - 1) > best) {
          best = arc.at(h, m - 1);
          out.heads[m - 1] = h;
        }
      }
    }
    if (!tree_violation(out.heads).empty()) {
      std::vector<std::vector<double>> S(n + 1, std::vector<double>(n + 1, detail::kArcMask));
      for (int h = 0; h <= n; ++h)
        for (int m = 1; m <= n; ++m)
          if (h != m) S[h][m] = arc.at(h, m - 1);
      auto heads = detail::single_root_arborescence(S);
      out.heads.assign(heads.begin() + 1, heads.end());
    }
    for (int m = 1; m <= n; ++m) {
      int h = out.heads[m - 1];
      int best_l = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (size_t l = 0; l < sc.label.size(); ++l) {
        double v = g.value(sc.label[l]).at(h, m - 1);
        if (v > best) {
          best = v;
          best_l = static_cast<int>(l);
        }
      }
      out.labels.push_back(best_l);
    }
    return out;
  }

  std::vector<DepArc> to_arcs(const DecodedTree& t) const {
    std::vector<DepArc> arcs;
    for (size_t m = 0; m < t.heads.size(); ++m)
      arcs.push_back({t.heads[m], vocab_->rels[t.labels[m]]});
    return arcs;
  }

 private:
  Parameter* own(Parameter& p) {
    registry_.push_back(&p);
    return &p;
  }

  DepConfig cfg_;
  const Vocabulary* vocab_;
  std::shared_ptr<Encoder> enc_;
  std::string prefix_;
  Parameter *root_ = nullptr;
  Parameter *arc_head_w_ = nullptr, *arc_head_b_ = nullptr;
  Parameter *arc_mod_w_ = nullptr, *arc_mod_b_ = nullptr;
  Parameter *arc_u_ = nullptr, *arc_bias_ = nullptr;
  Parameter *lab_head_w_ = nullptr, *lab_head_b_ = nullptr;
  Parameter *lab_mod_w_ = nullptr, *lab_mod_b_ = nullptr;
  std::vector<Parameter*> lab_u_;
  Parameter *lab_head_lin_ = nullptr, *lab_mod_lin_ = nullptr, *lab_bias_ = nullptr;
  std::vector<Parameter*> registry_;
};

// Attachment scores as percentages over aligned corpora.
inline std::pair<double, double> uas_las(
    const std::vector<std::vector<DepArc>>& pred,
    const std::vector<std::vector<DepArc>>& gold) {
  if (pred.size() != gold.size())
    throw DimError("uas_las: " + std::to_string(pred.size()) + " predictions vs " +
                   std::to_string(gold.size()) + " gold sentences");
  long total = 0, head_ok = 0, both_ok = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gold[i].size())
      throw DimError("uas_las: sentence " + std::to_string(i) + " length mismatch");
    for (size_t m = 0; m < pred[i].size(); ++m) {
      ++total;
      if (pred[i][m].head == gold[i][m].head) {
        ++head_ok;
        if (pred[i][m].rel == gold[i][m].rel) ++both_ok;
      }
    }
  }
  if (total == 0) return {0.0, 0.0};
  return {100.0 * head_ok / total, 100.0 * both_ok / total};
}

}  // namespace srlkit
