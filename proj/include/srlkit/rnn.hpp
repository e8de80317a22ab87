#pragma once

#include <random>
#include <string>

#include "srlkit/dropout.hpp"
#include "srlkit/graph.hpp"
#include "srlkit/params.hpp"

namespace srlkit {

// Gate layout in the stacked weight matrices: input, forget, output, candidate.
struct LstmCell {
  Parameter* wx = nullptr;  // (4H x Din)
  Parameter* wh = nullptr;  // (4H x H)
  Parameter* b = nullptr;   // (4H)
  int hidden = 0;

  static LstmCell create(ParameterStore& store, const std::string& prefix,
                         int in_dim, int hidden, std::mt19937_64& rng) {
    LstmCell c;
    c.hidden = hidden;
    c.wx = &store.add(prefix + ".Wx", {4 * hidden, in_dim}, Init::glorot, rng);
    c.wh = &store.add(prefix + ".Wh", {4 * hidden, hidden}, Init::orthogonal, rng);
    c.b = &store.add(prefix + ".b", {4 * hidden}, Init::zeros, rng);
    return c;
  }
};

struct LstmState {
  Var h;
  Var c;
};

// One LSTM step. rec_mask, when valid, is a variational dropout mask applied
// to h_prev before the recurrent product (same mask at every timestep).
inline LstmState lstm_step(Graph& g, const LstmCell& cell, Var x,
                           const LstmState& prev, Var rec_mask = {}) {
  int h = cell.hidden;
  if (g.value(x).rank() != 1 || g.value(x).dim() != g.value(g.param(*cell.wx)).cols())
    throw DimError("lstm_step: input of shape " + g.value(x).shape_str() +
                   " does not match Wx " + cell.wx->value.shape_str());
  if (g.value(prev.h).dim() != h || g.value(prev.c).dim() != h)
    throw DimError("lstm_step: state dimension mismatch");
  Var h_in = rec_mask.valid() ? g.cmult(prev.h, rec_mask) : prev.h;
  Var pre = g.add(g.add(g.matmul(g.param(*cell.wx), x),
                        g.matmul(g.param(*cell.wh), h_in)),
                  g.param(*cell.b));
  Var i = g.sigmoid(g.slice(pre, 0, h));
  Var f = g.sigmoid(g.slice(pre, h, 2 * h));
  Var o = g.sigmoid(g.slice(pre, 2 * h, 3 * h));
  Var u = g.tanh_(g.slice(pre, 3 * h, 4 * h));
  Var c = g.add(g.cmult(f, prev.c), g.cmult(i, u));
  Var hh = g.cmult(o, g.tanh_(c));
  return {hh, c};
}

inline LstmState lstm_zero_state(Graph& g, int hidden) {
  return {g.zeros({hidden}), g.zeros({hidden})};
}

struct HighwayGate {
  Parameter* w = nullptr;  // (D x D)
  Parameter* b = nullptr;  // (D)

  static HighwayGate create(ParameterStore& store, const std::string& prefix,
                            int dim, std::mt19937_64& rng) {
    HighwayGate gte;
    gte.w = &store.add(prefix + ".Wg", {dim, dim}, Init::glorot, rng);
    gte.b = &store.add(prefix + ".bg", {dim}, Init::zeros, rng);
    return gte;
  }
};

// t = sigmoid(Wg x + bg); out = t (.) layer_out + (1-t) (.) x.
inline Var highway_combine(Graph& g, Var x, Var layer_out, const HighwayGate& gate) {
  const Tensor &tx = g.value(x), &to = g.value(layer_out);
  if (tx.rank() != 1 || to.rank() != 1 || tx.dim() != to.dim())
    throw DimError("highway_combine: shapes " + tx.shape_str() + " vs " + to.shape_str());
  int d = tx.dim();
  Var t = g.sigmoid(g.add(g.matmul(g.param(*gate.w), x), g.param(*gate.b)));
  Tensor ones({d});
  ones.fill(1.0);
  Var carry = g.sub(g.input(std::move(ones)), t);
  return g.add(g.cmult(t, layer_out), g.cmult(carry, x));
}

// Feed-forward scorer head: `depth` hidden ReLU layers then a linear output.
struct Mlp {
  std::vector<Parameter*> ws;
  std::vector<Parameter*> bs;
  Parameter* w_out = nullptr;  // (out_dim x hidden) or (out_dim x in) when depth 0
  Parameter* b_out = nullptr;  // (out_dim)

  static Mlp create(ParameterStore& store, const std::string& prefix, int in_dim,
                    int hidden, int depth, int out_dim, std::mt19937_64& rng) {
    Mlp m;
    int d = in_dim;
    for (int l = 0; l < depth; ++l) {
      m.ws.push_back(&store.add(prefix + ".W" + std::to_string(l), {hidden, d},
                                Init::glorot, rng));
      m.bs.push_back(&store.add(prefix + ".b" + std::to_string(l), {hidden},
                                Init::zeros, rng));
      d = hidden;
    }
    m.w_out = &store.add(prefix + ".Wout", {out_dim, d}, Init::glorot, rng);
    m.b_out = &store.add(prefix + ".bout", {out_dim}, Init::zeros, rng);
    return m;
  }

  Var apply(Graph& g, Var x, const DropoutPlan* drop = nullptr,
            std::mt19937_64* rng = nullptr) const {
    Var h = x;
    for (size_t l = 0; l < ws.size(); ++l) {
      h = g.relu(g.add(g.matmul(g.param(*ws[l]), h), g.param(*bs[l])));
      if (drop && rng) h = drop->apply_hidden(g, h, *rng);
    }
    return g.add(g.matmul(g.param(*w_out), h), g.param(*b_out));
  }

  // Batched form over row-stacked inputs (rows are independent instances).
  Var apply_rows(Graph& g, Var x, const DropoutPlan* drop = nullptr,
                 std::mt19937_64* rng = nullptr) const {
    Var h = x;
    for (size_t l = 0; l < ws.size(); ++l) {
      h = g.relu(g.add_rowvec(g.matmul(h, g.transpose(g.param(*ws[l]))),
                              g.param(*bs[l])));
      if (drop && rng) {
        const Tensor& t = g.value(h);
        DropoutPlan p = *drop;
        if (p.training && p.hidden_rate > 0.0) {
          Tensor mask({t.rows(), t.cols()});
          double keep = 1.0 - p.hidden_rate;
          for (double& e : mask.v)
            e = rand_uniform(*rng, 0.0, 1.0) < keep ? 1.0 / keep : 0.0;
          h = g.cmult(h, g.input(std::move(mask)));
        }
      }
    }
    return g.add_rowvec(g.matmul(h, g.transpose(g.param(*w_out))), g.param(*b_out));
  }
};

}  // namespace srlkit
