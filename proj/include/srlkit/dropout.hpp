#pragma once

#include <random>

#include "srlkit/graph.hpp"
#include "srlkit/tensor.hpp"

namespace srlkit {

// Inverted dropout: surviving units are scaled by 1/(1-rate) at training
// time, so evaluation applies no mask and no rescaling.
struct DropoutPlan {
  double input_rate = 0.5;
  double hidden_rate = 0.2;
  double recurrent_rate = 0.4;
  bool training = false;

  static DropoutPlan eval() { return DropoutPlan{0.5, 0.2, 0.4, false}; }

  Tensor sample_mask(int dim, double rate, std::mt19937_64& rng) const {
    Tensor mask({dim});
    double keep = 1.0 - rate;
    for (int i = 0; i < dim; ++i)
      mask.at(i) = rand_uniform(rng, 0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    return mask;
  }

  Var apply(Graph& g, Var x, double rate, std::mt19937_64& rng) const {
    if (!training || rate <= 0.0) return x;
    Tensor mask = sample_mask(g.value(x).dim(), rate, rng);
    return g.cmult(x, g.input(std::move(mask)));
  }

  Var apply_input(Graph& g, Var x, std::mt19937_64& rng) const {
    return apply(g, x, input_rate, rng);
  }
  Var apply_hidden(Graph& g, Var x, std::mt19937_64& rng) const {
    return apply(g, x, hidden_rate, rng);
  }

  // Variational mask for recurrent states: sampled once per sequence and
  // reused at every timestep. Identity when not training.
  Tensor recurrent_mask(int dim, std::mt19937_64& rng) const {
    if (!training || recurrent_rate <= 0.0) {
      Tensor one({dim});
      one.fill(1.0);
      return one;
    }
    return sample_mask(dim, recurrent_rate, rng);
  }
};

}  // namespace srlkit
