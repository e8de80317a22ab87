#pragma once

// Syntax integration: IIR feeds a softmax-weighted sum of the live parser's
// encoder layers into the SRL input and trains both tasks jointly; HPS shares
// the whole encoder between the two task heads; FIR reads the same weighted
// sum from a frozen pre-trained parser. The mixed-batch scheduler interleaves
// instances from both corpora.

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/dep_parser.hpp"
#include "srlkit/dropout.hpp"
#include "srlkit/encoder.hpp"
#include "srlkit/error.hpp"
#include "srlkit/graph.hpp"
#include "srlkit/srl_model.hpp"

namespace srlkit {

enum class Integration { none, iir, hps, fir };

inline Integration parse_integration(const std::string& s) {
  if (s == "none") return Integration::none;
  if (s == "iir" || s == "IIR") return Integration::iir;
  if (s == "hps" || s == "HPS") return Integration::hps;
  if (s == "fir" || s == "FIR") return Integration::fir;
  throw ConfigError("unknown integration mode: " + s);
}

inline const char* integration_name(Integration m) {
  switch (m) {
    case Integration::none: return "none";
    case Integration::iir: return "iir";
    case Integration::hps: return "hps";
    case Integration::fir: return "fir";
  }
  return "none";
}

// Per-token syntactic representations from a parser encoder: the softmax
// weighted sum over its layer outputs. Frozen providers detach the layers so
// no gradient reaches the parser; live providers pass gradients through.
class SynProvider {
 public:
  SynProvider(DepParser* parser, Parameter* fusion_logits, bool frozen)
      : parser_(parser), logits_(fusion_logits), frozen_(frozen) {}

  int dim() const { return parser_->encoder().config().output_dim(); }
  int layer_count() const { return parser_->encoder().config().layers; }
  bool frozen() const { return frozen_; }
  Parameter& fusion_logits() { return *logits_; }
  DepParser& parser() { return *parser_; }

  // Encoded parser view of the sentence, cached per graph so one training
  // step never encodes the same sentence twice.
  const EncodedSentence& encoded(Graph& g, const AnnotatedSentence& s,
                                 const DropoutPlan& drop, std::mt19937_64& rng) {
    if (g.uid() != graph_uid_) {
      graph_uid_ = g.uid();
      cache_.clear();
    }
    auto it = cache_.find(&s);
    if (it != cache_.end()) return it->second;
    DropoutPlan plan = frozen_ ? DropoutPlan::eval() : drop;
    return cache_.emplace(&s, parser_->encoder().encode(g, s, plan, rng)).first->second;
  }

  std::vector<Var> reps(Graph& g, const AnnotatedSentence& s, const DropoutPlan& drop,
                        std::mt19937_64& rng) {
    const EncodedSentence& enc = encoded(g, s, drop, rng);
    int N = static_cast<int>(enc.layers.size());
    if (g.value(g.param(*logits_)).dim() != N)
      throw DimError("syntactic fusion has " +
                     std::to_string(g.value(g.param(*logits_)).dim()) +
                     " logits for " + std::to_string(N) + " layers");
    std::vector<Var> out;
    out.reserve(s.size());
    for (int i = 0; i < s.size(); ++i) {
      std::vector<Var> layer_vecs;
      layer_vecs.reserve(N);
      for (int j = 0; j < N; ++j) {
        Var h = enc.layers[j][i];
        layer_vecs.push_back(frozen_ ? g.detach(h) : h);
      }
      out.push_back(weighted_layer_sum(g, layer_vecs, g.param(*logits_)));
    }
    return out;
  }

 private:
  DepParser* parser_;
  Parameter* logits_;
  bool frozen_;
  unsigned long long graph_uid_ = 0;
  std::map<const AnnotatedSentence*, EncodedSentence> cache_;
};

// L = L_srl + alpha * L_dep.
inline Var joint_loss(Graph& g, Var srl_loss, Var dep_loss, double alpha_loss) {
  return g.add(srl_loss, g.scale(dep_loss, alpha_loss));
}

inline std::vector<Parameter*> registry_intersection(
    const std::vector<Parameter*>& a, const std::vector<Parameter*>& b) {
  std::set<Parameter*> sa(a.begin(), a.end());
  std::vector<Parameter*> out;
  for (auto* p : b)
    if (sa.count(p)) out.push_back(p);
  return out;
}

// Verifies the hard-parameter-sharing wiring: one encoder object behind both
// task heads, and the shared registry is exactly the encoder registry.
inline std::vector<Parameter*> assemble_hps(SrlModel& srl, DepParser& parser) {
  if (&srl.encoder() != &parser.encoder())
    throw ConfigError("hard parameter sharing needs one shared encoder instance");
  auto shared = registry_intersection(
      const_cast<std::vector<Parameter*>&>(srl.registry()),
      const_cast<std::vector<Parameter*>&>(parser.registry()));
  if (shared.size() != srl.encoder().registry().size())
    throw ConfigError("shared registry does not match the encoder registry");
  return shared;
}

// A parser restored from a checkpoint into its own store; the store is never
// handed to the optimizer, so every parser parameter stays fixed. The parser
// keeps the vocabulary it was trained with, read from the `<ckpt>.vocab`
// sidecar written next to every checkpoint.
struct FrozenParser {
  Vocabulary vocab;
  ParameterStore store;
  std::shared_ptr<Encoder> encoder;
  std::unique_ptr<DepParser> parser;
};

inline std::unique_ptr<FrozenParser> load_fir(const std::string& checkpoint_path,
                                              EncoderConfig ecfg, DepConfig dcfg,
                                              const std::string& prefix = "dep") {
  auto out = std::make_unique<FrozenParser>();
  {
    std::ifstream vin(checkpoint_path + ".vocab");
    if (!vin)
      throw IoError("missing vocabulary sidecar " + checkpoint_path + ".vocab");
    out->vocab = Vocabulary::load(vin);
  }
  std::mt19937_64 rng(0);  // placeholder values, overwritten by the checkpoint
  out->encoder =
      std::make_shared<Encoder>(out->store, prefix + ".enc", out->vocab, ecfg, rng);
  out->parser = std::make_unique<DepParser>(out->store, prefix, out->vocab,
                                            out->encoder, dcfg, rng);
  try {
    load_checkpoint(out->store, checkpoint_path);
  } catch (const IoError& e) {
    throw IoError("incompatible parser checkpoint " + checkpoint_path + ": " +
                  e.what());
  }
  return out;
}

// Mixed-batch scheduler. Each call draws the configured number of instances
// from each corpus; an exhausted corpus is reshuffled (seeded) and its cursor
// reset, so both tasks advance independently.
class BatchPlan {
 public:
  struct Batch {
    std::vector<int> srl;  // indices into the SRL corpus
    std::vector<int> dep;  // indices into the dependency corpus
  };

  BatchPlan(int srl_per_batch, int dep_per_batch, size_t srl_size, size_t dep_size,
            unsigned long seed)
      : srl_per_batch_(srl_per_batch), dep_per_batch_(dep_per_batch), rng_(seed) {
    if (srl_per_batch_ < 0 || dep_per_batch_ < 0)
      throw ConfigError("batch sizes must be nonnegative");
    if (srl_per_batch_ > 0 && srl_size == 0)
      throw ConfigError("batch plan draws SRL instances but the corpus is empty");
    if (dep_per_batch_ > 0 && dep_size == 0)
      throw ConfigError("batch plan draws dependency instances but the corpus is empty");
    srl_order_.resize(srl_size);
    dep_order_.resize(dep_size);
    for (size_t i = 0; i < srl_size; ++i) srl_order_[i] = static_cast<int>(i);
    for (size_t i = 0; i < dep_size; ++i) dep_order_[i] = static_cast<int>(i);
    shuffle(srl_order_);
    shuffle(dep_order_);
  }

  Batch next() {
    Batch b;
    for (int k = 0; k < srl_per_batch_; ++k) b.srl.push_back(draw(srl_order_, srl_cur_));
    for (int k = 0; k < dep_per_batch_; ++k) b.dep.push_back(draw(dep_order_, dep_cur_));
    return b;
  }

 private:
  void shuffle(std::vector<int>& xs) {
    for (size_t i = xs.size(); i > 1; --i)
      std::swap(xs[i - 1], xs[rng_() % i]);
  }

  int draw(std::vector<int>& order, size_t& cursor) {
    if (cursor >= order.size()) {
      shuffle(order);
      cursor = 0;
    }
    return order[cursor++];
  }

  int srl_per_batch_;
  int dep_per_batch_;
  std::mt19937_64 rng_;
  std::vector<int> srl_order_, dep_order_;
  size_t srl_cur_ = 0, dep_cur_ = 0;
};

}  // namespace srlkit
