#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srlkit/data.hpp"
#include "srlkit/dropout.hpp"
#include "srlkit/error.hpp"
#include "srlkit/graph.hpp"
#include "srlkit/params.hpp"
#include "srlkit/rnn.hpp"

namespace srlkit {

struct EncoderConfig {
  int word_dim = 100;
  int char_dim = 100;
  std::vector<int> cnn_windows{3, 4, 5};
  int cnn_channels = 100;
  int layers = 3;   // stacked bidirectional layers
  int hidden = 300; // per direction
  bool use_ext = false;  // external contextual layers fused at the input
  int ext_layers = 4;    // K
  int ext_dim = 0;       // d_ext, required when use_ext
  bool use_syn = false;  // syntactic representation concatenated at the input
  int syn_dim = 0;
  bool freeze_word_emb = false;

  int char_rep_dim() const {
    return static_cast<int>(cnn_windows.size()) * cnn_channels;
  }
  int input_dim() const {
    return char_rep_dim() + word_dim + (use_ext ? ext_dim : 0) +
           (use_syn ? syn_dim : 0);
  }
  int output_dim() const { return 2 * hidden; }

  void validate() const {
    if (layers < 1) throw ConfigError("encoder needs at least one layer");
    if (word_dim < 1 || char_dim < 1 || cnn_channels < 1 || hidden < 1)
      throw ConfigError("encoder dimensions must be positive");
    if (cnn_windows.empty()) throw ConfigError("encoder needs at least one CNN window");
    if (use_ext && (ext_dim < 1 || ext_layers < 1))
      throw ConfigError("external representations enabled without K/d_ext");
    if (use_syn && syn_dim < 1)
      throw ConfigError("syntactic representations enabled without a dimension");
  }
};

// Per-layer hidden sequences; layers.back() is the top layer h_i.
struct EncodedSentence {
  std::vector<std::vector<Var>> layers;  // [layer][token]
  int size() const { return layers.empty() ? 0 : static_cast<int>(layers[0].size()); }
  const std::vector<Var>& top() const { return layers.back(); }
};

// Softmax-normalized weighted sum of equally sized layer vectors.
inline Var weighted_layer_sum(Graph& g, const std::vector<Var>& layers, Var logits) {
  if (layers.empty()) throw DimError("weighted_layer_sum: no layers");
  if (g.value(logits).rank() != 1 ||
      g.value(logits).dim() != static_cast<int>(layers.size()))
    throw DimError("weighted_layer_sum: " + std::to_string(layers.size()) +
                   " layers but " + g.value(logits).shape_str() + " logits");
  Var weights = g.softmax(logits);
  Var stack = g.stack_rows(layers);              // (K x d)
  return g.matmul(g.transpose(stack), weights);  // (d)
}

// Input assembly plus the stacked highway BiLSTM. One instance owns its
// parameters; two models may share one instance to share the whole encoder.
class Encoder {
 public:
  Encoder(ParameterStore& store, const std::string& prefix, const Vocabulary& vocab,
          EncoderConfig cfg, std::mt19937_64& rng,
          const Tensor* pretrained_words = nullptr)
      : cfg_(cfg), vocab_(&vocab), prefix_(prefix) {
    cfg_.validate();
    word_emb_ = own(store.add(prefix + ".word_emb", {vocab.n_words(), cfg_.word_dim},
                              Init::uniform_small, rng));
    if (pretrained_words) {
      if (pretrained_words->shape != word_emb_->value.shape)
        throw ConfigError("pretrained embedding table is " +
                          pretrained_words->shape_str() + ", expected " +
                          word_emb_->value.shape_str());
      word_emb_->value = *pretrained_words;
    }
    word_emb_->trainable = !cfg_.freeze_word_emb;
    char_emb_ = own(store.add(prefix + ".char_emb", {vocab.n_chars(), cfg_.char_dim},
                              Init::uniform_small, rng));
    for (size_t wi = 0; wi < cfg_.cnn_windows.size(); ++wi) {
      int w = cfg_.cnn_windows[wi];
      cnn_filters_.push_back(own(store.add(prefix + ".cnn" + std::to_string(w) + ".W",
                                           {w * cfg_.char_dim, cfg_.cnn_channels},
                                           Init::glorot, rng)));
      cnn_bias_.push_back(own(store.add(prefix + ".cnn" + std::to_string(w) + ".b",
                                        {cfg_.cnn_channels}, Init::zeros, rng)));
    }
    if (cfg_.use_ext)
      ext_logits_ = own(store.add(prefix + ".ext_fusion", {cfg_.ext_layers},
                                  Init::zeros, rng));
    int in_dim = cfg_.input_dim();
    for (int l = 0; l < cfg_.layers; ++l) {
      std::string lp = prefix + ".l" + std::to_string(l);
      fwd_.push_back(LstmCell::create(store, lp + ".fwd", in_dim, cfg_.hidden, rng));
      bwd_.push_back(LstmCell::create(store, lp + ".bwd", in_dim, cfg_.hidden, rng));
      own(*fwd_.back().wx); own(*fwd_.back().wh); own(*fwd_.back().b);
      own(*bwd_.back().wx); own(*bwd_.back().wh); own(*bwd_.back().b);
      if (in_dim != cfg_.output_dim())
        proj_.push_back(own(store.add(lp + ".proj", {cfg_.output_dim(), in_dim},
                                      Init::glorot, rng)));
      else
        proj_.push_back(nullptr);
      gates_.push_back(HighwayGate::create(store, lp + ".highway", cfg_.output_dim(), rng));
      own(*gates_.back().w); own(*gates_.back().b);
      in_dim = cfg_.output_dim();
    }
  }

  const EncoderConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }
  const std::vector<Parameter*>& registry() const { return registry_; }

  // Character CNN: embed, pad to the widest window, convolve per window,
  // max-pool positions, concatenate channels.
  Var char_rep(Graph& g, const std::vector<std::string>& chars) const {
    if (chars.empty()) throw DimError("char_rep: empty token");
    int max_w = *std::max_element(cfg_.cnn_windows.begin(), cfg_.cnn_windows.end());
    std::vector<Var> rows;
    Var table = g.param(*char_emb_);
    for (const auto& c : chars) rows.push_back(g.row(table, vocab_->chr(c)));
    while (static_cast<int>(rows.size()) < max_w)
      rows.push_back(g.row(table, Vocabulary::kPad));
    Var emb = g.stack_rows(rows);
    std::vector<Var> pooled;
    for (size_t wi = 0; wi < cfg_.cnn_windows.size(); ++wi) {
      Var conv = g.conv1d(emb, g.param(*cnn_filters_[wi]), cfg_.cnn_windows[wi]);
      Var act = g.relu(g.add_rowvec(conv, g.param(*cnn_bias_[wi])));
      pooled.push_back(g.max_pool_rows(act));
    }
    return pooled.size() == 1 ? pooled[0] : g.concat(pooled);
  }

  // x_i = rep_char (+dropout) ⊕ word embedding (+dropout) ⊕ fused external
  // layers ⊕ syntactic representation, per configuration.
  Var build_input(Graph& g, const AnnotatedSentence& s, int token,
                  const DropoutPlan& drop, std::mt19937_64& rng,
                  const std::vector<Var>* syn_reps = nullptr) const {
    std::vector<Var> parts;
    Var cr = char_rep(g, s.chars[token]);
    parts.push_back(drop.apply_input(g, cr, rng));
    Var we = g.row(g.param(*word_emb_), vocab_->word(s.tokens[token]));
    parts.push_back(drop.apply_input(g, we, rng));
    if (cfg_.use_ext) {
      if (s.ext_layers.empty())
        throw ConfigError("external representations enabled but none attached to sentence");
      const auto& layers = s.ext_layers[token];
      if (static_cast<int>(layers.size()) != cfg_.ext_layers)
        throw DimError("sentence has " + std::to_string(layers.size()) +
                       " external layers, configured for " +
                       std::to_string(cfg_.ext_layers));
      std::vector<Var> lv;
      for (const auto& t : layers) lv.push_back(g.input(t));
      parts.push_back(weighted_layer_sum(g, lv, g.param(*ext_logits_)));
    }
    if (cfg_.use_syn) {
      if (!syn_reps)
        throw ConfigError("syntactic representations enabled but none supplied");
      parts.push_back((*syn_reps)[token]);
    }
    return g.concat(parts);
  }

  // Runs the stacked bidirectional layers and keeps every layer's outputs.
  EncodedSentence encode(Graph& g, const AnnotatedSentence& s, const DropoutPlan& drop,
                         std::mt19937_64& rng,
                         const std::vector<Var>* syn_reps = nullptr) const {
    int n = s.size();
    if (n == 0) throw DimError("encode: empty sentence");
    std::vector<Var> xs;
    xs.reserve(n);
    for (int i = 0; i < n; ++i) xs.push_back(build_input(g, s, i, drop, rng, syn_reps));

    last_rec_masks_.clear();
    EncodedSentence out;
    std::vector<Var> cur = xs;
    for (int l = 0; l < cfg_.layers; ++l) {
      if (l > 0)
        for (Var& x : cur) x = drop.apply_hidden(g, x, rng);
      // one variational mask per direction, shared across all timesteps
      Var fwd_mask = g.input(drop.recurrent_mask(cfg_.hidden, rng));
      Var bwd_mask = g.input(drop.recurrent_mask(cfg_.hidden, rng));
      last_rec_masks_.push_back(g.value(fwd_mask));
      last_rec_masks_.push_back(g.value(bwd_mask));
      std::vector<Var> f(n), b(n);
      LstmState fs = lstm_zero_state(g, cfg_.hidden);
      for (int i = 0; i < n; ++i) {
        fs = lstm_step(g, fwd_[l], cur[i], fs, fwd_mask);
        f[i] = fs.h;
      }
      LstmState bs = lstm_zero_state(g, cfg_.hidden);
      for (int i = n - 1; i >= 0; --i) {
        bs = lstm_step(g, bwd_[l], cur[i], bs, bwd_mask);
        b[i] = bs.h;
      }
      std::vector<Var> layer_out(n);
      for (int i = 0; i < n; ++i) {
        Var o = g.concat({f[i], b[i]});
        Var xin = proj_[l] ? g.matmul(g.param(*proj_[l]), cur[i]) : cur[i];
        layer_out[i] = highway_combine(g, xin, o, gates_[l]);
      }
      out.layers.push_back(layer_out);
      cur = layer_out;
    }
    return out;
  }

  Parameter& ext_fusion_logits() {
    if (!ext_logits_) throw ConfigError("external fusion not configured");
    return *ext_logits_;
  }

  // Masks sampled by the most recent encode() call, two per layer.
  const std::vector<Tensor>& last_recurrent_masks() const { return last_rec_masks_; }

 private:
  Parameter* own(Parameter& p) {
    registry_.push_back(&p);
    return &p;
  }

  EncoderConfig cfg_;
  const Vocabulary* vocab_;
  std::string prefix_;
  Parameter* word_emb_ = nullptr;
  Parameter* char_emb_ = nullptr;
  std::vector<Parameter*> cnn_filters_, cnn_bias_;
  Parameter* ext_logits_ = nullptr;
  std::vector<LstmCell> fwd_, bwd_;
  std::vector<Parameter*> proj_;
  std::vector<HighwayGate> gates_;
  std::vector<Parameter*> registry_;
  mutable std::vector<Tensor> last_rec_masks_;
};

}  // namespace srlkit
