#include <catch2/catch.hpp>

#include <random>

#include "gradcheck.hpp"
#include "srlkit/encoder.hpp"
#include "srlkit/synthetic.hpp"

using namespace srlkit;

namespace {

AnnotatedSentence make_sentence(std::vector<std::string> tokens) {
  AnnotatedSentence s;
  s.tokens = std::move(tokens);
  fill_chars(s);
  return s;
}

Vocabulary small_vocab() {
  Vocabulary v;
  auto s1 = make_sentence({"alpha", "beta", "gamma", "delta", "x", "yz"});
  std::vector<AnnotatedSentence> corpus{s1};
  v.build({&corpus});
  return v;
}

EncoderConfig small_cfg() {
  EncoderConfig cfg;
  cfg.word_dim = 6;
  cfg.char_dim = 4;
  cfg.cnn_windows = {2, 3};
  cfg.cnn_channels = 5;
  cfg.layers = 2;
  cfg.hidden = 7;
  return cfg;
}

}  // namespace

TEST_CASE("char cnn basics", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(2);
  ParameterStore store;
  Encoder enc(store, "enc", vocab, small_cfg(), rng);

  SECTION("single character token goes through padding") {
    Graph g;
    Var r = enc.char_rep(g, {"x"});
    REQUIRE(g.value(r).dim() == 10);  // 2 windows x 5 channels
  }
  SECTION("identical tokens map to identical vectors") {
    Graph g;
    Var a = enc.char_rep(g, utf8_chars("beta"));
    Var b = enc.char_rep(g, utf8_chars("beta"));
    for (int i = 0; i < 10; ++i) REQUIRE(g.value(a).at(i) == g.value(b).at(i));
  }
  SECTION("character order matters for some filter set") {
    bool any_diff = false;
    for (unsigned long seed = 0; seed < 4 && !any_diff; ++seed) {
      std::mt19937_64 r2(100 + seed);
      ParameterStore s2;
      Encoder e2(s2, "enc", vocab, small_cfg(), r2);
      Graph g;
      Var a = e2.char_rep(g, {"a", "b", "e", "t"});
      Var b = e2.char_rep(g, {"t", "e", "b", "a"});
      for (int i = 0; i < 10; ++i)
        if (g.value(a).at(i) != g.value(b).at(i)) any_diff = true;
    }
    REQUIRE(any_diff);
  }
  SECTION("empty token is rejected") {
    Graph g;
    REQUIRE_THROWS_AS(enc.char_rep(g, {}), DimError);
  }
}

TEST_CASE("build_input dimension arithmetic", "[encoder]") {
  Vocabulary vocab = small_vocab();

  SECTION("default configuration gives 300 + 100") {
    std::mt19937_64 rng(3);
    ParameterStore store;
    EncoderConfig cfg;  // defaults: 3 windows x 100 channels + word 100
    Encoder enc(store, "enc", vocab, cfg, rng);
    auto s = make_sentence({"alpha", "beta"});
    Graph g;
    DropoutPlan ev = DropoutPlan::eval();
    Var x = enc.build_input(g, s, 0, ev, rng);
    REQUIRE(g.value(x).dim() == 400);
  }
  SECTION("input is independent of external file when disabled") {
    std::mt19937_64 rng(3);
    ParameterStore store;
    Encoder enc(store, "enc", vocab, small_cfg(), rng);
    auto s = make_sentence({"alpha", "beta"});
    Graph g;
    DropoutPlan ev = DropoutPlan::eval();
    Var a = enc.build_input(g, s, 0, ev, rng);
    s.ext_layers.assign(2, std::vector<Tensor>(4, Tensor({8})));
    Var b = enc.build_input(g, s, 0, ev, rng);
    REQUIRE(g.value(a).dim() == g.value(b).dim());
    for (int i = 0; i < g.value(a).dim(); ++i)
      REQUIRE(g.value(a).at(i) == g.value(b).at(i));
  }
  SECTION("identical tokens in identical configurations agree") {
    std::mt19937_64 rng(3);
    ParameterStore store;
    Encoder enc(store, "enc", vocab, small_cfg(), rng);
    auto s = make_sentence({"gamma", "beta", "gamma"});
    Graph g;
    DropoutPlan ev = DropoutPlan::eval();
    Var a = enc.build_input(g, s, 0, ev, rng);
    Var b = enc.build_input(g, s, 2, ev, rng);
    for (int i = 0; i < g.value(a).dim(); ++i)
      REQUIRE(g.value(a).at(i) == g.value(b).at(i));
  }
  SECTION("missing external representations are a configuration error") {
    std::mt19937_64 rng(3);
    ParameterStore store;
    EncoderConfig cfg = small_cfg();
    cfg.use_ext = true;
    cfg.ext_layers = 2;
    cfg.ext_dim = 3;
    Encoder enc(store, "enc", vocab, cfg, rng);
    auto s = make_sentence({"alpha"});
    Graph g;
    DropoutPlan ev = DropoutPlan::eval();
    REQUIRE_THROWS_AS(enc.build_input(g, s, 0, ev, rng), ConfigError);
  }
}

TEST_CASE("external layer fusion", "[encoder]") {
  std::mt19937_64 rng(5);

  SECTION("equal logits K=4 average the layers") {
    Graph g;
    std::vector<Var> layers;
    for (int k = 0; k < 4; ++k)
      layers.push_back(g.input({static_cast<double>(k), 1.0}));
    Var logits = g.input({0.7, 0.7, 0.7, 0.7});
    Var fused = weighted_layer_sum(g, layers, logits);
    REQUIRE(g.value(fused).at(0) == Approx(1.5).margin(1e-12));
    REQUIRE(g.value(fused).at(1) == Approx(1.0).margin(1e-12));
  }
  SECTION("K=1 is the identity regardless of the logit") {
    Graph g;
    std::vector<Var> layers{g.input({2.0, -3.0, 0.5})};
    Var fused = weighted_layer_sum(g, layers, g.input({12.3}));
    for (int i = 0; i < 3; ++i)
      REQUIRE(g.value(fused).at(i) == Approx(g.value(layers[0]).at(i)).margin(1e-12));
  }
  SECTION("a dominant logit selects its layer") {
    Graph g;
    std::vector<Var> layers{g.input({1.0, 0.0}), g.input({0.0, 1.0}),
                            g.input({5.0, 5.0})};
    Var fused = weighted_layer_sum(g, layers, g.input({0.0, 50.0, 0.0}));
    REQUIRE(g.value(fused).at(0) == Approx(0.0).margin(1e-12));
    REQUIRE(g.value(fused).at(1) == Approx(1.0).margin(1e-12));
  }
  SECTION("matches explicit weighted summation on random inputs") {
    for (int it = 0; it < 10; ++it) {
      Graph g;
      int K = 2 + static_cast<int>(rng() % 4), d = 3;
      std::vector<Var> layers;
      Tensor logits({K});
      for (int k = 0; k < K; ++k) {
        Tensor t({d});
        for (double& x : t.v) x = rand_uniform(rng, -2.0, 2.0);
        layers.push_back(g.input(t));
        logits.at(k) = rand_uniform(rng, -1.0, 1.0);
      }
      Var fused = weighted_layer_sum(g, layers, g.input(logits));
      // direct summation oracle
      std::vector<double> w(K);
      double mx = *std::max_element(logits.v.begin(), logits.v.end()), z = 0;
      for (int k = 0; k < K; ++k) z += std::exp(logits.at(k) - mx);
      for (int k = 0; k < K; ++k) w[k] = std::exp(logits.at(k) - mx) / z;
      for (int j = 0; j < d; ++j) {
        double expect = 0;
        for (int k = 0; k < K; ++k) expect += w[k] * g.value(layers[k]).at(j);
        REQUIRE(g.value(fused).at(j) == Approx(expect).margin(1e-12));
      }
    }
  }
}

TEST_CASE("encode shapes and boundary cases", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(7);
  ParameterStore store;
  Encoder enc(store, "enc", vocab, small_cfg(), rng);
  DropoutPlan ev = DropoutPlan::eval();

  SECTION("single-token sentence encodes") {
    auto s = make_sentence({"alpha"});
    Graph g;
    auto encoded = enc.encode(g, s, ev, rng);
    REQUIRE(encoded.layers.size() == 2);
    REQUIRE(encoded.top().size() == 1);
    REQUIRE(g.value(encoded.top()[0]).dim() == 14);
  }
  SECTION("empty sentence is rejected") {
    AnnotatedSentence s;
    Graph g;
    REQUIRE_THROWS_AS(enc.encode(g, s, ev, rng), DimError);
  }
  SECTION("every layer is retained with uniform length") {
    auto s = make_sentence({"alpha", "beta", "gamma"});
    Graph g;
    auto encoded = enc.encode(g, s, ev, rng);
    for (const auto& layer : encoded.layers) {
      REQUIRE(layer.size() == 3);
      for (const auto& h : layer) REQUIRE(g.value(h).dim() == 14);
    }
  }
}

TEST_CASE("context sensitivity: distant token changes output", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(9);
  ParameterStore store;
  Encoder enc(store, "enc", vocab, small_cfg(), rng);
  DropoutPlan ev = DropoutPlan::eval();

  Graph g1, g2;
  auto a = make_sentence({"alpha", "beta", "gamma"});
  auto b = make_sentence({"alpha", "beta", "delta"});
  auto ea = enc.encode(g1, a, ev, rng);
  auto eb = enc.encode(g2, b, ev, rng);
  bool differs = false;
  for (int j = 0; j < 14; ++j)
    if (g1.value(ea.top()[0]).at(j) != g2.value(eb.top()[0]).at(j)) differs = true;
  REQUIRE(differs);
}

TEST_CASE("mirror symmetry under direction swap", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(13);
  ParameterStore store;
  EncoderConfig cfg = small_cfg();
  Encoder enc(store, "enc", vocab, cfg, rng);
  int H = cfg.hidden;

  // transform-only highway so layer outputs equal the raw BiLSTM concat
  for (int l = 0; l < cfg.layers; ++l) {
    store.get("enc.l" + std::to_string(l) + ".highway.Wg").value.fill(0.0);
    store.get("enc.l" + std::to_string(l) + ".highway.bg").value.fill(50.0);
  }

  DropoutPlan ev = DropoutPlan::eval();
  auto s = make_sentence({"alpha", "beta", "gamma"});
  Graph g1;
  auto fwd_run = enc.encode(g1, s, ev, rng);
  std::vector<Tensor> outputs;
  for (const auto& h : fwd_run.top()) outputs.push_back(g1.value(h));

  // swap direction-specific parameters
  auto swap_vals = [&](const std::string& a, const std::string& b) {
    std::swap(store.get(a).value, store.get(b).value);
  };
  for (int l = 0; l < cfg.layers; ++l) {
    std::string lp = "enc.l" + std::to_string(l);
    for (const char* leaf : {".Wx", ".Wh", ".b"})
      swap_vals(lp + ".fwd" + leaf, lp + ".bwd" + leaf);
  }
  // layers above the first consume direction-structured input: swap the
  // column halves of their input weights (and of the projection)
  auto swap_col_halves = [&](Tensor& t) {
    int rows = t.rows(), cols = t.cols();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols / 2; ++j)
        std::swap(t.v[i * cols + j], t.v[i * cols + j + cols / 2]);
  };
  for (int l = 1; l < cfg.layers; ++l) {
    std::string lp = "enc.l" + std::to_string(l);
    swap_col_halves(store.get(lp + ".fwd.Wx").value);
    swap_col_halves(store.get(lp + ".bwd.Wx").value);
    if (store.has(lp + ".proj")) swap_col_halves(store.get(lp + ".proj").value);
  }

  auto rs = make_sentence({"gamma", "beta", "alpha"});
  Graph g2;
  auto rev_run = enc.encode(g2, rs, ev, rng);
  for (int i = 0; i < 3; ++i) {
    const Tensor& got = g2.value(rev_run.top()[i]);
    const Tensor& want = outputs[2 - i];
    for (int j = 0; j < H; ++j) {
      REQUIRE(got.at(j) == Approx(want.at(H + j)).margin(1e-10));
      REQUIRE(got.at(H + j) == Approx(want.at(j)).margin(1e-10));
    }
  }
}

TEST_CASE("variational masks are per-sequence, not per-timestep", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(17);
  ParameterStore store;
  Encoder enc(store, "enc", vocab, small_cfg(), rng);
  DropoutPlan train{0.5, 0.2, 0.4, true};

  auto s = make_sentence({"alpha", "beta", "gamma", "delta", "x", "yz"});
  Graph g;
  enc.encode(g, s, train, rng);
  // two masks per layer regardless of sequence length
  REQUIRE(enc.last_recurrent_masks().size() == 4);
  for (const auto& m : enc.last_recurrent_masks()) REQUIRE(m.dim() == 7);
}

TEST_CASE("gradients reach char filters, word embeddings and fusion logits", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(19);
  ParameterStore store;
  EncoderConfig cfg = small_cfg();
  cfg.use_ext = true;
  cfg.ext_layers = 2;
  cfg.ext_dim = 3;
  Encoder enc(store, "enc", vocab, cfg, rng);

  auto s = make_sentence({"alpha", "beta"});
  s.ext_layers.assign(2, std::vector<Tensor>(2, Tensor({3})));
  for (auto& tok : s.ext_layers)
    for (auto& layer : tok)
      for (double& x : layer.v) x = rand_uniform(rng, -1.0, 1.0);

  DropoutPlan ev = DropoutPlan::eval();
  Graph g;
  auto encoded = enc.encode(g, s, ev, rng);
  Var loss = g.constant_scalar(0.0);
  for (const auto& h : encoded.top()) loss = g.add(loss, g.sum_all(g.tanh_(h)));
  g.backward(loss);

  auto nonzero = [&](const std::string& name) {
    const Tensor& grad = store.get(name).grad;
    for (double x : grad.v)
      if (x != 0.0) return true;
    return false;
  };
  REQUIRE(nonzero("enc.cnn2.W"));
  REQUIRE(nonzero("enc.cnn3.W"));
  REQUIRE(nonzero("enc.word_emb"));
  REQUIRE(nonzero("enc.ext_fusion"));
}

TEST_CASE("encoder gradient check end to end", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(23);
  ParameterStore store;
  EncoderConfig cfg = small_cfg();
  cfg.layers = 1;
  cfg.hidden = 3;
  cfg.word_dim = 3;
  cfg.char_dim = 2;
  cfg.cnn_windows = {2};
  cfg.cnn_channels = 2;
  Encoder enc(store, "enc", vocab, cfg, rng);
  auto s = make_sentence({"alpha", "beta"});
  DropoutPlan ev = DropoutPlan::eval();
  std::mt19937_64 rng2(1);

  auto res = gradcheck::check(store, [&](Graph& g) {
    auto encoded = enc.encode(g, s, ev, rng2);
    Var loss = g.constant_scalar(0.0);
    for (const auto& h : encoded.top()) loss = g.add(loss, g.sum_all(g.tanh_(h)));
    return loss;
  });
  INFO(res.where);
  REQUIRE(res.max_rel_err < 1e-4);
}

TEST_CASE("encoding a sentence is unaffected by surrounding batch", "[encoder]") {
  Vocabulary vocab = small_vocab();
  std::mt19937_64 rng(29);
  ParameterStore store;
  Encoder enc(store, "enc", vocab, small_cfg(), rng);
  DropoutPlan ev = DropoutPlan::eval();

  auto target = make_sentence({"alpha", "beta", "gamma"});
  auto other = make_sentence({"delta", "x"});

  Graph alone;
  auto ea = enc.encode(alone, target, ev, rng);
  Graph batch;
  enc.encode(batch, other, ev, rng);
  auto eb = enc.encode(batch, target, ev, rng);
  enc.encode(batch, other, ev, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 14; ++j)
      REQUIRE(alone.value(ea.top()[i]).at(j) == batch.value(eb.top()[i]).at(j));
}

TEST_CASE("fusion rejects a layer-count mismatch", "[encoder]") {
  Graph g;
  std::vector<Var> layers{g.input({1.0, 2.0}), g.input({3.0, 4.0})};
  REQUIRE_THROWS_AS(weighted_layer_sum(g, layers, g.input({0.0, 0.0, 0.0})), DimError);
}

TEST_CASE("frozen word embeddings stay fixed under training", "[encoder]") {
  Vocabulary vocab;
  AnnotatedSentence s0;
  s0.tokens = {"alpha", "beta"};
  fill_chars(s0);
  std::vector<AnnotatedSentence> corpus{s0};
  vocab.build({&corpus});
  std::mt19937_64 rng(3);
  ParameterStore store;
  EncoderConfig cfg = small_cfg();
  cfg.freeze_word_emb = true;
  Encoder enc(store, "enc", vocab, cfg, rng);
  Tensor before = store.get("enc.word_emb").value;
  DropoutPlan ev = DropoutPlan::eval();
  Graph g;
  auto encoded = enc.encode(g, s0, ev, rng);
  Var loss = g.constant_scalar(0.0);
  for (const auto& h : encoded.top()) loss = g.add(loss, g.sum_all(g.tanh_(h)));
  g.backward(loss);
  adam_step(store, 0.01);
  for (size_t i = 0; i < before.v.size(); ++i)
    REQUIRE(before.v[i] == store.get("enc.word_emb").value.v[i]);
  // the char table is trainable and does move
  REQUIRE(store.get("enc.char_emb").value.v != before.v);
}
