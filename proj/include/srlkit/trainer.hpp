#pragma once

// Run orchestration: corpus loading, model assembly per integration mode,
// the mixed-batch training loop with periodic dev evaluation, checkpoints and
// the run log. One training process per run directory, enforced by a lock
// file.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "srlkit/config.hpp"
#include "srlkit/conll.hpp"
#include "srlkit/data.hpp"
#include "srlkit/dep_parser.hpp"
#include "srlkit/dropout.hpp"
#include "srlkit/embeddings.hpp"
#include "srlkit/encoder.hpp"
#include "srlkit/eval.hpp"
#include "srlkit/mtl.hpp"
#include "srlkit/srl_model.hpp"

namespace srlkit {

struct Corpora {
  std::vector<AnnotatedSentence> srl_train, srl_dev;
  std::vector<AnnotatedSentence> dep_train, dep_dev;
};

inline Corpora load_corpora(const RunConfig& cfg) {
  Corpora c;
  if (cfg.task == "span") {
    c.srl_train = read_span_props(cfg.train_words, cfg.train_props);
    if (!cfg.dev_words.empty()) c.srl_dev = read_span_props(cfg.dev_words, cfg.dev_props);
  } else if (cfg.task == "word") {
    c.srl_train = read_conll2009(cfg.train_conll09);
    if (!cfg.dev_conll09.empty()) c.srl_dev = read_conll2009(cfg.dev_conll09);
  }
  if (!cfg.dep_train.empty()) c.dep_train = read_dep_treebank(cfg.dep_train);
  if (!cfg.dep_dev.empty()) c.dep_dev = read_dep_treebank(cfg.dep_dev);
  if (cfg.ext_rep) {
    attach_external_reps(c.srl_train, load_external_reps(cfg.ext_rep_path));
    if (!c.srl_dev.empty())
      attach_external_reps(c.srl_dev, load_external_reps(cfg.ext_rep_dev_path));
  }
  return c;
}

// Writes the checkpoint together with its vocabulary sidecar.
inline void save_checkpoint_with_vocab(const ParameterStore& store,
                                       const Vocabulary& vocab,
                                       const std::string& path) {
  save_checkpoint(store, path);
  std::ofstream vout(path + ".vocab");
  if (!vout) throw IoError("cannot write " + path + ".vocab");
  vocab.save(vout);
}

// Models assembled for a configuration and vocabulary. Usable for training
// and, after load_checkpoint, for prediction.
struct ModelBundle {
  Vocabulary vocab;
  ParameterStore store;
  std::shared_ptr<Encoder> srl_encoder;  // also the shared encoder under hps
  std::unique_ptr<SrlModel> srl;
  std::shared_ptr<Encoder> dep_encoder;
  std::unique_ptr<DepParser> parser;
  std::unique_ptr<FrozenParser> frozen;
  Parameter* syn_logits = nullptr;
  std::unique_ptr<SynProvider> provider;

  // ext_dim is the d_ext found in the loaded representation files; required
  // when cfg.ext_rep is on.
  ModelBundle(const RunConfig& cfg, Vocabulary v, std::mt19937_64& rng,
              const Tensor* pretrained = nullptr, int ext_dim = -1)
      : vocab(std::move(v)) {
    Integration mode = parse_integration(cfg.integration);

    EncoderConfig ecfg;
    ecfg.word_dim = cfg.word_dim;
    ecfg.char_dim = cfg.char_dim;
    ecfg.cnn_windows = cfg.cnn_window_list();
    ecfg.cnn_channels = cfg.cnn_channels;
    ecfg.layers = cfg.layers;
    ecfg.hidden = cfg.hidden;
    ecfg.freeze_word_emb = cfg.freeze_word_emb;
    DepConfig dcfg;
    dcfg.arc_mlp = cfg.arc_mlp;
    dcfg.label_mlp = cfg.label_mlp;

    if (cfg.task == "dep") {
      dep_encoder = std::make_shared<Encoder>(store, "dep.enc", vocab, ecfg, rng,
                                              pretrained);
      parser = std::make_unique<DepParser>(store, "dep", vocab, dep_encoder, dcfg, rng);
      return;
    }

    SrlConfig scfg;
    scfg.mlp_hidden = cfg.mlp_hidden;
    scfg.mlp_depth = cfg.mlp_depth;
    scfg.lambda_p = cfg.lambda_p;
    scfg.lambda_a = cfg.lambda_a;
    scfg.max_width = cfg.span_width();
    scfg.word_mode = cfg.word_mode();
    scfg.gold_predicates = cfg.setup == "gold-predicates";
    scfg.force_gold_candidates = cfg.force_gold_candidates;

    EncoderConfig srl_ecfg = ecfg;
    if (cfg.ext_rep) {
      if (ext_dim < 1)
        throw ConfigError("ext_rep enabled but no representation dimension known");
      srl_ecfg.use_ext = true;
      srl_ecfg.ext_layers = cfg.ext_layers;
      srl_ecfg.ext_dim = ext_dim;
    }

    switch (mode) {
      case Integration::none:
        break;
      case Integration::hps: {
        srl_ecfg.use_syn = false;
        break;
      }
      case Integration::iir:
      case Integration::fir: {
        srl_ecfg.use_syn = true;
        srl_ecfg.syn_dim = ecfg.output_dim();
        break;
      }
    }

    if (mode == Integration::hps) {
      srl_encoder = std::make_shared<Encoder>(store, "shared.enc", vocab, srl_ecfg,
                                              rng, pretrained);
      dep_encoder = srl_encoder;
      srl = std::make_unique<SrlModel>(store, "srl", vocab, srl_encoder, scfg, rng);
      parser = std::make_unique<DepParser>(store, "dep", vocab, dep_encoder, dcfg, rng);
      assemble_hps(*srl, *parser);
      return;
    }

    if (mode == Integration::iir) {
      dep_encoder = std::make_shared<Encoder>(store, "dep.enc", vocab, ecfg, rng,
                                              pretrained);
      parser = std::make_unique<DepParser>(store, "dep", vocab, dep_encoder, dcfg, rng);
      syn_logits = &store.add("mtl.syn_logits", {ecfg.layers}, Init::zeros, rng);
      provider = std::make_unique<SynProvider>(parser.get(), syn_logits, false);
    } else if (mode == Integration::fir) {
      frozen = load_fir(cfg.fir_checkpoint, ecfg, dcfg);
      syn_logits = &store.add("mtl.syn_logits", {frozen->encoder->config().layers},
                              Init::zeros, rng);
      provider = std::make_unique<SynProvider>(frozen->parser.get(), syn_logits, true);
      srl_ecfg.syn_dim = frozen->encoder->config().output_dim();
    }

    srl_encoder = std::make_shared<Encoder>(store, "srl.enc", vocab, srl_ecfg, rng,
                                            pretrained);
    srl = std::make_unique<SrlModel>(store, "srl", vocab, srl_encoder, scfg, rng);
  }
};

struct TrainingState {
  long step = 0;
  double best_dev_f1 = -1.0;
  std::string best_checkpoint;
  std::vector<double> loss_history;          // mean batch loss per interval
  std::vector<double> prune_recall_history;  // per interval
  double final_dev_f1 = 0.0;
  double final_dep_uas = 0.0, final_dep_las = 0.0;
};

// Decodes SRL frames for a corpus with a frozen parameter snapshot.
inline std::vector<AnnotatedSentence> predict_srl(SrlModel& model,
                                                  SynProvider* provider,
                                                  const std::vector<AnnotatedSentence>& corpus) {
  DropoutPlan ev = DropoutPlan::eval();
  std::mt19937_64 rng(0);  // eval mode draws nothing
  std::vector<AnnotatedSentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    Graph g;
    std::vector<Var> syn;
    const std::vector<Var>* syn_ptr = nullptr;
    if (provider) {
      syn = provider->reps(g, s, ev, rng);
      syn_ptr = &syn;
    }
    auto sc = model.score(g, s, ev, rng, syn_ptr);
    AnnotatedSentence copy = s;
    copy.frames = model.decode(g, s, sc);
    out.push_back(std::move(copy));
  }
  return out;
}

inline std::vector<AnnotatedSentence> predict_dep(DepParser& parser,
                                                  const std::vector<AnnotatedSentence>& corpus) {
  DropoutPlan ev = DropoutPlan::eval();
  std::mt19937_64 rng(0);
  std::vector<AnnotatedSentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    Graph g;
    auto sc = parser.score(g, s, ev, rng);
    auto tree = DepParser::decode(g, sc);
    AnnotatedSentence copy = s;
    copy.has_dep = true;
    copy.dep = parser.to_arcs(tree);
    out.push_back(std::move(copy));
  }
  return out;
}

// Exclusive ownership of a run directory for the lifetime of the process.
class RunLock {
 public:
  explicit RunLock(const std::string& dir) : path_(dir + "/.lock") {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (std::filesystem::exists(path_))
      throw ConfigError("run directory " + dir + " is locked by another process");
    std::ofstream out(path_);
    out << "locked\n";
  }
  ~RunLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

class Trainer {
 public:
  Trainer(RunConfig cfg, Corpora corpora)
      : cfg_(std::move(cfg)), corpora_(std::move(corpora)),
        init_rng_(cfg_.seed), train_rng_(cfg_.seed ^ 0x517cc1b727220a95ULL) {
    cfg_.validate();
    if (cfg_.task != "dep" && corpora_.srl_train.empty())
      throw ConfigError("training corpus is empty");
    if (cfg_.task == "dep" && corpora_.dep_train.empty())
      throw ConfigError("dependency training corpus is empty");

    Vocabulary vocab;
    std::vector<const std::vector<AnnotatedSentence>*> sources;
    if (!corpora_.srl_train.empty()) sources.push_back(&corpora_.srl_train);
    if (!corpora_.dep_train.empty()) sources.push_back(&corpora_.dep_train);
    vocab.build(sources);

    // discover d_ext before the encoder is built
    if (cfg_.ext_rep) {
      for (const auto& s : corpora_.srl_train)
        if (!s.ext_layers.empty() && !s.ext_layers[0].empty())
          ext_dim_ = s.ext_layers[0][0].dim();
      if (ext_dim_ < 1)
        throw ConfigError("ext_rep enabled but the training corpus carries no layers");
    }

    Tensor pretrained;
    const Tensor* pretrained_ptr = nullptr;
    if (!cfg_.embeddings.empty()) {
      int dim = 0;
      pretrained = load_word_embeddings(cfg_.embeddings, vocab, init_rng_, &dim);
      if (dim != cfg_.word_dim)
        throw ConfigError("embedding file dimension " + std::to_string(dim) +
                          " does not match word_dim " + std::to_string(cfg_.word_dim));
      pretrained_ptr = &pretrained;
    }
    bundle_ = std::make_unique<ModelBundle>(cfg_, std::move(vocab), init_rng_,
                                            pretrained_ptr, ext_dim_);
    plan_ = make_plan();
    train_plan_ = DropoutPlan{cfg_.dropout_input, cfg_.dropout_hidden,
                              cfg_.dropout_recurrent, true};
    sched_ = LrSchedule{cfg_.lr, cfg_.lr_decay, cfg_.lr_decay_every};
  }

  ModelBundle& bundle() { return *bundle_; }
  const RunConfig& config() const { return cfg_; }
  const Corpora& corpora() const { return corpora_; }

  // One optimizer step over a mixed batch; returns the batch loss.
  double step() {
    auto batch = plan_->next();
    Graph g;
    Var total = g.constant_scalar(0.0);
    PruneStats stats;
    if (bundle_->srl) {
      for (int idx : batch.srl) {
        const auto& s = corpora_.srl_train[idx];
        std::vector<Var> syn;
        const std::vector<Var>* syn_ptr = nullptr;
        if (bundle_->provider) {
          syn = bundle_->provider->reps(g, s, train_plan_, train_rng_);
          syn_ptr = &syn;
        }
        auto sc = bundle_->srl->score(g, s, train_plan_, train_rng_, syn_ptr);
        total = g.add(total, bundle_->srl->loss(g, s, sc, &stats));
      }
    }
    if (!batch.dep.empty() && bundle_->parser) {
      Var dep_total = g.constant_scalar(0.0);
      for (int idx : batch.dep) {
        const auto& s = corpora_.dep_train[idx];
        ArcScores sc;
        if (bundle_->provider && !bundle_->provider->frozen()) {
          const EncodedSentence& enc =
              bundle_->provider->encoded(g, s, train_plan_, train_rng_);
          sc = bundle_->parser->score_encoded(g, enc, train_plan_, train_rng_);
        } else {
          sc = bundle_->parser->score(g, s, train_plan_, train_rng_);
        }
        dep_total = g.add(dep_total, bundle_->parser->loss(g, s, sc));
      }
      total = joint_loss(g, total, dep_total, cfg_.alpha_loss);
    }
    double loss = g.scalar(total);
    if (!std::isfinite(loss))
      throw TrainError("non-finite loss at step " + std::to_string(state_.step) +
                       "; lower the learning rate or check the data");
    g.backward(total);
    adam_step(bundle_->store, sched_.at(state_.step));
    state_.step += 1;
    interval_losses_.push_back(loss);
    if (stats.gold_tuples > 0) interval_recalls_.push_back(stats.recall());
    return loss;
  }

  double eval_dev() {
    if (cfg_.task == "dep") {
      auto [uas, las] = eval_dep_dev();
      state_.final_dep_uas = uas;
      state_.final_dep_las = las;
      return uas;
    }
    const auto& dev = corpora_.srl_dev.empty() ? corpora_.srl_train : corpora_.srl_dev;
    auto pred = predict_srl(*bundle_->srl, bundle_->provider.get(), dev);
    EvalReport rep = cfg_.word_mode()
                         ? word_f1(dev, pred, cfg_.include_sense)
                         : span_f1(dev, pred, parse_setup(cfg_.setup));
    return rep.f1;
  }

  std::pair<double, double> eval_dep_dev() {
    if (!bundle_->parser || corpora_.dep_dev.empty()) return {0.0, 0.0};
    auto pred = predict_dep(*bundle_->parser, corpora_.dep_dev);
    std::vector<std::vector<DepArc>> pa, ga;
    for (const auto& s : pred) pa.push_back(s.dep);
    for (const auto& s : corpora_.dep_dev) ga.push_back(s.dep);
    return uas_las(pa, ga);
  }

  // Full training run with logging and checkpointing.
  TrainingState run() {
    RunLock lock(cfg_.out_dir);
    std::ofstream log(cfg_.out_dir + "/train.log");
    if (!log) throw IoError("cannot write " + cfg_.out_dir + "/train.log");
    log << "# configuration\n" << render_config(cfg_) << "# end configuration\n";
    {
      std::ofstream vout(cfg_.out_dir + "/vocab.txt");
      bundle_->vocab.save(vout);
    }
    std::string best_path = cfg_.out_dir + "/best.ckpt";
    std::string latest_path = cfg_.out_dir + "/latest.ckpt";

    if (cfg_.max_steps == 0) {
      save_checkpoint_with_vocab(bundle_->store, bundle_->vocab, best_path);
      save_checkpoint_with_vocab(bundle_->store, bundle_->vocab, latest_path);
      state_.best_checkpoint = best_path;
      log << "step 0  no updates requested; initial checkpoint written\n";
      return state_;
    }

    for (long s = 0; s < cfg_.max_steps; ++s) {
      step();
      if (state_.step % cfg_.eval_interval == 0 || state_.step == cfg_.max_steps) {
        double f1 = eval_dev();
        state_.final_dev_f1 = f1;
        double mean_loss =
            interval_losses_.empty()
                ? 0.0
                : std::accumulate(interval_losses_.begin(), interval_losses_.end(), 0.0) /
                      interval_losses_.size();
        double recall =
            interval_recalls_.empty()
                ? 1.0
                : std::accumulate(interval_recalls_.begin(), interval_recalls_.end(), 0.0) /
                      interval_recalls_.size();
        state_.loss_history.push_back(mean_loss);
        state_.prune_recall_history.push_back(recall);
        interval_losses_.clear();
        interval_recalls_.clear();
        log << "step " << state_.step << "  lr " << sched_.at(state_.step)
            << "  loss " << mean_loss << "  prune_recall " << recall << "  dev "
            << (cfg_.task == "dep" ? "uas " : "f1 ") << f1;
        if (cfg_.task != "dep" && bundle_->parser && !corpora_.dep_dev.empty()) {
          auto [uas, las] = eval_dep_dev();
          state_.final_dep_uas = uas;
          state_.final_dep_las = las;
          log << "  dep_uas " << uas << "  dep_las " << las;
        }
        if (f1 > state_.best_dev_f1) {
          state_.best_dev_f1 = f1;
          save_checkpoint_with_vocab(bundle_->store, bundle_->vocab, best_path);
          state_.best_checkpoint = best_path;
          log << "  (new best)";
        }
        log << "\n";
        log.flush();
      }
    }
    save_checkpoint_with_vocab(bundle_->store, bundle_->vocab, latest_path);
    return state_;
  }

  TrainingState& state() { return state_; }

 private:
  std::unique_ptr<BatchPlan> make_plan() {
    Integration mode = parse_integration(cfg_.integration);
    int srl_n = cfg_.task == "dep" ? 0 : cfg_.batch_srl;
    int dep_n = 0;
    if (cfg_.task == "dep") dep_n = cfg_.batch_dep;
    else if (mode == Integration::iir || mode == Integration::hps)
      dep_n = cfg_.batch_dep;
    return std::make_unique<BatchPlan>(srl_n, dep_n, corpora_.srl_train.size(),
                                       corpora_.dep_train.size(),
                                       cfg_.seed ^ 0x2545f4914f6cdd1dULL);
  }

  RunConfig cfg_;
  Corpora corpora_;
  std::mt19937_64 init_rng_;
  std::mt19937_64 train_rng_;
  int ext_dim_ = -1;
  std::unique_ptr<ModelBundle> bundle_;
  std::unique_ptr<BatchPlan> plan_;
  DropoutPlan train_plan_;
  LrSchedule sched_;
  TrainingState state_;
  std::vector<double> interval_losses_;
  std::vector<double> interval_recalls_;
};

}  // namespace srlkit
