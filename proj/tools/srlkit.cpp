// Command-line entry point: train, predict, evaluate, compare, gen-synthetic.
// Exit code 0 on success; 2 for configuration/usage problems, 1 for data,
// I/O or training failures.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "srlkit/config.hpp"
#include "srlkit/conll.hpp"
#include "srlkit/eval.hpp"
#include "srlkit/synthetic.hpp"
#include "srlkit/trainer.hpp"

namespace {

using namespace srlkit;

RunConfig config_from(const std::string& path, const std::vector<std::string>& sets) {
  RunConfig cfg = path.empty() ? RunConfig{} : parse_config_file(path);
  for (const auto& kv : sets) apply_override(cfg, kv);
  cfg.validate();
  return cfg;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets) {
  RunConfig cfg = config_from(config_path, sets);
  Trainer trainer(cfg, load_corpora(cfg));
  TrainingState state = trainer.run();
  std::cout << "finished at step " << state.step << "\n";
  if (cfg.task == "dep")
    std::cout << "best dev UAS " << detail::pct(state.best_dev_f1) << "\n";
  else
    std::cout << "best dev F1 " << detail::pct(state.best_dev_f1) << "\n";
  if (!state.best_checkpoint.empty())
    std::cout << "best checkpoint " << state.best_checkpoint << "\n";
  return 0;
}

int cmd_predict(const std::string& config_path, const std::vector<std::string>& sets,
                const std::string& checkpoint, const std::string& input,
                const std::string& input_props, const std::string& output) {
  RunConfig cfg = config_from(config_path, sets);
  Vocabulary vocab;
  {
    std::ifstream vin(checkpoint + ".vocab");
    if (!vin) throw IoError("missing vocabulary sidecar " + checkpoint + ".vocab");
    vocab = Vocabulary::load(vin);
  }
  std::mt19937_64 rng(cfg.seed);
  ModelBundle bundle(cfg, std::move(vocab), rng);
  load_checkpoint(bundle.store, checkpoint);

  if (cfg.task == "dep") {
    auto corpus = read_dep_treebank(input);
    write_dep_treebank(predict_dep(*bundle.parser, corpus), output);
  } else if (cfg.task == "word") {
    auto corpus = read_conll2009(input);
    write_conll2009(predict_srl(*bundle.srl, bundle.provider.get(), corpus), output);
  } else {
    std::vector<AnnotatedSentence> corpus;
    if (!input_props.empty()) {
      corpus = read_span_props(input, input_props);
    } else {
      if (cfg.setup == "gold-predicates")
        throw ConfigError("gold-predicates prediction needs --input-props");
      for (const auto& block : detail::blocks_of(detail::read_lines(input))) {
        AnnotatedSentence s;
        for (const auto& line : block.lines)
          s.tokens.push_back(detail::split_ws(line)[0]);
        fill_chars(s);
        corpus.push_back(std::move(s));
      }
    }
    auto pred = predict_srl(*bundle.srl, bundle.provider.get(), corpus);
    write_span_props(pred, output + ".words", output);
  }
  std::cout << "wrote " << output << "\n";
  return 0;
}

struct EvalInputs {
  std::vector<AnnotatedSentence> gold, pred;
};

EvalInputs load_eval_inputs(const std::string& task, const std::string& gold,
                            const std::string& gold_props, const std::string& pred,
                            const std::string& pred_props) {
  EvalInputs in;
  if (task == "span") {
    in.gold = read_span_props(gold, gold_props);
    in.pred = read_span_props(gold, pred_props.empty() ? pred : pred_props);
    for (size_t i = 0; i < in.pred.size(); ++i) in.pred[i].tokens = in.gold[i].tokens;
  } else if (task == "word") {
    in.gold = read_conll2009(gold);
    in.pred = read_conll2009(pred);
  } else {
    in.gold = read_dep_treebank(gold);
    in.pred = read_dep_treebank(pred);
  }
  return in;
}

int cmd_evaluate(const std::string& task, const std::string& setup,
                 const std::string& gold, const std::string& gold_props,
                 const std::string& pred, const std::string& pred_props,
                 bool breakdowns, bool senses, const std::string& tsv,
                 const std::string& buckets) {
  auto in = load_eval_inputs(task, gold, gold_props, pred, pred_props);
  if (task == "dep") {
    std::vector<std::vector<DepArc>> pa, ga;
    for (const auto& s : in.pred) pa.push_back(s.dep);
    for (const auto& s : in.gold) ga.push_back(s.dep);
    auto [uas, las] = uas_las(pa, ga);
    std::cout << "UAS " << detail::pct(uas) << "  LAS " << detail::pct(las) << "\n";
    return 0;
  }
  std::vector<int> edges;
  const std::vector<int>* edges_ptr = nullptr;
  if (!buckets.empty()) {
    std::stringstream ss(buckets);
    std::string item;
    while (std::getline(ss, item, ',')) edges.push_back(std::stoi(item));
    edges_ptr = &edges;
  }
  EvalReport rep = task == "word"
                       ? word_f1(in.gold, in.pred, senses, edges_ptr)
                       : span_f1(in.gold, in.pred, parse_setup(setup), edges_ptr);
  std::cout << render_report_text(rep, breakdowns);
  if (!tsv.empty()) {
    std::ofstream out(tsv);
    if (!out) throw IoError("cannot write " + tsv);
    out << render_report_tsv(rep, breakdowns);
  }
  return 0;
}

int cmd_compare(const std::string& task, const std::string& setup,
                const std::string& gold, const std::string& gold_props,
                const std::string& pred_a, const std::string& pred_b,
                bool senses, long iterations, unsigned long seed,
                const std::string& scatter_path) {
  EvalInputs a = load_eval_inputs(task, gold, gold_props, pred_a, "");
  EvalInputs b = load_eval_inputs(task, gold, gold_props, pred_b, "");
  std::vector<SentenceCounts> ca, cb;
  if (task == "word") {
    ca = word_counts(a.gold, a.pred, senses);
    cb = word_counts(b.gold, b.pred, senses);
  } else {
    ca = span_counts(a.gold, a.pred, parse_setup(setup));
    cb = span_counts(b.gold, b.pred, parse_setup(setup));
  }
  auto res = significance(ca, cb, iterations, seed);
  std::cout << "F1 A " << detail::pct(res.f1_a) << "\n";
  std::cout << "F1 B " << detail::pct(res.f1_b) << "\n";
  std::cout << "delta " << detail::pct(res.delta) << "\n";
  std::cout << "iterations " << res.iterations << "\n";
  std::cout << "seed " << res.seed << "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", res.p);
  std::cout << "p " << buf << "\n";
  if (!scatter_path.empty()) {
    std::ofstream out(scatter_path);
    if (!out) throw IoError("cannot write " + scatter_path);
    for (auto [fa, fb] : sentence_scatter(ca, cb))
      out << detail::pct(fa) << "\t" << detail::pct(fb) << "\n";
    std::cout << "scatter " << scatter_path << "\n";
  }
  return 0;
}

int cmd_gen_synthetic(unsigned long seed, const std::string& out_dir, int srl_train,
                      int srl_dev, int dep_train, int dep_dev) {
  std::filesystem::create_directories(out_dir);
  SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.srl_train = srl_train;
  cfg.srl_dev = srl_dev;
  cfg.dep_train = dep_train;
  cfg.dep_dev = dep_dev;
  auto span = gen_synthetic(cfg);
  cfg.word_mode = true;
  auto word = gen_synthetic(cfg);  // same seed, same sentences, width-1 frames

  auto path = [&](const std::string& name) { return out_dir + "/" + name; };
  write_span_props(span.srl_train, path("srl_train.words"), path("srl_train.props"));
  write_span_props(span.srl_dev, path("srl_dev.words"), path("srl_dev.props"));
  write_conll2009(word.srl_train, path("srl_train.conll09"));
  write_conll2009(word.srl_dev, path("srl_dev.conll09"));
  write_dep_treebank(span.dep_train, path("dep_train.conllx"));
  write_dep_treebank(span.dep_dev, path("dep_dev.conllx"));
  std::cout << "wrote synthetic corpora under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"span/word semantic role labeling with a biaffine dependency parser"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string checkpoint, input, input_props, output;
  std::string task = "span", setup = "gold-predicates";
  std::string gold, gold_props, pred, pred_props, pred_a, pred_b, tsv, buckets;
  std::string scatter_path;
  bool breakdowns = false, senses = false;
  long iterations = 10000;
  unsigned long seed = 1;
  std::string out_dir = "synthetic";
  int srl_train = 50, srl_dev = 20, dep_train = 100, dep_dev = 30;

  auto* train = app.add_subcommand("train", "train a model from a configuration file");
  train->add_option("--config", config_path, "key = value configuration file");
  train->add_option("--set", sets, "override a configuration key (key=value)");

  auto* predict = app.add_subcommand("predict", "decode a corpus with a checkpoint");
  predict->add_option("--config", config_path, "configuration file");
  predict->add_option("--set", sets, "override a configuration key (key=value)");
  predict->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  predict->add_option("--input", input, "input corpus")->required();
  predict->add_option("--input-props", input_props,
                      "props file with gold predicates (span task)");
  predict->add_option("--output", output, "output file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  evaluate->add_option("--task", task, "span | word | dep");
  evaluate->add_option("--setup", setup, "end-to-end | gold-predicates");
  evaluate->add_option("--gold", gold, "gold corpus (words file for span)")->required();
  evaluate->add_option("--gold-props", gold_props, "gold props file (span)");
  evaluate->add_option("--pred", pred, "predicted corpus");
  evaluate->add_option("--pred-props", pred_props, "predicted props file (span)");
  evaluate->add_flag("--breakdowns", breakdowns, "emit role and length tables");
  evaluate->add_flag("--senses", senses, "score predicate senses (word task)");
  evaluate->add_option("--tsv", tsv, "also write a machine-readable TSV report");
  evaluate->add_option("--buckets", buckets, "length bucket edges, e.g. 10,20,30,40");

  auto* compare = app.add_subcommand("compare", "randomized significance comparison");
  compare->add_option("--task", task, "span | word");
  compare->add_option("--setup", setup, "end-to-end | gold-predicates");
  compare->add_option("--gold", gold, "gold corpus (words file for span)")->required();
  compare->add_option("--gold-props", gold_props, "gold props file (span)");
  compare->add_option("--pred-a", pred_a, "system A predictions")->required();
  compare->add_option("--pred-b", pred_b, "system B predictions")->required();
  compare->add_flag("--senses", senses, "score predicate senses (word task)");
  compare->add_option("--iterations", iterations, "shuffling iterations");
  compare->add_option("--seed", seed, "random seed");
  compare->add_option("--scatter", scatter_path,
                      "write per-sentence F1 pairs as a two-column table");

  auto* gen = app.add_subcommand("gen-synthetic", "write seeded synthetic corpora");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--srl-train", srl_train, "SRL training sentences");
  gen->add_option("--srl-dev", srl_dev, "SRL dev sentences");
  gen->add_option("--dep-train", dep_train, "dependency training sentences");
  gen->add_option("--dep-dev", dep_dev, "dependency dev sentences");

  try {
    app.parse(argc, argv);
    if (*train) return cmd_train(config_path, sets);
    if (*predict)
      return cmd_predict(config_path, sets, checkpoint, input, input_props, output);
    if (*evaluate)
      return cmd_evaluate(task, setup, gold, gold_props, pred, pred_props,
                          breakdowns, senses, tsv, buckets);
    if (*compare)
      return cmd_compare(task, setup, gold, gold_props, pred_a, pred_b, senses,
                         iterations, seed, scatter_path);
    if (*gen)
      return cmd_gen_synthetic(seed, out_dir, srl_train, srl_dev, dep_train, dep_dev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const srlkit::ConfigError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const srlkit::ParseError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return 1;
  } catch (const srlkit::IoError& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return 1;
  } catch (const srlkit::TrainError& e) {
    std::cerr << "error (training): " << e.what() << "\n";
    return 1;
  } catch (const srlkit::Error& e) {
    std::cerr << "error (internal): " << e.what() << "\n";
    return 1;
  }
  return 2;
}
