#pragma once

// One structured key=value configuration file drives every run; CLI flags
// override individual keys. Keys mirror the field names below exactly.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "srlkit/error.hpp"

namespace srlkit {

struct RunConfig {
  // task and setup
  std::string task = "span";         // span | word | dep
  std::string setup = "end-to-end";  // end-to-end | gold-predicates
  std::string integration = "none";  // none | iir | hps | fir
  bool ext_rep = false;
  std::string ext_rep_path;      // external representations for the train split
  std::string ext_rep_dev_path;  // and for the dev split
  std::string fir_checkpoint;    // frozen parser checkpoint (integration=fir)

  // corpora
  std::string train_words, train_props;  // span task
  std::string dev_words, dev_props;
  std::string train_conll09, dev_conll09;  // word task
  std::string dep_train, dep_dev;          // treebanks
  std::string embeddings;                  // optional word2vec text file

  // candidate pruning
  double lambda_p = 0.4;
  double lambda_a = 0.8;
  int max_span_width = 30;
  bool force_gold_candidates = false;

  // dimensions
  int word_dim = 100;
  int char_dim = 100;
  std::string cnn_windows = "3,4,5";
  int cnn_channels = 100;
  int layers = 3;
  int hidden = 300;
  int mlp_hidden = 150;
  int mlp_depth = 1;
  int arc_mlp = 500;
  int label_mlp = 100;
  int ext_layers = 4;

  // regularization and optimization
  double dropout_input = 0.5;
  double dropout_hidden = 0.2;
  double dropout_recurrent = 0.4;
  double alpha_loss = 1.0;
  double lr = 0.001;
  double lr_decay = 0.999;
  long lr_decay_every = 100;
  int batch_srl = 8;
  int batch_dep = 8;
  long max_steps = 2000;
  long eval_interval = 500;
  bool freeze_word_emb = false;
  bool include_sense = false;

  unsigned long seed = 1;
  std::string out_dir = "run";

  std::vector<int> cnn_window_list() const {
    std::vector<int> out;
    std::stringstream ss(cnn_windows);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(std::stoi(item));
    if (out.empty()) throw ConfigError("cnn_windows is empty");
    return out;
  }

  bool word_mode() const { return task == "word"; }
  int span_width() const { return word_mode() ? 1 : max_span_width; }

  void validate() const {
    if (task != "span" && task != "word" && task != "dep")
      throw ConfigError("task must be span, word or dep (got " + task + ")");
    if (setup != "end-to-end" && setup != "gold-predicates")
      throw ConfigError("setup must be end-to-end or gold-predicates");
    if (integration != "none" && integration != "iir" && integration != "hps" &&
        integration != "fir")
      throw ConfigError("integration must be none, iir, hps or fir");
    if (lambda_p <= 0.0 || lambda_p > 1.0 || lambda_a <= 0.0 || lambda_a > 1.0)
      throw ConfigError("pruning ratios must lie in (0, 1]");
    if (max_span_width < 1) throw ConfigError("max_span_width must be at least 1");
    if (integration == "fir" && fir_checkpoint.empty())
      throw ConfigError("integration fir requires fir_checkpoint");
    if (task == "dep") {
      if (dep_train.empty()) throw ConfigError("task dep requires dep_train");
      if (integration != "none")
        throw ConfigError("task dep does not take an integration mode");
    } else {
      if (task == "span" && (train_words.empty() || train_props.empty()))
        throw ConfigError("task span requires train_words and train_props");
      if (task == "word" && train_conll09.empty())
        throw ConfigError("task word requires train_conll09");
      if ((integration == "iir" || integration == "hps") && dep_train.empty())
        throw ConfigError("integration " + integration + " requires dep_train");
      if ((integration == "iir" || integration == "hps") && batch_dep < 1)
        throw ConfigError("integration " + integration +
                          " requires at least one dependency instance per batch");
      if (batch_srl < 1) throw ConfigError("batch_srl must be at least 1");
      if (ext_rep && ext_rep_path.empty())
        throw ConfigError("ext_rep requires ext_rep_path");
    }
    if (word_dim < 1 || char_dim < 1 || cnn_channels < 1 || hidden < 1 ||
        layers < 1 || mlp_hidden < 1 || mlp_depth < 0 || arc_mlp < 1 ||
        label_mlp < 1 || ext_layers < 1)
      throw ConfigError("model dimensions must be positive");
    cnn_window_list();
    if (lr <= 0.0 || lr_decay <= 0.0 || lr_decay > 1.0 || lr_decay_every < 1)
      throw ConfigError("bad learning rate schedule");
    if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
    if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
    if (alpha_loss < 0.0) throw ConfigError("alpha_loss must be nonnegative");
    for (double r : {dropout_input, dropout_hidden, dropout_recurrent})
      if (r < 0.0 || r >= 1.0) throw ConfigError("dropout rates must lie in [0, 1)");
    if (out_dir.empty()) throw ConfigError("out_dir must be set");
  }
};

namespace detail {

template <class T>
void config_fields(RunConfig& c, T&& visit) {
  visit("task", c.task);
  visit("setup", c.setup);
  visit("integration", c.integration);
  visit("ext_rep", c.ext_rep);
  visit("ext_rep_path", c.ext_rep_path);
  visit("ext_rep_dev_path", c.ext_rep_dev_path);
  visit("fir_checkpoint", c.fir_checkpoint);
  visit("train_words", c.train_words);
  visit("train_props", c.train_props);
  visit("dev_words", c.dev_words);
  visit("dev_props", c.dev_props);
  visit("train_conll09", c.train_conll09);
  visit("dev_conll09", c.dev_conll09);
  visit("dep_train", c.dep_train);
  visit("dep_dev", c.dep_dev);
  visit("embeddings", c.embeddings);
  visit("lambda_p", c.lambda_p);
  visit("lambda_a", c.lambda_a);
  visit("max_span_width", c.max_span_width);
  visit("force_gold_candidates", c.force_gold_candidates);
  visit("word_dim", c.word_dim);
  visit("char_dim", c.char_dim);
  visit("cnn_windows", c.cnn_windows);
  visit("cnn_channels", c.cnn_channels);
  visit("layers", c.layers);
  visit("hidden", c.hidden);
  visit("mlp_hidden", c.mlp_hidden);
  visit("mlp_depth", c.mlp_depth);
  visit("arc_mlp", c.arc_mlp);
  visit("label_mlp", c.label_mlp);
  visit("ext_layers", c.ext_layers);
  visit("dropout_input", c.dropout_input);
  visit("dropout_hidden", c.dropout_hidden);
  visit("dropout_recurrent", c.dropout_recurrent);
  visit("alpha_loss", c.alpha_loss);
  visit("lr", c.lr);
  visit("lr_decay", c.lr_decay);
  visit("lr_decay_every", c.lr_decay_every);
  visit("batch_srl", c.batch_srl);
  visit("batch_dep", c.batch_dep);
  visit("max_steps", c.max_steps);
  visit("eval_interval", c.eval_interval);
  visit("freeze_word_emb", c.freeze_word_emb);
  visit("include_sense", c.include_sense);
  visit("seed", c.seed);
  visit("out_dir", c.out_dir);
}

inline void assign_field(std::string& field, const std::string& v) { field = v; }
inline void assign_field(bool& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") field = true;
  else if (v == "false" || v == "0" || v == "off" || v == "no") field = false;
  else throw ConfigError("bad boolean value: " + v);
}
inline void assign_field(int& field, const std::string& v) { field = std::stoi(v); }
inline void assign_field(long& field, const std::string& v) { field = std::stol(v); }
inline void assign_field(unsigned long& field, const std::string& v) {
  field = std::stoul(v);
}
inline void assign_field(double& field, const std::string& v) { field = std::stod(v); }

inline std::string render_field(const std::string& v) { return v; }
inline std::string render_field(bool v) { return v ? "true" : "false"; }
inline std::string render_field(int v) { return std::to_string(v); }
inline std::string render_field(long v) { return std::to_string(v); }
inline std::string render_field(unsigned long v) { return std::to_string(v); }
inline std::string render_field(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

inline void set_config_key(RunConfig& cfg, const std::string& key,
                           const std::string& value) {
  bool found = false;
  detail::config_fields(cfg, [&](const char* name, auto& field) {
    if (key == name) {
      try {
        detail::assign_field(field, value);
      } catch (const ConfigError&) {
        throw;
      } catch (...) {
        throw ConfigError("bad value for " + key + ": " + value);
      }
      found = true;
    }
  });
  if (!found) throw ConfigError("unknown configuration key: " + key);
}

// `key = value` lines; '#' starts a comment.
inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file: " + path);
  RunConfig cfg;
  std::string line;
  long ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto strip = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + " line " + std::to_string(ln) + ": expected key = value");
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    set_config_key(cfg, key, value);
  }
  return cfg;
}

// `key=value` as passed on the command line.
inline void apply_override(RunConfig& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: " + kv);
  set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
}

inline std::string render_config(const RunConfig& cfg) {
  std::ostringstream os;
  RunConfig& mut = const_cast<RunConfig&>(cfg);
  detail::config_fields(mut, [&](const char* name, auto& field) {
    os << name << " = " << detail::render_field(field) << "\n";
  });
  return os.str();
}

}  // namespace srlkit
