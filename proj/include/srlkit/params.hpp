#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srlkit/error.hpp"
#include "srlkit/tensor.hpp"

namespace srlkit {

// A named trainable tensor with its optimizer slots.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;   // Adam first moment
  Tensor v2;  // Adam second moment
  long steps = 0;
  bool trainable = true;

  explicit Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(shape), m(shape), v2(shape) {}
};

inline double rand_uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53-bit mantissa draw; avoids distribution objects for cross-platform
  // reproducibility of seeded runs.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline double rand_normal(std::mt19937_64& rng) {
  // Box-Muller on raw 53-bit draws.
  double u1 = static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
  double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

enum class Init { zeros, glorot, orthogonal, uniform_small };

inline void initialize(Tensor& t, Init kind, std::mt19937_64& rng) {
  switch (kind) {
    case Init::zeros:
      t.fill(0.0);
      break;
    case Init::uniform_small:
      for (double& x : t.v) x = rand_uniform(rng, -0.01, 0.01);
      break;
    case Init::glorot: {
      int fan_in = t.rank() == 2 ? t.cols() : t.dim();
      int fan_out = t.rank() == 2 ? t.rows() : t.dim();
      double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& x : t.v) x = rand_uniform(rng, -a, a);
      break;
    }
    case Init::orthogonal: {
      if (t.rank() != 2) throw DimError("orthogonal init needs a matrix");
      int r = t.rows(), c = t.cols();
      Eigen::MatrixXd g(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) g(i, j) = rand_normal(rng);
      if (r >= c) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) t.at(i, j) = q(i, j);
      } else {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g.transpose());
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(c, r);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) t.at(i, j) = q(j, i);
      }
      break;
    }
  }
}

// Registry of uniquely named parameters. Iteration follows registration
// order, which keeps optimizer updates and checkpoints deterministic.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, std::vector<int> shape, Init kind,
                 std::mt19937_64& rng) {
    if (index_.count(name))
      throw ConfigError("parameter registered twice: " + name);
    auto p = std::make_shared<Parameter>(name, std::move(shape));
    initialize(p->value, kind, rng);
    index_[name] = params_.size();
    params_.push_back(p);
    return *p;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Parameter& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return *params_[it->second];
  }
  const Parameter& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return *params_[it->second];
  }

  size_t size() const { return params_.size(); }
  Parameter& at(size_t i) { return *params_[i]; }
  const Parameter& at(size_t i) const { return *params_[i]; }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<const Parameter*> all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  long total_values() const {
    long n = 0;
    for (auto& p : params_) n += p->value.numel();
    return n;
  }

 private:
  std::vector<std::shared_ptr<Parameter>> params_;
  std::map<std::string, size_t> index_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update over every trainable parameter; gradients are zeroed
// afterwards. Throws TrainError on non-finite gradients.
inline void adam_step(ParameterStore& store, double lr,
                      const AdamConfig& cfg = {}) {
  for (size_t pi = 0; pi < store.size(); ++pi) {
    Parameter& p = store.at(pi);
    for (double g : p.grad.v)
      if (!std::isfinite(g))
        throw TrainError("non-finite gradient in parameter " + p.name);
    p.steps += 1;
    if (p.trainable) {
      double t = static_cast<double>(p.steps);
      double bc1 = 1.0 - std::pow(cfg.beta1, t);
      double bc2 = 1.0 - std::pow(cfg.beta2, t);
      for (size_t i = 0; i < p.value.v.size(); ++i) {
        double g = p.grad.v[i];
        p.m.v[i] = cfg.beta1 * p.m.v[i] + (1.0 - cfg.beta1) * g;
        p.v2.v[i] = cfg.beta2 * p.v2.v[i] + (1.0 - cfg.beta2) * g * g;
        double mh = p.m.v[i] / bc1;
        double vh = p.v2.v[i] / bc2;
        p.value.v[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
      }
    }
    p.grad.fill(0.0);
  }
}

// Stepped exponential decay: base * factor^(step/every).
struct LrSchedule {
  double base = 0.001;
  double factor = 0.999;
  long every = 100;

  double at(long step) const {
    return base * std::pow(factor, static_cast<double>(step / every));
  }
};

namespace detail {
inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}
}  // namespace detail

// Text checkpoint: "srlkit-ckpt 1", a parameter count, then one header line
// and one value line per row for each parameter. Doubles are printed with 17
// significant digits so the text form round-trips bit-exactly.
inline void save_checkpoint(const ParameterStore& store,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out << "srlkit-ckpt 1\n";
  out << "params " << store.size() << "\n";
  for (size_t pi = 0; pi < store.size(); ++pi) {
    const Parameter& p = store.at(pi);
    out << "param " << p.name << " " << p.value.rank();
    for (int d : p.value.shape) out << " " << d;
    out << "\n";
    int nrows = p.value.rank() == 2 ? p.value.rows() : 1;
    long per_row = p.value.numel() / nrows;
    for (int r = 0; r < nrows; ++r) {
      for (long j = 0; j < per_row; ++j) {
        if (j) out << " ";
        out << detail::fmt_double(p.value.v[r * per_row + j]);
      }
      out << "\n";
    }
  }
  if (!out) throw IoError("short write to checkpoint: " + path);
}

inline std::vector<std::pair<std::string, Tensor>> read_checkpoint(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "srlkit-ckpt" || version != 1)
    throw IoError("not a version-1 checkpoint: " + path);
  std::string kw;
  size_t count = 0;
  if (!(in >> kw >> count) || kw != "params")
    throw IoError("malformed checkpoint header: " + path);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (size_t pi = 0; pi < count; ++pi) {
    std::string name;
    int rank = 0;
    if (!(in >> kw >> name >> rank) || kw != "param")
      throw IoError("malformed parameter header in " + path);
    std::vector<int> shape(rank);
    for (int& d : shape)
      if (!(in >> d)) throw IoError("malformed shape in " + path);
    Tensor t(shape);
    for (double& x : t.v) {
      std::string tok;
      if (!(in >> tok)) throw IoError("truncated values for " + name);
      char* end = nullptr;
      x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str()) throw IoError("bad value for " + name);
    }
    out.emplace_back(name, std::move(t));
  }
  return out;
}

// Load values into an already-built store; names and shapes must match
// exactly in both directions.
inline void load_checkpoint(ParameterStore& store, const std::string& path) {
  auto entries = read_checkpoint(path);
  if (entries.size() != store.size())
    throw IoError("checkpoint has " + std::to_string(entries.size()) +
                  " parameters, store has " + std::to_string(store.size()));
  for (auto& [name, t] : entries) {
    if (!store.has(name)) throw IoError("checkpoint parameter not in model: " + name);
    Parameter& p = store.get(name);
    if (p.value.shape != t.shape)
      throw IoError("shape mismatch for " + name + ": checkpoint " +
                    t.shape_str() + " vs model " + p.value.shape_str());
    p.value = std::move(t);
  }
}

}  // namespace srlkit
