#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srlkit/error.hpp"
#include "srlkit/params.hpp"
#include "srlkit/tensor.hpp"

namespace srlkit {

class Graph;

// Handle to a node inside one Graph.
struct Var {
  Graph* g = nullptr;
  int i = -1;
  bool valid() const { return g != nullptr && i >= 0; }
};

namespace detail {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

inline CMapM cmap(const Tensor& t) { return CMapM(t.v.data(), t.rows(), t.cols()); }
inline MapM mmap(Tensor& t) { return MapM(t.v.data(), t.rows(), t.cols()); }
inline CMapV cvec(const Tensor& t) { return CMapV(t.v.data(), t.numel()); }
inline MapV mvec(Tensor& t) { return MapV(t.v.data(), t.numel()); }
}  // namespace detail

namespace detail {
inline std::atomic<unsigned long long> graph_uid_counter{1};
}

// Reverse-mode computation graph. Nodes are created in topological order by
// construction; backward walks them once in reverse creation order.
// One Graph per training step; no mutable state is shared between instances.
class Graph {
 public:
  Graph() : uid_(detail::graph_uid_counter.fetch_add(1)) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Distinguishes graph instances even when storage addresses recur.
  unsigned long long uid() const { return uid_; }
  struct Node {
    Tensor val;
    Tensor grad;
    const char* op;
    std::vector<int> parents;
    std::function<void()> back;  // adds into parent grads
    Parameter* param = nullptr;
    std::vector<int> aux;  // op-specific integers (argmax rows, indices)
  };

  // ---- leaves ----

  Var input(Tensor t) { return make("input", {}, std::move(t)); }

  Var input(std::vector<double> v) { return input(Tensor::vec(std::move(v))); }

  Var constant_scalar(double x) { return input(Tensor::scalar(x)); }

  Var zeros(std::vector<int> shape) { return input(Tensor(std::move(shape))); }

  // Leaf tied to a parameter; memoized so repeated use shares one node and
  // gradient accumulation happens in a single place.
  Var param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var{this, it->second};
    Var v = make("param", {}, p.value);
    nodes_[v.i].param = &p;
    param_nodes_[&p] = v.i;
    return v;
  }

  // Copy of x's value with no history; gradients stop here.
  Var detach(Var x) { return make("input", {}, val(x)); }

  // ---- shape access ----

  const Tensor& value(Var x) const { return nodes_[check(x)].val; }
  const Tensor& grad(Var x) const { return nodes_[check(x)].grad; }
  double scalar(Var x) const {
    const Tensor& t = value(x);
    if (t.numel() != 1) throw DimError("scalar() on shape " + t.shape_str());
    return t.v[0];
  }
  size_t size() const { return nodes_.size(); }

  // ---- arithmetic primitives ----

  Var add(Var a, Var b) { return ew2("add", a, b, [](double x, double y) { return x + y; }, 1.0, 1.0); }
  Var sub(Var a, Var b) { return ew2("sub", a, b, [](double x, double y) { return x - y; }, 1.0, -1.0); }

  Var cmult(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb))
      throw DimError(std::string("elementwise-mul: shapes ") + ta.shape_str() +
                     " vs " + tb.shape_str());
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= tb.v[i];
    Var r = make("elementwise-mul", {a, b}, std::move(out));
    int ri = r.i, ai = a.i, bi = b.i;
    nodes_[ri].back = [this, ri, ai, bi] {
      Node& n = nodes_[ri];
      for (size_t i = 0; i < n.grad.v.size(); ++i) {
        nodes_[ai].grad.v[i] += n.grad.v[i] * nodes_[bi].val.v[i];
        nodes_[bi].grad.v[i] += n.grad.v[i] * nodes_[ai].val.v[i];
      }
    };
    return r;
  }

  Var scale(Var a, double c) {
    Tensor out = val(a);
    for (double& x : out.v) x *= c;
    Var r = make("scale", {a}, std::move(out));
    int ri = r.i, ai = a.i;
    nodes_[ri].back = [this, ri, ai, c] {
      for (size_t i = 0; i < nodes_[ri].grad.v.size(); ++i)
        nodes_[ai].grad.v[i] += c * nodes_[ri].grad.v[i];
    };
    return r;
  }

  // x + s for scalar node s, broadcast over every entry of x.
  Var add_scalarv(Var x, Var s) {
    if (val(s).numel() != 1) throw DimError("add_scalarv: second arg not scalar");
    Tensor out = val(x);
    double sv = val(s).v[0];
    for (double& e : out.v) e += sv;
    Var r = make("add", {x, s}, std::move(out));
    int ri = r.i, xi = x.i, si = s.i;
    nodes_[ri].back = [this, ri, xi, si] {
      Node& n = nodes_[ri];
      double acc = 0.0;
      for (size_t i = 0; i < n.grad.v.size(); ++i) {
        nodes_[xi].grad.v[i] += n.grad.v[i];
        acc += n.grad.v[i];
      }
      nodes_[si].grad.v[0] += acc;
    };
    return r;
  }

  Var add_rowvec(Var m, Var b) {
    const Tensor &tm = val(m), &tb = val(b);
    if (tm.rank() != 2 || tb.rank() != 1 || tb.dim() != tm.cols())
      throw DimError(std::string("add_rowvec: shapes ") + tm.shape_str() +
                     " vs " + tb.shape_str());
    Tensor out = tm;
    for (int i = 0; i < tm.rows(); ++i)
      for (int j = 0; j < tm.cols(); ++j) out.at(i, j) += tb.at(j);
    Var r = make("add", {m, b}, std::move(out));
    int ri = r.i, mi = m.i, bi = b.i;
    nodes_[ri].back = [this, ri, mi, bi] {
      Node& n = nodes_[ri];
      int rows = n.val.rows(), cols = n.val.cols();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          double g = n.grad.at(i, j);
          nodes_[mi].grad.at(i, j) += g;
          nodes_[bi].grad.at(j) += g;
        }
    };
    return r;
  }

  Var add_colvec(Var m, Var b) {
    const Tensor &tm = val(m), &tb = val(b);
    if (tm.rank() != 2 || tb.rank() != 1 || tb.dim() != tm.rows())
      throw DimError(std::string("add_colvec: shapes ") + tm.shape_str() +
                     " vs " + tb.shape_str());
    Tensor out = tm;
    for (int i = 0; i < tm.rows(); ++i)
      for (int j = 0; j < tm.cols(); ++j) out.at(i, j) += tb.at(i);
    Var r = make("add", {m, b}, std::move(out));
    int ri = r.i, mi = m.i, bi = b.i;
    nodes_[ri].back = [this, ri, mi, bi] {
      Node& n = nodes_[ri];
      int rows = n.val.rows(), cols = n.val.cols();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          double g = n.grad.at(i, j);
          nodes_[mi].grad.at(i, j) += g;
          nodes_[bi].grad.at(i) += g;
        }
    };
    return r;
  }

  // ---- linear algebra ----

  // Matrix-matrix or matrix-vector product.
  Var matmul(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (ta.rank() != 2)
      throw DimError("matmul: lhs must be a matrix, got " + ta.shape_str());
    if (tb.rank() == 2) {
      if (ta.cols() != tb.rows())
        throw DimError("matmul: " + ta.shape_str() + " incompatible with " +
                       tb.shape_str());
      Tensor out({ta.rows(), tb.cols()});
      detail::mmap(out) = detail::cmap(ta) * detail::cmap(tb);
      Var r = make("matmul", {a, b}, std::move(out));
      int ri = r.i, ai = a.i, bi = b.i;
      nodes_[ri].back = [this, ri, ai, bi] {
        Node& n = nodes_[ri];
        detail::mmap(nodes_[ai].grad) +=
            detail::cmap(n.grad) * detail::cmap(nodes_[bi].val).transpose();
        detail::mmap(nodes_[bi].grad) +=
            detail::cmap(nodes_[ai].val).transpose() * detail::cmap(n.grad);
      };
      return r;
    }
    if (tb.rank() != 1 || ta.cols() != tb.dim())
      throw DimError("matmul: " + ta.shape_str() + " incompatible with " +
                     tb.shape_str());
    Tensor out({ta.rows()});
    detail::mvec(out) = detail::cmap(ta) * detail::cvec(tb);
    Var r = make("matmul", {a, b}, std::move(out));
    int ri = r.i, ai = a.i, bi = b.i;
    nodes_[ri].back = [this, ri, ai, bi] {
      Node& n = nodes_[ri];
      detail::mmap(nodes_[ai].grad) +=
          detail::cvec(n.grad) * detail::cvec(nodes_[bi].val).transpose();
      detail::mvec(nodes_[bi].grad) +=
          detail::cmap(nodes_[ai].val).transpose() * detail::cvec(n.grad);
    };
    return r;
  }

  Var transpose(Var a) {
    const Tensor& ta = val(a);
    if (ta.rank() != 2) throw DimError("transpose: needs a matrix");
    Tensor out({ta.cols(), ta.rows()});
    for (int i = 0; i < ta.rows(); ++i)
      for (int j = 0; j < ta.cols(); ++j) out.at(j, i) = ta.at(i, j);
    Var r = make("transpose", {a}, std::move(out));
    int ri = r.i, ai = a.i;
    nodes_[ri].back = [this, ri, ai] {
      Node& n = nodes_[ri];
      for (int i = 0; i < n.val.rows(); ++i)
        for (int j = 0; j < n.val.cols(); ++j)
          nodes_[ai].grad.at(j, i) += n.grad.at(i, j);
    };
    return r;
  }

  Var dot(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    if (ta.rank() != 1 || tb.rank() != 1 || ta.dim() != tb.dim())
      throw DimError("dot: shapes " + ta.shape_str() + " vs " + tb.shape_str());
    double acc = detail::cvec(ta).dot(detail::cvec(tb));
    Var r = make("dot", {a, b}, Tensor::scalar(acc));
    int ri = r.i, ai = a.i, bi = b.i;
    nodes_[ri].back = [this, ri, ai, bi] {
      double g = nodes_[ri].grad.v[0];
      detail::mvec(nodes_[ai].grad) += g * detail::cvec(nodes_[bi].val);
      detail::mvec(nodes_[bi].grad) += g * detail::cvec(nodes_[ai].val);
    };
    return r;
  }

  // ---- nonlinearities ----

  Var sigmoid(Var a) {
    return unary("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 [](double, double y) { return y * (1.0 - y); });
  }
  Var tanh_(Var a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
  }
  Var relu(Var a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
  }

  // Stable softmax over a vector.
  Var softmax(Var a) {
    const Tensor& ta = val(a);
    if (ta.rank() != 1) throw DimError("softmax: needs a vector, got " + ta.shape_str());
    Tensor out = ta;
    double mx = *std::max_element(out.v.begin(), out.v.end());
    double z = 0.0;
    for (double& x : out.v) {
      x = std::exp(x - mx);
      z += x;
    }
    for (double& x : out.v) x /= z;
    Var r = make("softmax", {a}, std::move(out));
    int ri = r.i, ai = a.i;
    nodes_[ri].back = [this, ri, ai] {
      Node& n = nodes_[ri];
      double inner = 0.0;
      for (size_t i = 0; i < n.val.v.size(); ++i) inner += n.grad.v[i] * n.val.v[i];
      for (size_t i = 0; i < n.val.v.size(); ++i)
        nodes_[ai].grad.v[i] += n.val.v[i] * (n.grad.v[i] - inner);
    };
    return r;
  }

  // -log softmax(x)[idx], fused for stability.
  Var pick_neg_log_softmax(Var a, int idx) {
    const Tensor& ta = val(a);
    if (ta.rank() != 1) throw DimError("pick_neg_log_softmax: needs a vector");
    if (idx < 0 || idx >= ta.dim())
      throw DimError("pick_neg_log_softmax: index out of range");
    double mx = *std::max_element(ta.v.begin(), ta.v.end());
    double z = 0.0;
    for (double x : ta.v) z += std::exp(x - mx);
    double loss = std::log(z) + mx - ta.v[idx];
    Var r = make("pick_neg_log_softmax", {a}, Tensor::scalar(loss));
    int ri = r.i, ai = a.i;
    nodes_[ri].aux = {idx};
    nodes_[ri].back = [this, ri, ai, mx, z, idx] {
      double g = nodes_[ri].grad.v[0];
      const Tensor& ta2 = nodes_[ai].val;
      for (int i = 0; i < ta2.dim(); ++i) {
        double p = std::exp(ta2.at(i) - mx) / z;
        nodes_[ai].grad.at(i) += g * (p - (i == idx ? 1.0 : 0.0));
      }
    };
    return r;
  }

  // ---- assembly / slicing ----

  Var concat(const std::vector<Var>& xs) {
    if (xs.empty()) throw DimError("concat: no inputs");
    int total = 0;
    for (Var x : xs) {
      if (val(x).rank() != 1) throw DimError("concat: all inputs must be vectors");
      total += val(x).dim();
    }
    Tensor out({total});
    int off = 0;
    for (Var x : xs) {
      const Tensor& t = val(x);
      std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
      off += t.dim();
    }
    Var r = make("concat", xs, std::move(out));
    int ri = r.i;
    std::vector<int> ps = nodes_[ri].parents;
    nodes_[ri].back = [this, ri, ps] {
      Node& n = nodes_[ri];
      int off2 = 0;
      for (int pi : ps) {
        Tensor& pg = nodes_[pi].grad;
        for (int j = 0; j < pg.dim(); ++j) pg.at(j) += n.grad.at(off2 + j);
        off2 += pg.dim();
      }
    };
    return r;
  }

  // Rows of equal width stacked into a matrix.
  Var stack_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw DimError("stack_rows: no inputs");
    int c = val(xs[0]).dim();
    for (Var x : xs)
      if (val(x).rank() != 1 || val(x).dim() != c)
        throw DimError("stack_rows: inconsistent row widths");
    Tensor out({static_cast<int>(xs.size()), c});
    for (size_t i = 0; i < xs.size(); ++i) {
      const Tensor& t = val(xs[i]);
      std::copy(t.v.begin(), t.v.end(), out.v.begin() + i * c);
    }
    Var r = make("stack_rows", xs, std::move(out));
    int ri = r.i;
    std::vector<int> ps = nodes_[ri].parents;
    nodes_[ri].back = [this, ri, ps, c] {
      Node& n = nodes_[ri];
      for (size_t i = 0; i < ps.size(); ++i)
        for (int j = 0; j < c; ++j)
          nodes_[ps[i]].grad.at(j) += n.grad.at(static_cast<int>(i), j);
    };
    return r;
  }

  Var slice(Var x, int a, int b) {
    const Tensor& t = val(x);
    if (t.rank() != 1 || a < 0 || b > t.dim() || a >= b)
      throw DimError("slice: bad range on shape " + t.shape_str());
    Tensor out({b - a});
    std::copy(t.v.begin() + a, t.v.begin() + b, out.v.begin());
    Var r = make("slice", {x}, std::move(out));
    int ri = r.i, xi = x.i;
    nodes_[ri].back = [this, ri, xi, a, b] {
      for (int j = a; j < b; ++j)
        nodes_[xi].grad.at(j) += nodes_[ri].grad.at(j - a);
    };
    return r;
  }

  Var slice_rows(Var x, int a, int b) {
    const Tensor& t = val(x);
    if (t.rank() != 2 || a < 0 || b > t.rows() || a >= b)
      throw DimError("slice_rows: bad range on shape " + t.shape_str());
    int c = t.cols();
    Tensor out({b - a, c});
    std::copy(t.v.begin() + a * c, t.v.begin() + b * c, out.v.begin());
    Var r = make("slice_rows", {x}, std::move(out));
    int ri = r.i, xi = x.i;
    nodes_[ri].back = [this, ri, xi, a, b, c] {
      for (int i = a; i < b; ++i)
        for (int j = 0; j < c; ++j)
          nodes_[xi].grad.at(i, j) += nodes_[ri].grad.at(i - a, j);
    };
    return r;
  }

  // Row of a matrix; also serves as embedding lookup on a table parameter.
  Var row(Var x, int i) {
    const Tensor& t = val(x);
    if (t.rank() != 2 || i < 0 || i >= t.rows())
      throw DimError("embedding-lookup: row " + std::to_string(i) +
                     " out of range for " + t.shape_str());
    int c = t.cols();
    Tensor out({c});
    std::copy(t.v.begin() + i * c, t.v.begin() + (i + 1) * c, out.v.begin());
    Var r = make("embedding-lookup", {x}, std::move(out));
    int ri = r.i, xi = x.i;
    nodes_[ri].aux = {i};
    nodes_[ri].back = [this, ri, xi, i, c] {
      for (int j = 0; j < c; ++j)
        nodes_[xi].grad.at(i, j) += nodes_[ri].grad.at(j);
    };
    return r;
  }

  Var col(Var x, int j) {
    const Tensor& t = val(x);
    if (t.rank() != 2 || j < 0 || j >= t.cols())
      throw DimError("col: out of range for " + t.shape_str());
    Tensor out({t.rows()});
    for (int i = 0; i < t.rows(); ++i) out.at(i) = t.at(i, j);
    Var r = make("col", {x}, std::move(out));
    int ri = r.i, xi = x.i;
    nodes_[ri].back = [this, ri, xi, j] {
      Node& n = nodes_[ri];
      for (int i = 0; i < n.val.dim(); ++i)
        nodes_[xi].grad.at(i, j) += n.grad.at(i);
    };
    return r;
  }

  Var pick(Var x, int i) {
    const Tensor& t = val(x);
    if (t.rank() != 1 || i < 0 || i >= t.dim())
      throw DimError("pick: out of range for " + t.shape_str());
    Var r = make("pick", {x}, Tensor::scalar(t.at(i)));
    int ri = r.i, xi = x.i;
    nodes_[ri].aux = {i};
    nodes_[ri].back = [this, ri, xi, i] {
      nodes_[xi].grad.at(i) += nodes_[ri].grad.v[0];
    };
    return r;
  }

  Var pick2(Var x, int i, int j) {
    const Tensor& t = val(x);
    if (t.rank() != 2 || i < 0 || i >= t.rows() || j < 0 || j >= t.cols())
      throw DimError("pick2: (" + std::to_string(i) + "," + std::to_string(j) +
                     ") out of range for " + t.shape_str());
    Var r = make("pick", {x}, Tensor::scalar(t.at(i, j)));
    int ri = r.i, xi = x.i;
    nodes_[ri].aux = {i, j};
    nodes_[ri].back = [this, ri, xi, i, j] {
      nodes_[xi].grad.at(i, j) += nodes_[ri].grad.v[0];
    };
    return r;
  }

  Var sum_all(Var x) {
    const Tensor& t = val(x);
    double acc = 0.0;
    for (double e : t.v) acc += e;
    Var r = make("sum", {x}, Tensor::scalar(acc));
    int ri = r.i, xi = x.i;
    nodes_[ri].back = [this, ri, xi] {
      double g = nodes_[ri].grad.v[0];
      for (double& e : nodes_[xi].grad.v) e += g;
    };
    return r;
  }

  // ---- reductions over rows ----

  // Mean over axis 0: a single row is returned unchanged.
  Var mean_rows(Var x) {
    const Tensor& t = val(x);
    if (t.rank() != 2) throw DimError("mean-over-axis: needs a matrix, got " + t.shape_str());
    int rows = t.rows(), c = t.cols();
    Tensor out({c});
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < c; ++j) out.at(j) += t.at(i, j);
    for (int j = 0; j < c; ++j) out.at(j) /= rows;
    Var r = make("mean-over-axis", {x}, std::move(out));
    int ri = r.i, xi = x.i;
    nodes_[ri].back = [this, ri, xi, rows, c] {
      Node& n = nodes_[ri];
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < c; ++j)
          nodes_[xi].grad.at(i, j) += n.grad.at(j) / rows;
    };
    return r;
  }

  // Max over axis 0; ties go to the smallest row index.
  Var max_pool_rows(Var x) {
    const Tensor& t = val(x);
    if (t.rank() != 2) throw DimError("max-pool-1d: needs a matrix, got " + t.shape_str());
    int rows = t.rows(), c = t.cols();
    Tensor out({c});
    std::vector<int> arg(c, 0);
    for (int j = 0; j < c; ++j) {
      double best = t.at(0, j);
      for (int i = 1; i < rows; ++i)
        if (t.at(i, j) > best) {
          best = t.at(i, j);
          arg[j] = i;
        }
      out.at(j) = best;
    }
    Var r = make("max-pool-1d", {x}, std::move(out));
    int ri = r.i, xi = x.i;
    nodes_[ri].aux = arg;
    nodes_[ri].back = [this, ri, xi, arg, c] {
      Node& n = nodes_[ri];
      for (int j = 0; j < c; ++j)
        nodes_[xi].grad.at(arg[j], j) += n.grad.at(j);
    };
    return r;
  }

  // 1-d convolution over rows: input (T x D), filters (w*D x C) where w is
  // the window width; output ((T-w+1) x C).
  Var conv1d(Var x, Var filters, int window) {
    const Tensor &t = val(x), &f = val(filters);
    if (t.rank() != 2 || f.rank() != 2)
      throw DimError("conv-1d: inputs must be matrices");
    int T = t.rows(), D = t.cols(), C = f.cols();
    if (window < 1 || f.rows() != window * D)
      throw DimError("conv-1d: filters " + f.shape_str() + " do not match window " +
                     std::to_string(window) + " x input " + t.shape_str());
    if (T < window)
      throw DimError("conv-1d: input of " + std::to_string(T) +
                     " rows shorter than window " + std::to_string(window));
    int P = T - window + 1;
    Tensor out({P, C});
    for (int p = 0; p < P; ++p)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int u = 0; u < window; ++u)
          for (int d = 0; d < D; ++d)
            acc += t.at(p + u, d) * f.at(u * D + d, c);
        out.at(p, c) = acc;
      }
    Var r = make("conv-1d", {x, filters}, std::move(out));
    int ri = r.i, xi = x.i, fi = filters.i;
    nodes_[ri].back = [this, ri, xi, fi, window, D, C, P] {
      Node& n = nodes_[ri];
      for (int p = 0; p < P; ++p)
        for (int c = 0; c < C; ++c) {
          double g = n.grad.at(p, c);
          if (g == 0.0) continue;
          for (int u = 0; u < window; ++u)
            for (int d = 0; d < D; ++d) {
              nodes_[xi].grad.at(p + u, d) += g * nodes_[fi].val.at(u * D + d, c);
              nodes_[fi].grad.at(u * D + d, c) += g * nodes_[xi].val.at(p + u, d);
            }
        }
    };
    return r;
  }

  // ---- dispatch by primitive id ----

  Var forward_primitive(std::string_view kind, std::span<const Var> xs,
                        int attr = -1) {
    auto need = [&](size_t n) {
      if (xs.size() != n)
        throw DimError(std::string(kind) + ": expects " + std::to_string(n) +
                       " inputs, got " + std::to_string(xs.size()));
    };
    if (kind == "matmul") { need(2); return matmul(xs[0], xs[1]); }
    if (kind == "add") { need(2); return add(xs[0], xs[1]); }
    if (kind == "concat") return concat(std::vector<Var>(xs.begin(), xs.end()));
    if (kind == "mean-over-axis") { need(1); return mean_rows(xs[0]); }
    if (kind == "sigmoid") { need(1); return sigmoid(xs[0]); }
    if (kind == "tanh") { need(1); return tanh_(xs[0]); }
    if (kind == "relu") { need(1); return relu(xs[0]); }
    if (kind == "softmax") { need(1); return softmax(xs[0]); }
    if (kind == "elementwise-mul") { need(2); return cmult(xs[0], xs[1]); }
    if (kind == "max-pool-1d") { need(1); return max_pool_rows(xs[0]); }
    if (kind == "conv-1d") { need(2); return conv1d(xs[0], xs[1], attr); }
    if (kind == "embedding-lookup") { need(1); return row(xs[0], attr); }
    throw DimError("unknown primitive: " + std::string(kind));
  }

  // ---- backward ----

  // Seeds d(root)/d(root) = 1 and walks reachable nodes once in reverse
  // creation order, summing into parent gradients. Parameter leaves then
  // add their node gradient into Parameter::grad.
  void backward(Var root) {
    int ri = check(root);
    if (nodes_[ri].val.numel() != 1)
      throw DimError("backward: root must be scalar, got " +
                     nodes_[ri].val.shape_str());
    std::vector<char> reach(ri + 1, 0);
    reach[ri] = 1;
    for (int i = ri; i >= 0; --i) {
      if (!reach[i]) continue;
      for (int p : nodes_[i].parents) reach[p] = 1;
    }
    for (int i = 0; i <= ri; ++i)
      if (reach[i]) nodes_[i].grad.fill(0.0);
    nodes_[ri].grad.v[0] = 1.0;
    for (int i = ri; i >= 0; --i) {
      if (!reach[i]) continue;
      Node& n = nodes_[i];
      if (n.back) n.back();
      if (n.param) {
        for (size_t k = 0; k < n.grad.v.size(); ++k)
          n.param->grad.v[k] += n.grad.v[k];
      }
    }
  }

  const Node& node(Var x) const { return nodes_[check(x)]; }

 private:
  int check(Var x) const {
    if (x.g != this || x.i < 0 || x.i >= static_cast<int>(nodes_.size()))
      throw DimError("variable does not belong to this graph");
    return x.i;
  }

  const Tensor& val(Var x) const { return nodes_[check(x)].val; }

  Var make(const char* op, const std::vector<Var>& parents, Tensor out) {
    Node n;
    n.val = std::move(out);
    n.grad = Tensor(n.val.shape);
    n.op = op;
    n.parents.reserve(parents.size());
    for (Var p : parents) n.parents.push_back(check(p));
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
  }

  template <class F, class DF>
  Var unary(const char* op, Var a, F f, DF df) {
    Tensor out = val(a);
    for (double& x : out.v) x = f(x);
    Var r = make(op, {a}, std::move(out));
    int ri = r.i, ai = a.i;
    nodes_[ri].back = [this, ri, ai, df] {
      Node& n = nodes_[ri];
      for (size_t i = 0; i < n.val.v.size(); ++i)
        nodes_[ai].grad.v[i] += n.grad.v[i] * df(nodes_[ai].val.v[i], n.val.v[i]);
    };
    return r;
  }

  template <class F>
  Var ew2(const char* op, Var a, Var b, F f, double da, double db) {
    const Tensor &ta = val(a), &tb = val(b);
    if (!ta.same_shape(tb))
      throw DimError(std::string(op) + ": shapes " + ta.shape_str() + " vs " +
                     tb.shape_str());
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = f(ta.v[i], tb.v[i]);
    Var r = make(op, {a, b}, std::move(out));
    int ri = r.i, ai = a.i, bi = b.i;
    nodes_[ri].back = [this, ri, ai, bi, da, db] {
      Node& n = nodes_[ri];
      for (size_t i = 0; i < n.grad.v.size(); ++i) {
        nodes_[ai].grad.v[i] += da * n.grad.v[i];
        nodes_[bi].grad.v[i] += db * n.grad.v[i];
      }
    };
    return r;
  }

  // Deque keeps value/grad references stable while new nodes are appended.
  std::deque<Node> nodes_;
  std::map<Parameter*, int> param_nodes_;
  unsigned long long uid_;
};

}  // namespace srlkit
