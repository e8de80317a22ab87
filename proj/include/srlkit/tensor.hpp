#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "srlkit/error.hpp"

namespace srlkit {

// Dense row-major tensor of doubles, rank 1 or 2 in practice.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<size_t>(numel_of(shape)), 0.0);
  }

  Tensor(std::vector<int> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    if (static_cast<long>(v.size()) != numel_of(shape))
      throw DimError("tensor: data size " + std::to_string(v.size()) +
                     " does not match shape " + shape_str());
  }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  static Tensor vec(std::vector<double> data) {
    int n = static_cast<int>(data.size());
    return Tensor({n}, std::move(data));
  }

  static long numel_of(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) {
      if (d <= 0) throw DimError("tensor: nonpositive dimension in shape");
      n *= d;
    }
    return s.empty() ? 1 : n;
  }

  int rank() const { return static_cast<int>(shape.size()); }
  long numel() const { return static_cast<long>(v.size()); }

  int rows() const {
    if (rank() != 2) throw DimError("tensor: rows() on shape " + shape_str());
    return shape[0];
  }
  int cols() const {
    if (rank() != 2) throw DimError("tensor: cols() on shape " + shape_str());
    return shape[1];
  }
  int dim() const {
    if (rank() != 1) throw DimError("tensor: dim() on shape " + shape_str());
    return shape[0];
  }

  double& at(int i) { return v[static_cast<size_t>(i)]; }
  double at(int i) const { return v[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return v[static_cast<size_t>(i) * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  std::string shape_str() const {
    std::ostringstream os;
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) os << "x";
      os << shape[i];
    }
    if (shape.empty()) os << "scalar";
    return os.str();
  }
};

}  // namespace srlkit
