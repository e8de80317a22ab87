#pragma once

// Central finite-difference gradient oracle, independent of the engine's
// backward pass. Builders must be deterministic (no dropout).

#include <cmath>
#include <functional>
#include <string>

#include "srlkit/graph.hpp"
#include "srlkit/params.hpp"

namespace gradcheck {

using srlkit::Graph;
using srlkit::Parameter;
using srlkit::ParameterStore;
using srlkit::Var;

using LossBuilder = std::function<Var(Graph&)>;

struct Result {
  double max_rel_err = 0.0;
  std::string where;
};

inline double rel_err(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / std::max(1.0, std::fabs(analytic));
}

// Compares analytic gradients of `build` w.r.t. every parameter in `store`
// against central differences. An entry that disagrees at the base step is
// re-measured at a 100x smaller step: a genuine gradient bug persists, while
// a kink (relu corner, pooling argmax switch) inside the difference window
// does not. Returns the worst relative error found.
inline Result check(ParameterStore& store, const LossBuilder& build,
                    double h = 1e-5, double tol = 1e-4) {
  for (auto* p : store.all()) p->grad.fill(0.0);
  Graph g;
  Var loss = build(g);
  g.backward(loss);

  auto numeric_at = [&](Parameter* p, size_t i, double step) {
    double saved = p->value.v[i];
    p->value.v[i] = saved + step;
    Graph gp;
    double fp = gp.scalar(build(gp));
    p->value.v[i] = saved - step;
    Graph gm;
    double fm = gm.scalar(build(gm));
    p->value.v[i] = saved;
    return (fp - fm) / (2.0 * step);
  };

  Result res;
  for (auto* p : store.all()) {
    for (size_t i = 0; i < p->value.v.size(); ++i) {
      double err = rel_err(p->grad.v[i], numeric_at(p, i, h));
      if (err >= tol) err = rel_err(p->grad.v[i], numeric_at(p, i, h / 100.0));
      if (err > res.max_rel_err) {
        res.max_rel_err = err;
        res.where = p->name + "[" + std::to_string(i) + "]";
      }
    }
    p->grad.fill(0.0);
  }
  return res;
}

}  // namespace gradcheck
