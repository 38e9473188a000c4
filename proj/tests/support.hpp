#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "erkm/schemes.hpp"

namespace erkm::test {

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

// Infinity-norm difference relative to the infinity norm of b.
inline double max_rel_diff(const SpectralField& a, const SpectralField& b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  const double d = max_abs_diff(a, b);
  return scale > 0.0 ? d / scale : d;
}

inline SpectralField random_field(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z;
  SpectralField f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = scale * z(rng) / static_cast<double>((k + 1) * (k + 1));
  return f;
}

inline PhysicalField random_physical(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z;
  PhysicalField f(n);
  for (auto& v : f) v = scale * z(rng);
  return f;
}

// Everything needed to take single steps of a problem at one grid size.
struct StepBench {
  ProblemSpec problem;
  SineBasisGrid grid;
  LinearOperatorSpec op;
  NoiseProjector projector;

  StepBench(ProblemSpec p, std::size_t n)
      : problem(std::move(p)), grid(n), op(problem.linear_operator()), projector(problem.qspec, grid) {}

  template <class F>
  SpectralField step(F&& stepper, const SpectralField& y, const WienerStep& w, EvalCounters* counters = nullptr) const {
    const Propagators prop = make_propagators(op, grid.size(), w.h);
    const RandomWeights weights = projector.weights(w);
    EvalCounters local;
    const StepContext ctx{problem, grid, op, prop, weights, y, counters ? *counters : local};
    return stepper(ctx);
  }
};

inline WienerStep zero_step(std::size_t modes, double h) {
  WienerStep w;
  w.h = h;
  w.dB.assign(modes, 0.0);
  w.I.assign(modes, 0.0);
  return w;
}

}  // namespace erkm::test
