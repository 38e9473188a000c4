#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "erkm/experiments.hpp"

namespace erkm::cli {

namespace {

using Check = std::function<std::string()>;  // empty string: pass

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

double max_rel_diff(const SpectralField& a, const SpectralField& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(b[k]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

SpectralField random_field(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z;
  SpectralField f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = scale * z(rng) / static_cast<double>((k + 1) * (k + 1));
  return f;
}

struct Bench {
  ProblemSpec problem;
  SineBasisGrid grid;
  LinearOperatorSpec op;
  NoiseProjector projector;

  Bench(ProblemSpec p, std::size_t n)
      : problem(std::move(p)), grid(n), op(problem.linear_operator()), projector(problem.qspec, grid) {}

  SpectralField step(const std::function<SpectralField(const StepContext&)>& stepper, const SpectralField& y,
                     const WienerStep& w, EvalCounters* counters = nullptr) const {
    const Propagators prop = make_propagators(op, grid.size(), w.h);
    const RandomWeights weights = projector.weights(w);
    EvalCounters local;
    StepContext ctx{problem, grid, op, prop, weights, y, counters ? *counters : local};
    return stepper(ctx);
  }
};

std::string spectral_round_trip() {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1u, 7u, 32u}) {
    SineBasisGrid grid(n);
    const SpectralField v = random_field(n, rng);
    const double err = max_rel_diff(grid.to_spectral(grid.to_physical(v)), v);
    if (err > 1e-12) return "N=" + std::to_string(n) + " error " + fmt(err);
  }
  return {};
}

std::string spectral_parseval_semigroup() {
  std::mt19937_64 rng(2);
  const LinearOperatorSpec op(0.3);
  const SpectralField v = random_field(16, rng);
  double l2 = 0.0;
  for (double a : v) l2 += a * a;
  if (h_r_norm(op, 0.0, v) != std::sqrt(l2)) return "Parseval mismatch";
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double s = u(rng), t = u(rng);
    const auto both = apply_diagonal(diag::Semigroup{s + t}, op, v);
    const auto split = apply_diagonal(diag::Semigroup{s}, op, apply_diagonal(diag::Semigroup{t}, op, v));
    const double err = max_rel_diff(split, both);
    if (err > 1e-13) return "semigroup property error " + fmt(err);
  }
  return {};
}

std::string noise_covariance() {
  const double h = 0.37;
  const std::size_t n = 20000;
  const QSpec q = QSpec::sine_basis({1.0, 0.5});
  double sbb = 0, sbi = 0, sii = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const WienerStep w = sample_step(StreamKey{99, r, 0}, q, h);
    sbb += w.dB[0] * w.dB[0];
    sbi += w.dB[0] * w.I[0];
    sii += w.I[0] * w.I[0];
  }
  const double N = static_cast<double>(n);
  // Standard errors of the second moments of a centred Gaussian pair.
  const double vbb = h, vbi = h * h / 2, vii = h * h * h / 3;
  const double se_bb = std::sqrt(2 * vbb * vbb / N), se_bi = std::sqrt((vbb * vii + vbi * vbi) / N),
               se_ii = std::sqrt(2 * vii * vii / N);
  if (std::abs(sbb / N - vbb) > 4 * se_bb) return "Var(dB) off";
  if (std::abs(sbi / N - vbi) > 4 * se_bi) return "Cov(dB, I) off";
  if (std::abs(sii / N - vii) > 4 * se_ii) return "Var(I) off";
  return {};
}

std::string noise_coarsening() {
  const QSpec q = QSpec::sine_basis({1.0, 0.25, 0.1});
  for (std::uint64_t r = 0; r < 5; ++r) {
    const NoisePath p = sample_path(7, r, q, 64, 1.0);
    const NoisePath a = coarsen(coarsen(p, 2), 4);
    const NoisePath b = coarsen(p, 8);
    for (std::size_t m = 0; m < a.size(); ++m)
      for (std::size_t j = 0; j < q.modes(); ++j)
        if (std::abs(a.steps[m].dB[j] - b.steps[m].dB[j]) > 1e-14 || std::abs(a.steps[m].I[j] - b.steps[m].I[j]) > 1e-14)
          return "two-level coarsening disagrees";
  }
  return {};
}

std::string noise_weights() {
  const auto p = make_problem("example3", 16, 16);
  const SineBasisGrid grid(16);
  const NoiseProjector proj(p.qspec, grid);
  const NoisePath path = sample_path(3, 0, p.qspec, 8, 1.0);
  for (const auto& s : path.steps) {
    const double res = proj.weights(s).identity_residual();
    if (res > 1e-12) return "theta identity residual " + fmt(res);
  }
  return {};
}

std::string nemytskii_structure() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const SineBasisGrid grid(12);
  for (const char* name : {"example1", "example3"}) {
    const auto p = make_problem(name, 12, name == std::string("example1") ? 1 : 12);
    PhysicalField f[4] = {PhysicalField(12), PhysicalField(12), PhysicalField(12), PhysicalField(12)};
    for (auto& field : f)
      for (auto& x : field) x = z(rng);
    const auto c = check_commutativity(p, grid, f[0], f[1], f[2], f[3]);
    if (!c.holds) return std::string(name) + ": commutativity residual " + fmt(c.max_residual);
  }
  const auto p = make_problem("example3", 4, 4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double d = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const double x = 0.5, y = u(rng);
    auto fd = [&](const PointwiseMap& g) { return (g(x, y + d) - g(x, y - d)) / (2 * d); };
    const std::pair<const PointwiseMap*, const PointwiseMap*> pairs[] = {
        {&p.f, &*p.f_y}, {&*p.f_y, &*p.f_yy}, {&p.b, &*p.b_y}, {&*p.b_y, &*p.b_yy}};
    for (const auto& [g, dg] : pairs) {
      const double exact = (*dg)(x, y);
      if (std::abs(fd(*g) - exact) > 1e-6 * std::max(1.0, std::abs(exact))) return "derivative map mismatch";
    }
  }
  return {};
}

std::string tableau_sums() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int i = 0; i < 20; ++i) {
    ERKMParams c;
    for (double& ci : c.c) ci = (rng() & 1 ? 1 : -1) * u(rng);
    const ButcherTableau t = erkm15_tableau(c);
    auto sum = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s;
    };
    const double zeros[] = {sum(t.alpha[1]), sum(t.alpha[2]), sum(t.beta[1]), sum(t.beta[2]), sum(t.beta[3]),
                            sum(t.beta[4])};
    for (double s : zeros)
      if (std::abs(s) > 1e-12) return "zero-sum weight row sums to " + fmt(s);
    for (double s : {sum(t.alpha[0]), sum(t.beta[0]), sum(t.gamma)})
      if (std::abs(s - 1.0) > 1e-12) return "unit weight row sums to " + fmt(s);
  }
  return {};
}

std::string tableau_closed_form() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  const Bench bench(make_problem("example3", 16, 16), 16);
  for (int i = 0; i < 10; ++i) {
    ERKMParams c;
    for (double& ci : c.c) ci = (rng() & 1 ? 1 : -1) * u(rng);
    const double h = i % 2 ? 0.1 : 0.01;
    const auto tab = erkm15_tableau(c);
    const auto g = GeneralizedParams::from_erkm(c, h);
    const SpectralField y = random_field(16, rng, 0.5);
    const WienerStep w = sample_step(StreamKey{11, static_cast<std::uint64_t>(i), 0}, bench.problem.qspec, h);
    const auto a = bench.step([&](const StepContext& ctx) { return erkm_step(tab, ctx); }, y, w);
    const auto b = bench.step([&](const StepContext& ctx) { return erkm15_closed_form_step(g, ctx); }, y, w);
    const double err = max_rel_diff(a, b);
    if (err > 1e-12) return "relative difference " + fmt(err);
  }
  return {};
}

std::string evaluation_counts() {
  const Bench bench(make_problem("example3", 8, 8), 8);
  const WienerStep w = sample_step(StreamKey{1, 0, 0}, bench.problem.qspec, 0.1);
  const auto tab = erkm15_tableau(ERKMParams::ones());
  EvalCounters c;
  bench.step([&](const StepContext& ctx) { return erkm_step(tab, ctx); }, bench.problem.initial_coeffs, w, &c);
  if (c.f_count() != 5 || c.b_count() != 6)
    return "erkm15 used " + std::to_string(c.f_count()) + " f / " + std::to_string(c.b_count()) + " b";
  c.reset();
  bench.step(ewp_step, bench.problem.initial_coeffs, w, &c);
  if (c.total() != 6) return "ewp used " + std::to_string(c.total()) + " evaluations";
  return {};
}

std::string deterministic_exactness() {
  ProblemSpec p = make_problem("example3", 16, 16);
  p.f = [](double, double) { return 0.0; };
  p.b = [](double, double) { return 0.0; };
  p.f_y = p.f_yy = p.b_y = p.b_yy = p.f;
  p.initial_coeffs = SpectralField(16, 1.0);
  const Solver solver(p);
  const NoisePath path = sample_path(5, 0, p.qspec, 8, 1.0);
  const auto exact = apply_diagonal(diag::Semigroup{1.0}, solver.op(), p.initial_coeffs);
  for (const char* name : {"erkm15", "ewp", "exe", "dfmm"}) {
    const auto y = solver.terminal(Stepper(SchemeSpec::parse(name)), path);
    for (std::size_t k = 0; k < y.size(); ++k)
      if (std::abs(y[k] - exact[k]) > 1e-12 * std::abs(exact[k]) + 1e-300) return std::string(name) + " drifts";
  }
  return {};
}

std::string order_fit() {
  std::vector<double> h, e;
  for (int l = 2; l <= 8; ++l) {
    h.push_back(std::ldexp(1.0, -l));
    e.push_back(3.0 * std::pow(h.back(), 1.5));
  }
  const double slope = fit_power_law(h, e).slope;
  if (std::abs(slope - 1.5) > 1e-12) return "slope " + fmt(slope);
  return {};
}

}  // namespace

std::vector<SelftestCase> run_selftest() {
  const std::pair<const char*, Check> checks[] = {
      {"spectral_space: transform round trip", spectral_round_trip},
      {"spectral_space: Parseval and semigroup property", spectral_parseval_semigroup},
      {"qwiener: increment covariance", noise_covariance},
      {"qwiener: coarsening composition", noise_coarsening},
      {"qwiener: random-weight identities", noise_weights},
      {"nemytskii: commutativity and derivative maps", nemytskii_structure},
      {"schemes: ERKM1.5 weight sums", tableau_sums},
      {"schemes: tableau engine vs closed form", tableau_closed_form},
      {"schemes: evaluation counts", evaluation_counts},
      {"schemes: deterministic exactness", deterministic_exactness},
      {"experiments: power-law fit", order_fit},
  };
  std::vector<SelftestCase> out;
  for (const auto& [name, check] : checks) {
    SelftestCase c{name, false, {}};
    try {
      c.detail = check();
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace erkm::cli
