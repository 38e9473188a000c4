#include "erkm/schemes.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <string>

namespace erkm {

bool StageMatrix::strictly_lower() const noexcept {
  for (std::size_t i = 0; i < s_; ++i)
    for (std::size_t j = i; j < s_; ++j)
      if ((*this)(i, j) != 0.0) return false;
  return true;
}

ButcherTableau::ButcherTableau(std::size_t s)
    : stages(s), A01(s), A11(s), B01(s), B02(s), B11(s), B12(s), gamma(s, 0.0) {
  for (auto& a : alpha) a.assign(s, 0.0);
  for (auto& b : beta) b.assign(s, 0.0);
}

void ButcherTableau::validate() const {
  if (stages == 0) throw usage_error("tableau needs at least one stage");
  for (const StageMatrix* m : {&A01, &A11, &B01, &B02, &B11, &B12}) {
    if (m->size() != stages) throw usage_error("stage matrix size does not match stage count");
    if (!m->strictly_lower()) throw usage_error("stage matrices must be strictly lower triangular (explicit scheme)");
  }
  for (const auto& a : alpha)
    if (a.size() != stages) throw usage_error("alpha weight length does not match stage count");
  for (const auto& b : beta)
    if (b.size() != stages) throw usage_error("beta weight length does not match stage count");
  if (gamma.size() != stages) throw usage_error("gamma weight length does not match stage count");
}

void ERKMParams::validate() const {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] == 0.0 || !std::isfinite(c[i]))
      throw domain_error("ERKM1.5 coefficient c" + std::to_string(i + 1) + " must be finite and nonzero");
}

GeneralizedParams GeneralizedParams::from_erkm(const ERKMParams& c, double h) {
  if (!(h > 0.0)) throw domain_error("step size must be positive");
  const double sh = std::sqrt(h);
  const auto& k = c.c;
  return {{h * k[0], h * k[1], sh * k[2], h * k[3], h * k[4], sh * k[5], sh * k[5], h * k[6]}};
}

void GeneralizedParams::validate() const {
  for (std::size_t i = 0; i < chat.size(); ++i)
    if (chat[i] == 0.0 || !std::isfinite(chat[i]))
      throw domain_error("generalized coefficient c^" + std::to_string(i + 1) + " must be finite and nonzero");
}

ButcherTableau erkm15_tableau(const ERKMParams& params, Alpha3Variant variant) {
  params.validate();
  const auto [c1, c2, c3, c4, c5, c6, c7] = params.c;
  ButcherTableau t(6);
  // Stage matrices; 0-based indices, so row 2 of the table is index 1.
  t.A01(1, 0) = c1;
  t.B01(2, 0) = c2;
  t.B02(3, 0) = c3;
  t.B02(4, 0) = -c3;
  t.A11(1, 0) = c4;
  t.B11(2, 0) = c5;
  t.B12(3, 0) = -c6;
  t.B12(4, 0) = c6;
  t.B12(5, 0) = -c7 / c6;
  t.B12(5, 4) = c7 / c6;

  t.alpha[0] = {1.0 - 1.0 / (2.0 * c1), 1.0 / (2.0 * c1), 0, 0, 0, 0};
  t.alpha[1] = {-1.0 / c2, 0, 1.0 / c2, 0, 0, 0};
  const double a3 = variant == Alpha3Variant::consistent ? 1.0 / (4.0 * c3 * c3) : 1.0 / (4.0 * c3);
  t.alpha[2] = {-1.0 / (2.0 * c3 * c3), 0, 0, a3, a3, 0};

  t.beta[0] = {1.0 - 1.0 / c4, 1.0 / c4, 0, 0, 0, 0};
  t.beta[1] = {1.0 / c4, -1.0 / c4, 0, 0, 0, 0};
  t.beta[2] = {1.0 / (2.0 * c5), 0, -1.0 / (2.0 * c5), 0, 0, 0};
  t.beta[3] = {1.0 / (c6 * c6), 0, 0, -1.0 / (2.0 * c6 * c6), -1.0 / (2.0 * c6 * c6), 0};
  t.beta[4] = {1.0 / (2.0 * c7), 0, 0, 0, 0, -1.0 / (2.0 * c7)};
  t.gamma = {1, 0, 0, 0, 0, 0};
  return t;
}

Propagators make_propagators(const LinearOperatorSpec& op, std::size_t modes, double h) {
  if (!(h > 0.0)) throw domain_error("step size must be positive");
  Propagators p;
  p.h = h;
  p.half = diagonal_factors(diag::Semigroup{h / 2.0}, op, modes);
  p.full = diagonal_factors(diag::Semigroup{h}, op, modes);
  p.generator = diagonal_factors(diag::Generator{}, op, modes);
  p.resolvent = diagonal_factors(diag::Resolvent{h}, op, modes);
  p.h_phi1 = diagonal_factors(diag::Phi1{h}, op, modes);
  for (double& v : p.h_phi1) v *= h;
  return p;
}

void StepContext::validate() const {
  const std::size_t n = grid.size();
  if (y.size() != n) throw dimension_error("state length does not match grid");
  if (prop.half.size() != n) throw dimension_error("propagators do not match grid");
  if (weights.dW.size() != n) throw dimension_error("random weights do not match grid");
  if (!(weights.h > 0.0)) throw domain_error("step size must be positive");
  if (prop.h != weights.h) throw usage_error("random weights and propagators were built for different step sizes");
}

namespace {

// e^{Ah/2} ( e^{Ah/2} Y + P_N(pointwise) + A P_N(generator_arg) )
SpectralField exponential_update(const StepContext& ctx, const PhysicalField& pointwise,
                                 const PhysicalField* generator_arg) {
  const std::size_t n = ctx.y.size();
  SpectralField inner = ctx.grid.to_spectral(pointwise);
  if (generator_arg != nullptr) {
    const SpectralField g = ctx.grid.to_spectral(*generator_arg);
    for (std::size_t k = 0; k < n; ++k) inner[k] += ctx.prop.generator[k] * g[k];
  }
  SpectralField out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = ctx.prop.half[k] * (ctx.prop.half[k] * ctx.y[k] + inner[k]);
  return out;
}

PhysicalField apply_generator(const StepContext& ctx, const SpectralField& v) {
  return ctx.grid.to_physical(scale_modes(ctx.prop.generator, v));
}

// Stages reachable from a nonzero weight, found by a backward sweep
// (strict lower triangularity means stage i only feeds stages l > i).
struct StagePlan {
  std::vector<bool> drift;      // f(K_i^0) needed
  std::vector<bool> diffusion;  // b(K_i^1) needed
  std::vector<bool> generator;  // A K_i^0 needed
};

StagePlan plan_stages(const ButcherTableau& t) {
  const std::size_t s = t.stages;
  StagePlan plan{std::vector<bool>(s), std::vector<bool>(s), std::vector<bool>(s)};
  for (std::size_t i = s; i-- > 0;) {
    bool f = false, b = t.gamma[i] != 0.0, a = false;
    for (const auto& w : t.alpha) f = f || w[i] != 0.0;
    for (const auto& w : t.beta) b = b || w[i] != 0.0;
    for (std::size_t l = i + 1; l < s; ++l) {
      const bool a_ref = (plan.drift[l] && t.A01(l, i) != 0.0) || (plan.diffusion[l] && t.A11(l, i) != 0.0);
      a = a || a_ref;
      f = f || a_ref;
      b = b || (plan.drift[l] && (t.B01(l, i) != 0.0 || t.B02(l, i) != 0.0)) ||
          (plan.diffusion[l] && (t.B11(l, i) != 0.0 || t.B12(l, i) != 0.0));
    }
    plan.drift[i] = f;
    plan.diffusion[i] = b;
    plan.generator[i] = a;
  }
  return plan;
}

}  // namespace

SpectralField erkm_step(const ButcherTableau& tab, const StepContext& ctx) {
  tab.validate();
  ctx.validate();
  const std::size_t s = tab.stages;
  const std::size_t n = ctx.y.size();
  const double h = ctx.h();
  const double sqrt_h = std::sqrt(h);
  const StagePlan plan = plan_stages(tab);
  const CoeffEvaluator eval(ctx.problem, ctx.grid, ctx.counters, "erkm");
  const RandomWeights& w = ctx.weights;

  const PhysicalField y_phys = ctx.grid.to_physical(ctx.y);
  // h (A K_j^0 + f(K_j^0)) and b(K_j^1), per stage.
  std::vector<std::optional<PhysicalField>> drift_incr(s), f_val(s), b_val(s);

  auto build_stage = [&](const StageMatrix& a, const StageMatrix& bh, const StageMatrix& bs, std::size_t i) {
    PhysicalField k = y_phys;
    for (std::size_t j = 0; j < i; ++j) {
      if (a(i, j) != 0.0) k.add_scaled(a(i, j), *drift_incr[j]);
      const double bc = bh(i, j) * h + bs(i, j) * sqrt_h;
      if (bc != 0.0) k.add_scaled(bc, *b_val[j]);
    }
    return k;
  };

  for (std::size_t i = 0; i < s; ++i) {
    if (plan.drift[i]) {
      const PhysicalField k0 = build_stage(tab.A01, tab.B01, tab.B02, i);
      f_val[i] = eval.f(k0);
      if (plan.generator[i]) {
        PhysicalField d = apply_generator(ctx, ctx.grid.to_spectral(k0));
        d += *f_val[i];
        d *= h;
        drift_incr[i] = std::move(d);
      }
    }
    if (plan.diffusion[i]) b_val[i] = eval.b(build_stage(tab.A11, tab.B11, tab.B12, i));
  }

  PhysicalField acc(n), gen_arg(n);
  bool any_gamma = false;
  for (std::size_t i = 0; i < s; ++i) {
    if (f_val[i]) {
      const PhysicalField& fv = *f_val[i];
      const double a1 = tab.alpha[0][i] * w.theta0_1;
      const double a2 = tab.alpha[1][i];
      const double a3 = tab.alpha[2][i];
      for (std::size_t p = 0; p < n; ++p) acc[p] += fv[p] * (a1 + a2 * w.theta0_2[p] + a3 * w.theta0_3[p]);
    }
    if (b_val[i]) {
      const PhysicalField& bv = *b_val[i];
      const auto& be = tab.beta;
      for (std::size_t p = 0; p < n; ++p)
        acc[p] += bv[p] * (be[0][i] * w.theta1_1[p] + be[1][i] * w.theta1_2[p] + be[2][i] * w.theta1_3[p] +
                           be[3][i] * w.theta1_4[p] + be[4][i] * w.theta1_5[p]);
      if (tab.gamma[i] != 0.0) {
        any_gamma = true;
        for (std::size_t p = 0; p < n; ++p) gen_arg[p] += tab.gamma[i] * bv[p] * w.theta2_1[p];
      }
    }
  }
  return exponential_update(ctx, acc, any_gamma ? &gen_arg : nullptr);
}

SpectralField erkm15_closed_form_step(const GeneralizedParams& g, const StepContext& ctx) {
  g.validate();
  ctx.validate();
  const std::size_t n = ctx.y.size();
  const double h = ctx.h();
  const auto [c1, c2, c3, c4, c5, c6, c7, c8] = g.chat;
  const CoeffEvaluator eval(ctx.problem, ctx.grid, ctx.counters, "erkm-closed");
  const RandomWeights& w = ctx.weights;
  const PhysicalField& dW = w.dW;
  const PhysicalField& Iw = w.Iw;
  const PhysicalField& gsq = w.gsq;

  const PhysicalField y = ctx.grid.to_physical(ctx.y);
  const PhysicalField fy = eval.f(y);
  const PhysicalField by = eval.b(y);
  const PhysicalField drift = apply_generator(ctx, ctx.y) + fy;

  const PhysicalField f_c1 = eval.f(y + c1 * drift);
  const PhysicalField f_c2 = eval.f(y + c2 * by);
  const PhysicalField f_c3p = eval.f(y + c3 * by);
  const PhysicalField f_c3m = eval.f(y - c3 * by);
  const PhysicalField b_c4 = eval.b(y + c4 * drift);
  const PhysicalField b_c5 = eval.b(y + c5 * by);
  const PhysicalField b_c6p = eval.b(y + c6 * by);
  const PhysicalField b_c6m = eval.b(y - c6 * by);
  const PhysicalField b_c7 = c7 == c6 ? b_c6p : eval.b(y + c7 * by);
  PhysicalField inner_arg = b_c7 - by;
  inner_arg *= c8 / c7;
  const PhysicalField b_c8 = eval.b(y + inner_arg);

  PhysicalField acc(n), gen_arg(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double dw = dW[p];
    const double dw2 = dw * dw;
    const double dw3 = dw2 * dw;
    const double f2nd = f_c3p[p] - 2.0 * fy[p] + f_c3m[p];
    const double b1st5 = b_c5[p] - by[p];
    const double b2nd6 = b_c6p[p] - 2.0 * by[p] + b_c6m[p];
    const double bnest = b_c8[p] - by[p];
    double t = h * fy[p];
    t += h * h / (2.0 * c1) * (f_c1[p] - fy[p]);
    t += (f_c2[p] - fy[p]) / c2 * Iw[p];
    t += h * h / (4.0 * c3 * c3) * f2nd * gsq[p];
    t += by[p] * dw;
    t += (b_c4[p] - by[p]) / c4 * (h * dw - Iw[p]);
    t += b1st5 / (2.0 * c5) * dw2;
    t += b2nd6 / (6.0 * c6 * c6) * dw3;
    t += bnest / (6.0 * c8) * dw3;
    t -= h / 2.0 * b1st5 / c5 * gsq[p];
    t -= 0.5 * b2nd6 / (c6 * c6) * gsq[p] * Iw[p];
    t -= h / (2.0 * c8) * bnest * gsq[p] * dw;
    acc[p] = t;
    // int ((l + 1/2) h - s) dW_s = I - (h/2) dW
    gen_arg[p] = by[p] * (Iw[p] - 0.5 * h * dw);
  }
  return exponential_update(ctx, acc, &gen_arg);
}

SpectralField ewp_step(const StepContext& ctx) {
  ctx.validate();
  const std::size_t n = ctx.y.size();
  const double h = ctx.h();
  const CoeffEvaluator eval(ctx.problem, ctx.grid, ctx.counters, "ewp");
  eval.require({Coeff::f_y, Coeff::f_yy, Coeff::b_y, Coeff::b_yy});
  const RandomWeights& w = ctx.weights;

  const PhysicalField y = ctx.grid.to_physical(ctx.y);
  const PhysicalField f = eval(Coeff::f, y);
  const PhysicalField fd = eval(Coeff::f_y, y);
  const PhysicalField fdd = eval(Coeff::f_yy, y);
  const PhysicalField b = eval(Coeff::b, y);
  const PhysicalField bd = eval(Coeff::b_y, y);
  const PhysicalField bdd = eval(Coeff::b_yy, y);
  const PhysicalField drift = apply_generator(ctx, ctx.y) + f;

  PhysicalField acc(n), gen_arg(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double dw = w.dW[p];
    const double iw = w.Iw[p];
    const double g = w.gsq[p];
    const double bb = b[p] * b[p];
    const double dw3 = dw * dw * dw;
    double t = h * f[p];
    t += h * h / 2.0 * fd[p] * drift[p];
    t += fd[p] * b[p] * iw;
    t += h * h / 4.0 * fdd[p] * bb * g;
    t += b[p] * dw;
    t += bd[p] * drift[p] * (h * dw - iw);
    t += 0.5 * bd[p] * b[p] * dw * dw;
    t += bdd[p] * bb * dw3 / 6.0;
    t += bd[p] * bd[p] * b[p] * dw3 / 6.0;
    t -= h / 2.0 * bd[p] * b[p] * g;
    t -= 0.5 * bdd[p] * bb * g * iw;
    t -= h / 2.0 * bd[p] * bd[p] * b[p] * g * dw;
    acc[p] = t;
    gen_arg[p] = b[p] * (iw - 0.5 * h * dw);
  }
  return exponential_update(ctx, acc, &gen_arg);
}

SpectralField baseline_step(Baseline kind, const StepContext& ctx, ExeVariant exe) {
  ctx.validate();
  const std::size_t n = ctx.y.size();
  const double h = ctx.h();
  const char* name = kind == Baseline::exe ? "exe" : kind == Baseline::lie ? "lie" : "dfmm";
  const CoeffEvaluator eval(ctx.problem, ctx.grid, ctx.counters, name);
  const RandomWeights& w = ctx.weights;

  const PhysicalField y = ctx.grid.to_physical(ctx.y);
  const PhysicalField f = eval.f(y);
  const PhysicalField b = eval.b(y);
  const PhysicalField noise = b * w.dW;

  switch (kind) {
    case Baseline::lie: {
      PhysicalField rhs = noise;
      rhs.add_scaled(h, f);
      SpectralField out = ctx.y + ctx.grid.to_spectral(rhs);
      return scale_modes(ctx.prop.resolvent, std::move(out));
    }
    case Baseline::exe: {
      if (exe == ExeVariant::frozen) {
        PhysicalField rhs = noise;
        rhs.add_scaled(h, f);
        return scale_modes(ctx.prop.full, ctx.y + ctx.grid.to_spectral(rhs));
      }
      const SpectralField fs = ctx.grid.to_spectral(f);
      const SpectralField ns = ctx.grid.to_spectral(noise);
      SpectralField out(n);
      for (std::size_t k = 0; k < n; ++k)
        out[k] = ctx.prop.full[k] * (ctx.y[k] + ns[k]) + ctx.prop.h_phi1[k] * fs[k];
      return out;
    }
    case Baseline::dfmm: {
      const double sqrt_h = std::sqrt(h);
      const PhysicalField b_shift = eval.b(y + sqrt_h * b);
      PhysicalField rhs = noise;
      rhs.add_scaled(h, f);
      for (std::size_t p = 0; p < n; ++p) {
        const double dw = w.dW[p];
        rhs[p] += (b_shift[p] - b[p]) / (2.0 * sqrt_h) * (dw * dw - h * w.gsq[p]);
      }
      return scale_modes(ctx.prop.full, ctx.y + ctx.grid.to_spectral(rhs));
    }
  }
  throw usage_error("unknown baseline scheme");
}

std::string_view scheme_kind_name(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::erkm15: return "erkm15";
    case SchemeKind::erkm_closed: return "erkm-closed";
    case SchemeKind::ewp: return "ewp";
    case SchemeKind::exe: return "exe";
    case SchemeKind::lie: return "lie";
    case SchemeKind::dfmm: return "dfmm";
  }
  return "?";
}

SchemeSpec SchemeSpec::parse(std::string_view name, std::vector<double> params) {
  SchemeSpec s;
  if (name == "erkm15") s.kind = SchemeKind::erkm15;
  else if (name == "erkm-closed") s.kind = SchemeKind::erkm_closed;
  else if (name == "ewp") s.kind = SchemeKind::ewp;
  else if (name == "exe") s.kind = SchemeKind::exe;
  else if (name == "lie") s.kind = SchemeKind::lie;
  else if (name == "dfmm") s.kind = SchemeKind::dfmm;
  else throw usage_error("unknown scheme '" + std::string(name) + "'");
  s.params = std::move(params);
  s.validate();
  return s;
}

std::string SchemeSpec::name() const { return std::string(scheme_kind_name(kind)); }

std::string SchemeSpec::label() const {
  std::string out = name();
  const bool all_ones =
      std::all_of(params.begin(), params.end(), [](double v) { return v == 1.0; }) && params.size() != 8;
  if (!params.empty() && !all_ones) {
    out += '(';
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) out += ';';
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, params[i]);
      out.append(buf, res.ptr);
    }
    out += ')';
  }
  if (kind == SchemeKind::erkm15 && alpha3 == Alpha3Variant::printed) out += "[printed]";
  if (kind == SchemeKind::exe && exe_variant == ExeVariant::frozen) out += "[frozen]";
  return out;
}

void SchemeSpec::validate() const {
  switch (kind) {
    case SchemeKind::erkm15:
      if (!params.empty() && params.size() != 7) throw usage_error("erkm15 takes 7 coefficients c1..c7");
      break;
    case SchemeKind::erkm_closed:
      if (!params.empty() && params.size() != 7 && params.size() != 8)
        throw usage_error("erkm-closed takes 7 coefficients c1..c7 or 8 coefficients c^1..c^8");
      break;
    default:
      if (!params.empty()) throw usage_error("scheme '" + name() + "' takes no coefficients");
  }
  for (double v : params)
    if (v == 0.0 || !std::isfinite(v)) throw domain_error("scheme coefficients must be finite and nonzero");
}

namespace {

ERKMParams erkm_params(const std::vector<double>& v) {
  ERKMParams c;
  if (v.size() == 7) std::copy(v.begin(), v.end(), c.c.begin());
  return c;
}

}  // namespace

Stepper::Stepper(SchemeSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.kind == SchemeKind::erkm15) tableau_ = erkm15_tableau(erkm_params(spec_.params), spec_.alpha3);
}

SpectralField Stepper::step(const StepContext& ctx) const {
  switch (spec_.kind) {
    case SchemeKind::erkm15: return erkm_step(tableau_, ctx);
    case SchemeKind::erkm_closed: {
      if (spec_.params.size() == 8) {
        GeneralizedParams g;
        std::copy(spec_.params.begin(), spec_.params.end(), g.chat.begin());
        return erkm15_closed_form_step(g, ctx);
      }
      return erkm15_closed_form_step(GeneralizedParams::from_erkm(erkm_params(spec_.params), ctx.h()), ctx);
    }
    case SchemeKind::ewp: return ewp_step(ctx);
    case SchemeKind::exe: return baseline_step(Baseline::exe, ctx, spec_.exe_variant);
    case SchemeKind::lie: return baseline_step(Baseline::lie, ctx);
    case SchemeKind::dfmm: return baseline_step(Baseline::dfmm, ctx);
  }
  throw usage_error("unknown scheme");
}

Solver::Solver(ProblemSpec problem)
    : problem_(std::move(problem)),
      grid_(problem_.modes()),
      op_(problem_.linear_operator()),
      projector_(problem_.qspec, grid_) {}

template <class Sink>
void Solver::run(const Stepper& stepper, const NoisePath& path, EvalCounters* counters, Sink&& sink) const {
  if (path.size() == 0) throw usage_error("noise path has no steps");
  path.validate();
  if (path.modes() != problem_.qspec.modes())
    throw dimension_error("noise path has " + std::to_string(path.modes()) + " modes, problem expects " +
                          std::to_string(problem_.qspec.modes()));
  EvalCounters local;
  EvalCounters& ctr = counters != nullptr ? *counters : local;
  const Propagators prop = make_propagators(op_, grid_.size(), path.step_size());
  SpectralField y = problem_.initial_coeffs;
  sink(y);
  for (std::size_t m = 0; m < path.size(); ++m) {
    const RandomWeights w = projector_.weights(path.steps[m]);
    const StepContext ctx{problem_, grid_, op_, prop, w, y, ctr};
    SpectralField next = stepper.step(ctx);
    if (const std::size_t bad = first_non_finite(next); bad != next.size())
      throw divergence_error(stepper.spec().label(), m, bad + 1);
    y = std::move(next);
    sink(y);
  }
}

Trajectory Solver::solve(const Stepper& stepper, const NoisePath& path, EvalCounters* counters) const {
  Trajectory out;
  out.reserve(path.size() + 1);
  run(stepper, path, counters, [&out](const SpectralField& y) { out.push_back(y); });
  return out;
}

SpectralField Solver::terminal(const Stepper& stepper, const NoisePath& path, EvalCounters* counters) const {
  SpectralField last;
  run(stepper, path, counters, [&last](const SpectralField& y) { last = y; });
  return last;
}

Trajectory solve(const ProblemSpec& p, const SchemeSpec& scheme, const NoisePath& path, std::size_t modes) {
  if (p.modes() != modes)
    throw dimension_error("problem has " + std::to_string(p.modes()) + " modes, requested " + std::to_string(modes));
  return Solver(p).solve(Stepper(scheme), path);
}

}  // namespace erkm
