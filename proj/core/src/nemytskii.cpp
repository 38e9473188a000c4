#include "erkm/nemytskii.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace erkm {

std::string_view coeff_name(Coeff which) noexcept {
  switch (which) {
    case Coeff::f: return "f";
    case Coeff::b: return "b";
    case Coeff::f_y: return "f_y";
    case Coeff::f_yy: return "f_yy";
    case Coeff::b_y: return "b_y";
    case Coeff::b_yy: return "b_yy";
  }
  return "?";
}

std::size_t EvalCounters::total() const noexcept {
  std::size_t sum = 0;
  for (std::size_t c : counts) sum += c;
  return sum;
}

namespace {

const PointwiseMap* select_map(Coeff which, const ProblemSpec& p) {
  switch (which) {
    case Coeff::f: return p.f ? &p.f : nullptr;
    case Coeff::b: return p.b ? &p.b : nullptr;
    case Coeff::f_y: return p.f_y ? &*p.f_y : nullptr;
    case Coeff::f_yy: return p.f_yy ? &*p.f_yy : nullptr;
    case Coeff::b_y: return p.b_y ? &*p.b_y : nullptr;
    case Coeff::b_yy: return p.b_yy ? &*p.b_yy : nullptr;
  }
  return nullptr;
}

[[noreturn]] void missing(Coeff which, const ProblemSpec& p, std::string_view requester) {
  std::string msg = "problem '" + p.name + "' does not provide " + std::string(coeff_name(which));
  if (!requester.empty()) msg += ", required by scheme '" + std::string(requester) + "'";
  throw capability_error(msg);
}

}  // namespace

PhysicalField eval_coeff(Coeff which, const ProblemSpec& p, const PhysicalField& v, const SineBasisGrid& grid,
                         std::string_view requester) {
  if (v.size() != grid.size()) throw dimension_error("field length does not match grid");
  const PointwiseMap* map = select_map(which, p);
  if (map == nullptr) missing(which, p, requester);
  const auto& nodes = grid.nodes();
  PhysicalField out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (*map)(nodes[i], v[i]);
  return out;
}

void CoeffEvaluator::require(std::initializer_list<Coeff> needed) const {
  for (Coeff c : needed)
    if (select_map(c, problem_) == nullptr) missing(c, problem_, requester_);
}

CommutativityCheck check_commutativity(const ProblemSpec& p, const SineBasisGrid& grid, const PhysicalField& v,
                                       const PhysicalField& v_tilde, const PhysicalField& u,
                                       const PhysicalField& u_tilde) {
  const PhysicalField by = eval_coeff(Coeff::b_y, p, v, grid, "commutativity check");
  const PhysicalField bv = eval_coeff(Coeff::b, p, v_tilde, grid, "commutativity check");
  CommutativityCheck out{true, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    // d = 1: B'(v)(B(v~)u)u~ is the scalar product b_y(v) b(v~) u u~.
    const double coupling = by[i] * bv[i];
    const double direct = coupling * (u[i] * u_tilde[i]);
    const double swapped = coupling * (u_tilde[i] * u[i]);
    out.max_residual = std::max(out.max_residual, std::abs(direct - swapped));
  }
  out.holds = out.max_residual == 0.0;
  return out;
}

SpectralField exact_solution_example1(double t, double beta_t, std::size_t modes) {
  if (t < 0.0) throw domain_error("time must be nonnegative");
  SpectralField out(modes);
  for (std::size_t n = 1; n <= modes; ++n) {
    const double nn = static_cast<double>(n);
    out[n - 1] = std::pow(nn, -4.0) * std::exp(-(nn * nn * std::numbers::pi * std::numbers::pi + 0.5) * t + beta_t);
  }
  return out;
}

namespace {

ProblemSpec example1(std::size_t modes) {
  ProblemSpec p;
  p.name = "example1";
  p.kappa = 1.0;
  p.f = [](double, double) { return 0.0; };
  p.f_y = [](double, double) { return 0.0; };
  p.f_yy = [](double, double) { return 0.0; };
  p.b = [](double, double y) { return y; };
  p.b_y = [](double, double) { return 1.0; };
  p.b_yy = [](double, double) { return 0.0; };
  p.initial_coeffs = exact_solution_example1(0.0, 0.0, modes);
  p.qspec = QSpec::scalar();
  p.exact = [](double t, std::span<const double> beta, std::size_t n) {
    return exact_solution_example1(t, beta.empty() ? 0.0 : beta[0], n);
  };
  p.expected_order = 1.5;
  return p;
}

ProblemSpec example2(std::size_t modes, std::size_t noise_modes) {
  ProblemSpec p;
  p.name = "example2";
  p.kappa = 0.1;
  p.f = [](double, double) { return 0.0; };
  p.f_y = [](double, double) { return 0.0; };
  p.f_yy = [](double, double) { return 0.0; };
  p.b = [](double, double y) { return y; };
  p.b_y = [](double, double) { return 1.0; };
  p.b_yy = [](double, double) { return 0.0; };
  // X_0 = sin(pi x) = e_1 / sqrt(2)
  p.initial_coeffs = SpectralField(modes);
  p.initial_coeffs[0] = 1.0 / std::numbers::sqrt2;
  // Q = (-A)^{-3}
  std::vector<double> eta(noise_modes);
  const LinearOperatorSpec op(p.kappa);
  for (std::size_t j = 1; j <= noise_modes; ++j) eta[j - 1] = std::pow(op.eigenvalue(j), -3.0);
  p.qspec = QSpec::sine_basis(std::move(eta));
  p.expected_order = 1.5;
  return p;
}

ProblemSpec example3(std::size_t modes, std::size_t noise_modes) {
  if (modes < 2) throw usage_error("example3 needs at least 2 modes");
  ProblemSpec p;
  p.name = "example3";
  p.kappa = 0.01;
  p.f = [](double, double y) { return std::sin(y); };
  p.f_y = [](double, double y) { return std::cos(y); };
  p.f_yy = [](double, double y) { return -std::sin(y); };
  p.b = [](double, double y) { return std::cos(y); };
  p.b_y = [](double, double y) { return -std::sin(y); };
  p.b_yy = [](double, double y) { return -std::cos(y); };
  // X_0 = sin(2 pi x) / 2 = e_2 / (2 sqrt(2))
  p.initial_coeffs = SpectralField(modes);
  p.initial_coeffs[1] = 1.0 / (2.0 * std::numbers::sqrt2);
  std::vector<double> eta(noise_modes);
  for (std::size_t j = 1; j <= noise_modes; ++j) eta[j - 1] = std::pow(static_cast<double>(j), -3.0);
  p.qspec = QSpec::sine_basis(std::move(eta));
  return p;
}

}  // namespace

ProblemSpec make_problem(std::string_view name, std::size_t modes, std::size_t noise_modes) {
  if (modes == 0) throw usage_error("problem needs at least one mode");
  if (name == "example1") return example1(modes);
  if (noise_modes == 0) throw usage_error("problem needs at least one noise mode");
  if (name == "example2") return example2(modes, noise_modes);
  if (name == "example3") return example3(modes, noise_modes);
  throw usage_error("unknown problem '" + std::string(name) + "'");
}

std::vector<std::string> builtin_problem_names() { return {"example1", "example2", "example3"}; }

}  // namespace erkm
