#include "erkm/spectral_space.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace erkm {

namespace {

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw dimension_error(std::string(what) + ": length " + std::to_string(got) + " does not match grid size " +
                          std::to_string(want));
}

// sqrt(2) sin(k pi p / (N+1)); k*p is reduced modulo the period first.
double sine_entry(std::size_t k, std::size_t p, std::size_t n) {
  const std::size_t period = 2 * (n + 1);
  const std::size_t m = (k * p) % period;
  return std::numbers::sqrt2 * std::sin(std::numbers::pi * static_cast<double>(m) / static_cast<double>(n + 1));
}

}  // namespace

SineBasisGrid::SineBasisGrid(std::size_t n) : n_(n) {
  if (n == 0) throw usage_error("SineBasisGrid needs at least one mode");
  nodes_.resize(n);
  for (std::size_t p = 1; p <= n; ++p) nodes_[p - 1] = static_cast<double>(p) / static_cast<double>(n + 1);
  synth_.resize(n * n);
  for (std::size_t p = 1; p <= n; ++p)
    for (std::size_t k = 1; k <= n; ++k) synth_[(p - 1) * n + (k - 1)] = sine_entry(k, p, n);
}

PhysicalField SineBasisGrid::to_physical(const SpectralField& field) const {
  require_length(field.size(), n_, "to_physical");
  PhysicalField out(n_);
  const double* a = field.span().data();
  for (std::size_t p = 0; p < n_; ++p) {
    const double* row = synth_.data() + p * n_;
    double acc = 0.0;
    for (std::size_t k = 0; k < n_; ++k) acc += row[k] * a[k];
    out[p] = acc;
  }
  return out;
}

SpectralField SineBasisGrid::to_spectral(const PhysicalField& field) const {
  require_length(field.size(), n_, "to_spectral");
  // S^T S = (N+1) I for the sqrt(2)-normalized DST-I matrix.
  SpectralField out(n_);
  const double scale = 1.0 / static_cast<double>(n_ + 1);
  for (std::size_t p = 0; p < n_; ++p) {
    const double* row = synth_.data() + p * n_;
    const double v = field[p] * scale;
    for (std::size_t k = 0; k < n_; ++k) out[k] += row[k] * v;
  }
  return out;
}

PhysicalField to_physical(const SpectralField& field, const SineBasisGrid& grid) { return grid.to_physical(field); }
SpectralField to_spectral(const PhysicalField& field, const SineBasisGrid& grid) { return grid.to_spectral(field); }

SineSynthesis::SineSynthesis(std::size_t modes, const SineBasisGrid& grid)
    : SineSynthesis(std::vector<double>(modes, 1.0), grid) {}

SineSynthesis::SineSynthesis(std::span<const double> column_weights, const SineBasisGrid& grid)
    : modes_(column_weights.size()), points_(grid.size()), matrix_(modes_ * points_) {
  const double denom = static_cast<double>(grid.size() + 1);
  for (std::size_t p = 0; p < points_; ++p) {
    for (std::size_t j = 0; j < modes_; ++j) {
      // Reduce j*(p+1) modulo the period 2(N+1) before scaling by pi.
      const std::size_t m = ((j + 1) * (p + 1)) % (2 * (grid.size() + 1));
      matrix_[p * modes_ + j] =
          column_weights[j] * std::numbers::sqrt2 * std::sin(std::numbers::pi * static_cast<double>(m) / denom);
    }
  }
}

PhysicalField SineSynthesis::apply(std::span<const double> coeffs) const {
  require_length(coeffs.size(), modes_, "SineSynthesis::apply");
  PhysicalField out(points_);
  for (std::size_t p = 0; p < points_; ++p) {
    const double* row = matrix_.data() + p * modes_;
    double acc = 0.0;
    for (std::size_t j = 0; j < modes_; ++j) acc += row[j] * coeffs[j];
    out[p] = acc;
  }
  return out;
}

LinearOperatorSpec::LinearOperatorSpec(double kappa_, double eta_) : kappa(kappa_), eta(eta_) {
  if (!(kappa_ > 0.0)) throw domain_error("diffusion constant must be positive");
  if (!(eta_ >= 0.0)) throw domain_error("shift eta must be nonnegative");
}

double LinearOperatorSpec::eigenvalue(std::size_t k) const noexcept {
  const double kk = static_cast<double>(k);
  return kappa * std::numbers::pi * std::numbers::pi * kk * kk;
}

std::vector<double> LinearOperatorSpec::eigenvalues(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t k = 1; k <= n; ++k) out[k - 1] = eigenvalue(k);
  return out;
}

namespace {

// (1 - e^{-x}) / x without cancellation for small x.
double phi1_scalar(double x) {
  if (std::abs(x) < 1e-5) return 1.0 - x / 2.0 + x * x / 6.0;
  return -std::expm1(-x) / x;
}

struct FactorVisitor {
  const LinearOperatorSpec& op;
  double lambda;

  double operator()(const diag::Semigroup& s) const { return std::exp(-lambda * s.t); }
  double operator()(const diag::Generator&) const { return -lambda; }
  double operator()(const diag::Resolvent& r) const {
    if (!(r.h > 0.0)) throw domain_error("resolvent step must be positive");
    return 1.0 / (1.0 + r.h * lambda);
  }
  double operator()(const diag::Phi1& p) const { return phi1_scalar(p.h * lambda); }
  double operator()(const diag::FractionalPower& f) const { return std::pow(op.eta + lambda, f.r); }
};

}  // namespace

std::vector<double> diagonal_factors(const DiagonalKind& kind, const LinearOperatorSpec& op, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 1; k <= n; ++k) out[k - 1] = std::visit(FactorVisitor{op, op.eigenvalue(k)}, kind);
  return out;
}

SpectralField apply_diagonal(const DiagonalKind& kind, const LinearOperatorSpec& op, const SpectralField& field) {
  return scale_modes(diagonal_factors(kind, op, field.size()), field);
}

SpectralField scale_modes(std::span<const double> factors, SpectralField field) {
  require_length(field.size(), factors.size(), "scale_modes");
  for (std::size_t k = 0; k < field.size(); ++k) field[k] *= factors[k];
  return field;
}

double h_r_norm(const LinearOperatorSpec& op, double r, const SpectralField& field) {
  double acc = 0.0;
  if (r == 0.0) {
    for (double a : field) acc += a * a;
    return std::sqrt(acc);
  }
  for (std::size_t k = 1; k <= field.size(); ++k) {
    const double w = std::pow(op.eta + op.eigenvalue(k), r) * field[k - 1];
    acc += w * w;
  }
  return std::sqrt(acc);
}

}  // namespace erkm
