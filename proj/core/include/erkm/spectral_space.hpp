#pragma once

// Sine eigenbasis of the Dirichlet Laplacian on (0,1).
//
// A field in H_N is stored either as coefficients a_k against
// e_k(x) = sqrt(2) sin(k pi x), k = 1..N, or as its values at the interior
// nodes x_p = p / (N+1), p = 1..N. With N nodes for N modes the sine
// transform of type I is exactly invertible, so both views carry the same
// information.

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "erkm/field.hpp"

namespace erkm {

class SineBasisGrid {
 public:
  explicit SineBasisGrid(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t mode_count() const noexcept { return n_; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }

  /// values(x_p) = sum_k a_k sqrt(2) sin(k pi x_p)
  PhysicalField to_physical(const SpectralField& field) const;
  /// Exact inverse of to_physical on H_N.
  SpectralField to_spectral(const PhysicalField& field) const;

  /// Value of basis function k (1-based) at node p (1-based).
  double basis(std::size_t k, std::size_t p) const noexcept { return synth_[(p - 1) * n_ + (k - 1)]; }

 private:
  std::size_t n_;
  std::vector<double> nodes_;
  std::vector<double> synth_;  // row p, column k: sqrt(2) sin(k pi x_p)
};

PhysicalField to_physical(const SpectralField& field, const SineBasisGrid& grid);
SpectralField to_spectral(const PhysicalField& field, const SineBasisGrid& grid);

/// Evaluates sum_{j=1..K} c_j sqrt(2) sin(j pi x_p) on the nodes of a grid
/// for a fixed K that need not match the grid size.
class SineSynthesis {
 public:
  SineSynthesis(std::size_t modes, const SineBasisGrid& grid);
  /// Same, with each basis column pre-multiplied by weights[j].
  SineSynthesis(std::span<const double> column_weights, const SineBasisGrid& grid);

  std::size_t modes() const noexcept { return modes_; }
  std::size_t points() const noexcept { return points_; }

  PhysicalField apply(std::span<const double> coeffs) const;

 private:
  std::size_t modes_;
  std::size_t points_;
  std::vector<double> matrix_;  // row p, column j
};

/// A = kappa * Laplacian with Dirichlet conditions; eta shifts fractional powers.
struct LinearOperatorSpec {
  double kappa = 1.0;
  double eta = 0.0;

  LinearOperatorSpec() = default;
  LinearOperatorSpec(double kappa_, double eta_ = 0.0);

  /// lambda_k = kappa pi^2 k^2 for 1-based k; -A e_k = lambda_k e_k.
  double eigenvalue(std::size_t k) const noexcept;
  std::vector<double> eigenvalues(std::size_t n) const;
};

namespace diag {
struct Semigroup { double t; };
struct Generator {};
struct Resolvent { double h; };
struct Phi1 { double h; };
struct FractionalPower { double r; };
}  // namespace diag

using DiagonalKind =
    std::variant<diag::Semigroup, diag::Generator, diag::Resolvent, diag::Phi1, diag::FractionalPower>;

/// Per-mode multipliers of a diagonal operator on the first n modes:
/// semigroup e^{-lambda t}, generator -lambda, resolvent (1 + h lambda)^{-1},
/// phi1 (1 - e^{-h lambda}) / (h lambda), fractional power (eta + lambda)^r.
std::vector<double> diagonal_factors(const DiagonalKind& kind, const LinearOperatorSpec& op, std::size_t n);

SpectralField apply_diagonal(const DiagonalKind& kind, const LinearOperatorSpec& op, const SpectralField& field);

/// Multiplies a spectral field by precomputed per-mode factors.
SpectralField scale_modes(std::span<const double> factors, SpectralField field);

/// ||(eta - A)^r v||_H. For r = 0 this is the l2 norm of the coefficients.
double h_r_norm(const LinearOperatorSpec& op, double r, const SpectralField& field);

}  // namespace erkm
