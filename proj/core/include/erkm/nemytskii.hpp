#pragma once

// Problem data for dX = (A X + f(x, X)) dt + b(x, X) dW on (0,1) with
// Dirichlet conditions, and pointwise evaluation of f, b and their
// partial derivatives in y.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "erkm/field.hpp"
#include "erkm/qwiener.hpp"
#include "erkm/spectral_space.hpp"

namespace erkm {

/// (x, y) -> value. Must be pure and reentrant: workers call it concurrently.
using PointwiseMap = std::function<double(double, double)>;

/// Closed-form solution: (t, per-mode Brownian state beta_t) -> coefficients on N modes.
using ExactSolution = std::function<SpectralField(double, std::span<const double>, std::size_t)>;

struct ProblemSpec {
  std::string name;
  double kappa = 1.0;
  PointwiseMap f;
  PointwiseMap b;
  std::optional<PointwiseMap> f_y, f_yy, b_y, b_yy;
  SpectralField initial_coeffs;  ///< P_N xi
  QSpec qspec;
  std::optional<ExactSolution> exact;
  std::optional<double> expected_order;

  std::size_t modes() const noexcept { return initial_coeffs.size(); }
  LinearOperatorSpec linear_operator() const { return LinearOperatorSpec(kappa); }
};

enum class Coeff : std::size_t { f = 0, b, f_y, f_yy, b_y, b_yy };

inline constexpr std::size_t kCoeffKinds = 6;

std::string_view coeff_name(Coeff which) noexcept;

/// Grid-wide evaluation counts, one slot per Coeff.
struct EvalCounters {
  std::array<std::size_t, kCoeffKinds> counts{};

  std::size_t& operator[](Coeff c) noexcept { return counts[static_cast<std::size_t>(c)]; }
  std::size_t operator[](Coeff c) const noexcept { return counts[static_cast<std::size_t>(c)]; }
  std::size_t f_count() const noexcept { return (*this)[Coeff::f]; }
  std::size_t b_count() const noexcept { return (*this)[Coeff::b]; }
  std::size_t total() const noexcept;
  void reset() noexcept { counts.fill(0); }
};

/// Composes the selected map with v pointwise on the grid nodes.
/// `requester` names the scheme in the capability error when a derivative is missing.
PhysicalField eval_coeff(Coeff which, const ProblemSpec& p, const PhysicalField& v, const SineBasisGrid& grid,
                         std::string_view requester = {});

/// Counts every evaluation it performs.
class CoeffEvaluator {
 public:
  CoeffEvaluator(const ProblemSpec& p, const SineBasisGrid& grid, EvalCounters& counters,
                 std::string_view requester = {})
      : problem_(p), grid_(grid), counters_(counters), requester_(requester) {}

  PhysicalField operator()(Coeff which, const PhysicalField& v) const {
    ++counters_[which];
    return eval_coeff(which, problem_, v, grid_, requester_);
  }
  PhysicalField f(const PhysicalField& v) const { return (*this)(Coeff::f, v); }
  PhysicalField b(const PhysicalField& v) const { return (*this)(Coeff::b, v); }

  /// Throws capability_error unless every listed derivative is present.
  void require(std::initializer_list<Coeff> needed) const;

 private:
  const ProblemSpec& problem_;
  const SineBasisGrid& grid_;
  EvalCounters& counters_;
  std::string_view requester_;
};

struct CommutativityCheck {
  bool holds = false;
  double max_residual = 0.0;
};

/// Pointwise check of (B'(v)(B(v~)u))u~ == (B'(v)(B(v~)u~))u.
CommutativityCheck check_commutativity(const ProblemSpec& p, const SineBasisGrid& grid, const PhysicalField& v,
                                       const PhysicalField& v_tilde, const PhysicalField& u,
                                       const PhysicalField& u_tilde);

/// Built-in problems "example1", "example2", "example3" on `modes` Galerkin modes.
/// `noise_modes` is ignored for example1 (scalar noise).
ProblemSpec make_problem(std::string_view name, std::size_t modes, std::size_t noise_modes);

/// Names accepted by make_problem.
std::vector<std::string> builtin_problem_names();

/// Coefficients n^{-4} exp(-(n^2 pi^2 + 1/2) t + beta_t) of the example-1 solution.
SpectralField exact_solution_example1(double t, double beta_t, std::size_t modes);

}  // namespace erkm
