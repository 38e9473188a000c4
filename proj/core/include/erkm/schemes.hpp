#pragma once

// One-step integrators for the Galerkin-projected SPDE.
//
// Every stepper maps Y_m (spectral) to Y_{m+1} (spectral). Pointwise
// products and compositions with f, b happen on the collocation nodes;
// A, e^{tA} and the resolvent act diagonally on coefficients.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "erkm/field.hpp"
#include "erkm/nemytskii.hpp"
#include "erkm/qwiener.hpp"
#include "erkm/spectral_space.hpp"

namespace erkm {

/// Dense s x s coefficient matrix, 0-based (i, j).
class StageMatrix {
 public:
  StageMatrix() = default;
  explicit StageMatrix(std::size_t s) : s_(s), a_(s * s, 0.0) {}

  std::size_t size() const noexcept { return s_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * s_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * s_ + j]; }
  bool strictly_lower() const noexcept;

 private:
  std::size_t s_ = 0;
  std::vector<double> a_;
};

/// Coefficients of an explicit s-stage exponential stochastic Runge-Kutta
/// scheme. Drift stages K^0 feed f, diffusion stages K^1 feed b.
///
///   K_i^0 = Y + sum_j A01_ij h (A K_j^0 + f(K_j^0)) + sum_j (B01_ij h + B02_ij sqrt(h)) b(K_j^1)
///   K_i^1 = Y + sum_j A11_ij h (A K_j^0 + f(K_j^0)) + sum_j (B11_ij h + B12_ij sqrt(h)) b(K_j^1)
///
///   Y+ = e^{Ah/2} ( e^{Ah/2} Y + sum_{i,k} alpha[k]_i f(K_i^0) theta0_k
///                 + sum_{i,k} beta[k]_i b(K_i^1) theta1_k + A sum_i gamma_i b(K_i^1) theta2_1 )
struct ButcherTableau {
  std::size_t stages = 0;
  StageMatrix A01, A11, B01, B02, B11, B12;
  std::array<std::vector<double>, 3> alpha;
  std::array<std::vector<double>, 5> beta;
  std::vector<double> gamma;

  ButcherTableau() = default;
  explicit ButcherTableau(std::size_t s);

  /// Throws usage_error unless every stage matrix is strictly lower
  /// triangular and all weight vectors have length s.
  void validate() const;
};

/// c_1..c_7 of the ERKM1.5 family; all nonzero.
struct ERKMParams {
  std::array<double, 7> c{1, 1, 1, 1, 1, 1, 1};

  static ERKMParams ones() { return {}; }
  void validate() const;
};

/// c^_1..c^_8 of the summed closed form; may depend on h.
struct GeneralizedParams {
  std::array<double, 8> chat{};

  /// c^1 = h c1, c^2 = h c2, c^3 = sqrt(h) c3, c^4 = h c4, c^5 = h c5,
  /// c^6 = c^7 = sqrt(h) c6, c^8 = h c7.
  static GeneralizedParams from_erkm(const ERKMParams& c, double h);
  void validate() const;
};

enum class Alpha3Variant {
  consistent,  ///< alpha3 entries 1/(4 c3^2)
  printed,     ///< alpha3 entries 1/(4 c3); agrees with `consistent` only at c3 = 1
};

ButcherTableau erkm15_tableau(const ERKMParams& c, Alpha3Variant variant = Alpha3Variant::consistent);

/// Diagonal factors for one step size, computed once per trajectory.
struct Propagators {
  double h = 0.0;
  std::vector<double> half;       ///< e^{-lambda h / 2}
  std::vector<double> full;       ///< e^{-lambda h}
  std::vector<double> generator;  ///< -lambda
  std::vector<double> resolvent;  ///< (1 + h lambda)^{-1}
  std::vector<double> h_phi1;     ///< h phi1(h lambda) = (1 - e^{-h lambda}) / lambda
};

Propagators make_propagators(const LinearOperatorSpec& op, std::size_t modes, double h);

struct StepContext {
  const ProblemSpec& problem;
  const SineBasisGrid& grid;
  const LinearOperatorSpec& op;
  const Propagators& prop;
  const RandomWeights& weights;
  const SpectralField& y;
  EvalCounters& counters;

  double h() const noexcept { return weights.h; }
  /// Throws on inconsistent sizes or step sizes.
  void validate() const;
};

SpectralField erkm_step(const ButcherTableau& tab, const StepContext& ctx);

SpectralField erkm15_closed_form_step(const GeneralizedParams& g, const StepContext& ctx);

/// Exponential Wagner-Platen step; needs f_y, f_yy, b_y, b_yy.
SpectralField ewp_step(const StepContext& ctx);

enum class Baseline { exe, lie, dfmm };

enum class ExeVariant {
  phi1,    ///< e^{Ah} Y + h phi1(hA) f(Y) + e^{Ah} (b(Y) dW)
  frozen,  ///< e^{Ah} (Y + h f(Y) + b(Y) dW)
};

SpectralField baseline_step(Baseline kind, const StepContext& ctx, ExeVariant exe = ExeVariant::phi1);

enum class SchemeKind { erkm15, erkm_closed, ewp, exe, lie, dfmm };

/// A named scheme with its parameters, as selected from configuration.
///
/// erkm15 takes 0 or 7 parameters (c-vector, default all ones).
/// erkm-closed takes 0 or 7 (c-vector, mapped to c^ per step size) or
/// 8 (literal c^-vector).
struct SchemeSpec {
  SchemeKind kind = SchemeKind::erkm15;
  std::vector<double> params;
  Alpha3Variant alpha3 = Alpha3Variant::consistent;
  ExeVariant exe_variant = ExeVariant::phi1;

  static SchemeSpec parse(std::string_view name, std::vector<double> params = {});
  /// Selector name: "erkm15", "erkm-closed", "ewp", "exe", "lie", "dfmm".
  std::string name() const;
  /// Unique row label, e.g. "erkm15" or "erkm15(2;1;1;1;1;1;1)".
  std::string label() const;
  void validate() const;
};

std::string_view scheme_kind_name(SchemeKind kind) noexcept;

/// Stateless one-step map for a SchemeSpec. Builds the tableau once.
class Stepper {
 public:
  explicit Stepper(SchemeSpec spec);

  const SchemeSpec& spec() const noexcept { return spec_; }
  SpectralField step(const StepContext& ctx) const;

 private:
  SchemeSpec spec_;
  ButcherTableau tableau_;
};

using Trajectory = std::vector<SpectralField>;

/// Integrates a problem over a noise path. Holds the grid, operator and
/// noise projection for one Galerkin size.
class Solver {
 public:
  explicit Solver(ProblemSpec problem);

  const ProblemSpec& problem() const noexcept { return problem_; }
  const SineBasisGrid& grid() const noexcept { return grid_; }
  const LinearOperatorSpec& op() const noexcept { return op_; }
  const NoiseProjector& projector() const noexcept { return projector_; }

  /// All iterates Y_0..Y_M. Throws divergence_error on a non-finite state.
  Trajectory solve(const Stepper& stepper, const NoisePath& path, EvalCounters* counters = nullptr) const;
  /// Y_M only.
  SpectralField terminal(const Stepper& stepper, const NoisePath& path, EvalCounters* counters = nullptr) const;

 private:
  template <class Sink>
  void run(const Stepper& stepper, const NoisePath& path, EvalCounters* counters, Sink&& sink) const;

  ProblemSpec problem_;
  SineBasisGrid grid_;
  LinearOperatorSpec op_;
  NoiseProjector projector_;
};

/// Convenience wrapper; `modes` must match the problem's initial coefficients.
Trajectory solve(const ProblemSpec& p, const SchemeSpec& scheme, const NoisePath& path, std::size_t modes);

}  // namespace erkm
