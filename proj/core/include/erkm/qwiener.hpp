#pragma once

// Truncated Q-Wiener process W^K_t = sum_{j<=K} sqrt(eta_j) beta^j_t e~_j.
//
// Every step stores, per mode, the Brownian increment and the mixed
// integral int_t^{t+h} (beta_s - beta_t) ds. The pair is jointly Gaussian
// with covariance [[h, h^2/2], [h^2/2, h^3/3]].

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "erkm/field.hpp"
#include "erkm/spectral_space.hpp"

namespace erkm {

enum class NoiseModeKind {
  sine_basis,       ///< e~_j(x) = sqrt(2) sin(j pi x)
  scalar_constant,  ///< K = 1, g_1 == 1
};

struct QSpec {
  NoiseModeKind kind = NoiseModeKind::scalar_constant;
  std::vector<double> mode_eigenvalues{1.0};

  static QSpec scalar();
  static QSpec sine_basis(std::vector<double> eigenvalues);

  std::size_t modes() const noexcept { return mode_eigenvalues.size(); }
  /// Throws usage_error on negative/non-finite eigenvalues or a scalar spec with K != 1.
  void validate() const;
};

struct WienerStep {
  std::vector<double> dB;  ///< per-mode increment, units sqrt(time)
  std::vector<double> I;   ///< per-mode mixed integral, units time^{3/2}
  double h = 0.0;

  std::size_t modes() const noexcept { return dB.size(); }
};

struct NoisePath {
  std::vector<WienerStep> steps;
  std::uint64_t base_seed = 0;
  std::uint64_t realization = 0;
  /// Checksum of the finest path this one was derived from (itself if sampled directly).
  std::uint64_t source_checksum = 0;

  std::size_t size() const noexcept { return steps.size(); }
  std::size_t modes() const noexcept { return steps.empty() ? 0 : steps.front().modes(); }
  double step_size() const noexcept { return steps.empty() ? 0.0 : steps.front().h; }
  /// Throws usage_error unless every step shares h and K.
  void validate() const;
};

/// Cholesky image of a standard normal pair under the per-mode covariance:
/// dB = sqrt(h) z1, I = h^{3/2} (z1 / 2 + z2 / (2 sqrt(3))).
std::pair<double, double> joint_increment(double h, double z1, double z2);

/// Identifies the random substream of one step of one realization.
struct StreamKey {
  std::uint64_t base_seed = 0;
  std::uint64_t realization = 0;
  std::uint64_t step = 0;
};

/// Standard normal pair for (key, mode). Pure in its arguments.
std::pair<double, double> standard_normal_pair(const StreamKey& key, std::size_t mode);

WienerStep sample_step(const StreamKey& key, const QSpec& q, double h);

/// M steps of size T / M for one realization.
NoisePath sample_path(std::uint64_t base_seed, std::uint64_t realization, const QSpec& q, std::size_t steps,
                      double horizon);

/// Aggregates groups of `factor` consecutive steps into one.
NoisePath coarsen(const NoisePath& path, std::size_t factor);

/// FNV-1a over the bit patterns of every dB and I entry.
std::uint64_t path_checksum(const NoisePath& path);

/// Sum_j eta_j e~_j(x_p)^2 (constant 1 for scalar noise).
PhysicalField gsq_field(const QSpec& q, const SineBasisGrid& grid);

/// Random weights of one step, assembled pointwise on the grid.
struct RandomWeights {
  double h = 0.0;
  PhysicalField dW;   ///< Delta W^K(x_p)
  PhysicalField Iw;   ///< int (W^K_s - W^K_t) ds at x_p
  PhysicalField gsq;  ///< sum_j g_j(x_p)^2

  double theta0_1 = 0.0;
  PhysicalField theta0_2, theta0_3;
  PhysicalField theta1_1, theta1_2, theta1_3, theta1_4, theta1_5;
  PhysicalField theta2_1;

  /// Largest violation of the defining identities
  /// theta1_3 = gsq - theta1_1^2 / h and theta2_1 = theta0_2 h - (h/2) theta1_1.
  double identity_residual() const;
};

/// Maps per-mode step data onto the grid. Holds the synthesis matrix
/// with sqrt(eta_j) folded in, and the precomputed gsq field.
class NoiseProjector {
 public:
  NoiseProjector(QSpec q, const SineBasisGrid& grid);

  const QSpec& spec() const noexcept { return q_; }
  const PhysicalField& gsq() const noexcept { return gsq_; }

  /// (Delta W, mixed integral) as fields on the grid.
  std::pair<PhysicalField, PhysicalField> fields(const WienerStep& step) const;
  RandomWeights weights(const WienerStep& step) const;

 private:
  QSpec q_;
  std::size_t points_;
  SineSynthesis synthesis_;
  PhysicalField gsq_;
};

RandomWeights theta_weights(const WienerStep& step, const QSpec& q, const SineBasisGrid& grid,
                            const PhysicalField& gsq);

/// Builds the theta fields from already-assembled Delta W and mixed-integral fields.
RandomWeights assemble_weights(double h, PhysicalField dW, PhysicalField Iw, const PhysicalField& gsq);

/// One line per step per mode: "step,mode,dB,I" with a header row.
void write_path(std::ostream& os, const NoisePath& path);

}  // namespace erkm
