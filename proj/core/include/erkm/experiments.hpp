#pragma once

// Monte-Carlo strong-error studies at a fixed final time.
//
// Each realization samples one noise path at the finest resolution of the
// study; every coarser step size and the reference solution are computed
// from coarsenings of that same path.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "erkm/nemytskii.hpp"
#include "erkm/schemes.hpp"

namespace erkm {

struct ReferenceSpec {
  enum class Mode { exact, numerical };
  Mode mode = Mode::exact;
  SchemeSpec scheme = SchemeSpec::parse("ewp");
  std::size_t steps = 0;  ///< M_ref, numerical mode only

  static ReferenceSpec exact() { return {}; }
  static ReferenceSpec numerical(SchemeSpec scheme, std::size_t steps) {
    return {Mode::numerical, std::move(scheme), steps};
  }
  bool operator==(const ReferenceSpec& o) const {
    return mode == o.mode && steps == o.steps && (mode == Mode::exact || scheme.label() == o.scheme.label());
  }
};

struct StudyConfig {
  std::string problem = "example1";
  std::size_t modes = 64;        ///< N
  std::size_t noise_modes = 1;   ///< K
  double horizon = 1.0;          ///< T
  std::vector<std::size_t> steps_list;  ///< M values
  std::size_t realizations = 200;
  std::vector<SchemeSpec> schemes;
  ReferenceSpec reference;
  std::uint64_t base_seed = 20240101;
  std::size_t workers = 0;  ///< 0: hardware concurrency

  /// Scaled-down defaults: N = 64, K = 64 (1 for example1), R = 200,
  /// M = 2^3..2^9, exact reference for example1 and EWP at 2^12 otherwise,
  /// schemes lie, exe, dfmm, ewp, erkm15.
  static StudyConfig desk_defaults(std::string_view problem);

  /// Finest resolution a realization is sampled at.
  std::size_t finest_steps() const;
  /// Throws usage_error on inconsistent settings.
  void validate() const;
};

struct ErrorRow {
  std::string scheme;
  std::size_t steps = 0;  ///< M
  double h = 0.0;
  double rms_error = 0.0;
  double std_error = 0.0;
  std::size_t flagged = 0;  ///< realizations where this scheme diverged
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
  std::size_t realizations = 0;
  std::size_t reference_flagged = 0;

  const ErrorRow* find(std::string_view scheme, std::size_t steps) const;
  /// Scheme labels in first-appearance order.
  std::vector<std::string> schemes() const;
  /// Largest fraction of flagged realizations over the reference and all rows.
  double flagged_fraction() const;
  /// More than 1% of realizations flagged anywhere.
  bool failed() const { return flagged_fraction() > 0.01; }
};

struct RmsEstimate {
  double rms = 0.0;
  double standard_error = 0.0;
};

/// sqrt(mean squared error) with a delta-method standard error
/// std(squared errors) / (2 rms sqrt(R)).
RmsEstimate rms_from_squared(std::span<const double> squared_errors);

/// Same, from (approximation, truth) pairs measured in the H norm.
RmsEstimate rms_error(std::span<const std::pair<SpectralField, SpectralField>> terminal_pairs);

/// ||a - b||_H via Parseval.
double h_distance_squared(const SpectralField& a, const SpectralField& b);

struct OrderFit {
  double slope = 0.0;      ///< d log(error) / d log(h)
  double intercept = 0.0;  ///< log C in error ~ C h^slope
  double residual = 0.0;   ///< RMS of log-residuals
  std::size_t rows_used = 0;
  std::size_t rows_excluded = 0;  ///< nonpositive errors skipped
};

/// Least-squares power law through (h, error) pairs.
OrderFit fit_power_law(std::span<const double> h, std::span<const double> error);
OrderFit fit_order(const ErrorTable& table, std::string_view scheme);

/// Brownian state beta_T per mode: the sum of all increments of a path.
std::vector<double> terminal_brownian(const NoisePath& path);

/// Called after each realization finishes (from worker threads).
using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

ErrorTable run_study(const StudyConfig& cfg, const ProgressCallback& progress = {});

/// Header "scheme,M,h,rms_error,std_error,flagged"; floats in shortest
/// round-trip form. Lines starting with '#' are comments.
void write_error_table(std::ostream& os, const ErrorTable& table);
ErrorTable read_error_table(std::istream& is);

}  // namespace erkm
