#pragma once

// Command-line front end: study configuration files, output files and the
// `erkm` subcommands.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "erkm/errors.hpp"
#include "erkm/experiments.hpp"

namespace erkm::cli {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_failure = 2 };

struct CliConfig {
  StudyConfig study;
  std::string out_dir = "out";
  int verbosity = 0;  ///< 0 quiet, 1 progress on stderr

  bool operator==(const CliConfig& o) const;
};

/// A malformed configuration file; what() carries "source:line: message".
class config_error : public usage_error {
 public:
  config_error(const std::string& source, std::size_t line, const std::string& msg);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Parses `key = value` lines. '#' starts a comment. Keys: problem, N, K, T,
/// M_list, realizations, scheme (repeatable), reference, seed, out_dir,
/// verbosity. Missing keys take the desk defaults of the chosen problem.
CliConfig parse_config(std::istream& is, const std::string& source = "<config>");
CliConfig load_config(const std::filesystem::path& file);

/// Writes every key in canonical form; parse_config reads it back unchanged.
void write_config(std::ostream& os, const CliConfig& cfg);

/// ERKM_SEED and ERKM_OUT_DIR take precedence over the file.
void apply_environment(CliConfig& cfg);

struct OrderBand {
  double lo;
  double hi;
  bool contains(double slope) const noexcept { return slope >= lo && slope <= hi; }
};

/// Slope band a scheme must reach on a built-in problem at the default study size, if any.
std::optional<OrderBand> expected_band(std::string_view problem, std::string_view scheme_label);

struct SlopeRow {
  std::string scheme;
  std::optional<OrderFit> fit;  ///< empty if fewer than 3 usable rows
  std::optional<OrderBand> band;

  bool in_band() const { return !band || (fit && band->contains(fit->slope)); }
};

/// One fitted order per scheme of the table; bands looked up for `problem`
/// when given.
std::vector<SlopeRow> summarize_orders(const ErrorTable& table, std::string_view problem = {});
void write_slopes(std::ostream& os, const std::vector<SlopeRow>& rows);

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant checks across all library modules.
std::vector<SelftestCase> run_selftest();

/// Entry point behind the `erkm` binary.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace erkm::cli
