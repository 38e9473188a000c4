#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "erkm/version.hpp"

namespace erkm::cli {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool same_scheme(const SchemeSpec& a, const SchemeSpec& b) {
  return a.kind == b.kind && a.params == b.params && a.alpha3 == b.alpha3 && a.exe_variant == b.exe_variant;
}

// name [printed|frozen] [params...]
SchemeSpec parse_scheme_tokens(std::vector<std::string> toks, const std::function<void(const std::string&)>& fail) {
  if (toks.empty()) fail("missing scheme name");
  const std::string name = toks.front();
  std::vector<double> params;
  Alpha3Variant alpha3 = Alpha3Variant::consistent;
  ExeVariant exe = ExeVariant::phi1;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    if (toks[i] == "printed" && name == "erkm15") {
      alpha3 = Alpha3Variant::printed;
    } else if (toks[i] == "frozen" && name == "exe") {
      exe = ExeVariant::frozen;
    } else if (auto v = parse_number<double>(toks[i])) {
      params.push_back(*v);
    } else {
      fail("bad scheme argument '" + toks[i] + "'");
    }
  }
  try {
    SchemeSpec s = SchemeSpec::parse(name, std::move(params));
    s.alpha3 = alpha3;
    s.exe_variant = exe;
    return s;
  } catch (const std::logic_error& e) {
    fail(e.what());
  }
  return {};
}

std::string scheme_tokens(const SchemeSpec& s) {
  std::string out = s.name();
  if (s.kind == SchemeKind::erkm15 && s.alpha3 == Alpha3Variant::printed) out += " printed";
  if (s.kind == SchemeKind::exe && s.exe_variant == ExeVariant::frozen) out += " frozen";
  for (double p : s.params) out += ' ' + format_double(p);
  return out;
}

constexpr std::string_view known_keys[] = {"problem",      "N",         "K",    "T",       "M_list", "realizations",
                                           "scheme",       "reference", "seed", "out_dir", "verbosity"};

struct Entry {
  std::string key;
  std::string value;
  std::size_t line;
};

}  // namespace

bool CliConfig::operator==(const CliConfig& o) const {
  const StudyConfig& a = study;
  const StudyConfig& b = o.study;
  if (a.schemes.size() != b.schemes.size()) return false;
  for (std::size_t i = 0; i < a.schemes.size(); ++i)
    if (!same_scheme(a.schemes[i], b.schemes[i])) return false;
  return a.problem == b.problem && a.modes == b.modes && a.noise_modes == b.noise_modes && a.horizon == b.horizon &&
         a.steps_list == b.steps_list && a.realizations == b.realizations && a.reference == b.reference &&
         a.base_seed == b.base_seed && out_dir == o.out_dir && verbosity == o.verbosity;
}

config_error::config_error(const std::string& source, std::size_t line, const std::string& msg)
    : usage_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg), line_(line) {}

CliConfig parse_config(std::istream& is, const std::string& source) {
  std::vector<Entry> entries;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw config_error(source, lineno, "expected 'key = value'");
    Entry e{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), lineno};
    if (std::find(std::begin(known_keys), std::end(known_keys), e.key) == std::end(known_keys))
      throw config_error(source, lineno, "unknown key '" + e.key + "'");
    if (e.value.empty()) throw config_error(source, lineno, "empty value for '" + e.key + "'");
    if (e.key != "scheme")
      for (const auto& prev : entries)
        if (prev.key == e.key)
          throw config_error(source, lineno,
                             "duplicate key '" + e.key + "' (first set on line " + std::to_string(prev.line) + ")");
    entries.push_back(std::move(e));
  }

  std::string problem = "example1";
  std::size_t problem_line = 0;
  for (const auto& e : entries)
    if (e.key == "problem") {
      problem = e.value;
      problem_line = e.line;
    }
  const auto names = builtin_problem_names();
  if (std::find(names.begin(), names.end(), problem) == names.end())
    throw config_error(source, problem_line, "unknown problem '" + problem + "'");

  CliConfig cfg;
  cfg.study = StudyConfig::desk_defaults(problem);
  bool schemes_given = false;

  for (const auto& e : entries) {
    auto fail = [&](const std::string& msg) { throw config_error(source, e.line, e.key + ": " + msg); };
    auto positive = [&](std::string_view s) {
      auto v = parse_number<std::size_t>(s);
      if (!v || *v == 0) fail("expected a positive integer, got '" + std::string(s) + "'");
      return *v;
    };
    const auto toks = tokens(e.value);

    if (e.key == "problem") {
      continue;
    } else if (e.key == "N") {
      cfg.study.modes = positive(e.value);
    } else if (e.key == "K") {
      cfg.study.noise_modes = positive(e.value);
    } else if (e.key == "T") {
      auto v = parse_number<double>(e.value);
      if (!v || !(*v > 0.0)) fail("expected a positive number, got '" + e.value + "'");
      cfg.study.horizon = *v;
    } else if (e.key == "M_list") {
      cfg.study.steps_list.clear();
      for (const auto& t : toks) cfg.study.steps_list.push_back(positive(t));
    } else if (e.key == "realizations") {
      cfg.study.realizations = positive(e.value);
    } else if (e.key == "scheme") {
      if (!schemes_given) cfg.study.schemes.clear();
      schemes_given = true;
      cfg.study.schemes.push_back(parse_scheme_tokens(toks, fail));
    } else if (e.key == "reference") {
      if (toks.size() == 1 && toks[0] == "exact") {
        cfg.study.reference = ReferenceSpec::exact();
      } else {
        if (toks.size() < 2) fail("expected 'exact' or '<scheme> <M_ref>'");
        const std::size_t m = positive(toks.back());
        auto scheme = parse_scheme_tokens({toks.begin(), toks.end() - 1}, fail);
        cfg.study.reference = ReferenceSpec::numerical(std::move(scheme), m);
      }
    } else if (e.key == "seed") {
      auto v = parse_number<std::uint64_t>(e.value);
      if (!v) fail("expected an unsigned integer, got '" + e.value + "'");
      cfg.study.base_seed = *v;
    } else if (e.key == "out_dir") {
      cfg.out_dir = e.value;
    } else if (e.key == "verbosity") {
      auto v = parse_number<int>(e.value);
      if (!v || *v < 0 || *v > 1) fail("expected 0 or 1, got '" + e.value + "'");
      cfg.verbosity = *v;
    }
  }

  try {
    cfg.study.validate();
  } catch (const usage_error& e) {
    throw config_error(source, 0, e.what());
  }
  return cfg;
}

CliConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw usage_error("cannot open config file '" + file.string() + "'");
  return parse_config(is, file.string());
}

void write_config(std::ostream& os, const CliConfig& cfg) {
  const StudyConfig& s = cfg.study;
  os << "problem = " << s.problem << '\n';
  os << "N = " << s.modes << '\n';
  os << "K = " << s.noise_modes << '\n';
  os << "T = " << format_double(s.horizon) << '\n';
  os << "M_list =";
  for (std::size_t m : s.steps_list) os << ' ' << m;
  os << '\n';
  os << "realizations = " << s.realizations << '\n';
  for (const auto& scheme : s.schemes) os << "scheme = " << scheme_tokens(scheme) << '\n';
  if (s.reference.mode == ReferenceSpec::Mode::exact)
    os << "reference = exact\n";
  else
    os << "reference = " << scheme_tokens(s.reference.scheme) << ' ' << s.reference.steps << '\n';
  os << "seed = " << s.base_seed << '\n';
  os << "out_dir = " << cfg.out_dir << '\n';
  os << "verbosity = " << cfg.verbosity << '\n';
}

void apply_environment(CliConfig& cfg) {
  if (const char* seed = std::getenv("ERKM_SEED"); seed != nullptr && *seed != '\0') {
    auto v = parse_number<std::uint64_t>(trim(seed));
    if (!v) throw usage_error("ERKM_SEED: expected an unsigned integer, got '" + std::string(seed) + "'");
    cfg.study.base_seed = *v;
  }
  if (const char* dir = std::getenv("ERKM_OUT_DIR"); dir != nullptr && *dir != '\0') cfg.out_dir = dir;
}

std::optional<OrderBand> expected_band(std::string_view problem, std::string_view scheme_label) {
  // Only the plain scheme variants carry a band.
  const bool high = scheme_label == "erkm15" || scheme_label == "erkm-closed" || scheme_label == "ewp";
  const bool euler = scheme_label == "exe" || scheme_label == "lie";
  if (problem == "example1") {
    if (euler) return OrderBand{0.35, 0.65};
    if (scheme_label == "dfmm") return OrderBand{0.85, 1.15};
    if (high) return OrderBand{1.3, 1.7};
  } else if (problem == "example2") {
    if (euler) return OrderBand{0.35, 0.65};
    if (scheme_label == "dfmm") return OrderBand{0.8, 1.2};
    if (high) return OrderBand{1.25, 1.75};
  } else if (problem == "example3") {
    if (scheme_label == "erkm15" || scheme_label == "erkm-closed")
      return OrderBand{1.25, std::numeric_limits<double>::infinity()};
  }
  return std::nullopt;
}

std::vector<SlopeRow> summarize_orders(const ErrorTable& table, std::string_view problem) {
  std::vector<SlopeRow> out;
  for (const auto& scheme : table.schemes()) {
    SlopeRow row;
    row.scheme = scheme;
    try {
      row.fit = fit_order(table, scheme);
    } catch (const usage_error&) {
      row.fit.reset();
    }
    if (!problem.empty()) row.band = expected_band(problem, scheme);
    out.push_back(std::move(row));
  }
  return out;
}

void write_slopes(std::ostream& os, const std::vector<SlopeRow>& rows) {
  os << "scheme,slope,intercept,residual,rows_used,band_lo,band_hi,status\n";
  for (const auto& r : rows) {
    os << r.scheme << ',';
    if (r.fit)
      os << format_double(r.fit->slope) << ',' << format_double(r.fit->intercept) << ','
         << format_double(r.fit->residual) << ',' << r.fit->rows_used;
    else
      os << ",,,0";
    os << ',';
    if (r.band) os << format_double(r.band->lo) << ',' << format_double(r.band->hi);
    else os << ',';
    os << ',' << (!r.fit ? "unfitted" : !r.band ? "-" : r.in_band() ? "ok" : "out-of-band") << '\n';
  }
}

namespace {

void print_orders(std::ostream& out, const std::vector<SlopeRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.scheme.size());
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << r.scheme << std::right;
    if (!r.fit) {
      out << "fewer than 3 usable rows\n";
      continue;
    }
    out << "order " << std::fixed << std::setprecision(3) << r.fit->slope << std::defaultfloat;
    if (r.band) {
      out << "  expected [" << r.band->lo << ", " << r.band->hi << "]  " << (r.in_band() ? "ok" : "OUT OF BAND");
    }
    out << '\n';
  }
}

void warn_excluded(std::ostream& err, const std::vector<SlopeRow>& rows) {
  for (const auto& r : rows)
    if (r.fit && r.fit->rows_excluded > 0)
      err << "warning: " << r.scheme << ": " << r.fit->rows_excluded << " nonpositive error(s) excluded from fit\n";
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

struct Options {
  std::string config;
  std::string table;
  std::string problem;
  std::size_t workers = 0;
  std::size_t realization = 0;
  bool assert_orders = false;
  bool strict_alpha3 = false;
};

CliConfig prepared_config(const Options& o) {
  CliConfig cfg = load_config(o.config);
  apply_environment(cfg);
  if (o.strict_alpha3) {
    for (auto& s : cfg.study.schemes)
      if (s.kind == SchemeKind::erkm15) s.alpha3 = Alpha3Variant::printed;
    if (cfg.study.reference.scheme.kind == SchemeKind::erkm15) cfg.study.reference.scheme.alpha3 = Alpha3Variant::printed;
  }
  cfg.study.workers = o.workers;
  return cfg;
}

int cmd_study(const Options& o, std::ostream& out, std::ostream& err) {
  const CliConfig cfg = prepared_config(o);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = std::filesystem::path(o.config).stem().string();

  ProgressCallback progress;
  if (cfg.verbosity > 0)
    progress = [&err](std::size_t done, std::size_t total) {
      err << "\rrealization " << done << '/' << total << std::flush;
      if (done == total) err << '\n';
    };
  const ErrorTable table = run_study(cfg.study, progress);
  const auto rows = summarize_orders(table, cfg.study.problem);

  {
    auto os = open_output(dir / (stem + "_errors.csv"));
    write_error_table(os, table);
  }
  {
    auto os = open_output(dir / (stem + "_slopes.csv"));
    write_slopes(os, rows);
  }
  {
    auto os = open_output(dir / (stem + "_meta.cfg"));
    os << "# erkm " << version << " study metadata; re-parses as a study configuration\n";
    write_config(os, cfg);
  }

  out << cfg.study.problem << ": " << table.rows.size() << " rows, " << table.realizations << " realizations -> "
      << (dir / (stem + "_errors.csv")).string() << '\n';
  print_orders(out, rows);
  warn_excluded(err, rows);

  if (table.failed()) {
    err << "study failed: " << std::setprecision(3) << 100.0 * table.flagged_fraction()
        << "% of realizations diverged (limit 1%)\n";
    return exit_failure;
  }
  if (o.assert_orders) {
    const bool ok = std::all_of(rows.begin(), rows.end(), [](const SlopeRow& r) { return r.fit && r.in_band(); });
    if (!ok) {
      err << "order assertion failed\n";
      return exit_failure;
    }
  }
  return exit_ok;
}

int cmd_path(const Options& o, std::ostream& out) {
  const CliConfig cfg = prepared_config(o);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = std::filesystem::path(o.config).stem().string();
  const ProblemSpec p = make_problem(cfg.study.problem, cfg.study.modes, cfg.study.noise_modes);
  const NoisePath path =
      sample_path(cfg.study.base_seed, o.realization, p.qspec, cfg.study.finest_steps(), cfg.study.horizon);
  const auto file = dir / (stem + "_path.csv");
  auto os = open_output(file);
  write_path(os, path);
  out << path.size() << " steps x " << path.modes() << " modes -> " << file.string() << '\n';
  return exit_ok;
}

int cmd_order(const Options& o, std::ostream& out, std::ostream& err) {
  std::ifstream is(o.table);
  if (!is) throw usage_error("cannot open table '" + o.table + "'");
  const ErrorTable table = read_error_table(is);
  const auto rows = summarize_orders(table, o.problem);
  write_slopes(out, rows);
  warn_excluded(err, rows);
  if (std::none_of(rows.begin(), rows.end(), [](const SlopeRow& r) { return r.fit.has_value(); })) {
    err << "no scheme has 3 usable rows\n";
    return exit_usage;
  }
  if (o.assert_orders &&
      !std::all_of(rows.begin(), rows.end(), [](const SlopeRow& r) { return r.fit && r.in_band(); })) {
    err << "order assertion failed\n";
    return exit_failure;
  }
  return exit_ok;
}

int cmd_selftest(std::ostream& out) {
  std::size_t failed = 0;
  for (const auto& c : run_selftest()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << "  (" << c.detail << ')';
    out << '\n';
    if (!c.passed) ++failed;
  }
  out << (failed == 0 ? "all self-tests passed" : std::to_string(failed) + " self-test(s) failed") << '\n';
  return failed == 0 ? exit_ok : exit_failure;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strong-error studies for exponential stochastic Runge-Kutta schemes", "erkm"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);
  Options o;

  auto* study = app.add_subcommand("study", "Run a convergence study described by a config file");
  study->add_option("config", o.config, "Study configuration")->required();
  study->add_option("--workers", o.workers, "Worker threads (0: all cores)");
  study->add_flag("--assert-orders", o.assert_orders, "Exit 2 if a fitted order leaves its expected band");
  study->add_flag("--strict-table1", o.strict_alpha3, "Use alpha3 weights 1/(4 c3) instead of 1/(4 c3^2) for erkm15");

  auto* path = app.add_subcommand("path", "Dump the finest sampled noise path of one realization");
  path->add_option("config", o.config, "Study configuration")->required();
  path->add_option("--realization", o.realization, "Realization index");

  app.add_subcommand("selftest", "Run the library invariant checks");

  auto* order = app.add_subcommand("order", "Refit orders from an error table");
  order->add_option("table", o.table, "Error table CSV")->required();
  order->add_option("--problem", o.problem, "Built-in problem whose expected bands apply");
  order->add_flag("--assert-orders", o.assert_orders, "Exit 2 if a fitted order leaves its expected band");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (study->parsed()) return cmd_study(o, out, err);
    if (path->parsed()) return cmd_path(o, out);
    if (order->parsed()) return cmd_order(o, out, err);
    return cmd_selftest(out);
  } catch (const usage_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const capability_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace erkm::cli
