#include "erkm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace erkm {

StudyConfig StudyConfig::desk_defaults(std::string_view problem) {
  StudyConfig cfg;
  cfg.problem = std::string(problem);
  cfg.modes = 64;
  cfg.noise_modes = problem == "example1" ? 1 : 64;
  cfg.horizon = 1.0;
  for (std::size_t l = 3; l <= 9; ++l) cfg.steps_list.push_back(std::size_t{1} << l);
  cfg.realizations = 200;
  for (const char* name : {"lie", "exe", "dfmm", "ewp", "erkm15"}) cfg.schemes.push_back(SchemeSpec::parse(name));
  cfg.reference = problem == "example1" ? ReferenceSpec::exact()
                                        : ReferenceSpec::numerical(SchemeSpec::parse("ewp"), std::size_t{1} << 12);
  return cfg;
}

std::size_t StudyConfig::finest_steps() const {
  if (reference.mode == ReferenceSpec::Mode::numerical) return reference.steps;
  return steps_list.empty() ? 0 : *std::max_element(steps_list.begin(), steps_list.end());
}

void StudyConfig::validate() const {
  if (modes == 0) throw usage_error("N must be positive");
  if (noise_modes == 0) throw usage_error("K must be positive");
  if (problem == "example1" && noise_modes != 1) throw usage_error("example1 is driven by scalar noise; K must be 1");
  if (!(horizon > 0.0)) throw usage_error("T must be positive");
  if (steps_list.empty()) throw usage_error("M_list must not be empty");
  if (realizations == 0) throw usage_error("realizations must be positive");
  if (schemes.empty()) throw usage_error("at least one scheme is required");
  for (const auto& s : schemes) s.validate();
  if (reference.mode == ReferenceSpec::Mode::numerical) {
    if (reference.steps == 0) throw usage_error("numerical reference needs M_ref > 0");
    reference.scheme.validate();
  } else if (problem != "example1") {
    throw usage_error("problem '" + problem + "' has no closed-form solution; use a numerical reference");
  }
  const std::size_t fine = finest_steps();
  for (std::size_t m : steps_list) {
    if (m == 0) throw usage_error("M values must be positive");
    if (fine % m != 0)
      throw usage_error("M = " + std::to_string(m) + " does not divide the finest resolution " + std::to_string(fine));
  }
  std::vector<std::string> labels;
  for (const auto& s : schemes) labels.push_back(s.label());
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw usage_error("duplicate scheme in study");
}

const ErrorRow* ErrorTable::find(std::string_view scheme, std::size_t steps) const {
  for (const auto& r : rows)
    if (r.scheme == scheme && r.steps == steps) return &r;
  return nullptr;
}

std::vector<std::string> ErrorTable::schemes() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.scheme) == out.end()) out.push_back(r.scheme);
  return out;
}

double ErrorTable::flagged_fraction() const {
  if (realizations == 0) return 0.0;
  std::size_t worst = reference_flagged;
  for (const auto& r : rows) worst = std::max(worst, r.flagged + reference_flagged);
  return static_cast<double>(worst) / static_cast<double>(realizations);
}

RmsEstimate rms_from_squared(std::span<const double> sq) {
  if (sq.empty()) throw usage_error("rms_error needs at least one sample");
  const double r = static_cast<double>(sq.size());
  double mean = 0.0;
  for (double v : sq) mean += v;
  mean /= r;
  RmsEstimate out;
  out.rms = std::sqrt(mean);
  if (out.rms == 0.0 || sq.size() < 2) return out;
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  var /= (r - 1.0);
  out.standard_error = std::sqrt(var) / (2.0 * out.rms * std::sqrt(r));
  return out;
}

double h_distance_squared(const SpectralField& a, const SpectralField& b) {
  if (a.size() != b.size()) throw dimension_error("fields differ in length");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return acc;
}

RmsEstimate rms_error(std::span<const std::pair<SpectralField, SpectralField>> pairs) {
  std::vector<double> sq;
  sq.reserve(pairs.size());
  for (const auto& [approx, truth] : pairs) sq.push_back(h_distance_squared(approx, truth));
  return rms_from_squared(sq);
}

OrderFit fit_power_law(std::span<const double> h, std::span<const double> error) {
  if (h.size() != error.size()) throw dimension_error("step sizes and errors differ in length");
  std::vector<double> x, y;
  OrderFit fit;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(error[i] > 0.0) || !(h[i] > 0.0) || !std::isfinite(error[i])) {
      ++fit.rows_excluded;
      continue;
    }
    x.push_back(std::log(h[i]));
    y.push_back(std::log(error[i]));
  }
  if (x.size() < 3) throw usage_error("order fit needs at least 3 rows with positive error");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw usage_error("order fit needs at least two distinct step sizes");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.rows_used = x.size();
  return fit;
}

OrderFit fit_order(const ErrorTable& table, std::string_view scheme) {
  std::vector<double> h, e;
  for (const auto& r : table.rows) {
    if (r.scheme != scheme) continue;
    h.push_back(r.h);
    e.push_back(r.rms_error);
  }
  if (h.empty()) throw usage_error("no rows for scheme '" + std::string(scheme) + "'");
  return fit_power_law(h, e);
}

std::vector<double> terminal_brownian(const NoisePath& path) {
  std::vector<double> beta(path.modes(), 0.0);
  for (const auto& s : path.steps)
    for (std::size_t j = 0; j < beta.size(); ++j) beta[j] += s.dB[j];
  return beta;
}

namespace {

struct RealizationResult {
  bool reference_flagged = false;
  // Indexed [scheme * n_steps + step_index]; empty optional = diverged.
  std::vector<std::optional<double>> squared;
};

}  // namespace

ErrorTable run_study(const StudyConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  const ProblemSpec problem = make_problem(cfg.problem, cfg.modes, cfg.noise_modes);
  const Solver solver(problem);
  std::vector<Stepper> steppers;
  for (const auto& s : cfg.schemes) steppers.emplace_back(s);
  const bool exact = cfg.reference.mode == ReferenceSpec::Mode::exact;
  if (exact && !problem.exact) throw usage_error("problem '" + cfg.problem + "' has no closed-form solution");
  const std::optional<Stepper> reference =
      exact ? std::nullopt : std::optional<Stepper>(Stepper(cfg.reference.scheme));

  const std::size_t fine = cfg.finest_steps();
  const std::size_t n_steps = cfg.steps_list.size();
  const std::size_t n_schemes = steppers.size();
  std::vector<RealizationResult> results(cfg.realizations);

  auto run_one = [&](std::size_t r) {
    RealizationResult& out = results[r];
    out.squared.assign(n_schemes * n_steps, std::nullopt);
    const NoisePath path = sample_path(cfg.base_seed, r, problem.qspec, fine, cfg.horizon);
    SpectralField truth;
    if (exact) {
      truth = (*problem.exact)(cfg.horizon, terminal_brownian(path), cfg.modes);
    } else {
      try {
        truth = solver.terminal(*reference, path);
      } catch (const divergence_error&) {
        out.reference_flagged = true;
        return;
      }
    }
    for (std::size_t mi = 0; mi < n_steps; ++mi) {
      const NoisePath coarse = coarsen(path, fine / cfg.steps_list[mi]);
      if (coarse.source_checksum != path.source_checksum)
        throw std::logic_error("coarse path is not derived from the realization's fine path");
      for (std::size_t si = 0; si < n_schemes; ++si) {
        try {
          out.squared[si * n_steps + mi] = h_distance_squared(solver.terminal(steppers[si], coarse), truth);
        } catch (const divergence_error&) {
          // Left empty; counted as flagged.
        }
      }
    }
  };

  std::size_t workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.realizations);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= cfg.realizations) return;
      try {
        run_one(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(cfg.realizations);
        return;
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) progress(d, cfg.realizations);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  // Reduction in realization order, independent of completion order.
  ErrorTable table;
  table.realizations = cfg.realizations;
  for (const auto& r : results) table.reference_flagged += r.reference_flagged ? 1 : 0;
  for (std::size_t si = 0; si < n_schemes; ++si) {
    for (std::size_t mi = 0; mi < n_steps; ++mi) {
      ErrorRow row;
      row.scheme = steppers[si].spec().label();
      row.steps = cfg.steps_list[mi];
      row.h = cfg.horizon / static_cast<double>(row.steps);
      std::vector<double> sq;
      for (const auto& r : results) {
        if (r.reference_flagged) continue;
        const auto& v = r.squared[si * n_steps + mi];
        if (v) sq.push_back(*v);
        else ++row.flagged;
      }
      if (!sq.empty()) {
        const RmsEstimate est = rms_from_squared(sq);
        row.rms_error = est.rms;
        row.std_error = est.standard_error;
      } else {
        row.rms_error = std::numeric_limits<double>::quiet_NaN();
        row.std_error = std::numeric_limits<double>::quiet_NaN();
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

namespace {

void put_double(std::ostream& os, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw usage_error("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::size_t parse_size(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw usage_error("line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_error_table(std::ostream& os, const ErrorTable& table) {
  os << "# realizations=" << table.realizations << " reference_flagged=" << table.reference_flagged << '\n';
  os << "scheme,M,h,rms_error,std_error,flagged\n";
  for (const auto& r : table.rows) {
    os << r.scheme << ',' << r.steps << ',';
    put_double(os, r.h);
    os << ',';
    put_double(os, r.rms_error);
    os << ',';
    put_double(os, r.std_error);
    os << ',' << r.flagged << '\n';
  }
}

ErrorTable read_error_table(std::istream& is) {
  ErrorTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "realizations") table.realizations = parse_size(val, lineno);
        else if (key == "reference_flagged") table.reference_flagged = parse_size(val, lineno);
      }
      continue;
    }
    if (!header) {
      if (line != "scheme,M,h,rms_error,std_error,flagged")
        throw usage_error("line " + std::to_string(lineno) + ": expected error-table header");
      header = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 6) throw usage_error("line " + std::to_string(lineno) + ": expected 6 columns");
    ErrorRow row;
    row.scheme = std::string(cols[0]);
    row.steps = parse_size(cols[1], lineno);
    row.h = parse_double(cols[2], lineno);
    row.rms_error = parse_double(cols[3], lineno);
    row.std_error = parse_double(cols[4], lineno);
    row.flagged = parse_size(cols[5], lineno);
    if (table.find(row.scheme, row.steps) != nullptr)
      throw usage_error("line " + std::to_string(lineno) + ": duplicate row for (" + row.scheme + ", " +
                        std::to_string(row.steps) + ")");
    table.rows.push_back(std::move(row));
  }
  if (!header) throw usage_error("error table has no header");
  return table;
}

}  // namespace erkm
