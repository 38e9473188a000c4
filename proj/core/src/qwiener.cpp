#include "erkm/qwiener.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "erkm/philox.hpp"

namespace erkm {

QSpec QSpec::scalar() { return QSpec{NoiseModeKind::scalar_constant, {1.0}}; }

QSpec QSpec::sine_basis(std::vector<double> eigenvalues) {
  QSpec q{NoiseModeKind::sine_basis, std::move(eigenvalues)};
  q.validate();
  return q;
}

void QSpec::validate() const {
  if (mode_eigenvalues.empty()) throw usage_error("noise spectrum needs at least one mode");
  for (double e : mode_eigenvalues)
    if (!std::isfinite(e) || e < 0.0) throw usage_error("noise eigenvalues must be finite and nonnegative");
  if (kind == NoiseModeKind::scalar_constant && mode_eigenvalues.size() != 1)
    throw usage_error("scalar noise has exactly one mode");
}

void NoisePath::validate() const {
  if (steps.empty()) return;
  const double h = steps.front().h;
  const std::size_t k = steps.front().modes();
  for (const auto& s : steps) {
    if (s.h != h || s.modes() != k || s.I.size() != k) throw usage_error("noise path steps must share h and K");
  }
}

std::pair<double, double> joint_increment(double h, double z1, double z2) {
  if (!(h > 0.0)) throw domain_error("step size must be positive");
  const double sqrt_h = std::sqrt(h);
  const double h32 = h * sqrt_h;
  return {sqrt_h * z1, 0.5 * h32 * z1 + h32 / (2.0 * std::sqrt(3.0)) * z2};
}

std::pair<double, double> standard_normal_pair(const StreamKey& key, std::size_t mode) {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(key.step), static_cast<std::uint32_t>(key.step >> 32),
                          static_cast<std::uint32_t>(mode), static_cast<std::uint32_t>(key.realization)};
  const PhiloxKey k{static_cast<std::uint32_t>(key.base_seed), static_cast<std::uint32_t>(key.base_seed >> 32)};
  return philox_normal_pair(ctr, k);
}

WienerStep sample_step(const StreamKey& key, const QSpec& q, double h) {
  if (!(h > 0.0)) throw domain_error("step size must be positive");
  WienerStep s;
  s.h = h;
  s.dB.resize(q.modes());
  s.I.resize(q.modes());
  for (std::size_t j = 0; j < q.modes(); ++j) {
    const auto [z1, z2] = standard_normal_pair(key, j);
    std::tie(s.dB[j], s.I[j]) = joint_increment(h, z1, z2);
  }
  return s;
}

NoisePath sample_path(std::uint64_t base_seed, std::uint64_t realization, const QSpec& q, std::size_t steps,
                      double horizon) {
  if (steps == 0) throw usage_error("a noise path needs at least one step");
  const double h = horizon / static_cast<double>(steps);
  NoisePath path;
  path.base_seed = base_seed;
  path.realization = realization;
  path.steps.reserve(steps);
  for (std::size_t m = 0; m < steps; ++m) path.steps.push_back(sample_step({base_seed, realization, m}, q, h));
  path.source_checksum = path_checksum(path);
  return path;
}

NoisePath coarsen(const NoisePath& path, std::size_t factor) {
  if (factor == 0 || path.size() % factor != 0)
    throw usage_error("coarsening factor " + std::to_string(factor) + " does not divide " +
                      std::to_string(path.size()) + " steps");
  path.validate();
  if (factor == 1) return path;

  const std::size_t k = path.modes();
  const double h_fine = path.step_size();
  NoisePath out;
  out.base_seed = path.base_seed;
  out.realization = path.realization;
  out.source_checksum = path.source_checksum;
  out.steps.reserve(path.size() / factor);
  for (std::size_t start = 0; start < path.size(); start += factor) {
    WienerStep c;
    c.h = h_fine * static_cast<double>(factor);
    c.dB.assign(k, 0.0);
    c.I.assign(k, 0.0);
    for (std::size_t i = 0; i < factor; ++i) {
      const WienerStep& f = path.steps[start + i];
      // Over substep i, W_s - W_{t_a} = (W_{t_i} - W_{t_a}) + (W_s - W_{t_i});
      // c.dB holds W_{t_i} - W_{t_a} before it is updated.
      for (std::size_t j = 0; j < k; ++j) {
        c.I[j] += f.I[j] + h_fine * c.dB[j];
        c.dB[j] += f.dB[j];
      }
    }
    out.steps.push_back(std::move(c));
  }
  return out;
}

std::uint64_t path_checksum(const NoisePath& path) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      hash ^= (bits >> (8 * b)) & 0xffu;
      hash *= 0x100000001b3ull;
    }
  };
  for (const auto& s : path.steps) {
    for (double v : s.dB) mix(v);
    for (double v : s.I) mix(v);
  }
  return hash;
}

PhysicalField gsq_field(const QSpec& q, const SineBasisGrid& grid) {
  if (q.kind == NoiseModeKind::scalar_constant) return PhysicalField(grid.size(), 1.0);
  const SineSynthesis basis(q.modes(), grid);
  PhysicalField out(grid.size());
  std::vector<double> unit(q.modes(), 0.0);
  for (std::size_t j = 0; j < q.modes(); ++j) {
    unit[j] = 1.0;
    const PhysicalField e = basis.apply(unit);
    unit[j] = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) out[p] += q.mode_eigenvalues[j] * e[p] * e[p];
  }
  return out;
}

double RandomWeights::identity_residual() const {
  double worst = 0.0;
  for (std::size_t p = 0; p < dW.size(); ++p) {
    const double r1 = theta1_3[p] - (gsq[p] - theta1_1[p] * theta1_1[p] / h);
    const double r2 = theta2_1[p] - (theta0_2[p] * h - 0.5 * h * theta1_1[p]);
    worst = std::max({worst, std::abs(r1), std::abs(r2)});
  }
  return worst;
}

RandomWeights assemble_weights(double h, PhysicalField dW, PhysicalField Iw, const PhysicalField& gsq) {
  if (!(h > 0.0)) throw domain_error("step size must be positive");
  const std::size_t n = dW.size();
  if (Iw.size() != n || gsq.size() != n) throw dimension_error("noise fields disagree with grid size");

  RandomWeights w;
  w.h = h;
  w.theta0_1 = h;
  w.theta0_2 = PhysicalField(n);
  w.theta0_3 = PhysicalField(n);
  w.theta1_2 = PhysicalField(n);
  w.theta1_3 = PhysicalField(n);
  w.theta1_4 = PhysicalField(n);
  w.theta1_5 = PhysicalField(n);
  w.theta2_1 = PhysicalField(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double dw = dW[p];
    const double iw = Iw[p];
    const double g = gsq[p];
    const double dw3 = dw * dw * dw;
    w.theta0_2[p] = iw / h;
    w.theta0_3[p] = h * g;
    w.theta1_2[p] = iw / h;
    w.theta1_3[p] = g - dw * dw / h;
    w.theta1_4[p] = (iw * g - dw3 / 3.0) / h;
    w.theta1_5[p] = dw * g - dw3 / (3.0 * h);
    w.theta2_1[p] = iw - 0.5 * h * dw;
  }
  w.theta1_1 = dW;
  w.dW = std::move(dW);
  w.Iw = std::move(Iw);
  w.gsq = gsq;
  return w;
}

namespace {

std::vector<double> sqrt_eigenvalues(const QSpec& q) {
  std::vector<double> out(q.modes());
  for (std::size_t j = 0; j < q.modes(); ++j) out[j] = std::sqrt(q.mode_eigenvalues[j]);
  return out;
}

}  // namespace

NoiseProjector::NoiseProjector(QSpec q, const SineBasisGrid& grid)
    : q_(std::move(q)),
      points_(grid.size()),
      synthesis_((q_.validate(), sqrt_eigenvalues(q_)), grid),
      gsq_(gsq_field(q_, grid)) {}

std::pair<PhysicalField, PhysicalField> NoiseProjector::fields(const WienerStep& step) const {
  if (step.modes() != q_.modes() || step.I.size() != q_.modes())
    throw dimension_error("wiener step has " + std::to_string(step.modes()) + " modes, noise spectrum has " +
                          std::to_string(q_.modes()));
  if (q_.kind == NoiseModeKind::scalar_constant) {
    const double s = std::sqrt(q_.mode_eigenvalues[0]);
    return {PhysicalField(points_, s * step.dB[0]), PhysicalField(points_, s * step.I[0])};
  }
  return {synthesis_.apply(step.dB), synthesis_.apply(step.I)};
}

RandomWeights NoiseProjector::weights(const WienerStep& step) const {
  auto [dW, Iw] = fields(step);
  return assemble_weights(step.h, std::move(dW), std::move(Iw), gsq_);
}

RandomWeights theta_weights(const WienerStep& step, const QSpec& q, const SineBasisGrid& grid,
                            const PhysicalField& gsq) {
  if (gsq.size() != grid.size()) throw dimension_error("gsq field does not match grid");
  const NoiseProjector projector(q, grid);
  auto [dW, Iw] = projector.fields(step);
  return assemble_weights(step.h, std::move(dW), std::move(Iw), gsq);
}

void write_path(std::ostream& os, const NoisePath& path) {
  auto put = [&os](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
  };
  os << "step,mode,dB,I\n";
  for (std::size_t m = 0; m < path.size(); ++m) {
    const WienerStep& s = path.steps[m];
    for (std::size_t j = 0; j < s.modes(); ++j) {
      os << m << ',' << (j + 1) << ',';
      put(s.dB[j]);
      os << ',';
      put(s.I[j]);
      os << '\n';
    }
  }
}

}  // namespace erkm
