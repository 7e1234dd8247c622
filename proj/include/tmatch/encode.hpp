#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tmatch/errors.hpp"
#include "tmatch/field.hpp"

namespace tmatch {

/// Axis-aligned sampling window Omega_{x,t} x Omega_{y,t}; a point when both
/// extents are zero.
struct Rect {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool is_point() const { return x0 == x1 && y0 == y1; }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool within(const Domain& d, double tol = 1e-12) const {
    return x0 <= x1 && y0 <= y1 && x0 >= d.x_min - tol && x1 <= d.x_max + tol && y0 >= d.y_min - tol &&
           y1 <= d.y_max + tol;
  }
};

/// Periodic scanning trajectory: x(t) = x_min + k_s * t on the first pass,
/// then repeats with period (x_max - x_min) / k_s. Each pass is closed on the
/// right, so x(P) = x_max and x(P + s) = x(s) for 0 < s <= P.
inline double scan_position(double t, double x_min, double x_max, double k_s) {
  const double period = (x_max - x_min) / k_s;
  if (t <= period) return x_min + k_s * t;
  double r = std::fmod(t, period);
  if (r == 0.0) r = period;
  return x_min + k_s * r;
}

enum class ScheduleMode { Sweep, ScanLine, FrequencyStrips };

inline std::string_view to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::Sweep: return "sweep";
    case ScheduleMode::ScanLine: return "scan-line";
    case ScheduleMode::FrequencyStrips: return "frequency-strips";
  }
  return "sweep";
}

inline ScheduleMode parse_schedule_mode(std::string_view s) {
  for (auto m : {ScheduleMode::Sweep, ScheduleMode::ScanLine, ScheduleMode::FrequencyStrips})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown schedule mode '" + std::string(s) + "'");
}

/// Distinct positive carrier frequencies, one per strip.
struct FrequencyAssignment {
  std::vector<double> omegas;

  /// omega_nu = base * nu for nu = 1..n, ordered by strip index.
  static FrequencyAssignment harmonic(std::size_t n, double base) {
    FrequencyAssignment fa;
    for (std::size_t nu = 1; nu <= n; ++nu) fa.omegas.push_back(base * static_cast<double>(nu));
    return fa;
  }

  void validate() const {
    for (std::size_t a = 0; a < omegas.size(); ++a) {
      if (!(omegas[a] > 0.0) || !std::isfinite(omegas[a]))
        throw ConfigError("FrequencyAssignment: frequencies must be positive");
      for (std::size_t b = 0; b < a; ++b)
        if (omegas[a] == omegas[b]) throw ConfigError("FrequencyAssignment: frequencies must be distinct");
    }
  }

  /// True when omegas[k] == (k+1) * omegas[0] for every k.
  bool is_harmonic() const {
    for (std::size_t k = 0; k < omegas.size(); ++k)
      if (omegas[k] != omegas[0] * static_cast<double>(k + 1)) return false;
    return !omegas.empty();
  }
};

struct ScanLine {
  double x_min = -1.0;
  double x_max = 1.0;
  double k_s = 1.0;
  double y = 0.0;
};

/// How the image domain is factorized over model time.
struct SamplingSchedule {
  ScheduleMode mode = ScheduleMode::Sweep;
  std::vector<Rect> subdomains;
  double period = 1.0;
  ScanLine scan{};
  FrequencyAssignment omegas{};

  void validate(const Domain& d) const {
    if (!(period > 0.0)) throw ConfigError("SamplingSchedule: period must be positive");
    if (mode == ScheduleMode::ScanLine) {
      if (!(scan.x_max > scan.x_min) || !(scan.k_s > 0.0)) throw ConfigError("SamplingSchedule: bad scan line");
      if (!Rect{scan.x_min, scan.x_max, scan.y, scan.y}.within(d))
        throw DomainError("SamplingSchedule: scan line leaves the field domain");
      return;
    }
    if (subdomains.empty()) throw ConfigError("SamplingSchedule: no subdomains");
    for (const auto& r : subdomains)
      if (!r.within(d)) throw DomainError("SamplingSchedule: subdomain outside the field domain");
    if (mode == ScheduleMode::FrequencyStrips) {
      omegas.validate();
      if (omegas.omegas.size() != subdomains.size())
        throw ConfigError("SamplingSchedule: frequency count differs from strip count");
    }
  }

  /// Checks that the subdomains cover `region` on an n x n probe lattice.
  bool covers(const Rect& region, std::size_t n = 64) const {
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t a = 0; a < n; ++a) {
        const double x = region.x0 + (a + 0.5) * (region.x1 - region.x0) / static_cast<double>(n);
        const double y = region.y0 + (b + 0.5) * (region.y1 - region.y0) / static_cast<double>(n);
        bool hit = false;
        for (const auto& r : subdomains)
          if (r.contains(x, y)) {
            hit = true;
            break;
          }
        if (!hit) return false;
      }
    return true;
  }

  /// Sweep over `rects`, each active for period / m model-time units.
  static SamplingSchedule sweep(std::vector<Rect> rects, double period) {
    SamplingSchedule s;
    s.mode = ScheduleMode::Sweep;
    s.subdomains = std::move(rects);
    s.period = period;
    return s;
  }

  /// `n_h` horizontal strips (bottom to top) followed by `n_v` vertical strips
  /// (left to right), carrier omega_nu = base * nu. The period is the common
  /// period pi / base of every sin^2 carrier.
  static SamplingSchedule frequency_strips(const Domain& d, std::size_t n_h, std::size_t n_v, double base) {
    SamplingSchedule s;
    s.mode = ScheduleMode::FrequencyStrips;
    for (std::size_t k = 0; k < n_h; ++k) {
      const double y0 = d.y_min + d.height() * static_cast<double>(k) / static_cast<double>(n_h);
      const double y1 = k + 1 == n_h ? d.y_max : d.y_min + d.height() * static_cast<double>(k + 1) / static_cast<double>(n_h);
      s.subdomains.push_back({d.x_min, d.x_max, y0, y1});
    }
    for (std::size_t k = 0; k < n_v; ++k) {
      const double x0 = d.x_min + d.width() * static_cast<double>(k) / static_cast<double>(n_v);
      const double x1 = k + 1 == n_v ? d.x_max : d.x_min + d.width() * static_cast<double>(k + 1) / static_cast<double>(n_v);
      s.subdomains.push_back({x0, x1, d.y_min, d.y_max});
    }
    s.omegas = FrequencyAssignment::harmonic(s.subdomains.size(), base);
    s.period = std::numbers::pi / base;
    return s;
  }

  static SamplingSchedule scan_line(ScanLine line) {
    SamplingSchedule s;
    s.mode = ScheduleMode::ScanLine;
    s.scan = line;
    s.period = (line.x_max - line.x_min) / line.k_s;
    return s;
  }

  /// Index of the subdomain active at time t in sweep mode.
  std::size_t active_slot(double t) const {
    const double m = static_cast<double>(subdomains.size());
    double phase = std::fmod(t, period);
    if (phase < 0.0) phase += period;
    auto slot = static_cast<std::size_t>(std::floor(phase / (period / m)));
    return std::min(slot, subdomains.size() - 1);
  }
};

enum class FunctionalKind { StripIntegral, ExpKernel, ScanPoint, SpectralBand };

inline std::string_view to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::StripIntegral: return "strip-integral";
    case FunctionalKind::ExpKernel: return "exp-kernel";
    case FunctionalKind::ScanPoint: return "scan-point";
    case FunctionalKind::SpectralBand: return "spectral-band";
  }
  return "strip-integral";
}

inline FunctionalKind parse_functional_kind(std::string_view s) {
  for (auto k : {FunctionalKind::StripIntegral, FunctionalKind::ExpKernel, FunctionalKind::ScanPoint,
                 FunctionalKind::SpectralBand})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown functional kind '" + std::string(s) + "'");
}

/// Linear functional f applied to a restricted field, plus a constant bias.
struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::StripIntegral;
  double x0 = 0.0;  // attention point for exp-kernel
  double y0 = 0.0;
  std::array<double, 4> band{0.0, 1.0, 0.0, 1.0};  // omega_a, omega_b, omega_c, omega_d
  double bias = 0.0;
};

namespace detail {

// Length of overlap between cell k of a 1-D lattice and [a, b].
inline std::vector<double> cell_overlaps(std::size_t n, double lo, double h, double a, double b) {
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double c0 = lo + static_cast<double>(k) * h;
    const double c1 = c0 + h;
    w[k] = std::max(0.0, std::min(b, c1) - std::max(a, c0));
  }
  return w;
}

// Spectral band quadrature resolution per axis (experimental functional).
inline constexpr std::size_t kSpectralSamples = 8;

}  // namespace detail

/// f(field restricted to `sub`) + bias.
inline double sample(const ScalarField& field, const Rect& sub, const FunctionalSpec& spec) {
  if (!sub.within(field.domain())) throw DomainError("sample: subdomain outside the field domain");
  if (spec.kind == FunctionalKind::ScanPoint || sub.is_point()) {
    const double x = sub.is_point() ? sub.x0 : 0.5 * (sub.x0 + sub.x1);
    const double y = sub.is_point() ? sub.y0 : 0.5 * (sub.y0 + sub.y1);
    if (spec.kind != FunctionalKind::ScanPoint) return spec.bias;  // zero-measure window
    return field.sample(x, y) + spec.bias;
  }
  const Domain& d = field.domain();
  const auto wx = detail::cell_overlaps(field.nx(), d.x_min, field.hx(), sub.x0, sub.x1);
  const auto wy = detail::cell_overlaps(field.ny(), d.y_min, field.hy(), sub.y0, sub.y1);

  if (spec.kind == FunctionalKind::SpectralBand) {
    const auto& b = spec.band;
    const std::size_t n = detail::kSpectralSamples;
    const double dwx = (b[1] - b[0]) / static_cast<double>(n);
    const double dwy = (b[3] - b[2]) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t p = 0; p < n; ++p) {
        const double omx = b[0] + (p + 0.5) * dwx;
        const double omy = b[2] + (q + 0.5) * dwy;
        std::complex<double> ft{0.0, 0.0};
        for (std::size_t j = 0; j < field.ny(); ++j) {
          if (wy[j] == 0.0) continue;
          for (std::size_t i = 0; i < field.nx(); ++i) {
            if (wx[i] == 0.0) continue;
            const double ph = -(omx * field.x(i) + omy * field.y(j));
            ft += wx[i] * wy[j] * field(i, j) * std::complex<double>(std::cos(ph), std::sin(ph));
          }
        }
        acc += std::abs(ft) * dwx * dwy;
      }
    return acc + spec.bias;
  }

  double acc = 0.0;
  for (std::size_t j = 0; j < field.ny(); ++j) {
    if (wy[j] == 0.0) continue;
    for (std::size_t i = 0; i < field.nx(); ++i) {
      if (wx[i] == 0.0) continue;
      double w = wx[i] * wy[j];
      if (spec.kind == FunctionalKind::ExpKernel)
        w *= std::exp(-std::abs(field.x(i) - spec.x0) - std::abs(field.y(j) - spec.y0));
      acc += w * field(i, j);
    }
  }
  return acc + spec.bias;
}

/// sin^2(omega_nu t) for every carrier. Harmonic assignments use the
/// angle-addition recurrence so only one sin/cos pair is evaluated.
inline void sin2_carriers(const FrequencyAssignment& fa, bool harmonic, double t, std::span<double> out) {
  const std::size_t n = fa.omegas.size();
  if (!harmonic) {
    for (std::size_t k = 0; k < n; ++k) {
      const double s = std::sin(fa.omegas[k] * t);
      out[k] = s * s;
    }
    return;
  }
  // sin^2(a) = (1 - cos(2a)) / 2, with cos(2 nu w t) by recurrence.
  const double a = 2.0 * fa.omegas[0] * t;
  const double c1 = std::cos(a);
  const double s1 = std::sin(a);
  double c = c1;
  double s = s1;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = 0.5 * (1.0 - c);
    const double cn = c * c1 - s * s1;
    const double sn = s * c1 + c * s1;
    c = cn;
    s = sn;
  }
}

/// Strip integrals of Fbar[S, theta2] for each strip of a schedule.
inline std::vector<double> strip_integrals(const ScalarField& fbar, const SamplingSchedule& schedule) {
  FunctionalSpec strip{};
  std::vector<double> out;
  out.reserve(schedule.subdomains.size());
  for (const auto& r : schedule.subdomains) out.push_back(sample(fbar, r, strip));
  return out;
}

/// Direct evaluation of the frequency code
/// sum_nu sin^2(omega_nu t) * integral_{strip nu} Fbar[S, theta2] + bias.
inline double freq_encode(const ScalarField& field, double theta2, const SamplingSchedule& strips,
                          const FrequencyAssignment& omegas, PerturbKind kind, double t, double bias = 0.0) {
  if (strips.mode != ScheduleMode::FrequencyStrips)
    throw ConfigError("freq_encode: schedule is not in frequency-strips mode");
  if (omegas.omegas.size() != strips.subdomains.size())
    throw ConfigError("freq_encode: frequency count differs from strip count");
  omegas.validate();
  const auto ints = strip_integrals(apply_nonlinear(field, kind, theta2), strips);
  double acc = 0.0;
  for (std::size_t k = 0; k < ints.size(); ++k) {
    const double s = std::sin(omegas.omegas[k] * t);
    acc += s * s * ints[k];
  }
  return acc + bias;
}

/// Frequency encoder that memoizes strip integrals per theta2. Safe for
/// concurrent readers; the cache is populated under an exclusive lock.
class FrequencyEncoder {
 public:
  FrequencyEncoder(ScalarField field, PerturbKind kind, SamplingSchedule strips, double bias = 0.0)
      : field_(std::move(field)), kind_(kind), strips_(std::move(strips)), bias_(bias) {
    if (strips_.mode != ScheduleMode::FrequencyStrips)
      throw ConfigError("FrequencyEncoder: schedule is not in frequency-strips mode");
    strips_.validate(field_.domain());
    harmonic_ = strips_.omegas.is_harmonic();
  }

  std::vector<double> integrals(double theta2) const {
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(theta2);
      if (it != cache_.end()) return it->second;
    }
    auto ints = strip_integrals(apply_nonlinear(field_, kind_, theta2), strips_);
    std::unique_lock lock(mutex_);
    return cache_.emplace(theta2, std::move(ints)).first->second;
  }

  double operator()(double t, double theta2) const {
    const auto ints = integrals(theta2);
    std::vector<double> carrier(ints.size());
    sin2_carriers(strips_.omegas, harmonic_, t, carrier);
    double acc = 0.0;
    for (std::size_t k = 0; k < ints.size(); ++k) acc += carrier[k] * ints[k];
    return acc + bias_;
  }

  std::size_t cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  ScalarField field_;
  PerturbKind kind_;
  SamplingSchedule strips_;
  double bias_;
  bool harmonic_ = false;
  mutable std::shared_mutex mutex_;
  mutable std::map<double, std::vector<double>> cache_;
};

namespace detail {

// Encoded value of an already perturbed field at time t (theta1 = 1).
inline double encode_transformed(const ScalarField& fbar, const SamplingSchedule& schedule,
                                 const FunctionalSpec& spec, double t) {
  switch (schedule.mode) {
    case ScheduleMode::Sweep:
      return sample(fbar, schedule.subdomains[schedule.active_slot(t)], spec);
    case ScheduleMode::ScanLine: {
      if (spec.kind != FunctionalKind::ScanPoint)
        throw ConfigError("scan-line schedules need the scan-point functional");
      const double x = scan_position(t, schedule.scan.x_min, schedule.scan.x_max, schedule.scan.k_s);
      return sample(fbar, Rect{x, x, schedule.scan.y, schedule.scan.y}, spec);
    }
    case ScheduleMode::FrequencyStrips: {
      double acc = 0.0;
      for (std::size_t k = 0; k < schedule.subdomains.size(); ++k) {
        FunctionalSpec lin = spec;
        lin.bias = 0.0;
        const double s = std::sin(schedule.omegas.omegas[k] * t);
        acc += s * s * sample(fbar, schedule.subdomains[k], lin);
      }
      return acc + spec.bias;
    }
  }
  return 0.0;
}

}  // namespace detail

/// theta1 * f0(t, theta2): the scalar signal produced by sampling the
/// perturbed field, with theta1 factored out of the functional.
inline double f_series(const ScalarField& field, const PerturbParams& p, const SamplingSchedule& schedule,
                       const FunctionalSpec& spec, double t) {
  if (!(t >= 0.0)) throw ParameterError("f_series: time must be non-negative");
  p.validate();
  schedule.validate(field.domain());
  const ScalarField fbar = apply_nonlinear(field, p.kind, p.theta2);
  return p.theta1 * detail::encode_transformed(fbar, schedule, spec, t);
}

/// Bounds D3 <= f_i(t, theta2) <= D4 sampled over time and theta2.
struct SignalBounds {
  double D3 = 0.0;
  double D4 = 0.0;
  bool needs_bias = false;
  double recommended_bias = 0.0;  // additive c0 lifting D3 to the floor
};

/// Samples f(t, theta2) at >= 64 points per schedule period over [0, horizon]
/// for each theta2 in the grid. When the minimum is not positive, recommends
/// the bias that lifts it to `floor_fraction * max` (unit scale for an all-zero signal).
inline SignalBounds estimate_D3_D4(const ScalarField& field, PerturbKind kind, const FunctionalSpec& spec,
                                   const SamplingSchedule& schedule, const std::vector<double>& theta2_grid,
                                   double horizon, std::size_t samples_per_period = 64,
                                   double floor_fraction = 0.05) {
  if (theta2_grid.empty()) throw ParameterError("estimate_D3_D4: empty theta2 grid");
  if (!(horizon >= schedule.period)) throw ParameterError("estimate_D3_D4: horizon shorter than one period");
  schedule.validate(field.domain());
  samples_per_period = std::max<std::size_t>(samples_per_period, 64);
  const auto n_t = static_cast<std::size_t>(std::ceil(horizon / schedule.period * samples_per_period));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double th : theta2_grid) {
    const ScalarField fbar = apply_nonlinear(field, kind, th);
    for (std::size_t k = 0; k <= n_t; ++k) {
      const double t = horizon * static_cast<double>(k) / static_cast<double>(n_t);
      const double v = detail::encode_transformed(fbar, schedule, spec, t);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(hi) || !std::isfinite(lo)) throw InputError("estimate_D3_D4: non-finite signal");
  SignalBounds b{lo, hi, false, 0.0};
  if (lo <= 0.0) {
    const double floor = hi > 0.0 ? floor_fraction * hi : floor_fraction;
    b.needs_bias = true;
    b.recommended_bias = floor - lo;
  }
  return b;
}

/// How a tabulated encoder reads between theta2 grid nodes.
enum class Theta2Lookup { Nearest, Linear };

inline std::string_view to_string(Theta2Lookup l) { return l == Theta2Lookup::Nearest ? "nearest" : "linear"; }

inline Theta2Lookup parse_theta2_lookup(std::string_view s) {
  if (s == "nearest") return Theta2Lookup::Nearest;
  if (s == "linear") return Theta2Lookup::Linear;
  throw ConfigError("unknown theta2 lookup '" + std::string(s) + "'");
}

/// Tabulated encoder f(t, theta2) + bias: per-theta2 feature rows linear in
/// the field, read at the nearest grid node or interpolated linearly in
/// theta2, then combined with the time structure of the schedule (active
/// slot, carrier bank or scan position).
class EncodedSignal {
 public:
  /// Feature rows for `mode`:
  ///  sweep            - one value per subdomain;
  ///  frequency-strips - one strip integral per carrier;
  ///  scan-line        - samples on an even position lattice over [x_min, x_max].
  EncodedSignal(ScheduleMode mode, std::vector<double> theta2_grid, std::vector<std::vector<double>> rows,
                double bias, SamplingSchedule schedule, Theta2Lookup lookup = Theta2Lookup::Linear)
      : mode_(mode), grid_(std::move(theta2_grid)), rows_(std::move(rows)), bias_(bias),
        schedule_(std::move(schedule)), lookup_(lookup) {
    if (grid_.empty() || grid_.size() != rows_.size()) throw ConfigError("EncodedSignal: grid/row mismatch");
    for (std::size_t k = 1; k < grid_.size(); ++k)
      if (!(grid_[k] > grid_[k - 1])) throw ConfigError("EncodedSignal: theta2 grid must increase");
    width_ = rows_.front().size();
    for (const auto& r : rows_)
      if (r.size() != width_ || r.empty()) throw ConfigError("EncodedSignal: ragged rows");
    if (mode_ == ScheduleMode::FrequencyStrips) harmonic_ = schedule_.omegas.is_harmonic();
  }

  /// Tabulates Fbar[field, theta2] through `schedule` at every grid point.
  static EncodedSignal tabulate(const ScalarField& field, PerturbKind kind, const SamplingSchedule& schedule,
                                const FunctionalSpec& spec, std::vector<double> theta2_grid,
                                std::size_t scan_samples = 0) {
    schedule.validate(field.domain());
    std::sort(theta2_grid.begin(), theta2_grid.end());
    theta2_grid.erase(std::unique(theta2_grid.begin(), theta2_grid.end()), theta2_grid.end());
    FunctionalSpec lin = spec;
    lin.bias = 0.0;
    std::vector<std::vector<double>> rows;
    rows.reserve(theta2_grid.size());
    for (double th : theta2_grid) {
      const ScalarField fbar = apply_nonlinear(field, kind, th);
      std::vector<double> row;
      if (schedule.mode == ScheduleMode::ScanLine) {
        if (lin.kind != FunctionalKind::ScanPoint)
          throw ConfigError("scan-line schedules need the scan-point functional");
        const std::size_t n = scan_samples > 1 ? scan_samples : 4 * field.nx() + 1;
        for (double x : linspace(schedule.scan.x_min, schedule.scan.x_max, n))
          row.push_back(fbar.sample(x, schedule.scan.y));
      } else {
        for (const auto& r : schedule.subdomains) row.push_back(sample(fbar, r, lin));
      }
      rows.push_back(std::move(row));
    }
    return EncodedSignal(schedule.mode, std::move(theta2_grid), std::move(rows), spec.bias, schedule);
  }

  double operator()(double t, double theta2) const {
    std::size_t k = 0;
    double a = 0.0;
    locate(theta2, k, a);
    if (a == 0.0) return combine(t, rows_[k]) + bias_;
    return (1.0 - a) * combine(t, rows_[k]) + a * combine(t, rows_[k + 1]) + bias_;
  }

  const std::vector<double>& theta2_grid() const { return grid_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  double bias() const { return bias_; }
  Theta2Lookup lookup() const { return lookup_; }
  ScheduleMode mode() const { return mode_; }
  const SamplingSchedule& schedule() const { return schedule_; }

  /// Largest |f(t, theta') - f(t, theta'')| / |theta' - theta''| over adjacent
  /// grid rows, maximized over the time structure (every slot, every carrier
  /// phase sign pattern bound, every scan sample).
  double theta2_lipschitz() const {
    double best = 0.0;
    for (std::size_t k = 1; k < grid_.size(); ++k) {
      const double dth = grid_[k] - grid_[k - 1];
      if (mode_ == ScheduleMode::FrequencyStrips) {
        // sup over carriers in [0, 1] of |sum c_nu d_nu| = max(sum d+, sum |d-|).
        double pos = 0.0;
        double neg = 0.0;
        for (std::size_t j = 0; j < width_; ++j) {
          const double dv = rows_[k][j] - rows_[k - 1][j];
          (dv > 0 ? pos : neg) += std::abs(dv);
        }
        best = std::max(best, std::max(pos, neg) / dth);
      } else {
        for (std::size_t j = 0; j < width_; ++j)
          best = std::max(best, std::abs(rows_[k][j] - rows_[k - 1][j]) / dth);
      }
    }
    return best;
  }

 private:
  void locate(double theta2, std::size_t& k, double& a) const {
    if (grid_.size() == 1 || theta2 <= grid_.front()) {
      k = 0;
      a = 0.0;
      return;
    }
    if (theta2 >= grid_.back()) {
      k = grid_.size() - 1;
      a = 0.0;
      return;
    }
    auto it = std::upper_bound(grid_.begin(), grid_.end(), theta2);
    k = static_cast<std::size_t>(it - grid_.begin()) - 1;
    a = (theta2 - grid_[k]) / (grid_[k + 1] - grid_[k]);
    if (lookup_ == Theta2Lookup::Nearest) {
      if (a >= 0.5) ++k;
      a = 0.0;
    }
  }

  double combine(double t, const std::vector<double>& row) const {
    switch (mode_) {
      case ScheduleMode::Sweep: return row[schedule_.active_slot(t)];
      case ScheduleMode::FrequencyStrips: {
        std::array<double, 64> buf{};
        std::vector<double> heap;
        std::span<double> c(buf.data(), width_);
        if (width_ > buf.size()) {
          heap.resize(width_);
          c = std::span<double>(heap);
        }
        sin2_carriers(schedule_.omegas, harmonic_, t, c);
        double acc = 0.0;
        for (std::size_t j = 0; j < width_; ++j) acc += c[j] * row[j];
        return acc;
      }
      case ScheduleMode::ScanLine: {
        const auto& s = schedule_.scan;
        const double x = scan_position(t, s.x_min, s.x_max, s.k_s);
        const double u = (x - s.x_min) / (s.x_max - s.x_min) * static_cast<double>(width_ - 1);
        const double fu = std::floor(u);
        auto i = static_cast<std::size_t>(std::max(0.0, fu));
        if (i >= width_ - 1) return row[width_ - 1];
        const double w = u - fu;
        return (1.0 - w) * row[i] + w * row[i + 1];
      }
    }
    return 0.0;
  }

  ScheduleMode mode_;
  std::vector<double> grid_;
  std::vector<std::vector<double>> rows_;
  double bias_;
  SamplingSchedule schedule_;
  Theta2Lookup lookup_ = Theta2Lookup::Linear;
  std::size_t width_ = 0;
  bool harmonic_ = false;
};

}  // namespace tmatch
