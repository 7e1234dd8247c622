#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tmatch/engine.hpp"
#include "tmatch/patterns.hpp"

namespace tmatch {

// ---------------------------------------------------------------------------
// Rotation matching on dot patterns of controlled symmetry.

struct GarnerSpec {
  int order = 4;  // rotational symmetry order: 1, 2 or 4
  std::size_t grid = 32;
  std::uint64_t layout_seed = 0;
  double spacing = 0.45;  // lattice pitch of the 3x3 dot sites
  double sigma = 0.08;

  void validate() const {
    if (order != 1 && order != 2 && order != 4)
      throw ParameterError("garner pattern: symmetry order must be 1, 2 or 4, got " + std::to_string(order));
    if (grid < 8) throw ParameterError("garner pattern: grid must be at least 8");
    if (!(spacing > 0.0) || !(sigma > 0.0)) throw ParameterError("garner pattern: spacing and sigma must be positive");
  }
};

namespace detail {

// The eight sites around the centre in angular order, so a quarter turn adds
// 2 to the index and a half turn adds 4.
inline constexpr std::array<std::array<int, 2>, 8> kRing{
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

inline bool ring_invariant(const std::vector<int>& sites, int shift) {
  for (int s : sites)
    if (std::find(sites.begin(), sites.end(), (s + shift) % 8) == sites.end()) return false;
  return true;
}

}  // namespace detail

/// Five dots: the centre plus four ring sites. Order 4 takes all corners or
/// all edges, order 2 one opposite corner pair and one opposite edge pair,
/// order 1 a subset with no half-turn symmetry. Integral normalized to 1.
inline ScalarField garner_pattern(const GarnerSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.layout_seed);
  std::vector<int> sites;
  switch (spec.order) {
    case 4:
      sites = (rng() & 1u) ? std::vector<int>{1, 3, 5, 7} : std::vector<int>{0, 2, 4, 6};
      break;
    case 2: {
      const int c = 1 + 2 * static_cast<int>(rng() % 2);  // corner 1 or 3
      const int e = 2 * static_cast<int>(rng() % 2);      // edge 0 or 2
      sites = {c, c + 4, e, e + 4};
      break;
    }
    default: {
      std::vector<int> all{0, 1, 2, 3, 4, 5, 6, 7};
      do {
        std::shuffle(all.begin(), all.end(), rng);
        sites.assign(all.begin(), all.begin() + 4);
      } while (detail::ring_invariant(sites, 4));
      break;
    }
  }
  std::sort(sites.begin(), sites.end());
  const Domain d{};
  std::vector<Dot> dots{{d.center_x(), d.center_y(), 1.0, spec.sigma}};
  for (int s : sites)
    dots.push_back({d.center_x() + spec.spacing * detail::kRing[s][0], d.center_y() + spec.spacing * detail::kRing[s][1],
                    1.0, spec.sigma});
  return normalize_integral(render_dots(spec.grid, spec.grid, d, dots), 1.0);
}

struct GarnerMember {
  std::uint64_t seed = 0;
  double lambda2_init = 0.0;
  double lambda3_init = 1.0;
  double theta1_hat = 0.0;
  double theta2_hat = 0.0;
  int branch = 1;  // sign of the final lambda3
  bool converged = false;
  bool residual_zero = false;
  double theta2_variation_final = 0.0;
  double max_residual_final = 0.0;
};

struct AttractorCluster {
  int branch = 1;
  double angle = 0.0;   // circular mean of theta2_hat, in [0, 2 pi)
  double spread = 0.0;  // largest circular distance of a member from the mean
  std::size_t size = 0;
};

struct GarnerCensus {
  int order = 0;
  double rotation = 0.0;
  double brightness = 1.0;
  std::vector<GarnerMember> members;
  std::vector<AttractorCluster> clusters;

  std::size_t census() const { return clusters.size(); }
  std::size_t converged() const {
    return static_cast<std::size_t>(std::count_if(members.begin(), members.end(), [](const auto& m) { return m.converged; }));
  }
  double convergence_rate() const {
    return members.empty() ? 0.0 : static_cast<double>(converged()) / static_cast<double>(members.size());
  }
  double max_spread() const {
    double s = 0.0;
    for (const auto& c : clusters) s = std::max(s, c.spread);
    return s;
  }
};

inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * std::numbers::pi);
  return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

inline double circular_distance(double a, double b) {
  const double d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

/// Single-linkage clustering of angles on the circle, per branch.
inline std::vector<AttractorCluster> cluster_angles(const std::vector<GarnerMember>& members, double linkage) {
  std::vector<AttractorCluster> out;
  for (int branch : {1, -1}) {
    std::vector<double> a;
    for (const auto& m : members)
      if (m.converged && m.branch == branch) a.push_back(wrap_angle(m.theta2_hat));
    if (a.empty()) continue;
    std::sort(a.begin(), a.end());
    // Start the sweep after the largest gap so no cluster straddles the cut.
    std::size_t start = 0;
    double widest = -1.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double next = k + 1 < a.size() ? a[k + 1] : a[0] + 2.0 * std::numbers::pi;
      if (next - a[k] > widest) {
        widest = next - a[k];
        start = (k + 1) % a.size();
      }
    }
    std::vector<std::vector<double>> groups{{a[start]}};
    for (std::size_t n = 1; n < a.size(); ++n) {
      const double v = a[(start + n) % a.size()];
      if (circular_distance(v, groups.back().back()) <= linkage)
        groups.back().push_back(v);
      else
        groups.push_back({v});
    }
    if (groups.size() > 1 && circular_distance(groups.front().front(), groups.back().back()) <= linkage) {
      groups.front().insert(groups.front().begin(), groups.back().begin(), groups.back().end());
      groups.pop_back();
    }
    for (const auto& g : groups) {
      double sx = 0.0, sy = 0.0;
      for (double v : g) {
        sx += std::cos(v);
        sy += std::sin(v);
      }
      AttractorCluster c{branch, wrap_angle(std::atan2(sy, sx)), 0.0, g.size()};
      for (double v : g) c.spread = std::max(c.spread, circular_distance(v, c.angle));
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.branch != y.branch ? x.branch > y.branch : x.angle < y.angle;
  });
  return out;
}

/// Largest deviation of adjacent same-branch cluster angles from 2 pi / order.
/// Infinite when a branch has fewer clusters than the order.
inline double census_spacing_error(const GarnerCensus& c) {
  const double want = 2.0 * std::numbers::pi / c.order;
  double worst = 0.0;
  for (int branch : {1, -1}) {
    std::vector<double> a;
    for (const auto& k : c.clusters)
      if (k.branch == branch) a.push_back(k.angle);
    if (a.size() != static_cast<std::size_t>(c.order)) return std::numeric_limits<double>::infinity();
    if (a.size() < 2) continue;
    std::sort(a.begin(), a.end());
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double next = k + 1 < a.size() ? a[k + 1] : a[0] + 2.0 * std::numbers::pi;
      worst = std::max(worst, std::abs(next - a[k] - want));
    }
  }
  return worst;
}

/// Runs an ensemble of rotation searches on one Garner pattern. Initial
/// search phases are stratified around the unit circle so both lambda3
/// branches are populated; a member converges when theta2_hat is constant
/// (total variation at most `tv_fraction` of the range) over the final window.
/// `on_member` receives each finished run, e.g. to write its trajectory.
inline GarnerCensus run_garner(const GarnerSpec& spec, double rotation, double brightness, std::size_t ensemble,
                               RunConfig cfg, double linkage = 5.0 * std::numbers::pi / 180.0,
                               double tv_fraction = 1e-3,
                               const std::function<void(std::size_t, const MatchReport&)>& on_member = {}) {
  if (!(rotation >= 0.0 && rotation < 2.0 * std::numbers::pi))
    throw ParameterError("run_garner: rotation must lie in [0, 2 pi)");
  if (ensemble < 20) throw ParameterError("run_garner: ensemble must be at least 20");
  const ScalarField pattern = garner_pattern(spec);
  cfg.kind = PerturbKind::Rotate;
  cfg.theta1 = brightness;
  cfg.theta2 = rotation;
  cfg.init.random = false;
  const PreparedRun pr = prepare_run(pattern, {pattern}, cfg);

  GarnerCensus census;
  census.order = spec.order;
  census.rotation = rotation;
  census.brightness = brightness;
  const double tv_max = tv_fraction * cfg.adapt.theta2_range.width();
  const std::uint64_t base_seed = cfg.seed;
  for (std::size_t k = 0; k < ensemble; ++k) {
    const double psi = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(ensemble);
    cfg.init.lambda2 = std::sin(psi);
    cfg.init.lambda3 = std::cos(psi);
    cfg.seed = base_seed + k;
    const MatchReport rep = run_prepared(pr, cfg);
    const auto& t = rep.templates.front();
    GarnerMember m;
    m.seed = cfg.seed;
    m.lambda2_init = cfg.init.lambda2;
    m.lambda3_init = cfg.init.lambda3;
    m.theta1_hat = t.theta1_hat;
    m.theta2_hat = t.theta2_hat;
    m.branch = t.lambda3 >= 0.0 ? 1 : -1;
    m.theta2_variation_final = t.theta2_variation_final;
    m.max_residual_final = t.max_residual_final;
    m.residual_zero = t.residual_zero;
    m.converged = t.theta2_variation_final <= tv_max;
    census.members.push_back(m);
    if (on_member) on_member(k, rep);
  }
  census.clusters = cluster_angles(census.members, linkage);
  return census;
}

// ---------------------------------------------------------------------------
// Synthetic line-scan microscope: a 1-D fluorescence profile blurred by a
// Gaussian kernel exp(-theta2 (xi - x)^2) and dimmed by bleaching.

struct BleachStep {
  double t = 0.0;
  double theta1 = 1.0;
};

struct MicroscopeScenario {
  std::vector<double> profile;     // template intensity per pixel
  std::vector<BleachStep> bleach;  // theta1(t): piecewise constant, first step at t = 0
  double theta2 = 0.1;             // true kernel sharpness
  double noise_sigma = 0.0;
  std::size_t n_avg = 8;
  double scan_speed = 1.0;  // pixels per time unit

  void validate() const {
    if (profile.size() < 2) throw ParameterError("microscope: profile needs at least two pixels");
    for (double v : profile)
      if (!std::isfinite(v)) throw ParameterError("microscope: profile must be finite");
    if (bleach.empty() || bleach.front().t != 0.0) throw ParameterError("microscope: bleach schedule must start at t = 0");
    for (std::size_t k = 1; k < bleach.size(); ++k)
      if (!(bleach[k].t > bleach[k - 1].t)) throw ParameterError("microscope: bleach times must increase");
    if (!(theta2 > 0.0)) throw ParameterError("microscope: theta2 must be positive");
    if (!(noise_sigma >= 0.0)) throw ParameterError("microscope: noise_sigma must be nonnegative");
    if (n_avg == 0) throw ParameterError("microscope: n_avg must be positive");
    if (!(scan_speed > 0.0)) throw ParameterError("microscope: scan_speed must be positive");
  }

  double theta1_at(double t) const {
    double v = bleach.front().theta1;
    for (const auto& b : bleach)
      if (t >= b.t) v = b.theta1;
    return v;
  }
  ScanLine scan() const { return {0.0, static_cast<double>(profile.size() - 1), scan_speed, 0.0}; }
  double period() const { return static_cast<double>(profile.size() - 1) / scan_speed; }
};

inline constexpr std::size_t kMicroscopePixels = 176;

/// A line through a few fluorescent structures on a dim background.
inline std::vector<double> default_profile(std::uint64_t seed = 0, std::size_t n = kMicroscopePixels) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n, 0.1);
  for (int k = 0; k < 6; ++k) {
    const double c = 10.0 + u(rng) * static_cast<double>(n - 20);
    const double w = 1.5 + 4.0 * u(rng);
    const double a = 0.3 + 0.7 * u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (static_cast<double>(i) - c) / w;
      p[i] += a * std::exp(-0.5 * r * r);
    }
  }
  return p;
}

/// Quadrature of sum_xi exp(-theta2 (xi - x)^2) S(xi) over unit-spaced pixels,
/// kernel truncated where it falls below kKernelTruncation.
inline double blur_line_value(const std::vector<double>& profile, double theta2, double x) {
  if (!(theta2 > 0.0)) throw DomainError("blur_line_value: theta2 must be positive");
  const double reach = std::sqrt(-std::log(kKernelTruncation) / theta2);
  const long n = static_cast<long>(profile.size());
  const long lo = std::max(0L, static_cast<long>(std::ceil(x - reach)));
  const long hi = std::min(n - 1, static_cast<long>(std::floor(x + reach)));
  double acc = 0.0;
  for (long i = lo; i <= hi; ++i) {
    const double r = static_cast<double>(i) - x;
    acc += std::exp(-theta2 * r * r) * profile[static_cast<std::size_t>(i)];
  }
  return acc;
}

/// Measured scan signal: theta1(t) times the blurred profile at the scan
/// position, plus zero-mean noise. Noise is drawn per scan pass and pixel as
/// the mean of n_avg trials, so it is a deterministic function of t.
class MicroscopeSignal {
 public:
  MicroscopeSignal(MicroscopeScenario scn, std::uint64_t seed, double horizon)
      : scn_(std::move(scn)), scan_(scn_.scan()), period_(scn_.period()) {
    scn_.validate();
    if (scn_.noise_sigma > 0.0) {
      const auto passes = static_cast<std::size_t>(std::ceil(std::max(horizon, period_) / period_)) + 1;
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g(0.0, scn_.noise_sigma);
      noise_.resize(passes * scn_.profile.size());
      for (double& v : noise_) {
        double s = 0.0;
        for (std::size_t k = 0; k < scn_.n_avg; ++k) s += g(rng);
        v = s / static_cast<double>(scn_.n_avg);
      }
    }
  }

  double position(double t) const { return scan_position(t, scan_.x_min, scan_.x_max, scan_.k_s); }

  /// Noise-free theta1(t) * blurred profile at x(t).
  double exact(double t) const { return scn_.theta1_at(t) * blur_line_value(scn_.profile, scn_.theta2, position(t)); }

  double noise(double t) const {
    if (noise_.empty()) return 0.0;
    const std::size_t n = scn_.profile.size();
    const std::size_t passes = noise_.size() / n;
    auto pass = static_cast<std::size_t>(std::max(0.0, std::ceil(t / period_) - 1.0));
    pass = std::min(pass, passes - 1);
    const auto pixel = static_cast<std::size_t>(std::clamp(std::lround(position(t)), 0L, static_cast<long>(n - 1)));
    return noise_[pass * n + pixel];
  }

  double operator()(double t) const { return exact(t) + noise(t); }

  const MicroscopeScenario& scenario() const { return scn_; }

 private:
  MicroscopeScenario scn_;
  ScanLine scan_;
  double period_;
  std::vector<double> noise_;
};

inline MicroscopeSignal synth_microscope(const MicroscopeScenario& scn, std::uint64_t seed, double horizon) {
  return MicroscopeSignal(scn, seed, horizon);
}

/// Template encoder for the line scan: the blurred profile tabulated on a
/// theta2 grid and an even position lattice along the scan.
inline EncodedSignal blur_line_template(const std::vector<double>& profile, const ScanLine& scan,
                                        std::vector<double> theta2_grid, std::size_t samples, double bias,
                                        Theta2Lookup lookup) {
  if (samples < 2) samples = 4 * (profile.size() - 1) + 1;
  const auto xs = linspace(scan.x_min, scan.x_max, samples);
  std::vector<std::vector<double>> rows;
  rows.reserve(theta2_grid.size());
  for (double th : theta2_grid) {
    std::vector<double> row(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) row[j] = blur_line_value(profile, th, xs[j]);
    rows.push_back(std::move(row));
  }
  return EncodedSignal(ScheduleMode::ScanLine, std::move(theta2_grid), std::move(rows), bias,
                       SamplingSchedule::scan_line(scan), lookup);
}

struct MicroscopeReport {
  MatchReport match;
  double theta1_true_end = 0.0;
  double theta1_rel_error = 0.0;  // |theta1_hat - theta1| / theta1 at the end of the run
  double theta2_true = 0.0;
  double noise_sd_effective = 0.0;  // noise_sigma / sqrt(n_avg)
};

/// Tracks blur and brightness of the synthetic scan with one template channel.
/// cfg.adapt.theta2_range bounds the kernel sharpness; cfg.theta1 / cfg.theta2
/// are overwritten from the scenario. The bias (cfg.encoder.bias, or the
/// automatic floor) is added to both channels before theta1 scaling.
inline MicroscopeReport run_microscope(const MicroscopeScenario& scn, RunConfig cfg) {
  scn.validate();
  cfg.kind = PerturbKind::GaussianBlur;
  cfg.theta1 = scn.theta1_at(0.0);
  cfg.theta2 = scn.theta2;
  cfg.encoder.mode = ScheduleMode::ScanLine;
  cfg.encoder.scan = scn.scan();
  cfg.validate();

  const auto grid = linspace(cfg.adapt.theta2_range.lo, cfg.adapt.theta2_range.hi,
                             std::max<std::size_t>(cfg.encoder.table_points, 2));
  EncodedSignal raw = blur_line_template(scn.profile, scn.scan(), grid, cfg.encoder.scan_samples, 0.0, cfg.encoder.lookup);

  PreparedRun pr;
  pr.period = scn.period();
  if (cfg.encoder.bias) {
    pr.bias = *cfg.encoder.bias;
  } else {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : raw.rows())
      for (double v : r) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const double floor = hi > 0.0 ? cfg.encoder.bias_floor_fraction * hi : cfg.encoder.bias_floor_fraction;
    pr.bias = lo < floor ? floor - lo : 0.0;
  }
  pr.templates.emplace_back(raw.mode(), raw.theta2_grid(), raw.rows(), pr.bias, raw.schedule(), cfg.encoder.lookup);

  auto signal = std::make_shared<MicroscopeSignal>(scn, cfg.seed, cfg.horizon);
  const double bias = pr.bias;
  pr.image = [signal, bias](double t) {
    return (*signal)(t) + signal->scenario().theta1_at(t) * bias;
  };
  const auto unit_row = [signal, bias](double t) {
    const auto& s = signal->scenario();
    return blur_line_value(s.profile, s.theta2, signal->position(t)) + bias;
  };
  pr.constants.push_back(measure_constants(pr.templates.front(), unit_row, nullptr, cfg));

  MicroscopeReport rep;
  rep.match = run_prepared(pr, cfg);
  rep.theta2_true = scn.theta2;
  rep.theta1_true_end = scn.theta1_at(rep.match.t_end);
  rep.theta1_rel_error = std::abs(rep.match.templates.front().theta1_hat - rep.theta1_true_end) / rep.theta1_true_end;
  rep.noise_sd_effective = scn.noise_sigma / std::sqrt(static_cast<double>(scn.n_avg));
  return rep;
}

// ---------------------------------------------------------------------------
// Sampling cost / information trade-off over block sizes k.

struct TradeoffRow {
  std::size_t k = 0;
  double C = 0.0;  // number of samples, Nx Ny / k
  double H = 0.0;  // entropy of the representation in bits
  double Q = 0.0;  // lam1 C + lam2 / H
};

struct TradeoffTable {
  std::vector<TradeoffRow> rows;
  std::size_t argmin_k = 0;

  /// Successive differences of Q change sign at most once, from - to +.
  bool unimodal() const {
    int changes = 0;
    int last = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double d = rows[i].Q - rows[i - 1].Q;
      const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
      if (s == 0) continue;
      if (last != 0 && s != last) {
        if (last > 0) return false;
        ++changes;
      }
      last = s;
    }
    return changes <= 1;
  }
  bool argmin_interior() const {
    return rows.size() > 2 && argmin_k != rows.front().k && argmin_k != rows.back().k;
  }
};

inline std::vector<std::size_t> power_of_two_divisors(std::size_t n) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= n && n % k == 0; k *= 2) ks.push_back(k);
  return ks;
}

inline TradeoffTable sampling_tradeoff(std::size_t nx, std::size_t ny, std::size_t ns, const std::vector<double>& probs,
                                       double lam1, double lam2, const std::vector<std::size_t>& ks) {
  if (nx == 0 || ny == 0 || ns == 0) throw ParameterError("sampling_tradeoff: Nx, Ny and Ns must be positive");
  if (probs.size() != ns) throw ParameterError("sampling_tradeoff: probs must have Ns entries");
  if (!(lam1 > 0.0) || !(lam2 > 0.0)) throw ParameterError("sampling_tradeoff: lam1 and lam2 must be positive");
  double total = 0.0;
  double level_entropy = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ParameterError("sampling_tradeoff: probabilities must be nonnegative");
    total += p;
    if (p > 0.0) level_entropy -= p * std::log2(p);
  }
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("sampling_tradeoff: probabilities must sum to 1");
  const std::size_t n = nx * ny;
  TradeoffTable tab;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k : ks) {
    if (k == 0 || n % k != 0) throw ParameterError("sampling_tradeoff: k = " + std::to_string(k) + " does not divide Nx Ny");
    TradeoffRow r;
    r.k = k;
    r.C = static_cast<double>(n / k);
    r.H = std::log2(r.C) + level_entropy;
    if (!(r.H > 0.0)) throw DomainError("sampling_tradeoff: degenerate distribution, H(k) <= 0 at k = " + std::to_string(k));
    r.Q = lam1 * r.C + lam2 / r.H;
    if (r.Q < best) {
      best = r.Q;
      tab.argmin_k = k;
    }
    tab.rows.push_back(r);
  }
  return tab;
}

}  // namespace tmatch
