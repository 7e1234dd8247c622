#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tmatch/adapt.hpp"
#include "tmatch/detect.hpp"
#include "tmatch/encode.hpp"
#include "tmatch/errors.hpp"
#include "tmatch/field.hpp"
#include "tmatch/ode.hpp"
#include "tmatch/trajectory.hpp"

namespace tmatch {

struct EncoderConfig {
  ScheduleMode mode = ScheduleMode::FrequencyStrips;
  std::size_t strips_h = 4;  // frequency-strips: horizontal strips
  std::size_t strips_v = 4;  // frequency-strips: vertical strips
  double omega_base = 1.0;
  std::size_t sweep_nx = 4;  // sweep: rectangles per row
  std::size_t sweep_ny = 4;  // sweep: rows of rectangles
  double sweep_period = 16.0;
  ScanLine scan{};
  FunctionalSpec functional{};
  std::optional<double> bias;        // unset: lift the template minimum to floor_fraction * max
  double bias_floor_fraction = 0.05;
  std::size_t table_points = 721;    // theta2 grid of the template table
  Theta2Lookup lookup = Theta2Lookup::Nearest;
  std::size_t scan_samples = 0;      // scan-line table resolution (0: 4 per pixel)

  SamplingSchedule build(const Domain& d) const {
    switch (mode) {
      case ScheduleMode::FrequencyStrips: return SamplingSchedule::frequency_strips(d, strips_h, strips_v, omega_base);
      case ScheduleMode::ScanLine: return SamplingSchedule::scan_line(scan);
      case ScheduleMode::Sweep: {
        if (sweep_nx == 0 || sweep_ny == 0) throw ConfigError("sweep schedule needs at least one rectangle");
        std::vector<Rect> rects;
        for (std::size_t b = 0; b < sweep_ny; ++b)
          for (std::size_t a = 0; a < sweep_nx; ++a)
            rects.push_back({d.x_min + d.width() * a / sweep_nx, d.x_min + d.width() * (a + 1) / sweep_nx,
                             d.y_min + d.height() * b / sweep_ny, d.y_min + d.height() * (b + 1) / sweep_ny});
        return SamplingSchedule::sweep(std::move(rects), sweep_period);
      }
    }
    throw ConfigError("unknown schedule mode");
  }
};

/// How the bound constants are obtained. In composite mode the product D*D2
/// is measured directly as the theta2-Lipschitz constant of the encoded
/// template signal and reported with D2 = 1; factored mode estimates the
/// pixelwise D and uses the functional's own Lipschitz constant for D2.
struct ConstantsConfig {
  bool composite = true;
  double safety = 1.5;
  std::size_t time_samples = 256;  // per schedule period
  std::optional<double> D, D2, D3, D4, Delta;
};

struct DetectorConfig {
  bool enabled = true;
  HRParams hr{};
  double gamma = 16.2;
  double delta_thresh = 0.1;
  double window_fraction = 0.25;
  double input_gain = 1.0;
};

struct InitConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 1.0;
  bool random = false;  // draw lambda2 ~ U(-1, 1) and the branch sign from the seed
};

struct RunConfig {
  double dt = 0.01;
  double horizon = 200.0;
  std::uint64_t seed = 1;
  std::size_t record_stride = 10;
  double final_window = 0.2;  // fraction of the horizon checked for a zero dead-zone residual
  bool record_nodes = true;

  AdaptParams adapt{};
  PerturbKind kind = PerturbKind::Rotate;
  double theta1 = 1.0;  // ground truth applied to the image
  double theta2 = 0.0;
  std::optional<double> pin_theta2;  // freeze the template's theta2 estimate

  EncoderConfig encoder{};
  ConstantsConfig constants{};
  DetectorConfig detector{};
  InitConfig init{};

  void validate() const {
    if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("dt and horizon must be positive");
    if (horizon / dt > 1e9) throw ConfigError("horizon / dt exceeds 1e9 steps");
    if (record_stride == 0) throw ConfigError("record_stride must be positive");
    if (!(final_window > 0.0 && final_window <= 1.0)) throw ConfigError("final_window must lie in (0, 1]");
    if (!(detector.window_fraction > 0.0 && detector.window_fraction <= 0.5))
      throw ConfigError("detector window_fraction must lie in (0, 0.5]");
    adapt.validate();
    if (detector.enabled) detector.hr.validate();
    if (requires_positive_theta2(kind) && !(adapt.theta2_range.lo > 0.0))
      throw ConfigError("theta2 range must be positive for " + std::string(to_string(kind)));
    if (!(std::abs(init.lambda2 * init.lambda2 + init.lambda3 * init.lambda3 - 1.0) <= 1e-12) && !init.random)
      throw ConfigError("initial lambda2^2 + lambda3^2 must equal 1");
  }
};

struct TemplateResult {
  bool matched = false;
  bool residual_zero = false;  // dead-zone residual identically 0 over the final window
  bool synchronized = false;
  double theta1_hat = 0.0;
  double theta2_hat = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double final_error = 0.0;
  double max_residual_final = 0.0;  // max ||e||_eps over the final window
  double max_residual = 0.0;        // over the whole run
  double last_active_time = 0.0;    // last recorded time with positive residual
  double theta2_variation_final = 0.0;
  double state_bound = 0.0;  // max |component| of the adaptation state
  PairSync sync{};
  ValidityReport validity{};
  MatchConstants constants{};
  double epsilon_min = std::numeric_limits<double>::quiet_NaN();
  double gamma2_max = std::numeric_limits<double>::quiet_NaN();
};

struct MatchReport {
  bool ran = false;  // false when validity gating rejected the run
  double bias = 0.0;
  double sync_bound = 0.0;
  double t_end = 0.0;
  std::vector<TemplateResult> templates;
  Trajectory trajectory;

  bool all_valid() const {
    for (const auto& t : templates)
      if (!t.validity.ok()) return false;
    return !templates.empty();
  }
  bool matched(std::size_t i) const { return ran && templates.at(i).matched; }
};

/// Validity failure that aborts a run before integration. Carries the
/// unrun report with per-template constants and validity rows.
class ValidityError : public ConfigError {
 public:
  ValidityError(const std::string& what, MatchReport partial) : ConfigError(what), partial_(std::move(partial)) {}
  const MatchReport& partial() const { return partial_; }
  const ValidityReport& report() const { return partial_.templates.front().validity; }

 private:
  MatchReport partial_;
};

/// Encoded signals and bound constants for one image / template set.
struct PreparedRun {
  std::function<double(double)> image;  // theta1 * f0(t, theta2) of the image, bias included
  std::vector<EncodedSignal> templates;
  std::vector<MatchConstants> constants;
  double bias = 0.0;
  double period = 1.0;
};

namespace detail {

inline std::vector<double> time_grid(double period, std::size_t samples) {
  samples = std::max<std::size_t>(samples, 64);
  std::vector<double> t(samples);
  for (std::size_t k = 0; k < samples; ++k) t[k] = period * static_cast<double>(k) / static_cast<double>(samples);
  return t;
}

inline double functional_lipschitz(const SamplingSchedule& s, const FunctionalSpec& spec) {
  if (s.mode == ScheduleMode::ScanLine || spec.kind == FunctionalKind::ScanPoint) return 1.0;
  double sum = 0.0;
  double mx = 0.0;
  for (const auto& r : s.subdomains) {
    sum += r.area();
    mx = std::max(mx, r.area());
  }
  return s.mode == ScheduleMode::FrequencyStrips ? sum : mx;
}

}  // namespace detail

/// Measures D3, D4, D*D2 and Delta of a template against an image signal.
/// `image_row(t)` is f0(t, theta2*) without theta1, bias included.
inline MatchConstants measure_constants(const EncodedSignal& tpl, const std::function<double(double)>& image_row,
                                        const ScalarField* template_field, const RunConfig& cfg) {
  const auto ts = detail::time_grid(tpl.schedule().period, cfg.constants.time_samples);
  MatchConstants c;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> img(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) img[k] = image_row(ts[k]);
  double best_delta = std::numeric_limits<double>::infinity();
  for (double th : tpl.theta2_grid()) {
    double worst = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double v = tpl(ts[k], th);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      worst = std::max(worst, std::abs(img[k] - v));
    }
    best_delta = std::min(best_delta, worst);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw InputError("template signal is not finite");
  c.D3 = lo;
  c.D4 = hi;
  c.Delta = cfg.theta1 * best_delta;
  if (lo <= 0.0) c.recommended_bias = (hi > 0.0 ? cfg.encoder.bias_floor_fraction * hi : cfg.encoder.bias_floor_fraction) - lo;
  if (cfg.constants.composite || template_field == nullptr) {
    c.D = cfg.constants.safety * tpl.theta2_lipschitz();
    c.D2 = 1.0;
  } else {
    auto grid = linspace(cfg.adapt.theta2_range.lo, cfg.adapt.theta2_range.hi, 65);
    c.D = cfg.constants.safety * estimate_lipschitz_D(*template_field, cfg.kind, grid);
    c.D2 = detail::functional_lipschitz(tpl.schedule(), cfg.encoder.functional);
  }
  const auto& o = cfg.constants;
  if (o.D) c.D = *o.D;
  if (o.D2) c.D2 = *o.D2;
  if (o.D3) c.D3 = *o.D3;
  if (o.D4) c.D4 = *o.D4;
  if (o.Delta) c.Delta = *o.Delta;
  return c;
}

/// Tabulates the image and template signals and measures the constants.
inline PreparedRun prepare_run(const ScalarField& image, const std::vector<ScalarField>& templates,
                               const RunConfig& cfg) {
  cfg.validate();
  if (templates.empty()) throw ConfigError("at least one template is required");
  const SamplingSchedule sched = cfg.encoder.build(image.domain());
  sched.validate(image.domain());
  FunctionalSpec lin = cfg.encoder.functional;
  lin.bias = 0.0;
  const std::size_t tp = cfg.kind == PerturbKind::Identity ? 2 : std::max<std::size_t>(cfg.encoder.table_points, 2);
  const auto grid = linspace(cfg.adapt.theta2_range.lo, cfg.adapt.theta2_range.hi, tp);

  const double th2_truth = cfg.kind == PerturbKind::Identity ? 0.0 : cfg.theta2;
  if (requires_positive_theta2(cfg.kind) && !(th2_truth > 0.0))
    throw ConfigError("ground-truth theta2 must be positive for " + std::string(to_string(cfg.kind)));
  EncodedSignal img_raw =
      EncodedSignal::tabulate(image, cfg.kind, sched, lin, {th2_truth}, cfg.encoder.scan_samples);

  std::vector<EncodedSignal> raw;
  for (const auto& tf : templates) {
    if (!tf.same_grid(image)) throw ConfigError("template grid differs from the image grid");
    raw.push_back(EncodedSignal::tabulate(tf, cfg.kind, sched, lin, grid, cfg.encoder.scan_samples));
  }

  PreparedRun pr;
  pr.period = sched.period;
  if (cfg.encoder.bias) {
    pr.bias = *cfg.encoder.bias;
  } else {
    const auto ts = detail::time_grid(sched.period, cfg.constants.time_samples);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& sig : raw)
      for (double th : sig.theta2_grid())
        for (double t : ts) {
          const double v = sig(t, th);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    const double floor = hi > 0.0 ? cfg.encoder.bias_floor_fraction * hi : cfg.encoder.bias_floor_fraction;
    pr.bias = lo < floor ? floor - lo : 0.0;
  }

  EncodedSignal img(img_raw.mode(), img_raw.theta2_grid(), img_raw.rows(), pr.bias, sched);
  const double theta1 = cfg.theta1;
  pr.image = [img, th2_truth, theta1](double t) { return theta1 * img(t, th2_truth); };
  auto image_row = [img, th2_truth](double t) { return img(t, th2_truth); };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    pr.templates.emplace_back(raw[i].mode(), raw[i].theta2_grid(), raw[i].rows(), pr.bias, sched,
                              cfg.encoder.lookup);
    pr.constants.push_back(measure_constants(pr.templates.back(), image_row, &templates[i], cfg));
  }
  return pr;
}

/// Validity rows for one template channel, including the step-size guard.
inline ValidityReport validity_for(const RunConfig& cfg, const MatchConstants& c) {
  ValidityReport r = check_params(cfg.adapt, c);
  const auto& a = cfg.adapt;
  double stiff = std::min(a.tau, 1.0);
  if (c.D4 > 0.0) stiff = std::min(stiff, 1.0 / (a.gamma1 * a.k * c.D4));
  const double guard = 0.1 * stiff;
  r.conditions.push_back({"dt guard", cfg.dt <= guard, true, cfg.dt, guard, guard - cfg.dt, ""});
  return r;
}

/// Integrates the two-level system for prepared signals.
inline MatchReport run_prepared(const PreparedRun& pr, const RunConfig& cfg) {
  cfg.validate();
  const std::size_t m = pr.templates.size();
  MatchReport rep;
  rep.bias = pr.bias;
  rep.sync_bound = sync_upper_bound(m, cfg.detector.hr);
  rep.templates.resize(m);
  bool valid = true;
  std::string why;
  for (std::size_t i = 0; i < m; ++i) {
    auto& tr = rep.templates[i];
    tr.constants = pr.constants[i];
    tr.validity = validity_for(cfg, tr.constants);
    if (const auto* g = tr.validity.find(kCondGamma2)) tr.gamma2_max = g->bound;
    if (const auto* e = tr.validity.find(kCondEpsilon)) tr.epsilon_min = e->bound;
    if (!tr.validity.ok()) {
      valid = false;
      why += (why.empty() ? "" : "; ") + ("template " + std::to_string(i + 1) + ": " + tr.validity.failures());
    }
  }
  if (!valid) throw ValidityError("parameter validity check failed: " + why, rep);

  const auto& a = cfg.adapt;
  const bool det = cfg.detector.enabled;
  const std::size_t nodes = m + 1;
  const std::size_t hr_off = 1 + 4 * m;
  State st(hr_off + (det ? 3 * nodes : 0), 0.0);

  std::mt19937_64 rng(cfg.seed);
  double l2 = cfg.init.lambda2;
  double l3 = cfg.init.lambda3;
  if (cfg.init.random) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    l2 = u(rng);
    const auto br = branch_lambda3(l2);
    l3 = (rng() & 1u) ? br.first : br.second;
  }
  for (std::size_t i = 0; i < m; ++i) {
    st[1 + 4 * i + 1] = cfg.init.lambda1;
    st[1 + 4 * i + 2] = l2;
    st[1 + 4 * i + 3] = l3;
  }
  if (det) {
    const HRNetState h0 = random_hr_state(nodes, rng);
    for (std::size_t j = 0; j < nodes; ++j) {
      st[hr_off + j] = h0.x[j];
      st[hr_off + nodes + j] = h0.y[j];
      st[hr_off + 2 * nodes + j] = h0.z[j];
    }
  }

  std::vector<double> phi(nodes, 0.0);
  auto rhs = [&](double t, const State& s, State& d) {
    const double f0 = pr.image(t);
    if (!std::isfinite(f0)) throw EvaluationError("image encoder returned a non-finite value", t, cfg.theta2);
    d[0] = -s[0] / a.tau + a.k * f0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t o = 1 + 4 * i;
      const AdaptState as{s[0], s[o], s[o + 1], s[o + 2], s[o + 3]};
      const auto& tpl = pr.templates[i];
      AdaptState ds;
      if (cfg.pin_theta2) {
        const double pin = *cfg.pin_theta2;
        ds = adapt_rhs(as, t, f0, [&](double tt, double) { return tpl(tt, pin); }, a);
        ds.lambda2 = 0.0;
        ds.lambda3 = 0.0;
      } else {
        ds = adapt_rhs(as, t, f0, tpl, a);
      }
      d[o] = ds.phi_i;
      d[o + 1] = ds.lambda1;
      d[o + 2] = ds.lambda2;
      d[o + 3] = ds.lambda3;
    }
    if (det) {
      phi[0] = cfg.detector.input_gain * s[0];
      for (std::size_t i = 0; i < m; ++i) phi[i + 1] = cfg.detector.input_gain * s[1 + 4 * i];
      detail::hr_rhs_flat(s.data() + hr_off, d.data() + hr_off, nodes, cfg.detector.hr, cfg.detector.gamma,
                          phi.data());
    }
  };

  // Channel layout.
  Trajectory& tr = rep.trajectory;
  tr.add_channel("phi0");
  for (std::size_t i = 0; i < m; ++i) {
    const std::string s = std::to_string(i + 1);
    for (const char* n : {"phi_", "lambda1_", "lambda2_", "lambda3_", "theta1_hat_", "theta2_hat_", "e_", "dz_"})
      tr.add_channel(n + s);
  }
  if (det && cfg.record_nodes)
    for (std::size_t j = 0; j < nodes; ++j)
      for (const char* n : {"x", "y", "z"}) tr.add_channel(n + std::to_string(j));

  const auto steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  tr.reserve(steps / cfg.record_stride + 2);
  std::vector<double> dz_acc(m, 0.0);
  std::vector<double> row;
  auto record = [&](double t) {
    row.clear();
    row.push_back(st[0]);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t o = 1 + 4 * i;
      const AdaptState as{st[0], st[o], st[o + 1], st[o + 2], st[o + 3]};
      auto [th1, th2] = theta_hats(as, a);
      if (cfg.pin_theta2) th2 = *cfg.pin_theta2;
      row.insert(row.end(), {st[o], st[o + 1], st[o + 2], st[o + 3], th1, th2, st[0] - st[o], dz_acc[i]});
      dz_acc[i] = 0.0;
    }
    if (det && cfg.record_nodes)
      for (std::size_t j = 0; j < nodes; ++j)
        row.insert(row.end(), {st[hr_off + j], st[hr_off + nodes + j], st[hr_off + 2 * nodes + j]});
    tr.push_row(t, row);
  };
  record(0.0);

  std::vector<double> state_bound(m, 0.0);
  Rk4Stepper stepper(st.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    stepper.step(rhs, st, t, cfg.dt);
    const double tn = static_cast<double>(k + 1) * cfg.dt;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t o = 1 + 4 * i;
      double& s2 = st[o + 2];
      double& s3 = st[o + 3];
      const double r2 = s2 * s2 + s3 * s3;
      if (std::abs(r2 - 1.0) > 1e-3)
        throw StepError("lambda2^2 + lambda3^2 drifted off the unit circle; reduce dt", tn);
      if (a.renormalize) {
        const double r = std::sqrt(r2);
        s2 /= r;
        s3 /= r;
      }
      dz_acc[i] = std::max(dz_acc[i], deadzone(st[0] - st[o], a.epsilon));
      for (double v : {st[0], st[o], st[o + 1], s2, s3}) state_bound[i] = std::max(state_bound[i], std::abs(v));
    }
    if ((k + 1) % cfg.record_stride == 0 || k + 1 == steps) record(tn);
  }

  rep.ran = true;
  rep.t_end = tr.times().back();
  const double w_start = rep.t_end - cfg.final_window * cfg.horizon;

  std::optional<SyncReport> sync;
  if (det && cfg.record_nodes) {
    NodeSeries ns;
    ns.times = tr.times();
    ns.x.resize(nodes);
    ns.y.resize(nodes);
    ns.z.resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      ns.x[j] = tr.channel("x" + std::to_string(j));
      ns.y[j] = tr.channel("y" + std::to_string(j));
      ns.z[j] = tr.channel("z" + std::to_string(j));
    }
    sync = sync_metrics(ns, cfg.detector.window_fraction * cfg.horizon, cfg.detector.delta_thresh);
  }

  const auto& times = tr.times();
  for (std::size_t i = 0; i < m; ++i) {
    auto& r = rep.templates[i];
    const std::string s = std::to_string(i + 1);
    const auto& dz = tr.channel("dz_" + s);
    const auto& th2 = tr.channel("theta2_hat_" + s);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < times.size(); ++k) {
      r.max_residual = std::max(r.max_residual, dz[k]);
      if (dz[k] > 0.0) r.last_active_time = times[k];
      if (times[k] > w_start) {
        r.max_residual_final = std::max(r.max_residual_final, dz[k]);
        if (!std::isnan(prev)) r.theta2_variation_final += std::abs(th2[k] - prev);
        prev = th2[k];
      }
    }
    r.residual_zero = r.max_residual_final == 0.0;
    const std::size_t o = 1 + 4 * i;
    const AdaptState as{st[0], st[o], st[o + 1], st[o + 2], st[o + 3]};
    const auto [th1, th2f] = theta_hats(as, a);
    r.theta1_hat = th1;
    r.theta2_hat = cfg.pin_theta2 ? *cfg.pin_theta2 : th2f;
    r.lambda1 = st[o + 1];
    r.lambda2 = st[o + 2];
    r.lambda3 = st[o + 3];
    r.final_error = st[0] - st[o];
    r.state_bound = state_bound[i];
    if (sync) {
      r.sync = *sync->pair(0, i + 1);
      r.synchronized = r.sync.synchronized;
    } else {
      r.synchronized = !det;
    }
    r.matched = r.residual_zero && r.synchronized;
  }
  return rep;
}

/// Full pipeline: the image is perturbed by the configured ground truth,
/// every template channel searches for it, and the detector compares.
inline MatchReport run_match(const ScalarField& image, const std::vector<ScalarField>& templates,
                             const RunConfig& cfg) {
  return run_prepared(prepare_run(image, templates, cfg), cfg);
}

/// Re-derives the match verdict from a recorded trajectory alone.
inline bool rederive_matched(const Trajectory& tr, std::size_t template_index, double final_window_start,
                             double sync_window, double delta_thresh) {
  const std::string s = std::to_string(template_index + 1);
  const auto& times = tr.times();
  const auto& dz = tr.channel("dz_" + s);
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] > final_window_start && dz[k] > 0.0) return false;
  NodeSeries ns;
  ns.times = times;
  for (const std::string& node : {std::string("0"), s}) {
    ns.x.push_back(tr.channel("x" + node));
    ns.y.push_back(tr.channel("y" + node));
    ns.z.push_back(tr.channel("z" + node));
  }
  return sync_metrics(ns, sync_window, delta_thresh).pairs.front().synchronized;
}

}  // namespace tmatch
