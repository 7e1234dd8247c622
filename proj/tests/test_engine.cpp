#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "tmatch/config.hpp"
#include "tmatch/engine.hpp"
#include "tmatch/ode.hpp"
#include "tmatch/patterns.hpp"

using namespace tmatch;

namespace {

Settings preset(const char* name) { return load_settings(std::string(TMATCH_PRESETS_DIR) + "/" + name); }

MatchReport run_settings(const Settings& s) {
  const auto image = load_image_source(s.match.image, s.match.grid);
  std::vector<ScalarField> tpls;
  for (const auto& t : s.match.templates) tpls.push_back(load_image_source(t, s.match.grid));
  return run_match(image, tpls, s.run);
}

// Self-match setup with a dead zone wide enough that the slow loop never moves.
RunConfig smooth_config() {
  RunConfig c = preset("self-match.toml").run;
  c.horizon = 3.0;
  c.adapt.epsilon = 100.0;
  c.detector.enabled = false;
  c.record_stride = 1;
  return c;
}

}  // namespace

TEST(Rk4, HarmonicOscillator) {
  auto rhs = [](double, const State& y, State& d) {
    d[0] = y[1];
    d[1] = -y[0];
  };
  const auto y = rk4_integrate(rhs, State{1.0, 0.0}, 0.0, 1e-3, 1000);
  EXPECT_NEAR(y[0], std::cos(1.0), 1e-9);
  EXPECT_NEAR(y[1], -std::sin(1.0), 1e-9);
}

TEST(Rk4, ExponentialAndZeroRhs) {
  auto grow = [](double, const State& y, State& d) { d[0] = y[0]; };
  EXPECT_NEAR(rk4_integrate(grow, State{1.0}, 0.0, 1e-2, 100)[0], std::exp(1.0), 1e-9);
  auto zero = [](double, const State&, State& d) { d[0] = 0.0; };
  EXPECT_EQ(rk4_integrate(zero, State{3.5}, 0.0, 0.1, 10)[0], 3.5);
}

TEST(Rk4, Errors) {
  auto blow = [](double, const State& y, State& d) { d[0] = 1.0 / (y[0] - y[0]); };
  EXPECT_THROW(rk4_step(blow, State{1.0}, 0.0, 0.1), StepError);
  auto ok = [](double, const State&, State& d) { d[0] = 1.0; };
  EXPECT_THROW(rk4_step(ok, State{1.0}, 0.0, 0.0), ParameterError);
  EXPECT_THROW(rk4_step(ok, State{1.0}, 0.0, -0.1), ParameterError);
}

TEST(Engine, FourthOrderConvergence) {
  const auto image = blob_pattern(32, 7);
  RunConfig c = smooth_config();
  std::vector<double> v;
  for (double dt : {0.04, 0.02, 0.01}) {
    c.dt = dt;
    const auto r = run_match(image, {image}, c);
    EXPECT_EQ(r.templates[0].max_residual, 0.0);
    v.push_back(r.templates[0].lambda1);
  }
  const double ratio = (v[0] - v[1]) / (v[1] - v[2]);
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 24.0);
}

TEST(Engine, SelfMatchIsMatched) {
  const auto r = run_settings(preset("self-match.toml"));
  ASSERT_TRUE(r.ran);
  const auto& t = r.templates[0];
  EXPECT_TRUE(t.matched);
  EXPECT_TRUE(t.residual_zero);
  EXPECT_TRUE(t.synchronized);
  EXPECT_NEAR(t.theta1_hat, 1.0, 0.05);
  EXPECT_TRUE(t.validity.ok());
}

TEST(Engine, UnrelatedTemplateIsNotMatched) {
  const auto r = run_settings(preset("unrelated-template.toml"));
  const auto& t = r.templates[0];
  EXPECT_FALSE(t.matched);
  EXPECT_FALSE(t.residual_zero);
  EXPECT_GT(t.max_residual_final, 0.0);
}

TEST(Engine, Gamma2AboveBoundAbortsWithRowNamed) {
  Settings s = preset("rotation.toml");
  const auto image = load_image_source(s.match.image, s.match.grid);
  const auto pr = prepare_run(image, {image}, s.run);
  const double g2max = validity_for(s.run, pr.constants[0]).find(kCondGamma2)->bound;
  ASSERT_TRUE(std::isfinite(g2max));
  s.run.adapt.gamma2 = 2.0 * g2max;
  s.run.adapt.gamma1 = 1000.0 * s.run.adapt.gamma2;
  try {
    run_prepared(pr, s.run);
    FAIL() << "expected ValidityError";
  } catch (const ValidityError& e) {
    EXPECT_NE(std::string(e.what()).find(kCondGamma2), std::string::npos);
    EXPECT_FALSE(e.partial().ran);
    EXPECT_TRUE(e.partial().trajectory.times().empty());
    EXPECT_EQ(e.partial().templates[0].constants.D3, pr.constants[0].D3);
    const auto* row = e.report().find(kCondGamma2);
    ASSERT_NE(row, nullptr);
    EXPECT_FALSE(row->pass);
    EXPECT_DOUBLE_EQ(row->bound, g2max);
  }
}

TEST(Engine, DtGuard) {
  Settings s = preset("self-match.toml");
  s.run.dt = 0.5;
  s.run.horizon = 5.0;
  try {
    run_settings(s);
    FAIL() << "expected ValidityError";
  } catch (const ValidityError& e) {
    EXPECT_FALSE(e.report().find("dt guard")->pass);
  }
}

TEST(Engine, DeterministicTrajectory) {
  Settings s = preset("self-match.toml");
  s.run.horizon = 40.0;
  std::ostringstream a, b;
  run_settings(s).trajectory.write_csv(a);
  run_settings(s).trajectory.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
}

TEST(Engine, VerdictRederivesFromTrajectory) {
  for (const char* name : {"self-match.toml", "unrelated-template.toml"}) {
    const Settings s = preset(name);
    const auto r = run_settings(s);
    const double w = r.t_end - s.run.final_window * s.run.horizon;
    EXPECT_EQ(rederive_matched(r.trajectory, 0, w, s.run.detector.window_fraction * s.run.horizon,
                               s.run.detector.delta_thresh),
              r.templates[0].matched)
        << name;
  }
}

TEST(Engine, TrajectoryChannels) {
  Settings s = preset("self-match.toml");
  s.run.horizon = 1.0;
  s.match.templates = {"blob:7", "blob:11"};
  const auto r = run_settings(s);
  for (const char* ch : {"phi0", "phi_1", "lambda1_2", "theta2_hat_2", "e_1", "dz_2", "x0", "y1", "z2"})
    EXPECT_TRUE(r.trajectory.has(ch)) << ch;
  EXPECT_EQ(r.templates.size(), 2u);
  EXPECT_EQ(r.sync_bound, sync_upper_bound(2, s.run.detector.hr));
}

TEST(Sweep, CouplingAcrossSyncBound) {
  Settings s = preset("self-match.toml");
  s.run.horizon = 600.0;
  s.run.dt = 0.02;
  const double b = sync_upper_bound(1, s.run.detector.hr);
  const auto reps = sweep(s, "detector.gamma", {0.0, 1.5 * b}, run_settings);
  ASSERT_EQ(reps.size(), 2u);
  EXPECT_FALSE(reps[0].templates[0].synchronized);
  EXPECT_TRUE(reps[1].templates[0].synchronized);
  EXPECT_TRUE(reps[1].templates[0].matched);
}

TEST(Sweep, Gamma2CrossingBoundFlipsValidity) {
  Settings s = preset("rotation.toml");
  s.run.horizon = 1.0;
  s.run.record_stride = 1;
  const auto image = load_image_source(s.match.image, s.match.grid);
  const double g2max = validity_for(s.run, prepare_run(image, {image}, s.run).constants[0]).find(kCondGamma2)->bound;
  s.run.adapt.gamma1 = 1.0;
  s.run.adapt.min_gamma_ratio = 1.0;
  const auto below = sweep(s, "adapt.gamma2", {0.5 * g2max}, run_settings);
  EXPECT_TRUE(below[0].templates[0].validity.ok());
  EXPECT_THROW(sweep(s, "adapt.gamma2", {1.5 * g2max}, run_settings), ValidityError);
}

TEST(Sweep, EmptyAndUnknownAxis) {
  const Settings s = preset("self-match.toml");
  EXPECT_TRUE(sweep(s, "adapt.gamma2", {}, run_settings).empty());
  EXPECT_THROW(sweep(s, "adapt.nonsense", {1.0}, run_settings), ConfigError);
  EXPECT_THROW(sweep(s.run, "match.grid", {1.0}, [](const RunConfig&) { return MatchReport{}; }), ConfigError);
  EXPECT_THROW(sweep(s, "run.record_stride", {1.5}, run_settings), ConfigError);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.init.lambda2 = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.final_window = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.kind = PerturbKind::ScaleX;
  c.adapt.theta2_range = {-1.0, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
}
