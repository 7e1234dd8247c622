#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "tmatch/config.hpp"
#include "tmatch/experiments.hpp"

using namespace tmatch;

namespace {

constexpr double kPi = std::numbers::pi;

Settings preset(const char* name) { return load_settings(std::string(TMATCH_PRESETS_DIR) + "/" + name); }

GarnerMember member(double angle, int branch) {
  GarnerMember m;
  m.theta2_hat = angle;
  m.branch = branch;
  m.converged = true;
  return m;
}

}  // namespace

TEST(Garner, SymmetryOrders) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    GarnerSpec s;
    s.layout_seed = seed;
    s.order = 4;
    const auto f4 = garner_pattern(s);
    EXPECT_LT(max_abs_diff(f4, rotate(f4, kPi / 2)), 1e-9) << seed;
    s.order = 2;
    const auto f2 = garner_pattern(s);
    EXPECT_LT(max_abs_diff(f2, rotate(f2, kPi)), 1e-9) << seed;
    EXPECT_GT(max_abs_diff(f2, rotate(f2, kPi / 2)), 0.1 * f2.max_abs()) << seed;
    s.order = 1;
    const auto f1 = garner_pattern(s);
    EXPECT_GT(max_abs_diff(f1, rotate(f1, kPi)), 0.1 * f1.max_abs()) << seed;
    for (const auto* f : {&f4, &f2, &f1}) EXPECT_NEAR(f->integral(), 1.0, 1e-12);
  }
}

TEST(Garner, RejectsBadOrder) {
  GarnerSpec s;
  s.order = 3;
  EXPECT_THROW(garner_pattern(s), ParameterError);
  RunConfig c;
  EXPECT_THROW(run_garner(GarnerSpec{}, 0.7, 1.0, 10, c), ParameterError);
  EXPECT_THROW(run_garner(GarnerSpec{}, 7.0, 1.0, 40, c), ParameterError);
}

TEST(Angles, WrapAndDistance) {
  EXPECT_NEAR(wrap_angle(-0.5), 2 * kPi - 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(2 * kPi + 0.25), 0.25, 1e-15);
  EXPECT_NEAR(circular_distance(0.1, 2 * kPi - 0.1), 0.2, 1e-14);
  EXPECT_NEAR(circular_distance(0.0, kPi), kPi, 1e-15);
  EXPECT_EQ(circular_distance(1.0, 1.0), 0.0);
}

TEST(Angles, ClusteringAcrossTheCut) {
  const double l = 5.0 * kPi / 180.0;
  std::vector<GarnerMember> ms{member(0.01, 1), member(2 * kPi - 0.01, 1), member(0.03, 1), member(kPi, 1),
                               member(kPi + 0.02, 1), member(1.0, -1)};
  ms.push_back(member(3.0, 1));
  ms.back().converged = false;
  const auto cs = cluster_angles(ms, l);
  ASSERT_EQ(cs.size(), 3u);
  EXPECT_EQ(cs[0].branch, 1);
  EXPECT_EQ(cs[0].size, 3u);
  EXPECT_NEAR(circular_distance(cs[0].angle, 0.01), 0.0, 1e-3);
  EXPECT_NEAR(cs[0].spread, 0.02, 1e-3);
  EXPECT_EQ(cs[1].size, 2u);
  EXPECT_NEAR(cs[1].angle, kPi + 0.01, 1e-9);
  EXPECT_EQ(cs[2].branch, -1);
  EXPECT_EQ(cluster_angles({}, l).size(), 0u);
}

TEST(Angles, CensusSpacing) {
  GarnerCensus c;
  c.order = 2;
  for (int b : {1, -1})
    for (double a : {0.3, 0.3 + kPi}) c.clusters.push_back({b, a, 0.0, 3});
  EXPECT_NEAR(census_spacing_error(c), 0.0, 1e-12);
  c.clusters.pop_back();
  EXPECT_TRUE(std::isinf(census_spacing_error(c)));
}

TEST(Tradeoff, EndpointsForUniformLevels) {
  const std::vector<double> uniform(256, 1.0 / 256);
  const auto tab = sampling_tradeoff(16, 16, 256, uniform, 1.0, 1e4, power_of_two_divisors(256));
  ASSERT_EQ(tab.rows.size(), 9u);
  EXPECT_EQ(tab.rows.front().k, 1u);
  EXPECT_DOUBLE_EQ(tab.rows.front().C, 256.0);
  EXPECT_DOUBLE_EQ(tab.rows.front().H, 16.0);
  EXPECT_EQ(tab.rows.back().k, 256u);
  EXPECT_DOUBLE_EQ(tab.rows.back().C, 1.0);
  EXPECT_DOUBLE_EQ(tab.rows.back().H, 8.0);
  for (const auto& r : tab.rows) EXPECT_DOUBLE_EQ(r.Q, r.C + 1e4 / r.H);
  EXPECT_TRUE(tab.unimodal());
  EXPECT_TRUE(tab.argmin_interior());
}

TEST(Tradeoff, ArgminAgainstBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(16);
    double s = 0.0;
    for (double& v : p) s += (v = u(rng));
    for (double& v : p) v /= s;
    const double lam2 = 10.0 + 1000.0 * u(rng);
    const auto tab = sampling_tradeoff(8, 8, 16, p, 1.0, lam2, power_of_two_divisors(64));
    double best = 1e300;
    std::size_t bk = 0;
    double hs = 0.0;
    for (double v : p) hs -= v * std::log2(v);
    for (std::size_t k = 1; k <= 64; k *= 2) {
      const double c = 64.0 / static_cast<double>(k);
      const double q = c + lam2 / (std::log2(c) + hs);
      if (q < best) best = q, bk = k;
    }
    EXPECT_EQ(tab.argmin_k, bk);
    EXPECT_TRUE(tab.unimodal());
  }
}

TEST(Tradeoff, Errors) {
  const std::vector<double> p(4, 0.25);
  EXPECT_THROW(sampling_tradeoff(4, 4, 4, p, 1.0, 1.0, {3}), ParameterError);
  EXPECT_THROW(sampling_tradeoff(4, 4, 4, {0.5, 0.5}, 1.0, 1.0, {1}), ParameterError);
  EXPECT_THROW(sampling_tradeoff(4, 4, 4, {0.5, 0.5, 0.5, 0.5}, 1.0, 1.0, {1}), ParameterError);
  EXPECT_THROW(sampling_tradeoff(4, 4, 4, p, 0.0, 1.0, {1}), ParameterError);
  EXPECT_THROW(sampling_tradeoff(1, 1, 1, {1.0}, 1.0, 1.0, {1}), DomainError);
  EXPECT_EQ(power_of_two_divisors(48), (std::vector<std::size_t>{1, 2, 4, 8, 16}));
}

TEST(Microscope, NoiselessSignalIsExact) {
  MicroscopeScenario s;
  s.profile = default_profile(0);
  s.bleach = {{0.0, 1.0}, {100.0, 0.6}};
  const auto sig = synth_microscope(s, 1, 500.0);
  for (double t : {0.0, 17.3, 99.0, 101.0, 333.3}) {
    const double x = sig.position(t);
    EXPECT_EQ(sig(t), s.theta1_at(t) * blur_line_value(s.profile, s.theta2, x)) << t;
  }
  EXPECT_EQ(s.theta1_at(150.0), 0.6);
}

TEST(Microscope, BlurValueDirectSum) {
  const std::vector<double> p{1.0, 2.0, 0.5};
  const double direct = std::exp(-0.3 * 0.49) + 2.0 * std::exp(-0.3 * 0.09) + 0.5 * std::exp(-0.3 * 1.69);
  EXPECT_NEAR(blur_line_value(p, 0.3, 0.7), direct, 1e-9);
  EXPECT_THROW(blur_line_value(p, 0.0, 0.7), DomainError);
}

TEST(Microscope, NoiseAveragingShrinksSd) {
  for (std::size_t n_avg : {1u, 4u, 16u}) {
    MicroscopeScenario s;
    s.profile = default_profile(0);
    s.bleach = {{0.0, 1.0}};
    s.noise_sigma = 0.2;
    s.n_avg = n_avg;
    const auto sig = synth_microscope(s, 3, 40 * s.period());
    double sum = 0.0, sq = 0.0;
    std::size_t cnt = 0;
    for (double t = 0.5; t < 40 * s.period(); t += 1.0) {
      const double v = sig.noise(t);
      sum += v;
      sq += v * v;
      ++cnt;
    }
    const double mean = sum / static_cast<double>(cnt);
    const double sd = std::sqrt(sq / static_cast<double>(cnt) - mean * mean);
    EXPECT_NEAR(sd, 0.2 / std::sqrt(static_cast<double>(n_avg)), 0.2 * 0.2 / std::sqrt(static_cast<double>(n_avg)));
  }
}

TEST(Microscope, LinearInBrightness) {
  MicroscopeScenario a;
  a.profile = default_profile(2);
  a.bleach = {{0.0, 1.0}};
  MicroscopeScenario b = a;
  b.bleach = {{0.0, 0.35}};
  const auto sa = synth_microscope(a, 1, 200.0);
  const auto sb = synth_microscope(b, 1, 200.0);
  for (double t = 0.0; t < 200.0; t += 7.7) EXPECT_NEAR(sb(t), 0.35 * sa(t), 1e-12);
}

TEST(Microscope, ScenarioValidation) {
  MicroscopeScenario s;
  s.profile = default_profile(0);
  s.bleach = {{1.0, 1.0}};
  EXPECT_THROW(s.validate(), ParameterError);
  s.bleach = {{0.0, 1.0}, {0.0, 0.5}};
  EXPECT_THROW(s.validate(), ParameterError);
  s.bleach = {{0.0, 1.0}};
  s.n_avg = 0;
  EXPECT_THROW(s.validate(), ParameterError);
}

TEST(Microscope, PinnedWrongBlurKeepsResidual) {
  const Settings s = preset("microscope-default.toml");
  RunConfig c = s.run;
  c.horizon = 20000.0;
  c.pin_theta2 = 0.2;
  const auto r = run_microscope(s.microscope.scenario(), c);
  EXPECT_FALSE(r.match.templates[0].residual_zero);
  EXPECT_FALSE(r.match.templates[0].matched);
  EXPECT_GT(r.match.templates[0].max_residual_final, 0.0);
}

TEST(Microscope, PinnedTrueBlurRecoversBrightness) {
  const Settings s = preset("microscope-default.toml");
  RunConfig c = s.run;
  c.horizon = 20000.0;
  c.pin_theta2 = s.microscope.theta2;
  const auto r = run_microscope(s.microscope.scenario(), c);
  EXPECT_LT(r.theta1_rel_error, 0.1);
}
