#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tmatch/errors.hpp"
#include "tmatch/field.hpp"

namespace tmatch {

/// ||x||_delta = max(|x| - delta, 0).
inline double deadzone(double x, double delta) {
  const double a = std::abs(x) - delta;
  return a > 0.0 ? a : 0.0;
}

struct AdaptState {
  double phi0 = 0.0;
  double phi_i = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 1.0;
};

struct AdaptParams {
  double tau = 1.0;
  double k = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 0.01;
  double epsilon = 0.1;
  Interval theta1_range{0.0, 2.0};
  Interval theta2_range{0.0, 2.0 * 3.14159265358979323846};
  double min_gamma_ratio = 100.0;  // gamma1 / gamma2 must reach this
  bool enforce_epsilon = false;   // treat the epsilon row of the validity report as fatal
  bool renormalize = false;       // project (lambda2, lambda3) back onto the unit circle each step

  void validate() const {
    if (!(tau > 0.0) || !(k > 0.0) || !(gamma1 > 0.0) || !(gamma2 > 0.0) || !(epsilon > 0.0))
      throw ParameterError("AdaptParams: tau, k, gamma1, gamma2 and epsilon must be positive");
    if (!(theta2_range.hi > theta2_range.lo) || !std::isfinite(theta2_range.width()))
      throw ParameterError("AdaptParams: theta2 range must be a finite non-empty interval");
    if (!(theta1_range.hi >= theta1_range.lo) || !std::isfinite(theta1_range.hi))
      throw ParameterError("AdaptParams: theta1 range must be finite");
  }
};

/// Constants entering the dead-zone and gamma2 bounds. M1 follows from these and the
/// adaptation parameters.
struct MatchConstants {
  double D = 0.0;      // Lipschitz constant of the perturbation in theta2
  double D2 = 1.0;     // Lipschitz constant of the sampling functional
  double D3 = 0.0;     // lower bound of the template signal
  double D4 = 0.0;     // upper bound of the template signal
  double Delta = 0.0;  // residual mismatch between image and best template signal
  double recommended_bias = 0.0;  // bias lifting D3 above its floor, when known

  double M1(const AdaptParams& p) const {
    return Delta + p.k * p.theta1_range.hi * D * D2 * std::abs(p.theta2_range.width());
  }
};

/// (theta1_hat, theta2_hat). theta2_hat is clamped to its range if drift has
/// pushed |lambda2| past 1.
inline std::pair<double, double> theta_hats(const AdaptState& s, const AdaptParams& p) {
  const double th1 = (s.phi0 - s.phi_i) * p.gamma1 + s.lambda1;
  const double l2 = std::clamp(s.lambda2, -1.0, 1.0);
  const double th2 = p.theta2_range.lo + (l2 + 1.0) * p.theta2_range.width() / 2.0;
  return {th1, th2};
}

/// Right-hand side of the filter / fast / slow adaptation system for one
/// template channel. `f0_value` is theta1 * f0(t, theta2) of the image;
/// `f_template(t, theta2)` the template encoder.
template <class Evaluator>
AdaptState adapt_rhs(const AdaptState& s, double t, double f0_value, Evaluator&& f_template, const AdaptParams& p) {
  const auto [th1, th2] = theta_hats(s, p);
  const double fi = f_template(t, th2);
  if (!std::isfinite(fi)) throw EvaluationError("template encoder returned a non-finite value", t, th2);
  const double e = s.phi0 - s.phi_i;
  const double dz = deadzone(e, p.epsilon);
  AdaptState d;
  d.phi0 = -s.phi0 / p.tau + p.k * f0_value;
  d.phi_i = -s.phi_i / p.tau + p.k * th1 * fi;
  d.lambda1 = p.gamma1 / p.tau * e;
  d.lambda2 = p.gamma2 * s.lambda3 * dz;
  d.lambda3 = -p.gamma2 * s.lambda2 * dz;
  return d;
}

/// Smallest admissible dead-zone width epsilon.
inline double table3_epsilon(const MatchConstants& c, const AdaptParams& p) {
  if (!(c.D3 > 0.0)) throw ConstantsError("table3_epsilon: D3 must be positive");
  const double r = 1.0 + c.D4 / c.D3;
  const double half_range = p.theta2_range.width() / 2.0;
  const double bracket = p.theta1_range.hi * c.D * c.D2 * c.D4 / (c.D3 * c.D3) * c.M1(p) * p.tau * r * half_range;
  return p.tau * (c.Delta * r + p.gamma2 / p.gamma1 * bracket);
}

/// Upper bound on the slow search gain gamma2.
inline double table3_gamma2_max(const MatchConstants& c, const AdaptParams& p) {
  if (!(c.D3 > 0.0)) throw ConstantsError("table3_gamma2_max: D3 must be positive");
  const double bracket =
      p.k * p.theta1_range.hi * c.D * c.D2 * (1.0 + c.D4 / c.D3) * (p.theta2_range.width() / 2.0);
  if (!(bracket > 0.0)) throw ConstantsError("table3_gamma2_max: a factor of the bound is zero");
  const double q = 1.0 / (4.0 * p.tau);
  return q * q / bracket;
}

struct Condition {
  std::string name;
  bool pass = false;
  bool fatal = true;   // failing it rejects the run
  double value = 0.0;  // left-hand side
  double bound = 0.0;  // right-hand side
  double margin = 0.0; // positive when satisfied
  std::string note;
};

struct ValidityReport {
  std::vector<Condition> conditions;

  bool ok() const {
    for (const auto& c : conditions)
      if (c.fatal && !c.pass) return false;
    return true;
  }
  const Condition* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::string failures() const {
    std::string s;
    for (const auto& c : conditions)
      if (c.fatal && !c.pass) s += (s.empty() ? "" : "; ") + c.name + (c.note.empty() ? "" : " (" + c.note + ")");
    return s;
  }
};

inline constexpr const char* kCondGamma2 = "gamma2 < gamma2_max";
inline constexpr const char* kCondEpsilon = "epsilon > epsilon_min";
inline constexpr const char* kCondRatio = "gamma1/gamma2 >= ratio";
inline constexpr const char* kCondD3 = "D3 > 0";

/// Evaluates every matching condition. Never throws; failures are rows.
inline ValidityReport check_params(const AdaptParams& p, const MatchConstants& c) {
  ValidityReport r;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Condition d3{kCondD3, c.D3 > 0.0, true, c.D3, 0.0, c.D3, ""};
  if (!d3.pass)
    d3.note = "template signal not separated from zero; add bias c0 >= " + std::to_string(c.recommended_bias);
  r.conditions.push_back(d3);

  Condition g2{kCondGamma2, false, true, p.gamma2, nan, nan, ""};
  try {
    g2.bound = table3_gamma2_max(c, p);
    g2.margin = g2.bound - p.gamma2;
    g2.pass = p.gamma2 < g2.bound;
  } catch (const ConstantsError& e) {
    g2.note = e.what();
    if (c.D3 > 0.0 && c.D * c.D2 == 0.0 && p.theta1_range.hi > 0.0) {
      // The template does not depend on theta2, so the bound is unbounded.
      g2.bound = std::numeric_limits<double>::infinity();
      g2.margin = g2.bound;
      g2.pass = true;
      g2.note = "D*D2 = 0: any gamma2 is admissible";
    }
  }
  r.conditions.push_back(g2);

  Condition eps{kCondEpsilon, false, p.enforce_epsilon, p.epsilon, nan, nan, ""};
  try {
    eps.bound = table3_epsilon(c, p);
    eps.margin = p.epsilon - eps.bound;
    eps.pass = p.epsilon > eps.bound;
  } catch (const ConstantsError& e) {
    eps.note = e.what();
  }
  r.conditions.push_back(eps);

  const double ratio = p.gamma1 / p.gamma2;
  // Relative slack so that e.g. 0.7 / 0.007 counts as a ratio of 100.
  r.conditions.push_back({kCondRatio, ratio >= p.min_gamma_ratio * (1.0 - 1e-12), true, ratio, p.min_gamma_ratio,
                          ratio - p.min_gamma_ratio, ""});
  return r;
}

/// Both lambda3 values on the unit circle for a given lambda2.
inline std::pair<double, double> branch_lambda3(double lambda2) {
  if (!(std::abs(lambda2) <= 1.0)) throw DomainError("branch_lambda3: |lambda2| must not exceed 1");
  const double r = std::sqrt(1.0 - lambda2 * lambda2);
  return {r, -r};
}

}  // namespace tmatch
