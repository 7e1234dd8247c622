#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tmatch/errors.hpp"

namespace tmatch {

using State = std::vector<double>;

namespace detail {

inline void require_finite_state(const State& s, double t, const char* stage) {
  for (std::size_t k = 0; k < s.size(); ++k)
    if (!std::isfinite(s[k]))
      throw StepError(std::string("non-finite ") + stage + " at component " + std::to_string(k), t);
}

}  // namespace detail

/// Classical RK4 with preallocated stage buffers. `rhs(t, y, dydt)` writes
/// the derivative into dydt (already sized like y).
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

  template <class Rhs>
  void step(Rhs&& rhs, State& y, double t, double dt) {
    const std::size_t n = y.size();
    if (k1_.size() != n) resize(n);
    const double h2 = 0.5 * dt;

    rhs(t, y, k1_);
    detail::require_finite_state(k1_, t, "derivative (stage 1)");
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h2 * k1_[i];
    rhs(t + h2, tmp_, k2_);
    detail::require_finite_state(k2_, t, "derivative (stage 2)");
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h2 * k2_[i];
    rhs(t + h2, tmp_, k3_);
    detail::require_finite_state(k3_, t, "derivative (stage 3)");
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + dt * k3_[i];
    rhs(t + dt, tmp_, k4_);
    detail::require_finite_state(k4_, t, "derivative (stage 4)");
    for (std::size_t i = 0; i < n; ++i) y[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    detail::require_finite_state(y, t + dt, "state");
  }

 private:
  void resize(std::size_t n) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->assign(n, 0.0);
  }

  State k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step returning the new state.
template <class Rhs>
State rk4_step(Rhs&& rhs, State y, double t, double dt) {
  if (!(dt > 0.0)) throw ParameterError("rk4_step: dt must be positive");
  detail::require_finite_state(y, t, "initial state");
  Rk4Stepper stepper(y.size());
  stepper.step(rhs, y, t, dt);
  return y;
}

/// Integrates from t0 over `steps` fixed steps of size dt.
template <class Rhs>
State rk4_integrate(Rhs&& rhs, State y, double t0, double dt, std::size_t steps) {
  Rk4Stepper stepper(y.size());
  for (std::size_t s = 0; s < steps; ++s) stepper.step(rhs, y, t0 + static_cast<double>(s) * dt, dt);
  return y;
}

}  // namespace tmatch
