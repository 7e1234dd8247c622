#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tmatch/errors.hpp"
#include "tmatch/ode.hpp"

namespace tmatch {

/// Hindmarsh-Rose membrane constants and drive current.
struct HRParams {
  double a = 1.0;
  double b = 3.0;
  double c = 1.0;
  double d = 5.0;
  double s = 4.0;
  double x0 = 1.6;
  double eps = 0.001;
  double I = 3.25;

  void validate() const {
    if (!(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0 && eps > 0.0 && s > 0.0))
      throw ParameterError("HRParams: a, b, c, d, eps and s must be positive");
    if (!std::isfinite(x0) || !std::isfinite(I)) throw ParameterError("HRParams: x0 and I must be finite");
  }
};

/// Node states of an (n+1)-node network.
struct HRNetState {
  std::vector<double> x, y, z;

  HRNetState() = default;
  explicit HRNetState(std::size_t nodes) : x(nodes, 0.0), y(nodes, 0.0), z(nodes, 0.0) {}
  std::size_t nodes() const { return x.size(); }
};

using Matrix = std::vector<std::vector<double>>;

/// gamma * (all-ones off the diagonal, -n on it) for n+1 nodes.
inline Matrix coupling_matrix(std::size_t n, double gamma) {
  Matrix m(n + 1, std::vector<double>(n + 1, gamma));
  for (std::size_t i = 0; i <= n; ++i) m[i][i] = -static_cast<double>(n) * gamma;
  return m;
}

namespace detail {

// Derivative of the network for flat state [x_0..x_n, y_0..y_n, z_0..z_n].
// The coupling u_i = gamma * (sum_j x_j - (n+1) x_i) is the matrix product
// with coupling_matrix, computed in O(n).
inline void hr_rhs_flat(const double* st, double* out, std::size_t nodes, const HRParams& p, double gamma,
                        const double* phi) {
  const double* x = st;
  const double* y = st + nodes;
  const double* z = st + 2 * nodes;
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) sum += x[i];
  const double m = static_cast<double>(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double xi = x[i];
    const double u = gamma * (sum - m * xi);
    out[i] = -p.a * xi * xi * xi + p.b * xi * xi + y[i] - z[i] + p.I + u + phi[i];
    out[nodes + i] = p.c - p.d * xi * xi - y[i];
    out[2 * nodes + i] = p.eps * (p.s * (xi + p.x0) - z[i]);
  }
}

}  // namespace detail

inline HRNetState hr_rhs(const HRNetState& st, const HRParams& p, double gamma, const std::vector<double>& phi) {
  const std::size_t n1 = st.nodes();
  if (st.y.size() != n1 || st.z.size() != n1 || phi.size() != n1)
    throw ConfigError("hr_rhs: state and input dimensions differ");
  std::vector<double> flat(3 * n1), out(3 * n1);
  std::copy(st.x.begin(), st.x.end(), flat.begin());
  std::copy(st.y.begin(), st.y.end(), flat.begin() + n1);
  std::copy(st.z.begin(), st.z.end(), flat.begin() + 2 * n1);
  detail::hr_rhs_flat(flat.data(), out.data(), n1, p, gamma, phi.data());
  HRNetState d(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    d.x[i] = out[i];
    d.y[i] = out[n1 + i];
    d.z[i] = out[2 * n1 + i];
  }
  return d;
}

/// Coupling strength above which the synchronous state is guaranteed stable:
/// (d^2/2 + b^2) / ((n+1) a).
inline double sync_upper_bound(std::size_t n, const HRParams& p) {
  if (!(p.a > 0.0)) throw ParameterError("sync_upper_bound: a must be positive");
  return (p.d * p.d / 2.0 + p.b * p.b) / (static_cast<double>(n + 1) * p.a);
}

/// Supremum of coupling strengths where unstable or itinerant regimes may
/// exist. Numerically the same expression as sync_upper_bound.
inline double unstable_region_max(std::size_t n, const HRParams& p) { return sync_upper_bound(n, p); }

/// Uniform random initial state in [-2,2] x [-10,2] x [0,6] per node.
inline HRNetState random_hr_state(std::size_t nodes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(-10.0, 2.0), uz(0.0, 6.0);
  HRNetState s(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    s.x[i] = ux(rng);
    s.y[i] = uy(rng);
    s.z[i] = uz(rng);
  }
  return s;
}

/// Recorded node trajectories: x[i][k] is node i at times[k].
struct NodeSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> x, y, z;

  std::size_t nodes() const { return x.size(); }
  double max_abs() const {
    double m = 0.0;
    for (const auto* c : {&x, &y, &z})
      for (const auto& v : *c)
        for (double a : v) m = std::max(m, std::abs(a));
    return m;
  }
};

/// Integrates the network with fixed-step RK4. `phi(t, out)` writes the
/// per-node inputs. Every `stride`-th state is recorded, starting at t = 0.
inline NodeSeries simulate_hr(const HRParams& p, double gamma, const HRNetState& init,
                              const std::function<void(double, std::vector<double>&)>& phi, double dt,
                              double horizon, std::size_t stride = 1) {
  p.validate();
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ParameterError("simulate_hr: dt and horizon must be positive");
  stride = std::max<std::size_t>(stride, 1);
  const std::size_t n1 = init.nodes();
  State st(3 * n1);
  std::copy(init.x.begin(), init.x.end(), st.begin());
  std::copy(init.y.begin(), init.y.end(), st.begin() + n1);
  std::copy(init.z.begin(), init.z.end(), st.begin() + 2 * n1);
  std::vector<double> input(n1, 0.0);
  auto rhs = [&](double t, const State& s, State& d) {
    if (phi) phi(t, input);
    detail::hr_rhs_flat(s.data(), d.data(), n1, p, gamma, input.data());
  };
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  NodeSeries out;
  out.x.assign(n1, {});
  out.y.assign(n1, {});
  out.z.assign(n1, {});
  auto record = [&](double t) {
    out.times.push_back(t);
    for (std::size_t i = 0; i < n1; ++i) {
      out.x[i].push_back(st[i]);
      out.y[i].push_back(st[n1 + i]);
      out.z[i].push_back(st[2 * n1 + i]);
    }
  };
  record(0.0);
  Rk4Stepper stepper(st.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    stepper.step(rhs, st, t, dt);
    if ((k + 1) % stride == 0) record(static_cast<double>(k + 1) * dt);
  }
  return out;
}

struct PairSync {
  std::size_t i = 0;
  std::size_t j = 0;
  double rms_x = 0.0, rms_y = 0.0, rms_z = 0.0;
  double max_x = 0.0, max_y = 0.0, max_z = 0.0;
  double t_syn = 0.0;  // total time with |x_i - x_j| < threshold
  bool synchronized = false;
};

struct SyncReport {
  double window = 0.0;
  double delta_thresh = 0.0;
  std::vector<PairSync> pairs;

  const PairSync* pair(std::size_t i, std::size_t j) const {
    for (const auto& p : pairs)
      if ((p.i == i && p.j == j) || (p.i == j && p.j == i)) return &p;
    return nullptr;
  }
};

/// Windowed synchronization errors for every node pair over the final
/// `window` time units.
inline SyncReport sync_metrics(const NodeSeries& traj, double window, double delta_thresh) {
  if (traj.times.empty() || traj.nodes() == 0) throw InputError("sync_metrics: empty trajectory");
  if (!(window > 0.0) || !(delta_thresh > 0.0))
    throw ParameterError("sync_metrics: window and threshold must be positive");
  const double t_end = traj.times.back();
  const double span = t_end - traj.times.front();
  if (span < 2.0 * window * (1.0 - 1e-12))
    throw ParameterError("sync_metrics: trajectory shorter than two windows");
  const double t_start = t_end - window;
  std::size_t k0 = 0;
  while (k0 < traj.times.size() && traj.times[k0] < t_start) ++k0;

  SyncReport rep{window, delta_thresh, {}};
  const std::size_t n1 = traj.nodes();
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = i + 1; j < n1; ++j) {
      PairSync ps;
      ps.i = i;
      ps.j = j;
      double sx = 0.0, sy = 0.0, sz = 0.0;
      std::size_t cnt = 0;
      for (std::size_t k = k0; k < traj.times.size(); ++k) {
        const double dx = std::abs(traj.x[i][k] - traj.x[j][k]);
        const double dy = std::abs(traj.y[i][k] - traj.y[j][k]);
        const double dz = std::abs(traj.z[i][k] - traj.z[j][k]);
        sx += dx * dx;
        sy += dy * dy;
        sz += dz * dz;
        ps.max_x = std::max(ps.max_x, dx);
        ps.max_y = std::max(ps.max_y, dy);
        ps.max_z = std::max(ps.max_z, dz);
        ++cnt;
      }
      if (cnt > 0) {
        ps.rms_x = std::sqrt(sx / static_cast<double>(cnt));
        ps.rms_y = std::sqrt(sy / static_cast<double>(cnt));
        ps.rms_z = std::sqrt(sz / static_cast<double>(cnt));
      }
      for (std::size_t k = 0; k + 1 < traj.times.size(); ++k)
        if (std::abs(traj.x[i][k] - traj.x[j][k]) < delta_thresh) ps.t_syn += traj.times[k + 1] - traj.times[k];
      ps.synchronized = ps.max_x < delta_thresh;
      rep.pairs.push_back(ps);
    }
  return rep;
}

}  // namespace tmatch
