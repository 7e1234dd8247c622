#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tmatch/errors.hpp"

namespace tmatch {

/// Closed real interval.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

/// Rectangular image domain Omega_x x Omega_y.
struct Domain {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }
};

/// Discretized scalar image on a cell-centred rectangular grid.
///
/// Node (i, j) sits at the centre of cell i along x and j along y, so the
/// cells tile the domain exactly and `cell_area()` turns sums into integrals.
/// Reads between nodes are bilinear; reads outside the node lattice blend
/// towards zero (zero padding).
class ScalarField {
 public:
  ScalarField() : ScalarField(1, 1) {}

  ScalarField(std::size_t nx, std::size_t ny, Domain domain = {}, double fill = 0.0)
      : nx_(nx), ny_(ny), domain_(domain) {
    validate_shape();
    values_.assign(nx_ * ny_, fill);
    if (!std::isfinite(fill)) throw InputError("ScalarField: non-finite fill value");
  }

  ScalarField(std::size_t nx, std::size_t ny, Domain domain, std::vector<double> values)
      : nx_(nx), ny_(ny), domain_(domain), values_(std::move(values)) {
    validate_shape();
    if (values_.size() != nx_ * ny_)
      throw InputError("ScalarField: value count does not match nx*ny");
    check_finite();
  }

  /// Builds a field by evaluating `fn(x, y)` at every node.
  template <typename Fn>
  static ScalarField from_function(std::size_t nx, std::size_t ny, Domain domain, Fn&& fn) {
    ScalarField f(nx, ny, domain);
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) f(i, j) = fn(f.x(i), f.y(j));
    f.check_finite();
    return f;
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return values_.size(); }
  const Domain& domain() const { return domain_; }

  double hx() const { return domain_.width() / static_cast<double>(nx_); }
  double hy() const { return domain_.height() / static_cast<double>(ny_); }
  double cell_area() const { return hx() * hy(); }

  double x(std::size_t i) const { return domain_.x_min + (static_cast<double>(i) + 0.5) * hx(); }
  double y(std::size_t j) const { return domain_.y_min + (static_cast<double>(j) + 0.5) * hy(); }

  /// Fractional node index of a physical coordinate.
  double index_x(double x) const { return (x - domain_.x_min) / hx() - 0.5; }
  double index_y(double y) const { return (y - domain_.y_min) / hy() - 0.5; }

  double& operator()(std::size_t i, std::size_t j) { return values_[j * nx_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[j * nx_ + i]; }

  /// Value at integer node with zero outside the lattice.
  double at_or_zero(long i, long j) const {
    if (i < 0 || j < 0 || i >= static_cast<long>(nx_) || j >= static_cast<long>(ny_)) return 0.0;
    return values_[static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i)];
  }

  /// Bilinear read at fractional node index (u, v), zero padded.
  double sample_index(double u, double v) const {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const double au = u - fu;
    const double av = v - fv;
    const long i0 = static_cast<long>(fu);
    const long j0 = static_cast<long>(fv);
    if (i0 < -1 || j0 < -1 || i0 >= static_cast<long>(nx_) || j0 >= static_cast<long>(ny_)) return 0.0;
    double lower = (1.0 - au) * at_or_zero(i0, j0);
    if (au != 0.0) lower += au * at_or_zero(i0 + 1, j0);
    if (av == 0.0) return lower;
    double upper = (1.0 - au) * at_or_zero(i0, j0 + 1);
    if (au != 0.0) upper += au * at_or_zero(i0 + 1, j0 + 1);
    return (1.0 - av) * lower + av * upper;
  }

  /// Bilinear read at physical coordinates.
  double sample(double x, double y) const { return sample_index(index_x(x), index_y(y)); }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  bool same_grid(const ScalarField& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && domain_.x_min == o.domain_.x_min &&
           domain_.x_max == o.domain_.x_max && domain_.y_min == o.domain_.y_min &&
           domain_.y_max == o.domain_.y_max;
  }

  void check_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("ScalarField: non-finite value");
  }

  double sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  double integral() const { return sum() * cell_area(); }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  ScalarField& operator*=(double k) {
    for (double& v : values_) v *= k;
    return *this;
  }

  ScalarField& operator+=(const ScalarField& o) {
    if (!same_grid(o)) throw DomainError("ScalarField: grid mismatch in addition");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }

  ScalarField& operator-=(const ScalarField& o) {
    if (!same_grid(o)) throw DomainError("ScalarField: grid mismatch in subtraction");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }

  /// Same grid, values replaced by zero.
  ScalarField zeros_like() const { return ScalarField(nx_, ny_, domain_, 0.0); }

 private:
  void validate_shape() const {
    if (nx_ < 1 || ny_ < 1) throw InputError("ScalarField: grid needs nx >= 1 and ny >= 1");
    if (!(domain_.x_max > domain_.x_min) || !(domain_.y_max > domain_.y_min))
      throw InputError("ScalarField: empty domain");
  }

  std::size_t nx_;
  std::size_t ny_;
  Domain domain_;
  std::vector<double> values_;
};

inline ScalarField operator*(double k, ScalarField f) { return f *= k; }
inline ScalarField operator*(ScalarField f, double k) { return f *= k; }
inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }

/// Largest pointwise |a - b|.
inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  if (!a.same_grid(b)) throw DomainError("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

// ---------------------------------------------------------------------------
// Perturbation models F[S, theta] = theta1 * Fbar[S, theta2]
// ---------------------------------------------------------------------------

enum class PerturbKind { Identity, TranslateX, ScaleX, Rotate, GaussianBlur, DefocusBlur };

inline std::string_view to_string(PerturbKind k) {
  switch (k) {
    case PerturbKind::Identity: return "identity";
    case PerturbKind::TranslateX: return "translate-x";
    case PerturbKind::ScaleX: return "scale-x";
    case PerturbKind::Rotate: return "rotate";
    case PerturbKind::GaussianBlur: return "gaussian-blur";
    case PerturbKind::DefocusBlur: return "defocus-blur";
  }
  return "identity";
}

inline PerturbKind parse_perturb_kind(std::string_view s) {
  for (auto k : {PerturbKind::Identity, PerturbKind::TranslateX, PerturbKind::ScaleX, PerturbKind::Rotate,
                 PerturbKind::GaussianBlur, PerturbKind::DefocusBlur})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown perturbation kind '" + std::string(s) + "'");
}

/// True for kinds whose physical domain is theta2 > 0.
inline bool requires_positive_theta2(PerturbKind k) {
  return k == PerturbKind::ScaleX || k == PerturbKind::GaussianBlur || k == PerturbKind::DefocusBlur;
}

struct PerturbParams {
  PerturbKind kind = PerturbKind::Identity;
  double theta1 = 1.0;
  double theta2 = 0.0;
  Interval theta1_range{};
  Interval theta2_range{};

  void validate() const {
    if (!std::isfinite(theta1) || !std::isfinite(theta2))
      throw ParameterError("PerturbParams: non-finite theta");
    if (!theta1_range.contains(theta1)) throw ParameterError("PerturbParams: theta1 outside its range");
    if (!theta2_range.contains(theta2)) throw ParameterError("PerturbParams: theta2 outside its range");
    if (requires_positive_theta2(kind) && !(theta2 > 0.0))
      throw ParameterError("PerturbParams: " + std::string(to_string(kind)) + " needs theta2 > 0");
  }
};

namespace detail {

inline void require_finite(double v, const char* op) {
  if (!std::isfinite(v)) throw ParameterError(std::string(op) + ": non-finite theta2");
}

// Resamples `in` through an index-space map (i, j) -> (u, v).
template <typename Map>
ScalarField resample(const ScalarField& in, Map&& map) {
  ScalarField out = in.zeros_like();
  for (std::size_t j = 0; j < in.ny(); ++j)
    for (std::size_t i = 0; i < in.nx(); ++i) {
      auto [u, v] = map(i, j);
      out(i, j) = in.sample_index(u, v);
    }
  return out;
}

struct KernelTap {
  long di;
  long dj;
  double w;
};

inline ScalarField convolve(const ScalarField& in, const std::vector<KernelTap>& taps) {
  ScalarField out = in.zeros_like();
  const long nx = static_cast<long>(in.nx());
  const long ny = static_cast<long>(in.ny());
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i) {
      double acc = 0.0;
      for (const auto& t : taps) {
        const long ii = i + t.di;
        const long jj = j + t.dj;
        if (ii < 0 || jj < 0 || ii >= nx || jj >= ny) continue;
        acc += t.w * in(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
    }
  return out;
}

}  // namespace detail

/// Gaussian kernel taps below this value are dropped.
inline constexpr double kKernelTruncation = 1e-12;

/// Radius beyond which exp(-r^2/theta2) drops under the truncation threshold.
inline double gaussian_kernel_radius(double theta2) { return std::sqrt(theta2 * -std::log(kKernelTruncation)); }

/// output(x, y) = input(x + theta2, y).
inline ScalarField translate_x(const ScalarField& in, double theta2) {
  detail::require_finite(theta2, "translate_x");
  if (theta2 == 0.0) return in;
  const double shift = theta2 / in.hx();
  return detail::resample(in, [&](std::size_t i, std::size_t j) {
    return std::pair{static_cast<double>(i) + shift, static_cast<double>(j)};
  });
}

/// output(x, y) = input(theta2 * x, y), x measured from the coordinate origin.
inline ScalarField scale_x(const ScalarField& in, double theta2) {
  detail::require_finite(theta2, "scale_x");
  if (!(theta2 > 0.0)) throw ParameterError("scale_x: theta2 must be positive");
  if (theta2 == 1.0) return in;
  return detail::resample(in, [&](std::size_t i, std::size_t j) {
    return std::pair{in.index_x(theta2 * in.x(i)), static_cast<double>(j)};
  });
}

/// Rotation by theta2 about the domain centre:
/// output(x, y) = input(cos*x - sin*y, sin*x + cos*y) in centred coordinates.
inline ScalarField rotate(const ScalarField& in, double theta2) {
  detail::require_finite(theta2, "rotate");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(theta2, two_pi);
  if (a < 0.0) a += two_pi;
  if (a == 0.0) return in;
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double cx = 0.5 * static_cast<double>(in.nx() - 1);
  const double cy = 0.5 * static_cast<double>(in.ny() - 1);
  const double hx = in.hx();
  const double hy = in.hy();
  return detail::resample(in, [&](std::size_t i, std::size_t j) {
    const double dx = (static_cast<double>(i) - cx) * hx;
    const double dy = (static_cast<double>(j) - cy) * hy;
    return std::pair{cx + (c * dx - s * dy) / hx, cy + (s * dx + c * dy) / hy};
  });
}

/// Unnormalized Gaussian blur: integral of exp(-|r - r'|^2 / theta2) * input(r') dr'.
inline ScalarField gaussian_blur(const ScalarField& in, double theta2) {
  detail::require_finite(theta2, "gaussian_blur");
  if (!(theta2 > 0.0)) throw ParameterError("gaussian_blur: theta2 must be positive");
  const double hx = in.hx();
  const double hy = in.hy();
  const double r = gaussian_kernel_radius(theta2);
  const long ri = static_cast<long>(std::ceil(r / hx));
  const long rj = static_cast<long>(std::ceil(r / hy));
  std::vector<detail::KernelTap> taps;
  for (long dj = -rj; dj <= rj; ++dj)
    for (long di = -ri; di <= ri; ++di) {
      const double d2 = (di * hx) * (di * hx) + (dj * hy) * (dj * hy);
      const double w = std::exp(-d2 / theta2);
      if (w < kKernelTruncation) continue;
      taps.push_back({di, dj, w * in.cell_area()});
    }
  return detail::convolve(in, taps);
}

/// Out-of-focus blur: disc kernel of radius theta2 and height 1/(pi theta2^2).
inline ScalarField defocus_blur(const ScalarField& in, double theta2) {
  detail::require_finite(theta2, "defocus_blur");
  if (!(theta2 > 0.0)) throw ParameterError("defocus_blur: theta2 must be positive");
  const double hx = in.hx();
  const double hy = in.hy();
  const long ri = static_cast<long>(std::ceil(theta2 / hx));
  const long rj = static_cast<long>(std::ceil(theta2 / hy));
  const double w = in.cell_area() / (std::numbers::pi * theta2 * theta2);
  std::vector<detail::KernelTap> taps;
  for (long dj = -rj; dj <= rj; ++dj)
    for (long di = -ri; di <= ri; ++di) {
      const double d2 = (di * hx) * (di * hx) + (dj * hy) * (dj * hy);
      if (d2 <= theta2 * theta2) taps.push_back({di, dj, w});
    }
  return detail::convolve(in, taps);
}

/// The nonlinear part Fbar[S, theta2] of a perturbation.
inline ScalarField apply_nonlinear(const ScalarField& in, PerturbKind kind, double theta2) {
  switch (kind) {
    case PerturbKind::Identity: return in;
    case PerturbKind::TranslateX: return translate_x(in, theta2);
    case PerturbKind::ScaleX: return scale_x(in, theta2);
    case PerturbKind::Rotate: return rotate(in, theta2);
    case PerturbKind::GaussianBlur: return gaussian_blur(in, theta2);
    case PerturbKind::DefocusBlur: return defocus_blur(in, theta2);
  }
  return in;
}

/// F[S, theta] = theta1 * Fbar[S, theta2].
inline ScalarField apply_perturbation(const ScalarField& in, const PerturbParams& p) {
  p.validate();
  ScalarField out = apply_nonlinear(in, p.kind, p.theta2);
  out *= p.theta1;
  return out;
}

/// Nodes that stay clear of boundary zero padding for every theta2 in
/// [lo, hi] under the given kind.
inline std::vector<bool> lipschitz_interior_mask(const ScalarField& f, PerturbKind kind, double lo, double hi) {
  std::vector<bool> keep(f.size(), true);
  const Domain& d = f.domain();
  const double h = std::max(f.hx(), f.hy());
  auto inside = [&](double x, double y, double margin) {
    return x >= d.x_min + margin && x <= d.x_max - margin && y >= d.y_min + margin && y <= d.y_max - margin;
  };
  for (std::size_t j = 0; j < f.ny(); ++j)
    for (std::size_t i = 0; i < f.nx(); ++i) {
      const double x = f.x(i);
      const double y = f.y(j);
      bool ok = true;
      switch (kind) {
        case PerturbKind::Identity: break;
        case PerturbKind::TranslateX:
          ok = inside(x + lo, y, h) && inside(x + hi, y, h);
          break;
        case PerturbKind::ScaleX:
          ok = inside(lo * x, y, h) && inside(hi * x, y, h);
          break;
        case PerturbKind::Rotate: {
          const double r = std::hypot(x - d.center_x(), y - d.center_y());
          ok = r <= 0.5 * std::min(d.width(), d.height()) - h;
          break;
        }
        case PerturbKind::GaussianBlur:
          ok = inside(x, y, gaussian_kernel_radius(hi));
          break;
        case PerturbKind::DefocusBlur:
          ok = inside(x, y, hi + h);
          break;
      }
      keep[j * f.nx() + i] = ok;
    }
  return keep;
}

/// Empirical Lipschitz constant of Fbar[S, .] over a theta2 grid:
/// max over adjacent grid points and interior nodes of |dFbar| / |dtheta2|.
/// Equal to the all-pairs maximum, so refining the grid never lowers it.
inline double estimate_lipschitz_D(const ScalarField& field, PerturbKind kind, std::vector<double> theta2_grid) {
  if (theta2_grid.size() < 2) throw ParameterError("estimate_lipschitz_D: grid needs at least two points");
  std::sort(theta2_grid.begin(), theta2_grid.end());
  theta2_grid.erase(std::unique(theta2_grid.begin(), theta2_grid.end()), theta2_grid.end());
  if (theta2_grid.size() < 2) throw ParameterError("estimate_lipschitz_D: grid needs two distinct points");
  if (kind == PerturbKind::Identity) return 0.0;
  const auto keep = lipschitz_interior_mask(field, kind, theta2_grid.front(), theta2_grid.back());
  double best = 0.0;
  ScalarField prev = apply_nonlinear(field, kind, theta2_grid.front());
  for (std::size_t g = 1; g < theta2_grid.size(); ++g) {
    ScalarField cur = apply_nonlinear(field, kind, theta2_grid[g]);
    const double dtheta = theta2_grid[g] - theta2_grid[g - 1];
    for (std::size_t k = 0; k < cur.size(); ++k)
      if (keep[k]) best = std::max(best, std::abs(cur.values()[k] - prev.values()[k]) / dtheta);
    prev = std::move(cur);
  }
  return best;
}

/// `n` evenly spaced points over [lo, hi] inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t k = 0; k < n; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

}  // namespace tmatch
