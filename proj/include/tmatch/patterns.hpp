#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "tmatch/errors.hpp"
#include "tmatch/field.hpp"

namespace tmatch {

/// Sum of isotropic Gaussian dots exp(-|r - c|^2 / (2 sigma^2)).
struct Dot {
  double x = 0.0;
  double y = 0.0;
  double amplitude = 1.0;
  double sigma = 0.1;
};

inline ScalarField render_dots(std::size_t nx, std::size_t ny, const Domain& d, const std::vector<Dot>& dots) {
  return ScalarField::from_function(nx, ny, d, [&](double x, double y) {
    double v = 0.0;
    for (const auto& p : dots) {
      const double r2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
      v += p.amplitude * std::exp(-r2 / (2.0 * p.sigma * p.sigma));
    }
    return v;
  });
}

/// Scales a field so its integral equals `total`.
inline ScalarField normalize_integral(ScalarField f, double total) {
  const double s = f.integral();
  if (!(std::abs(s) > 0.0)) throw InputError("normalize_integral: field integrates to zero");
  f *= total / s;
  return f;
}

/// Random blob image without rotational symmetry: `count` Gaussian blobs of
/// distinct amplitude and width inside the disc of radius `radius` about the
/// domain centre.
inline ScalarField blob_pattern(std::size_t n, std::uint64_t seed, std::size_t count = 4, double radius = 0.55,
                                Domain d = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Dot> dots;
  for (std::size_t k = 0; k < count; ++k) {
    const double r = radius * std::sqrt(u(rng));
    const double a = 2.0 * std::numbers::pi * u(rng);
    dots.push_back({d.center_x() + r * std::cos(a), d.center_y() + r * std::sin(a), 0.4 + 0.6 * u(rng),
                    0.10 + 0.08 * u(rng)});
  }
  return render_dots(n, n, d, dots);
}

}  // namespace tmatch
