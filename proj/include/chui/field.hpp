#pragma once

// Field, potential and Cauchy transform of a charge configuration, plus the
// arc-averaged Cauchy kernel.
//
// Sign convention: field_at returns sum_k alpha_k (x_k - x) / |x_k - x|^d.
// With potential_at as defined below this is +grad U for d >= 3 and
// -grad u for d = 2 (u = sum alpha_k ln|x - x_k|).

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "chui/config.hpp"
#include "chui/error.hpp"
#include "chui/gauss_kronrod.hpp"

namespace chui {

inline constexpr double kSingularGuard = 1e-13;

struct FieldSample {
  std::vector<double> point;
  std::vector<double> field;
  double magnitude = 0.0;
};

namespace detail {

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline void check_point(const ChargeConfiguration& cfg, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(cfg.dimension()), "point has wrong dimension");
  double n2 = 0.0;
  for (double c : x) n2 += c * c;
  require(n2 < 1.0, "evaluation point must lie strictly inside the unit ball");
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    if (distance(cfg.position(k), x) < kSingularGuard) {
      throw SingularPointError("evaluation point coincides with a charge");
    }
  }
}

/// |sum alpha_k / (z - z_k)| for planar poles stored as complex numbers.
inline double planar_magnitude(std::span<const std::complex<double>> poles, std::span<const double> weights,
                               std::complex<double> z) {
  std::complex<double> acc{};
  for (std::size_t k = 0; k < poles.size(); ++k) acc += weights[k] / (z - poles[k]);
  return std::abs(acc);
}

/// Field magnitude for general d without validation; `pos` is flat n x d.
inline double field_magnitude(int d, std::span<const double> pos, std::span<const double> weights,
                              std::span<const double> x, std::span<double> scratch) {
  const auto dim = static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < dim; ++i) scratch[i] = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double t = pos[k * dim + i] - x[i];
      r2 += t * t;
    }
    double scale;
    if (d == 2) {
      scale = 1.0 / r2;
    } else if (d == 3) {
      scale = 1.0 / (r2 * std::sqrt(r2));
    } else {
      scale = std::pow(r2, -0.5 * d);
    }
    const double a = weights[k] * scale;
    for (std::size_t i = 0; i < dim; ++i) scratch[i] += a * (pos[k * dim + i] - x[i]);
  }
  double m2 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) m2 += scratch[i] * scratch[i];
  return std::sqrt(m2);
}

}  // namespace detail

/// sum_k alpha_k (x_k - x) / |x_k - x|^d at an interior, non-singular point.
inline FieldSample field_at(const ChargeConfiguration& cfg, std::span<const double> x) {
  detail::check_point(cfg, x);
  FieldSample out;
  out.point.assign(x.begin(), x.end());
  out.field.assign(x.size(), 0.0);
  const int d = cfg.dimension();
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    auto xk = cfg.position(k);
    const double r = detail::distance(xk, x);
    const double scale = cfg.weight(k) / std::pow(r, d);
    for (std::size_t i = 0; i < x.size(); ++i) out.field[i] += scale * (xk[i] - x[i]);
  }
  double m2 = 0.0;
  for (double c : out.field) m2 += c * c;
  out.magnitude = std::sqrt(m2);
  return out;
}

/// C nu(z) = sum_k alpha_k / (z_k - z).
inline std::complex<double> cauchy_transform(const ChargeConfiguration& cfg, std::complex<double> z) {
  require(cfg.dimension() == 2, "cauchy_transform needs a planar configuration");
  const double xy[2] = {z.real(), z.imag()};
  detail::check_point(cfg, xy);
  std::complex<double> acc{};
  for (std::size_t k = 0; k < cfg.size(); ++k) acc += cfg.weight(k) / (cfg.complex_position(k) - z);
  return acc;
}

/// d = 2: sum alpha ln|x - x_k|; d = 3: sum alpha / |x - x_k|;
/// d >= 4: sum alpha |x - x_k|^{2-d} / (d - 2).
inline double potential_at(const ChargeConfiguration& cfg, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(cfg.dimension()), "point has wrong dimension");
  const int d = cfg.dimension();
  double acc = 0.0;
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    const double r = detail::distance(cfg.position(k), x);
    if (r < kSingularGuard) throw SingularPointError("potential evaluated at a charge");
    if (d == 2) {
      acc += cfg.weight(k) * std::log(r);
    } else {
      acc += cfg.weight(k) * std::pow(r, 2.0 - d) / (d - 2);
    }
  }
  return acc;
}

/// (1/l) * integral over [a, b) of dtheta / (z - e^{i theta}), by adaptive
/// quadrature. Relative error is measured against the mean of |integrand|.
inline std::complex<double> averaged_kernel(std::complex<double> z, const Arc& arc, double rel_tol = 1e-10) {
  const double l = arc.length();
  require(l > 0.0, "averaged_kernel needs an arc of positive length");
  require(std::abs(z) < 1.0, "averaged_kernel needs |z| < 1");
  auto integrand = [z](double t) { return 1.0 / (z - std::polar(1.0, t)); };
  std::vector<double> interior;
  if (std::abs(z) > 0.0) {
    const double t = std::arg(z);
    for (double c : {t - 2.0 * kPi, t, t + 2.0 * kPi}) interior.push_back(c);
  }
  const auto breaks = quad::make_breaks(arc.begin, arc.end, std::move(interior));
  quad::Options opt;
  opt.rel_tol = 0.5 * rel_tol;
  opt.relative_to_l1 = true;
  opt.max_evals = 200'000;
  const auto r = quad::integrate(integrand, std::span<const double>(breaks), opt);
  return r.value / l;
}

/// Closed form of averaged_kernel. With w = e^{i theta} the integrand is
/// (1/(i z)) (1/w + 1/(z - w)) dw; the argument of e^{i theta} - z increases
/// monotonically by a total of 2 pi around the circle when |z| < 1, which
/// fixes the branch of the logarithm. Near z = 0 a power series is used.
inline std::complex<double> averaged_kernel_closed_form(std::complex<double> z, const Arc& arc) {
  const double l = arc.length();
  require(l > 0.0, "averaged_kernel needs an arc of positive length");
  require(std::abs(z) < 1.0, "averaged_kernel needs |z| < 1");
  using C = std::complex<double>;
  const C I(0.0, 1.0);
  if (std::abs(z) < 0.25) {
    // 1/(z - w) = -sum_j z^j w^{-(j+1)}
    C acc{};
    C zj(1.0, 0.0);
    for (int j = 0; j < 40; ++j) {
      const double m = j + 1.0;
      const C integral = (std::polar(1.0, -m * arc.end) - std::polar(1.0, -m * arc.begin)) / (-I * m);
      acc -= zj * integral;
      zj *= z;
      if (std::abs(zj) < 1e-18) break;
    }
    return acc / l;
  }
  const C wa = std::polar(1.0, arc.begin);
  const C wb = std::polar(1.0, arc.end);
  const C ratio = (wb - z) / (wa - z);
  double turn = std::arg(ratio);
  if (l >= 2.0 * kPi) {
    turn = 2.0 * kPi;
  } else if (turn < 0.0) {
    turn += 2.0 * kPi;
  }
  const C numerator = I * l - (std::log(std::abs(ratio)) + I * turn);
  return numerator / (I * z * l);
}

}  // namespace chui
