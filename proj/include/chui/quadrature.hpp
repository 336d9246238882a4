#pragma once

// Integrals over the unit ball of magnitudes with point singularities at the
// charges. A ball of radius `pole_radius` around every pole (cut to the pole's
// Voronoi cell and to the unit ball) is integrated in pole-centred polar
// coordinates, where the r^{d-1} Jacobian cancels the kernel singularity. The
// rest of the ball ("bulk") is integrated by nested adaptive Gauss-Kronrod in
// d = 2 and by randomized quasi-Monte Carlo in d = 3. d >= 4 uses plain Monte
// Carlo with pole-centred importance sampling over the whole ball.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chui/config.hpp"
#include "chui/error.hpp"
#include "chui/field.hpp"
#include "chui/gauss_kronrod.hpp"
#include "chui/parallel.hpp"
#include "chui/rng.hpp"

namespace chui {

enum class QuadratureMethod { automatic, polar_adaptive, polar_qmc, monte_carlo };

inline std::string to_string(QuadratureMethod m) {
  switch (m) {
    case QuadratureMethod::automatic: return "auto";
    case QuadratureMethod::polar_adaptive: return "pole-polar+adaptive";
    case QuadratureMethod::polar_qmc: return "pole-polar+qmc";
    case QuadratureMethod::monte_carlo: return "monte-carlo";
  }
  return "unknown";
}

struct QuadratureSpec {
  QuadratureMethod method = QuadratureMethod::automatic;
  double rel_tolerance = 1e-3;
  std::uint64_t seed = 1;
  std::size_t max_evals = 50'000'000;
  /// Unset means min(0.1, half the smallest pole separation).
  std::optional<double> pole_radius;
  /// Worker threads; never affects results.
  unsigned threads = 1;

  void validate() const {
    require(rel_tolerance > 0.0 && rel_tolerance < 0.5, "rel_tolerance must lie in (0, 0.5)");
    require(!pole_radius || *pole_radius > 0.0, "pole_radius must be positive");
    require(max_evals >= 1000, "max_evals must be at least 1000");
  }
};

struct QuadratureResult {
  double value = 0.0;
  /// Deterministic error bound, or for stochastic methods the combined
  /// standard error (deterministic part added in quadrature).
  double error = 0.0;
  bool stochastic = false;
  std::size_t evals = 0;
  bool converged = true;
  double pole_part = 0.0;
  double bulk_part = 0.0;
  std::string method;
};

inline nlohmann::json to_json(const QuadratureSpec& s) {
  nlohmann::json j = {{"method", to_string(s.method)},
                      {"rel_tolerance", s.rel_tolerance},
                      {"seed", s.seed},
                      {"max_evals", s.max_evals}};
  j["pole_radius"] = s.pole_radius ? nlohmann::json(*s.pole_radius) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const QuadratureResult& r) {
  return {{"value", r.value},         {"err", r.error},         {"stochastic", r.stochastic},
          {"evals", r.evals},         {"converged", r.converged}, {"pole_part", r.pole_part},
          {"bulk_part", r.bulk_part}, {"method", r.method}};
}

inline double unit_ball_volume(int d) {
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

inline double default_pole_radius(const MergedPoles& poles) {
  double r = 0.1;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      r = std::min(r, 0.5 * detail::distance(poles.position(i), poles.position(j)));
    }
  }
  return r;
}

namespace detail {

inline double wrap_into(double angle, double lo) {
  while (angle < lo) angle += 2.0 * kPi;
  while (angle >= lo + 2.0 * kPi) angle -= 2.0 * kPi;
  return angle;
}

/// Eval counts and convergence of the inner integrals of a nested rule.
struct InnerStats {
  std::size_t evals = 0;
  bool converged = true;

  template <class T>
  quad::Tracked record(const quad::Result<T>& r) {
    evals += r.evals;
    converged = converged && r.converged;
    return {r.value, r.error};
  }
};

/// Tolerances for one zone of a nested integral. `pilot` asks for a single
/// rule application per initial interval, used to size absolute tolerances.
struct ZoneTolerance {
  double rel = 1e-3;
  double abs = 0.0;
  bool pilot = false;

  quad::Options outer(double share, std::size_t budget) const {
    return {abs, share * rel, pilot ? 0 : budget};
  }
  /// Inner tolerance for an outer domain of measure `outer_length`.
  quad::Options inner(double share, double outer_length, std::size_t budget) const {
    return {abs * share / std::max(outer_length, 1e-300), share * rel, pilot ? 0 : budget};
  }
};

struct ZoneResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  bool converged = true;
};

inline ZoneResult finish_zone(const quad::Result<quad::Tracked>& outer, const InnerStats& inner) {
  ZoneResult z;
  z.value = outer.value.value;
  z.error = outer.error + std::abs(outer.value.carried);
  z.evals = outer.evals + inner.evals;
  z.converged = outer.converged && inner.converged;
  return z;
}

// ---------------------------------------------------------------------------
// Planar case.

struct DiscProblem {
  std::vector<std::complex<double>> poles;
  double radius = 0.1;
  /// Angles on the unit circle where the integrand has further integrable
  /// singularities; used only as breakpoints.
  std::vector<double> boundary_hints;
  double rel_tol = 1e-3;
  std::size_t max_evals = 50'000'000;
  unsigned threads = 1;
};

inline double chord_2d(std::complex<double> p, std::complex<double> u) {
  const double b = (std::conj(p) * u).real();
  const double c = 1.0 - std::norm(p);
  if (c <= 0.0) return b < 0.0 ? -2.0 * b : 0.0;
  return -b + std::sqrt(b * b + c);
}

/// Furthest s such that p + s u stays in the pole's zone.
inline double zone_extent_2d(const DiscProblem& prob, std::size_t k, std::complex<double> u) {
  const auto p = prob.poles[k];
  double s = std::min(prob.radius, chord_2d(p, u));
  for (std::size_t j = 0; j < prob.poles.size(); ++j) {
    if (j == k) continue;
    const auto w = prob.poles[j] - p;
    const double proj = (std::conj(w) * u).real();
    if (proj > 0.0) s = std::min(s, std::norm(w) / (2.0 * proj));
  }
  return std::max(s, 0.0);
}

inline std::vector<double> zone_breaks_2d(const DiscProblem& prob, std::size_t k, double lo, double hi) {
  const auto p = prob.poles[k];
  const double rho = prob.radius;
  const double pm = std::abs(p);
  const double beta = pm > 0.0 ? std::arg(p) : 0.0;
  std::vector<double> dirs;
  auto add_point = [&](std::complex<double> q) {
    if (std::abs(q - p) > 1e-15) dirs.push_back(wrap_into(std::arg(q - p), lo));
  };
  // circle(p, rho) meets the unit circle
  if (pm > 0.0) {
    const double c = (1.0 + pm * pm - rho * rho) / (2.0 * pm);
    if (std::abs(c) <= 1.0) {
      const double g = std::acos(c);
      add_point(std::polar(1.0, beta + g));
      add_point(std::polar(1.0, beta - g));
    }
  }
  for (std::size_t j = 0; j < prob.poles.size(); ++j) {
    if (j == k) continue;
    const auto w = prob.poles[j] - p;
    const double wm = std::abs(w);
    if (wm >= 2.0 * rho || wm == 0.0) continue;
    const auto what = w / wm;
    const double h = std::sqrt(std::max(0.0, rho * rho - 0.25 * wm * wm));
    add_point(p + 0.5 * w + std::complex<double>(0.0, 1.0) * what * h);
    add_point(p + 0.5 * w - std::complex<double>(0.0, 1.0) * what * h);
    // bisector meets the unit circle
    const double level = (std::conj(what) * p).real() + 0.5 * wm;
    if (std::abs(level) <= 1.0) {
      const double g = std::acos(level);
      add_point(std::polar(1.0, std::arg(w) + g));
      add_point(std::polar(1.0, std::arg(w) - g));
    }
  }
  for (double t : prob.boundary_hints) add_point(std::polar(1.0, t));
  dirs.push_back(wrap_into(beta + kPi, lo));
  return quad::make_breaks(lo, hi, std::move(dirs));
}

template <class G>
ZoneResult pole_zone_2d(const DiscProblem& prob, std::size_t k, const G& g, std::size_t budget,
                        const ZoneTolerance& tol) {
  const auto p = prob.poles[k];
  const double pm = std::abs(p);
  const double beta = pm > 0.0 ? std::arg(p) : 0.0;
  const bool boundary = 1.0 - pm <= kBoundarySnap;
  const double lo = boundary ? beta + 0.5 * kPi : beta - kPi;
  const double hi = boundary ? beta + 1.5 * kPi : beta + kPi;
  const auto breaks = zone_breaks_2d(prob, k, lo, hi);

  InnerStats inner;
  const auto in_opt = tol.inner(0.1, hi - lo, std::max<std::size_t>(budget / 200, 20'000));
  auto angular = [&](double phi) {
    const auto u = std::polar(1.0, phi);
    const double smax = zone_extent_2d(prob, k, u);
    if (smax <= 0.0) return quad::Tracked{};
    auto radial = [&](double s) { return s * g(p + s * u); };
    return inner.record(quad::integrate(radial, 0.0, smax, in_opt));
  };
  const auto out_opt = tol.outer(0.8, std::max<std::size_t>(budget / 200, 2'000));
  const auto outer = quad::integrate(angular, std::span<const double>(breaks), out_opt);
  auto z = finish_zone(outer, inner);
  z.converged = z.converged && z.evals <= budget;
  return z;
}

/// Angular intervals of the circle |z| = r left after removing all pole discs.
inline std::vector<std::pair<double, double>> allowed_arcs(const DiscProblem& prob, double r) {
  std::vector<std::pair<double, double>> cut;
  const double rho = prob.radius;
  for (const auto& p : prob.poles) {
    const double pm = std::abs(p);
    if (std::abs(r - pm) >= rho) continue;
    double half;
    if (pm == 0.0 || r == 0.0) {
      half = kPi;
    } else {
      const double c = (r * r + pm * pm - rho * rho) / (2.0 * r * pm);
      if (c >= 1.0) continue;
      half = c <= -1.0 ? kPi : std::acos(c);
    }
    if (half >= kPi) return {};
    const double centre = std::arg(p);
    double a = wrap_into(centre - half, -kPi);
    double b = a + 2.0 * half;
    if (b > kPi) {
      cut.emplace_back(a, kPi);
      cut.emplace_back(-kPi, b - 2.0 * kPi);
    } else {
      cut.emplace_back(a, b);
    }
  }
  std::sort(cut.begin(), cut.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& c : cut) {
    if (!merged.empty() && c.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, c.second);
    } else {
      merged.push_back(c);
    }
  }
  std::vector<std::pair<double, double>> allowed;
  double cursor = -kPi;
  for (const auto& c : merged) {
    if (c.first > cursor) allowed.emplace_back(cursor, c.first);
    cursor = std::max(cursor, c.second);
  }
  if (cursor < kPi) allowed.emplace_back(cursor, kPi);
  return allowed;
}

template <class G>
ZoneResult bulk_2d(const DiscProblem& prob, const G& g, std::size_t budget, const ZoneTolerance& tol) {
  std::vector<double> rbreaks;
  std::vector<double> angles = prob.boundary_hints;
  for (const auto& p : prob.poles) {
    const double pm = std::abs(p);
    rbreaks.push_back(pm - prob.radius);
    rbreaks.push_back(pm + prob.radius);
    rbreaks.push_back(pm);
    if (pm > 0.0) angles.push_back(std::arg(p));
  }
  for (double& a : angles) a = wrap_into(a, -kPi);
  const auto breaks = quad::make_breaks(0.0, 1.0, std::move(rbreaks));

  InnerStats inner;
  const auto in_opt = tol.inner(0.1, 2.0 * kPi, std::max<std::size_t>(budget / 200, 20'000));
  auto radial = [&](double r) {
    quad::Tracked sum;
    for (const auto& [a, b] : allowed_arcs(prob, r)) {
      std::vector<double> inside;
      for (double t : angles) {
        if (t > a && t < b) inside.push_back(t);
      }
      const auto tb = quad::make_breaks(a, b, std::move(inside));
      auto circ = [&](double t) { return g(std::polar(r, t)); };
      sum += inner.record(quad::integrate(circ, std::span<const double>(tb), in_opt));
    }
    return sum * r;
  };
  const auto out_opt = tol.outer(0.8, std::max<std::size_t>(budget / 200, 2'000));
  const auto outer = quad::integrate(radial, std::span<const double>(breaks), out_opt);
  auto z = finish_zone(outer, inner);
  z.converged = z.converged && z.evals <= budget;
  return z;
}

/// Integral over the unit disc of a nonnegative g whose only non-integrable
/// growth is ~1/|z - p| at the listed poles.
template <class G>
QuadratureResult integrate_disc(const DiscProblem& prob, const G& g) {
  const std::size_t zones = prob.poles.size() + 1;
  const std::size_t budget = prob.max_evals / zones;
  std::vector<ZoneResult> parts(zones);
  auto run = [&](const ZoneTolerance& tol) {
    parallel_for(zones, prob.threads, [&](std::size_t i) {
      parts[i] = i < prob.poles.size() ? pole_zone_2d(prob, i, g, budget, tol) : bulk_2d(prob, g, budget, tol);
    });
  };
  ZoneTolerance tol{prob.rel_tol, 0.0, true};
  run(tol);
  double scale = 0.0;
  std::size_t pilot_evals = 0;
  for (const auto& z : parts) {
    scale += std::abs(z.value);
    pilot_evals += z.evals;
  }
  tol.pilot = false;
  tol.abs = 0.5 * prob.rel_tol * scale / static_cast<double>(zones);
  run(tol);
  QuadratureResult out;
  out.method = to_string(QuadratureMethod::polar_adaptive);
  for (std::size_t i = 0; i < zones; ++i) {
    out.value += parts[i].value;
    out.error += parts[i].error;
    out.evals += parts[i].evals;
    out.converged = out.converged && parts[i].converged;
    (i < prob.poles.size() ? out.pole_part : out.bulk_part) += parts[i].value;
  }
  out.evals += pilot_evals;
  if (out.error > prob.rel_tol * std::abs(out.value)) out.converged = false;
  return out;
}

// ---------------------------------------------------------------------------
// d >= 3.

struct BallPoles {
  int d = 3;
  std::vector<double> pos;  // n x d
  std::vector<double> weights;
  std::vector<double> norms;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> position(std::size_t k) const {
    return {pos.data() + k * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
};

inline BallPoles to_ball_poles(const MergedPoles& m) {
  BallPoles b;
  b.d = m.dimension;
  b.pos = m.positions;
  b.weights = m.weights;
  for (std::size_t k = 0; k < m.size(); ++k) {
    double s = 0.0;
    for (double c : m.position(k)) s += c * c;
    b.norms.push_back(std::sqrt(s));
  }
  return b;
}

/// Distance from p along unit direction u to the unit sphere.
inline double chord_nd(std::span<const double> p, double pnorm, std::span<const double> u) {
  double b = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) b += p[i] * u[i];
  const double c = 1.0 - pnorm * pnorm;
  if (c <= 0.0) return b < 0.0 ? -2.0 * b : 0.0;
  return -b + std::sqrt(b * b + c);
}

inline double zone_extent_nd(const BallPoles& poles, std::size_t k, double rho, std::span<const double> u) {
  const auto p = poles.position(k);
  double s = std::min(rho, chord_nd(p, poles.norms[k], u));
  for (std::size_t j = 0; j < poles.size(); ++j) {
    if (j == k) continue;
    const auto q = poles.position(j);
    double proj = 0.0, w2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double w = q[i] - p[i];
      proj += w * u[i];
      w2 += w * w;
    }
    if (proj > 0.0) s = std::min(s, w2 / (2.0 * proj));
  }
  return std::max(s, 0.0);
}

inline ZoneResult pole_zone_3d(const BallPoles& poles, std::size_t k, double rho, std::size_t budget,
                               const ZoneTolerance& tol) {
  const auto p = poles.position(k);
  const double pm = poles.norms[k];
  std::array<double, 3> axis{0.0, 0.0, 1.0};
  if (pm > 1e-12) axis = {-p[0] / pm, -p[1] / pm, -p[2] / pm};
  // orthonormal frame around the axis
  std::array<double, 3> seed = std::abs(axis[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                                        : std::array<double, 3>{0, 1, 0};
  const double dot = seed[0] * axis[0] + seed[1] * axis[1] + seed[2] * axis[2];
  std::array<double, 3> e1{seed[0] - dot * axis[0], seed[1] - dot * axis[1], seed[2] - dot * axis[2]};
  const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& c : e1) c /= n1;
  const std::array<double, 3> e2{axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2],
                                 axis[0] * e1[1] - axis[1] * e1[0]};

  const bool boundary = 1.0 - pm <= kBoundarySnap;
  const double psi_hi = boundary ? 0.5 * kPi : kPi;
  std::vector<double> psi_breaks;
  if (boundary) {
    if (rho < 2.0) psi_breaks.push_back(std::acos(0.5 * rho));
  } else if (pm > 0.0) {
    const double c = -(1.0 - pm * pm - rho * rho) / (2.0 * rho * pm);
    if (std::abs(c) < 1.0) psi_breaks.push_back(std::acos(c));
  }
  const auto breaks = quad::make_breaks(0.0, psi_hi, std::move(psi_breaks));

  InnerStats inner;
  const std::size_t inner_budget = std::max<std::size_t>(budget / 400, 20'000);
  // the radial integrals sit inside a (psi, chi) domain of measure ~ 2 pi psi_hi
  const auto in_opt = tol.inner(0.05, 2.0 * kPi * psi_hi, inner_budget);
  const auto mid_opt = tol.inner(0.1, psi_hi, inner_budget);
  std::array<double, 3> scratch{};
  std::size_t evals_mid = 0;
  auto polar = [&](double psi) {
    const double cp = std::cos(psi), sp = std::sin(psi);
    auto azimuthal = [&](double chi) {
      const double cc = std::cos(chi), sc = std::sin(chi);
      std::array<double, 3> u;
      for (int i = 0; i < 3; ++i) u[i] = cp * axis[i] + sp * (cc * e1[i] + sc * e2[i]);
      const double smax = zone_extent_nd(poles, k, rho, u);
      if (smax <= 0.0) return quad::Tracked{};
      auto radial = [&](double s) {
        const std::array<double, 3> x{p[0] + s * u[0], p[1] + s * u[1], p[2] + s * u[2]};
        return s * s * field_magnitude(3, poles.pos, poles.weights, x, scratch);
      };
      return inner.record(quad::integrate(radial, 0.0, smax, in_opt));
    };
    const auto m = quad::integrate(azimuthal, 0.0, 2.0 * kPi, mid_opt);
    evals_mid += m.evals;
    inner.converged = inner.converged && m.converged;
    // carried: inner errors integrated over chi, plus the chi rule's own error
    return quad::Tracked{m.value.value, m.value.carried + m.error} * sp;
  };
  const auto out_opt = tol.outer(0.8, std::max<std::size_t>(budget / 4000, 2'000));
  const auto outer = quad::integrate(polar, std::span<const double>(breaks), out_opt);
  inner.evals = evals_mid;
  auto z = finish_zone(outer, inner);
  z.converged = z.converged && z.evals <= budget;
  return z;
}

/// Importance density for the bulk: a uniform-in-ball component plus, for each
/// pole, a component uniform in direction and uniform in distance over
/// [rho, chord]. The latter has density ~ 1/|x - x_k|^{d-1} and makes the
/// weighted integrand bounded.
class BulkSampler {
 public:
  BulkSampler(const BallPoles& poles, double rho) : poles_(poles), rho_(rho) {
    const int d = poles.d;
    volume_ = unit_ball_volume(d);
    area_ = unit_sphere_area(d);
    double wsum = 0.0;
    for (double w : poles.weights) wsum += std::abs(w);
    mix_.push_back(kUniformShare);
    for (double w : poles.weights) mix_.push_back((1.0 - kUniformShare) * std::abs(w) / wsum);
    cdf_.resize(mix_.size());
    double c = 0.0;
    for (std::size_t i = 0; i < mix_.size(); ++i) {
      c += mix_[i];
      cdf_[i] = c;
    }
    cdf_.back() = 1.0;
  }

  /// Weighted integrand value f(x)/q(x) for a sample built from a uniform
  /// selector and a direction/radius draw. `dir` must be a unit vector and
  /// `t` uniform in [0, 1).
  double weighted_value(double selector, std::span<const double> dir, double t, std::span<double> x,
                        std::span<double> scratch) const {
    const auto dim = static_cast<std::size_t>(poles_.d);
    std::size_t comp = 0;
    while (comp + 1 < cdf_.size() && selector >= cdf_[comp]) ++comp;
    if (comp == 0) {
      const double radius = std::pow(t, 1.0 / poles_.d);
      for (std::size_t i = 0; i < dim; ++i) x[i] = radius * dir[i];
    } else {
      const std::size_t k = comp - 1;
      const auto p = poles_.position(k);
      const double len = chord_nd(p, poles_.norms[k], dir);
      if (len <= rho_) return 0.0;
      const double s = rho_ + t * (len - rho_);
      for (std::size_t i = 0; i < dim; ++i) x[i] = p[i] + s * dir[i];
    }
    // inside some pole zone: handled deterministically elsewhere
    double n2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) n2 += x[i] * x[i];
    if (n2 >= 1.0) return 0.0;
    double density = mix_[0] / volume_;
    for (std::size_t k = 0; k < poles_.size(); ++k) {
      const auto p = poles_.position(k);
      double s2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) s2 += (x[i] - p[i]) * (x[i] - p[i]);
      const double s = std::sqrt(s2);
      if (s < rho_) return 0.0;
      if (s == 0.0) return 0.0;
      for (std::size_t i = 0; i < dim; ++i) scratch[i] = (x[i] - p[i]) / s;
      const double len = chord_nd(p, poles_.norms[k], scratch.first(dim));
      if (len > rho_) density += mix_[k + 1] / (area_ * std::pow(s, poles_.d - 1) * (len - rho_));
    }
    return field_magnitude(poles_.d, poles_.pos, poles_.weights, x, scratch) / density;
  }

 private:
  static constexpr double kUniformShare = 0.25;
  const BallPoles& poles_;
  double rho_;
  double volume_ = 0.0;
  double area_ = 0.0;
  std::vector<double> mix_;
  std::vector<double> cdf_;
};

/// Additive recurrence with generalized golden-ratio increments; one shifted
/// copy per replicate gives randomized QMC with an error estimate.
inline std::array<double, 4> kronecker_increments() {
  double phi = 1.5;
  for (int i = 0; i < 64; ++i) phi = std::pow(1.0 + phi, 1.0 / 5.0);
  std::array<double, 4> g{};
  double a = 1.0;
  for (auto& x : g) {
    a /= phi;
    x = a;
  }
  return g;
}

struct StochasticResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t evals = 0;
};

inline constexpr std::size_t kReplicates = 16;

/// Replicate means of the bulk estimator for point indices [from, to).
template <class SampleFn>
void accumulate_replicates(std::vector<double>& sums, std::size_t from, std::size_t to, unsigned threads,
                           const SampleFn& sample) {
  parallel_for(sums.size(), threads, [&](std::size_t r) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += sample(r, i);
    sums[r] += s;
  });
}

inline StochasticResult summarize(const std::vector<double>& sums, std::size_t per_replicate) {
  StochasticResult out;
  const double R = static_cast<double>(sums.size());
  double mean = 0.0;
  for (double s : sums) mean += s / static_cast<double>(per_replicate);
  mean /= R;
  double var = 0.0;
  for (double s : sums) {
    const double m = s / static_cast<double>(per_replicate) - mean;
    var += m * m;
  }
  var /= (R - 1.0);
  out.mean = mean;
  out.std_error = std::sqrt(var / R);
  out.evals = per_replicate * sums.size();
  return out;
}

/// Runs the doubling loop until the standard error meets `target(mean)`.
template <class SampleFn, class Target>
StochasticResult adaptive_replicates(std::size_t max_evals, unsigned threads, const SampleFn& sample,
                                     const Target& target, bool& converged) {
  std::vector<double> sums(kReplicates, 0.0);
  std::size_t n = 0;
  std::size_t next = 2048;
  StochasticResult res;
  converged = false;
  while (true) {
    accumulate_replicates(sums, n, next, threads, sample);
    n = next;
    res = summarize(sums, n);
    if (res.std_error <= target(res.mean)) {
      converged = true;
      break;
    }
    if (2 * n * kReplicates > max_evals) break;
    next = 2 * n;
  }
  return res;
}

}  // namespace detail

namespace detail {

inline QuadratureResult energy_planar(const MergedPoles& m, const QuadratureSpec& spec, double rho) {
  DiscProblem prob;
  std::vector<double> weights = m.weights;
  for (std::size_t k = 0; k < m.size(); ++k) prob.poles.emplace_back(m.positions[2 * k], m.positions[2 * k + 1]);
  prob.radius = rho;
  prob.rel_tol = spec.rel_tolerance;
  prob.max_evals = spec.max_evals;
  prob.threads = spec.threads;
  const auto& poles = prob.poles;
  auto g = [&poles, &weights](std::complex<double> z) {
    return planar_magnitude(poles, weights, z);
  };
  return integrate_disc(prob, g);
}

inline QuadratureResult energy_qmc(const MergedPoles& m, const QuadratureSpec& spec, double rho) {
  const auto poles = to_ball_poles(m);
  require(poles.d == 3, "pole-polar + QMC integration is implemented for d = 3");
  const std::size_t zones = poles.size();
  const std::size_t det_budget = spec.max_evals / 2 / std::max<std::size_t>(zones, 1);
  std::vector<ZoneResult> parts(zones);
  auto run = [&](const ZoneTolerance& tol) {
    parallel_for(zones, spec.threads, [&](std::size_t k) { parts[k] = pole_zone_3d(poles, k, rho, det_budget, tol); });
  };
  ZoneTolerance tol{0.3 * spec.rel_tolerance, 0.0, true};
  run(tol);
  double scale = 0.0;
  for (const auto& z : parts) scale += std::abs(z.value);
  tol.pilot = false;
  tol.abs = tol.rel * scale / static_cast<double>(std::max<std::size_t>(zones, 1));
  run(tol);
  QuadratureResult out;
  out.method = to_string(QuadratureMethod::polar_qmc);
  out.stochastic = true;
  double det_error = 0.0;
  for (const auto& z : parts) {
    out.pole_part += z.value;
    det_error += z.error;
    out.evals += z.evals;
    out.converged = out.converged && z.converged;
  }

  const BulkSampler sampler(poles, rho);
  const auto inc = kronecker_increments();
  const CounterRng base(spec.seed, 0xb01c);
  auto sample = [&](std::size_t r, std::size_t i) {
    const auto rng = base.split(r);
    std::array<double, 4> u;
    for (std::size_t j = 0; j < 4; ++j) {
      const double v = rng.uniform(j) + static_cast<double>(i + 1) * inc[j];
      u[j] = v - std::floor(v);
    }
    const double ct = 1.0 - 2.0 * u[2];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double ph = 2.0 * kPi * u[3];
    const std::array<double, 3> dir{st * std::cos(ph), st * std::sin(ph), ct};
    std::array<double, 3> x{}, scratch{};
    return sampler.weighted_value(u[0], dir, u[1], x, scratch);
  };
  auto target = [&](double mean) {
    const double total = std::abs(out.pole_part + mean);
    const double budget = 0.9 * spec.rel_tolerance * total;
    return std::sqrt(std::max(0.0, budget * budget - det_error * det_error));
  };
  bool conv = false;
  const auto bulk = adaptive_replicates(spec.max_evals / 2, spec.threads, sample, target, conv);
  out.bulk_part = bulk.mean;
  out.value = out.pole_part + bulk.mean;
  out.error = std::sqrt(bulk.std_error * bulk.std_error + det_error * det_error);
  out.evals += bulk.evals;
  out.converged = out.converged && conv;
  return out;
}

inline QuadratureResult energy_monte_carlo(const MergedPoles& m, const QuadratureSpec& spec) {
  const auto poles = to_ball_poles(m);
  const auto dim = static_cast<std::size_t>(poles.d);
  const BulkSampler sampler(poles, 0.0);
  const CounterRng base(spec.seed, 0x3c);
  auto sample = [&](std::size_t r, std::size_t i) {
    RngStream rng(base.split((static_cast<std::uint64_t>(r) << 40) ^ i));
    std::vector<double> dir(dim), x(dim), scratch(dim);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& c : dir) {
        c = rng.normal();
        n2 += c * c;
      }
    } while (n2 == 0.0);
    for (auto& c : dir) c /= std::sqrt(n2);
    const double sel = rng.uniform();
    const double t = rng.uniform();
    return sampler.weighted_value(sel, dir, t, x, scratch);
  };
  auto target = [&](double mean) { return 0.9 * spec.rel_tolerance * std::abs(mean); };
  bool conv = false;
  const auto res = adaptive_replicates(spec.max_evals, spec.threads, sample, target, conv);
  QuadratureResult out;
  out.method = to_string(QuadratureMethod::monte_carlo);
  out.stochastic = true;
  out.value = res.mean;
  out.bulk_part = res.mean;
  out.error = res.std_error;
  out.evals = res.evals;
  out.converged = conv;
  return out;
}

}  // namespace detail

/// Integral over B^d of |sum alpha_k (x_k - x)/|x_k - x|^d|.
inline QuadratureResult chui_energy(const ChargeConfiguration& cfg, const QuadratureSpec& spec = {}) {
  spec.validate();
  const auto merged = merge_coincident(cfg);
  if (merged.size() == 0) {
    QuadratureResult zero;
    zero.method = "identically-zero";
    return zero;
  }
  const double rho = spec.pole_radius.value_or(default_pole_radius(merged));
  auto method = spec.method;
  if (method == QuadratureMethod::automatic) {
    method = cfg.dimension() == 2   ? QuadratureMethod::polar_adaptive
             : cfg.dimension() == 3 ? QuadratureMethod::polar_qmc
                                    : QuadratureMethod::monte_carlo;
  }
  switch (method) {
    case QuadratureMethod::polar_adaptive:
      require(cfg.dimension() == 2, "adaptive polar integration is planar only");
      return detail::energy_planar(merged, spec, rho);
    case QuadratureMethod::polar_qmc:
      return detail::energy_qmc(merged, spec, rho);
    default:
      return detail::energy_monte_carlo(merged, spec);
  }
}

/// Result of l1_defect with the split at the proof's radius 4l reported
/// separately: `near` covers |z - z0| <= 4l, `far` the rest.
struct DefectResult {
  QuadratureResult total;
  double near = 0.0;
  double far = 0.0;
  double length = 0.0;
};

/// Integral over the unit disc of |1/(z - z0) - averaged_kernel(z, arc)| where
/// z0 is the unit vector at the arc midpoint.
inline DefectResult l1_defect(std::complex<double> z0, const Arc& arc, const QuadratureSpec& spec = {}) {
  spec.validate();
  const double l = arc.length();
  require(l > 0.0 && l <= 2.0 * kPi + 1e-12, "arc length must lie in (0, 2 pi]");
  require(std::abs(z0 - std::polar(1.0, arc.midpoint())) <= 1e-12, "z0 must sit at the arc midpoint");
  auto g = [z0, arc](std::complex<double> z) {
    return std::abs(1.0 / (z - z0) - averaged_kernel_closed_form(z, arc));
  };
  detail::DiscProblem prob;
  prob.poles = {z0};
  prob.radius = spec.pole_radius.value_or(0.1);
  prob.rel_tol = spec.rel_tolerance;
  prob.max_evals = spec.max_evals;
  prob.threads = spec.threads;
  if (l < 2.0 * kPi) prob.boundary_hints = {arc.begin, arc.end};

  DefectResult out;
  out.length = l;
  out.total = detail::integrate_disc(prob, g);

  auto near_prob = prob;
  near_prob.radius = std::min(4.0 * l, 2.0);
  const detail::ZoneTolerance tol{prob.rel_tol, 0.5 * prob.rel_tol * out.total.value, false};
  const auto near = detail::pole_zone_2d(near_prob, 0, g, prob.max_evals, tol);
  out.near = near.value;
  out.far = out.total.value - out.near;
  return out;
}

/// Canonical form: arc [-l/2, l/2) with z0 = 1. By rotation invariance the
/// defect depends only on l.
inline DefectResult l1_defect(double length, const QuadratureSpec& spec = {}) {
  const Arc arc{-0.5 * length, 0.5 * length};
  return l1_defect(std::complex<double>(1.0, 0.0), arc, spec);
}

/// Integral over the unit disc of |1/(z - a) - 1/(z - b)|, with the discs of
/// radius delta = |a - b| around both poles (split by the bisector) handled in
/// polar coordinates and the complement in the bulk.
inline QuadratureResult two_pole_l1(std::complex<double> a, std::complex<double> b, const QuadratureSpec& spec = {}) {
  spec.validate();
  const double delta = std::abs(a - b);
  require(delta > 0.0, "two_pole_l1 needs distinct poles");
  require(delta <= 1.0, "two_pole_l1 needs |a - b| <= 1");
  require(std::abs(a) <= 1.0 + kBoundarySnap && std::abs(b) <= 1.0 + kBoundarySnap,
          "two_pole_l1 needs poles in the closed disc");
  const std::array<std::complex<double>, 2> pts{a, b};
  const auto cfg = ChargeConfiguration::planar(pts, {1.0, -1.0});
  detail::DiscProblem prob;
  prob.poles = {cfg.complex_position(0), cfg.complex_position(1)};
  prob.radius = spec.pole_radius.value_or(delta);
  prob.rel_tol = spec.rel_tolerance;
  prob.max_evals = spec.max_evals;
  prob.threads = spec.threads;
  const auto pa = prob.poles[0], pb = prob.poles[1];
  auto g = [pa, pb](std::complex<double> z) { return std::abs(1.0 / (z - pa) - 1.0 / (z - pb)); };
  return detail::integrate_disc(prob, g);
}

}  // namespace chui
