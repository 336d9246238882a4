#pragma once

// Globally adaptive Gauss-Kronrod (10/21) integration for real or complex
// integrands, with QUADPACK-style error estimates.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace chui::quad {

struct Options {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  std::size_t max_evals = 1'000'000;
  /// Measure rel_tol against the integral of |f| instead of |integral of f|;
  /// needed when heavy cancellation can drive the integral to zero.
  bool relative_to_l1 = false;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  /// Integral of |f|, the natural scale for relative tolerances.
  double l1 = 0.0;
  std::size_t evals = 0;
  bool converged = true;
};

/// Value with a carried side quantity that is integrated alongside it but
/// takes no part in error control. Nested rules use it to integrate the inner
/// error estimates with the outer weights.
struct Tracked {
  double value = 0.0;
  double carried = 0.0;

  Tracked& operator+=(const Tracked& o) {
    value += o.value;
    carried += o.carried;
    return *this;
  }
  friend Tracked operator+(Tracked a, const Tracked& b) { return a += b; }
  friend Tracked operator-(Tracked a, const Tracked& b) { return {a.value - b.value, a.carried - b.carried}; }
  friend Tracked operator*(Tracked a, double s) { return {a.value * s, a.carried * s}; }
};

namespace detail {

inline double norm_of(double v) { return std::abs(v); }
inline double norm_of(const std::complex<double>& v) { return std::abs(v); }
inline double norm_of(const Tracked& v) { return std::abs(v.value); }

struct Gk21Table {
  // Nonnegative abscissas, index 0 is the centre node.
  std::array<double, 11> x{};
  std::array<double, 11> wk{};
  std::array<double, 11> wg{};  // zero where the node is Kronrod-only
};

inline const Gk21Table& gk21() {
  static const Gk21Table table = [] {
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
    using Gauss = boost::math::quadrature::gauss<double, 10>;
    Gk21Table t;
    const auto& xk = Kronrod::abscissa();
    const auto& wk = Kronrod::weights();
    const auto& xg = Gauss::abscissa();
    const auto& wg = Gauss::weights();
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      t.x[i] = xk[i];
      t.wk[i] = wk[i];
      for (std::size_t j = 0; j < xg.size(); ++j) {
        if (std::abs(xg[j] - xk[i]) < 1e-14) t.wg[i] = wg[j];
      }
    }
    return t;
  }();
  return table;
}

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  double l1;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T, class F>
Segment<T> apply_rule(F& f, double a, double b) {
  const auto& t = gk21();
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<T, 21> fv;
  fv[0] = f(centre);
  for (std::size_t i = 1; i < 11; ++i) {
    fv[2 * i - 1] = f(centre - half * t.x[i]);
    fv[2 * i] = f(centre + half * t.x[i]);
  }
  T kronrod = fv[0] * t.wk[0];
  T gauss = fv[0] * t.wg[0];
  double abs_k = norm_of(fv[0]) * t.wk[0];
  for (std::size_t i = 1; i < 11; ++i) {
    const T pair = fv[2 * i - 1] + fv[2 * i];
    kronrod += pair * t.wk[i];
    gauss += pair * t.wg[i];
    abs_k += (norm_of(fv[2 * i - 1]) + norm_of(fv[2 * i])) * t.wk[i];
  }
  const T mean = kronrod * 0.5;
  double asc = norm_of(fv[0] - mean) * t.wk[0];
  for (std::size_t i = 1; i < 11; ++i) {
    asc += (norm_of(fv[2 * i - 1] - mean) + norm_of(fv[2 * i] - mean)) * t.wk[i];
  }
  const double scale = std::abs(half);
  double err = norm_of(kronrod - gauss) * scale;
  asc *= scale;
  abs_k *= scale;
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (abs_k > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * abs_k, err);
  return {a, b, kronrod * half, err, abs_k};
}

}  // namespace detail

inline constexpr std::size_t kEvalsPerRule = 21;

/// Integrates f over [breaks.front(), breaks.back()], starting from the
/// subintervals given by the sorted breakpoints. Stops when the summed error
/// estimate is below max(abs_tol, rel_tol * |I|) or the eval budget is spent.
template <class F>
auto integrate(F&& f, std::span<const double> breaks, const Options& opt)
    -> Result<std::decay_t<std::invoke_result_t<F&, double>>> {
  using T = std::decay_t<std::invoke_result_t<F&, double>>;
  Result<T> out;
  if (breaks.size() < 2) return out;

  std::priority_queue<detail::Segment<T>> heap;
  std::vector<detail::Segment<T>> settled;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    heap.push(detail::apply_rule<T>(f, breaks[i], breaks[i + 1]));
    out.evals += kEvalsPerRule;
  }

  auto totals = [&] {
    T value{};
    double error = 0.0, l1 = 0.0;
    // Summation order must not depend on heap layout: sort by position.
    std::vector<const detail::Segment<T>*> all;
    all.reserve(heap.size() + settled.size());
    auto copy = heap;
    std::vector<detail::Segment<T>> live;
    while (!copy.empty()) {
      live.push_back(copy.top());
      copy.pop();
    }
    for (const auto& s : live) all.push_back(&s);
    for (const auto& s : settled) all.push_back(&s);
    std::sort(all.begin(), all.end(), [](auto* l, auto* r) { return l->a < r->a; });
    for (auto* s : all) {
      value += s->value;
      error += s->error;
      l1 += s->l1;
    }
    out.value = value;
    out.error = error;
    out.l1 = l1;
  };

  T value{};
  double error = 0.0;
  double l1 = 0.0;
  {
    auto copy = heap;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      l1 += copy.top().l1;
      copy.pop();
    }
  }
  auto scale_of = [&](const T& v, double a1) { return opt.relative_to_l1 ? a1 : detail::norm_of(v); };

  constexpr double eps = std::numeric_limits<double>::epsilon();
  while (!heap.empty()) {
    const double target = std::max(opt.abs_tol, opt.rel_tol * scale_of(value, l1));
    if (error <= target) break;
    if (out.evals + 2 * kEvalsPerRule > opt.max_evals) {
      out.converged = false;
      break;
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        (worst.b - worst.a) < 64.0 * eps * std::max(std::abs(worst.a), std::abs(worst.b))) {
      // Cannot split further; keep its contribution and error as is.
      settled.push_back(worst);
      if (heap.empty()) {
        out.converged = false;
        break;
      }
      continue;
    }
    auto left = detail::apply_rule<T>(f, worst.a, mid);
    auto right = detail::apply_rule<T>(f, mid, worst.b);
    out.evals += 2 * kEvalsPerRule;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  totals();
  if (out.error > std::max(opt.abs_tol, opt.rel_tol * scale_of(out.value, out.l1))) out.converged = false;
  return out;
}

template <class F>
auto integrate(F&& f, double a, double b, const Options& opt) {
  const std::array<double, 2> ends{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(ends), opt);
}

/// Sorted, deduplicated breakpoints clipped to [a, b], including both ends.
inline std::vector<double> make_breaks(double a, double b, std::vector<double> interior) {
  std::vector<double> out;
  out.reserve(interior.size() + 2);
  out.push_back(a);
  std::sort(interior.begin(), interior.end());
  const double min_gap = 1e-12 * std::max(1.0, b - a);
  for (double x : interior) {
    if (x > out.back() + min_gap && x < b - min_gap) out.push_back(x);
  }
  out.push_back(b);
  return out;
}

}  // namespace chui::quad
