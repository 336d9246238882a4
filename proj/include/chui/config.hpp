#pragma once

// Charge configurations in the closed unit ball and the constructors used by
// the experiments: roots of unity, weighted arcs, Fibonacci spheres, random.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chui/error.hpp"
#include "chui/rng.hpp"

namespace chui {

inline constexpr double kBoundarySnap = 1e-12;
inline constexpr double kPi = std::numbers::pi;

/// Weighted point charges in the closed unit ball of R^d. Immutable once
/// built; positions on the sphere are snapped to exact unit norm.
class ChargeConfiguration {
 public:
  ChargeConfiguration(int dimension, std::vector<double> positions, std::vector<double> weights)
      : dim_(dimension), pos_(std::move(positions)), weights_(std::move(weights)) {
    require(dim_ >= 2, "dimension must be at least 2");
    require(!weights_.empty(), "configuration needs at least one charge");
    require(pos_.size() == weights_.size() * static_cast<std::size_t>(dim_),
            "position array does not match dimension and charge count");
    boundary_.assign(weights_.size(), false);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      require(std::isfinite(weights_[k]) && weights_[k] != 0.0,
              "charge weights must be finite and nonzero");
      auto x = mutable_position(k);
      double norm2 = 0.0;
      for (double c : x) {
        require(std::isfinite(c), "charge positions must be finite");
        norm2 += c * c;
      }
      const double norm = std::sqrt(norm2);
      require(norm <= 1.0 + kBoundarySnap, "charge position outside the closed unit ball");
      if (std::abs(norm - 1.0) <= kBoundarySnap) {
        for (double& c : x) c /= norm;
        boundary_[k] = true;
      }
    }
  }

  /// Planar configuration from complex positions.
  static ChargeConfiguration planar(std::span<const std::complex<double>> points,
                                    std::vector<double> weights) {
    std::vector<double> pos;
    pos.reserve(2 * points.size());
    for (auto z : points) {
      pos.push_back(z.real());
      pos.push_back(z.imag());
    }
    return ChargeConfiguration(2, std::move(pos), std::move(weights));
  }

  int dimension() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::span<const double> position(std::size_t k) const {
    return {pos_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> positions() const noexcept { return pos_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(std::size_t k) const { return weights_[k]; }
  bool is_boundary(std::size_t k) const { return boundary_[k]; }

  std::complex<double> complex_position(std::size_t k) const {
    require(dim_ == 2, "complex positions need a planar configuration");
    return {pos_[2 * k], pos_[2 * k + 1]};
  }

  double norm(std::size_t k) const {
    double s = 0.0;
    for (double c : position(k)) s += c * c;
    return std::sqrt(s);
  }

  bool is_positive() const noexcept {
    return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
  }
  bool all_boundary() const noexcept {
    return std::all_of(boundary_.begin(), boundary_.end(), [](bool b) { return b; });
  }
  bool unit_weights() const noexcept {
    return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w == 1.0; });
  }

  /// ||nu|| = sum |alpha_k|.
  double total_variation() const noexcept {
    double s = 0.0;
    for (double w : weights_) s += std::abs(w);
    return s;
  }

  ChargeConfiguration with_weights(std::vector<double> weights) const {
    return ChargeConfiguration(dim_, pos_, std::move(weights));
  }

  ChargeConfiguration scaled_weights(double factor) const {
    auto w = weights_;
    for (double& x : w) x *= factor;
    return with_weights(std::move(w));
  }

  /// Union of two configurations of the same dimension.
  friend ChargeConfiguration merge(const ChargeConfiguration& a, const ChargeConfiguration& b) {
    require(a.dim_ == b.dim_, "cannot merge configurations of different dimension");
    auto pos = a.pos_;
    pos.insert(pos.end(), b.pos_.begin(), b.pos_.end());
    auto w = a.weights_;
    w.insert(w.end(), b.weights_.begin(), b.weights_.end());
    return ChargeConfiguration(a.dim_, std::move(pos), std::move(w));
  }

 private:
  std::span<double> mutable_position(std::size_t k) {
    return {pos_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  int dim_;
  std::vector<double> pos_;
  std::vector<double> weights_;
  std::vector<bool> boundary_;
};

/// Poles closer than `tolerance` are combined by summing their weights; poles
/// whose combined weight cancels exactly are dropped. The result may be empty,
/// in which case the field vanishes identically.
struct MergedPoles {
  int dimension = 2;
  std::vector<double> positions;
  std::vector<double> weights;
  std::size_t merges = 0;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> position(std::size_t k) const {
    return {positions.data() + k * static_cast<std::size_t>(dimension),
            static_cast<std::size_t>(dimension)};
  }
};

inline MergedPoles merge_coincident(const ChargeConfiguration& cfg, double tolerance = 1e-13) {
  MergedPoles out;
  out.dimension = cfg.dimension();
  const auto d = static_cast<std::size_t>(cfg.dimension());
  std::vector<double> pos;
  std::vector<double> w;
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    auto x = cfg.position(k);
    bool merged = false;
    for (std::size_t j = 0; j < w.size(); ++j) {
      double dist2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) dist2 += (pos[j * d + i] - x[i]) * (pos[j * d + i] - x[i]);
      if (std::sqrt(dist2) < tolerance) {
        w[j] += cfg.weight(k);
        ++out.merges;
        merged = true;
        break;
      }
    }
    if (!merged) {
      pos.insert(pos.end(), x.begin(), x.end());
      w.push_back(cfg.weight(k));
    }
  }
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] == 0.0) continue;
    out.positions.insert(out.positions.end(), pos.begin() + static_cast<std::ptrdiff_t>(j * d),
                         pos.begin() + static_cast<std::ptrdiff_t>((j + 1) * d));
    out.weights.push_back(w[j]);
  }
  return out;
}

/// merge_coincident as a configuration; throws if every charge cancels.
inline ChargeConfiguration merge_coincident_config(const ChargeConfiguration& cfg, double tolerance = 1e-13) {
  auto m = merge_coincident(cfg, tolerance);
  require(!m.weights.empty(), "all charges cancel after merging");
  return ChargeConfiguration(m.dimension, std::move(m.positions), std::move(m.weights));
}

/// Semi-closed interval [begin, end) of angles.
struct Arc {
  double begin = -kPi;
  double end = kPi;

  double length() const noexcept { return end - begin; }
  double midpoint() const noexcept { return 0.5 * (begin + end); }
};

/// Consecutive arcs tiling [-pi, pi), one per charge.
struct ArcPartition {
  std::vector<Arc> arcs;

  std::size_t size() const noexcept { return arcs.size(); }
  double length(std::size_t k) const { return arcs[k].length(); }
  double midpoint(std::size_t k) const { return arcs[k].midpoint(); }
};

/// Unit charges at the n-th roots of unity.
inline ChargeConfiguration uniform_circle_config(std::size_t n) {
  require(n >= 1, "uniform_circle_config needs n >= 1");
  std::vector<double> pos(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    pos[2 * k] = std::cos(t);
    pos[2 * k + 1] = std::sin(t);
  }
  return ChargeConfiguration(2, std::move(pos), std::vector<double>(n, 1.0));
}

inline ChargeConfiguration angles_config(std::span<const double> angles, std::vector<double> weights) {
  std::vector<double> pos(2 * angles.size());
  for (std::size_t k = 0; k < angles.size(); ++k) {
    pos[2 * k] = std::cos(angles[k]);
    pos[2 * k + 1] = std::sin(angles[k]);
  }
  return ChargeConfiguration(2, std::move(pos), std::move(weights));
}

/// Arcs of length 2*pi*alpha_k/A laid out in input order from -pi, each
/// charge at the midpoint of its arc.
inline std::pair<ChargeConfiguration, ArcPartition> weighted_arc_config(std::span<const double> weights) {
  require(!weights.empty(), "weighted_arc_config needs at least one weight");
  for (double w : weights) require(std::isfinite(w) && w > 0.0, "arc weights must be positive");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  ArcPartition part;
  part.arcs.reserve(weights.size());
  std::vector<double> angles;
  angles.reserve(weights.size());
  double start = -kPi;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    cumulative += weights[k];
    const double end = (k + 1 == weights.size()) ? kPi : -kPi + 2.0 * kPi * cumulative / total;
    part.arcs.push_back({start, end});
    angles.push_back(0.5 * (start + end));
    start = end;
  }
  return {angles_config(angles, std::vector<double>(weights.begin(), weights.end())), std::move(part)};
}

/// Fibonacci lattice on S^2: equal-area latitudes, golden-angle azimuths.
inline ChargeConfiguration fibonacci_sphere_config(std::size_t n) {
  require(n >= 1, "fibonacci_sphere_config needs n >= 1");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<double> pos(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(i);
    pos[3 * i] = r * std::cos(phi);
    pos[3 * i + 1] = r * std::sin(phi);
    pos[3 * i + 2] = z;
  }
  return ChargeConfiguration(3, std::move(pos), std::vector<double>(n, 1.0));
}

/// Unit charges uniform on S^{d-1}, or uniform in B^d when `interior` is set.
inline ChargeConfiguration random_config(std::size_t n, int d, std::uint64_t seed, bool interior) {
  require(n >= 1, "random_config needs n >= 1");
  require(d >= 2, "random_config needs d >= 2");
  RngStream rng(seed, interior ? 0x1e7e110 : 0x5fe7e);
  const auto dim = static_cast<std::size_t>(d);
  std::vector<double> pos(n * dim);
  for (std::size_t k = 0; k < n; ++k) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        pos[k * dim + i] = rng.normal();
        norm2 += pos[k * dim + i] * pos[k * dim + i];
      }
    } while (norm2 == 0.0);
    double radius = 1.0;
    if (interior) radius = std::pow(rng.uniform(), 1.0 / d);
    const double scale = radius / std::sqrt(norm2);
    for (std::size_t i = 0; i < dim; ++i) pos[k * dim + i] *= scale;
  }
  return ChargeConfiguration(d, std::move(pos), std::vector<double>(n, 1.0));
}

// JSON: { "dimension": int, "charges": [ { "position": [..], "weight": w } ] }

inline nlohmann::json to_json(const ChargeConfiguration& cfg) {
  nlohmann::json charges = nlohmann::json::array();
  for (std::size_t k = 0; k < cfg.size(); ++k) {
    auto x = cfg.position(k);
    charges.push_back({{"position", std::vector<double>(x.begin(), x.end())}, {"weight", cfg.weight(k)}});
  }
  return {{"dimension", cfg.dimension()}, {"charges", std::move(charges)}};
}

inline ChargeConfiguration config_from_json(const nlohmann::json& j) {
  try {
    const int d = j.at("dimension").get<int>();
    require(d >= 2, "dimension must be at least 2");
    std::vector<double> pos;
    std::vector<double> w;
    for (const auto& c : j.at("charges")) {
      auto p = c.at("position").get<std::vector<double>>();
      require(p.size() == static_cast<std::size_t>(d), "charge position has wrong dimension");
      pos.insert(pos.end(), p.begin(), p.end());
      w.push_back(c.value("weight", 1.0));
    }
    return ChargeConfiguration(d, std::move(pos), std::move(w));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed configuration JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const ArcPartition& part) {
  nlohmann::json arcs = nlohmann::json::array();
  for (const auto& a : part.arcs) {
    arcs.push_back({{"begin", a.begin}, {"end", a.end}, {"length", a.length()}, {"midpoint", a.midpoint()}});
  }
  return arcs;
}

}  // namespace chui
