#pragma once

// Spectral measures: probability measures (atoms plus an optional continuous
// part) and signed measures (atoms plus a gridded signed density).
//
// Continuous parts are always discretized as a node rule: points, density
// values and quadrature weights. Uniform or user grids use trapezoid weights;
// the closed-form families use a Gauss-Chebyshev (midpoint-in-angle) rule,
// t = c - r cos(theta), which integrates inverse-square-root edge behaviour
// without loss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "typeb/error.hpp"

namespace typeb {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kPi = std::numbers::pi;
inline constexpr std::size_t kDefaultGridPoints = 2048;
inline constexpr int kDefaultMaxMomentDegree = 16;
inline constexpr double kAtomMergeDistance = 1e-9;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw DomainError("Interval: lo must not exceed hi");
  }
  double width() const { return hi - lo; }
  bool contains(double t) const { return lo <= t && t <= hi; }
};

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

/// Sorts atoms and merges those closer than kAtomMergeDistance; drops exact zeros.
inline std::vector<Atom> normalize_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!out.empty() && a.location - out.back().location < kAtomMergeDistance) {
      out.back().weight += a.weight;
    } else {
      out.push_back(a);
    }
  }
  std::erase_if(out, [](const Atom& a) { return a.weight == 0.0; });
  return out;
}

/// Node rule for a continuous density.
struct GridDensity {
  std::vector<double> points;
  std::vector<double> density;
  std::vector<double> weights;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }

  double integral() const {
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) sum += weights[i] * density[i];
    return sum;
  }

  /// Linear interpolation of the density; zero outside the node range.
  double at(double t) const {
    if (points.empty() || t < points.front() || t > points.back()) return 0.0;
    auto it = std::upper_bound(points.begin(), points.end(), t);
    if (it == points.end()) return density.back();
    std::size_t j = static_cast<std::size_t>(it - points.begin());
    if (j == 0) return density.front();
    double u = (t - points[j - 1]) / (points[j] - points[j - 1]);
    return (1.0 - u) * density[j - 1] + u * density[j];
  }

  void validate(bool nonnegative) const {
    if (density.size() != points.size() || weights.size() != points.size())
      throw ConfigError("grid: points, density and weights must have equal length");
    for (std::size_t i = 1; i < points.size(); ++i)
      if (!(points[i] > points[i - 1])) throw ConfigError("grid: points must be strictly ascending");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(density[i]) || !std::isfinite(points[i]))
        throw ConfigError("grid: non-finite value");
      if (nonnegative && density[i] < 0.0) throw ConfigError("grid: negative density");
    }
  }
};

inline std::vector<double> trapezoid_weights(std::span<const double> points) {
  std::vector<double> w(points.size(), 0.0);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    double h = 0.5 * (points[i + 1] - points[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

inline std::vector<double> uniform_points(double lo, double hi, std::size_t n) {
  if (n < 2) throw ConfigError("uniform grid needs at least two points");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

/// Midpoint-in-angle nodes on (lo, hi), ascending, with their weights.
inline GridDensity chebyshev_grid(double lo, double hi, std::size_t n) {
  if (!(hi > lo) || n < 2) throw ConfigError("chebyshev grid: need hi > lo and n >= 2");
  GridDensity g;
  g.points.resize(n);
  g.weights.resize(n);
  g.density.assign(n, 0.0);
  const double c = 0.5 * (lo + hi);
  const double r = 0.5 * (hi - lo);
  const double step = kPi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double angle = (static_cast<double>(i) + 0.5) * step;
    g.points[i] = c - r * std::cos(angle);
    g.weights[i] = r * std::sin(angle) * step;
  }
  return g;
}

template <class F>
GridDensity tabulate(GridDensity grid, F&& f) {
  for (std::size_t i = 0; i < grid.size(); ++i) grid.density[i] = f(grid.points[i]);
  return grid;
}

inline GridDensity trapezoid_grid(std::vector<double> points, std::vector<double> density) {
  GridDensity g;
  g.weights = trapezoid_weights(points);
  g.points = std::move(points);
  g.density = std::move(density);
  return g;
}

// ---------------------------------------------------------------------------

/// Real-weighted atoms plus an optional gridded signed density.
class SignedMeasure {
 public:
  SignedMeasure() = default;
  explicit SignedMeasure(std::vector<Atom> atoms, GridDensity grid = {})
      : atoms_(normalize_atoms(std::move(atoms))), grid_(std::move(grid)) {
    grid_.validate(false);
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const GridDensity& grid() const { return grid_; }
  bool is_zero() const {
    return atoms_.empty() &&
           std::all_of(grid_.density.begin(), grid_.density.end(), [](double d) { return d == 0.0; });
  }

  double density_at(double t) const { return grid_.at(t); }

  SignedMeasure scaled(double factor) const {
    std::vector<Atom> atoms = atoms_;
    for (Atom& a : atoms) a.weight *= factor;
    GridDensity g = grid_;
    for (double& d : g.density) d *= factor;
    return SignedMeasure(std::move(atoms), std::move(g));
  }

  /// Sum; grid parts must share their nodes (or one of them be empty).
  friend SignedMeasure operator+(const SignedMeasure& x, const SignedMeasure& y) {
    std::vector<Atom> atoms = x.atoms_;
    atoms.insert(atoms.end(), y.atoms_.begin(), y.atoms_.end());
    GridDensity g;
    if (x.grid_.empty()) {
      g = y.grid_;
    } else if (y.grid_.empty()) {
      g = x.grid_;
    } else {
      if (x.grid_.points != y.grid_.points)
        throw ConfigError("SignedMeasure: grid parts must share nodes to be added");
      g = x.grid_;
      for (std::size_t i = 0; i < g.size(); ++i) g.density[i] += y.grid_.density[i];
    }
    return SignedMeasure(std::move(atoms), std::move(g));
  }
  friend SignedMeasure operator*(double a, const SignedMeasure& m) { return m.scaled(a); }
  friend SignedMeasure operator-(const SignedMeasure& x, const SignedMeasure& y) {
    return x + y.scaled(-1.0);
  }

 private:
  std::vector<Atom> atoms_;
  GridDensity grid_;
};

// ---------------------------------------------------------------------------

struct Semicircle {};  // support [-sqrt2, sqrt2], variance 1/2
struct MarchenkoPastur {
  double lambda = 1.0;
};

enum class Family { none, semicircle, marchenko_pastur, grid };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::none: return "none";
    case Family::semicircle: return "semicircle";
    case Family::marchenko_pastur: return "mp";
    case Family::grid: return "grid";
  }
  return "none";
}

inline double semicircle_density(double t) {
  double q = 2.0 - t * t;
  return q > 0.0 ? std::sqrt(q) / kPi : 0.0;
}

inline Interval mp_support(double lambda) {
  double s = std::sqrt(lambda);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

/// Density of the continuous part of the free Poisson law of rate lambda.
inline double mp_density(double lambda, double t) {
  Interval sup = mp_support(lambda);
  if (t <= sup.lo || t >= sup.hi || t <= 0.0) return 0.0;
  return std::sqrt((sup.hi - t) * (t - sup.lo)) / (2.0 * kPi * t);
}

/// Probability measure. Immutable after construction.
class Measure {
 public:
  using Continuous = std::variant<std::monostate, Semicircle, MarchenkoPastur, GridDensity>;

  static Measure semicircle(std::size_t grid_points = kDefaultGridPoints) {
    Measure m;
    m.continuous_ = Semicircle{};
    m.quadrature_ = tabulate(chebyshev_grid(-kSqrt2, kSqrt2, grid_points), semicircle_density);
    m.validate();
    return m;
  }

  /// Free Poisson law of rate lambda; an atom 1 - lambda at 0 when lambda < 1.
  static Measure marchenko_pastur(double lambda, std::size_t grid_points = kDefaultGridPoints) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw ConfigError("Marchenko-Pastur ratio must be positive");
    Measure m;
    m.continuous_ = MarchenkoPastur{lambda};
    if (lambda < 1.0) m.atoms_ = {{0.0, 1.0 - lambda}};
    Interval sup = mp_support(lambda);
    m.quadrature_ = tabulate(chebyshev_grid(sup.lo, sup.hi, grid_points),
                             [lambda](double t) { return mp_density(lambda, t); });
    m.validate();
    return m;
  }

  static Measure atomic(std::vector<Atom> atoms) {
    Measure m;
    m.atoms_ = normalize_atoms(std::move(atoms));
    m.validate();
    return m;
  }

  /// Uniform weights 1/K on the given locations (repeats accumulate).
  static Measure uniform_atoms(const std::vector<double>& locations) {
    if (locations.empty()) throw ConfigError("atomic measure needs at least one location");
    std::vector<Atom> atoms;
    for (double x : locations) atoms.push_back({x, 1.0 / static_cast<double>(locations.size())});
    return atomic(std::move(atoms));
  }

  static Measure dirac(double location) { return atomic({{location, 1.0}}); }

  static Measure from_grid(GridDensity grid, std::vector<Atom> atoms = {}) {
    grid.validate(true);
    Measure m;
    m.atoms_ = normalize_atoms(std::move(atoms));
    m.quadrature_ = grid;
    m.continuous_ = std::move(grid);
    m.validate();
    return m;
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const Continuous& continuous() const { return continuous_; }
  /// Discretized continuous part (empty when there is none).
  const GridDensity& quadrature() const { return quadrature_; }

  Family family() const {
    switch (continuous_.index()) {
      case 1: return Family::semicircle;
      case 2: return Family::marchenko_pastur;
      case 3: return Family::grid;
      default: return Family::none;
    }
  }
  bool is_atomic() const { return family() == Family::none; }
  std::optional<double> mp_lambda() const {
    if (auto* mp = std::get_if<MarchenkoPastur>(&continuous_)) return mp->lambda;
    return std::nullopt;
  }

  /// Continuous density at t (closed form for named families).
  double density(double t) const {
    switch (family()) {
      case Family::semicircle: return semicircle_density(t);
      case Family::marchenko_pastur: return mp_density(*mp_lambda(), t);
      case Family::grid: return quadrature_.at(t);
      case Family::none: return 0.0;
    }
    return 0.0;
  }

  /// Closed convex hull of the support.
  Interval support() const {
    double lo = INFINITY, hi = -INFINITY;
    for (const Atom& a : atoms_) {
      lo = std::min(lo, a.location);
      hi = std::max(hi, a.location);
    }
    switch (family()) {
      case Family::semicircle:
        lo = std::min(lo, -kSqrt2);
        hi = std::max(hi, kSqrt2);
        break;
      case Family::marchenko_pastur: {
        Interval s = mp_support(*mp_lambda());
        lo = std::min(lo, s.lo);
        hi = std::max(hi, s.hi);
        break;
      }
      case Family::grid:
        lo = std::min(lo, quadrature_.points.front());
        hi = std::max(hi, quadrature_.points.back());
        break;
      case Family::none: break;
    }
    return {lo, hi};
  }

  SignedMeasure as_signed() const { return SignedMeasure(atoms_, quadrature_); }

 private:
  Measure() = default;

  void validate() const {
    double mass = quadrature_.empty() ? 0.0 : quadrature_.integral();
    for (const Atom& a : atoms_) {
      if (!(a.weight > 0.0)) throw ConfigError("probability measure atoms need positive weight");
      mass += a.weight;
    }
    if (std::abs(mass - 1.0) > 1e-9)
      throw ConfigError("probability measure must have total mass 1 (got " + std::to_string(mass) + ")");
  }

  std::vector<Atom> atoms_;
  Continuous continuous_;
  GridDensity quadrature_;
};

// ---------------------------------------------------------------------------

inline double total_mass(const SignedMeasure& m) {
  double mass = m.grid().empty() ? 0.0 : m.grid().integral();
  for (const Atom& a : m.atoms()) mass += a.weight;
  return mass;
}
inline double total_mass(const Measure& m) { return total_mass(m.as_signed()); }

inline double moment(const SignedMeasure& m, int k, int max_degree = kDefaultMaxMomentDegree) {
  if (k < 0 || k > max_degree)
    throw DomainError("moment degree " + std::to_string(k) + " exceeds the configured maximum " +
                      std::to_string(max_degree));
  double sum = 0.0;
  for (const Atom& a : m.atoms()) sum += a.weight * std::pow(a.location, k);
  const GridDensity& g = m.grid();
  for (std::size_t i = 0; i < g.size(); ++i)
    sum += g.weights[i] * g.density[i] * std::pow(g.points[i], k);
  return sum;
}
inline double moment(const Measure& m, int k, int max_degree = kDefaultMaxMomentDegree) {
  return moment(m.as_signed(), k, max_degree);
}

/// Signed mass in [lo, hi]. Atoms on the endpoints count fully; each grid
/// node's mass is spread uniformly over its cell (midpoints between nodes,
/// with the outermost nodes closing the first and last cells).
inline double mass_in(const SignedMeasure& m, const Interval& iv) {
  double mass = 0.0;
  for (const Atom& a : m.atoms())
    if (iv.contains(a.location)) mass += a.weight;
  const GridDensity& g = m.grid();
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    double left = i == 0 ? g.points[0] : 0.5 * (g.points[i - 1] + g.points[i]);
    double right = i + 1 == n ? g.points[i] : 0.5 * (g.points[i] + g.points[i + 1]);
    double cell = g.weights[i] * g.density[i];
    if (right <= left) {
      if (iv.contains(g.points[i])) mass += cell;
      continue;
    }
    double overlap = std::min(right, iv.hi) - std::max(left, iv.lo);
    if (overlap > 0.0) mass += cell * overlap / (right - left);
  }
  return mass;
}
inline double mass_in(const Measure& m, const Interval& iv) { return mass_in(m.as_signed(), iv); }

// ---------------------------------------------------------------------------

/// Gridded antiderivative h with correction = dh/dt in the distributional sense.
struct HFunction {
  std::vector<double> t;
  std::vector<double> h;
  bool empty() const { return t.empty(); }
};

/// Zeroth and first order law pair (mu, mu').
struct TypeBLaw {
  Measure law;
  SignedMeasure correction;
  HFunction h;
};

}  // namespace typeb
