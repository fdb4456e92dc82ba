#pragma once

// Cauchy, F and psi transforms, their real-axis continuations for the named
// families, and Stieltjes inversion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "typeb/error.hpp"
#include "typeb/measures.hpp"

namespace typeb {

using Complex = std::complex<double>;

/// sqrt(z - a) * sqrt(z - b) with principal roots.
///
/// This is the branch of sqrt((z-a)(z-b)) that behaves like z at infinity and
/// whose only cut is [a, b]. On the real axis with a +0 imaginary part it
/// yields the boundary value from the upper half-plane, so callers must pass
/// Complex(t, 0.0) (never -0.0) for real arguments.
inline Complex branch_sqrt_product(Complex z, double a, double b) {
  return std::sqrt(z - a) * std::sqrt(z - b);
}

namespace detail {

inline void require_upper(Complex z, const char* op) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError(std::string(op) + ": argument must lie in the open upper half-plane");
}

// Semicircle (variance 1/2): G = z - sqrt(z^2 - 2).
inline Complex semicircle_g(Complex z) { return z - branch_sqrt_product(z, -kSqrt2, kSqrt2); }
inline Complex semicircle_g_prime(Complex z) {
  return 1.0 - z / branch_sqrt_product(z, -kSqrt2, kSqrt2);
}

// Full free Poisson transform (atom at 0 included when lambda < 1):
// G = 2 / (z + 1 - lambda + P(z)), the rationalized form of
// (z + 1 - lambda - P(z)) / (2z).
inline Complex mp_full_g(double lambda, Complex z) {
  Interval s = mp_support(lambda);
  return 2.0 / (z + 1.0 - lambda + branch_sqrt_product(z, s.lo, s.hi));
}
inline Complex mp_full_g_prime(double lambda, Complex z) {
  Interval s = mp_support(lambda);
  Complex p = branch_sqrt_product(z, s.lo, s.hi);
  Complex dp = (2.0 * z - s.lo - s.hi) / (2.0 * p);
  Complex den = z + 1.0 - lambda + p;
  return -2.0 * (1.0 + dp) / (den * den);
}

inline Complex atoms_g(const std::vector<Atom>& atoms, Complex z) {
  Complex sum = 0.0;
  for (const Atom& a : atoms) sum += a.weight / (z - a.location);
  return sum;
}
inline Complex atoms_g_prime(const std::vector<Atom>& atoms, Complex z) {
  Complex sum = 0.0;
  for (const Atom& a : atoms) {
    Complex d = z - a.location;
    sum -= a.weight / (d * d);
  }
  return sum;
}
inline Complex grid_g(const GridDensity& g, Complex z) {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g.weights[i] * g.density[i] / (z - g.points[i]);
  return sum;
}
inline Complex grid_g_prime(const GridDensity& g, Complex z) {
  Complex sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Complex d = z - g.points[i];
    sum -= g.weights[i] * g.density[i] / (d * d);
  }
  return sum;
}

// Closed form or quadrature, valid anywhere off the support (both half-planes
// and, for named families, the +0 boundary of the cut).
inline Complex measure_g(const Measure& m, Complex z) {
  switch (m.family()) {
    case Family::semicircle: return atoms_g(m.atoms(), z) + semicircle_g(z);
    case Family::marchenko_pastur: return mp_full_g(*m.mp_lambda(), z);
    case Family::grid: return atoms_g(m.atoms(), z) + grid_g(m.quadrature(), z);
    case Family::none: return atoms_g(m.atoms(), z);
  }
  return 0.0;
}
inline Complex measure_g_prime(const Measure& m, Complex z) {
  switch (m.family()) {
    case Family::semicircle: return atoms_g_prime(m.atoms(), z) + semicircle_g_prime(z);
    case Family::marchenko_pastur: return mp_full_g_prime(*m.mp_lambda(), z);
    case Family::grid: return atoms_g_prime(m.atoms(), z) + grid_g_prime(m.quadrature(), z);
    case Family::none: return atoms_g_prime(m.atoms(), z);
  }
  return 0.0;
}

inline void require_off_atoms(const Measure& m, double t, const char* op) {
  for (const Atom& a : m.atoms())
    if (std::abs(t - a.location) < 1e-12)
      throw DomainError(std::string(op) + ": evaluation at an atom");
}

}  // namespace detail

/// G(z) = integral of 1/(z - t), z in the upper half-plane.
inline Complex cauchy(const Measure& m, Complex z) {
  detail::require_upper(z, "cauchy");
  return detail::measure_g(m, z);
}

inline Complex cauchy(const SignedMeasure& m, Complex z) {
  detail::require_upper(z, "cauchy");
  return detail::atoms_g(m.atoms(), z) + detail::grid_g(m.grid(), z);
}

/// Boundary value lim_{s->0+} G(t + is).
inline Complex cauchy_real(const Measure& m, double t) {
  detail::require_off_atoms(m, t, "cauchy_real");
  switch (m.family()) {
    case Family::semicircle:
      if (std::abs(std::abs(t) - kSqrt2) < 1e-12)
        throw DomainError("cauchy_real: semicircle branch point |t| = sqrt(2)");
      break;
    case Family::marchenko_pastur: {
      double lambda = *m.mp_lambda();
      if (lambda == 1.0 && std::abs(t) < 1e-12)
        throw DomainError("cauchy_real: Marchenko-Pastur branch point at 0");
      break;
    }
    case Family::grid: {
      const GridDensity& g = m.quadrature();
      if (t >= g.points.front() && t <= g.points.back())
        throw DomainError("cauchy_real: no real-axis continuation inside a gridded support");
      break;
    }
    case Family::none: break;
  }
  return detail::measure_g(m, Complex(t, 0.0));
}

/// Derivative of G; closed form for every supported representation.
inline Complex cauchy_derivative(const Measure& m, Complex z) {
  if (z.imag() < 0.0) throw DomainError("cauchy_derivative: lower half-plane argument");
  if (z.imag() == 0.0) detail::require_off_atoms(m, z.real(), "cauchy_derivative");
  return detail::measure_g_prime(m, Complex(z.real(), z.imag()));
}

/// Central difference with step 1e-6 * max(1, |z|) along the real direction.
template <class Fn>
Complex central_derivative(Fn&& f, Complex z) {
  double h = 1e-6 * std::max(1.0, std::abs(z));
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

/// (F, F') with F = 1/G. Real z (zero imaginary part) uses the boundary value.
inline std::pair<Complex, Complex> f_and_derivative(const Measure& m, Complex z) {
  Complex g = z.imag() == 0.0 ? cauchy_real(m, z.real()) : cauchy(m, z);
  if (g == Complex(0.0, 0.0)) throw DomainError("f_and_derivative: G vanishes");
  Complex gp = cauchy_derivative(m, z);
  return {1.0 / g, -gp / (g * g)};
}

namespace detail {

// G anywhere off the support: conjugate symmetry below the axis, +0 boundary
// on it.
inline Complex cauchy_anywhere(const Measure& m, Complex w) {
  if (w.imag() > 0.0) return cauchy(m, w);
  if (w.imag() < 0.0) return std::conj(cauchy(m, std::conj(w)));
  return cauchy_real(m, w.real());
}

}  // namespace detail

/// psi(z) = integral of tz / (1 - tz) = (1/z) G(1/z) - 1.
inline Complex psi(const Measure& m, Complex z) {
  if (z == Complex(0.0, 0.0)) throw DomainError("psi: z = 0");
  Complex w = 1.0 / z;
  if (z.imag() == 0.0) w = Complex(w.real(), 0.0);
  switch (m.family()) {
    case Family::marchenko_pastur: {
      double lambda = *m.mp_lambda();
      Interval s = mp_support(lambda);
      if (w.imag() < 0.0) {
        Complex wc = std::conj(w);
        return std::conj(0.5 * (wc - 1.0 - lambda - branch_sqrt_product(wc, s.lo, s.hi)));
      }
      return 0.5 * (w - 1.0 - lambda - branch_sqrt_product(w, s.lo, s.hi));
    }
    case Family::semicircle:
      return w * detail::cauchy_anywhere(m, w) - 1.0;
    case Family::grid:
    case Family::none: {
      // Direct integral; independent of the Cauchy-transform route.
      Complex sum = 0.0;
      for (const Atom& a : m.atoms()) sum += a.weight * a.location * z / (1.0 - a.location * z);
      const GridDensity& g = m.quadrature();
      for (std::size_t i = 0; i < g.size(); ++i)
        sum += g.weights[i] * g.density[i] * g.points[i] * z / (1.0 - g.points[i] * z);
      return sum;
    }
  }
  return 0.0;
}

/// psi_mu(1/t) for the free Poisson law of rate lambda, boundary value from
/// t + i0: real off the support, negative imaginary part inside it.
inline Complex psi_real_mp(double lambda, double t) {
  if (!(lambda > 0.0)) throw DomainError("psi_real_mp: lambda must be positive");
  Interval s = mp_support(lambda);
  if (std::abs(t - s.lo) < 1e-12 || std::abs(t - s.hi) < 1e-12)
    throw DomainError("psi_real_mp: branch point");
  Complex p = branch_sqrt_product(Complex(t, 0.0), s.lo, s.hi);
  return 0.5 * (Complex(t - 1.0 - lambda, 0.0) - p);
}

/// psi_mu(1/z) for complex z in the closed upper half-plane (MP closed form).
inline Complex psi_inverse_arg_mp(double lambda, Complex z) {
  Interval s = mp_support(lambda);
  return 0.5 * (z - 1.0 - lambda - branch_sqrt_product(z, s.lo, s.hi));
}

struct InversionSchedule {
  std::vector<double> s_values{1e-2, 1e-3, 1e-4};
  int order = 1;

  void validate() const {
    if (s_values.empty()) throw ConfigError("inversion schedule: empty");
    for (std::size_t i = 0; i < s_values.size(); ++i) {
      if (!(s_values[i] > 0.0)) throw ConfigError("inversion schedule: values must be positive");
      if (i > 0 && !(s_values[i] < s_values[i - 1]))
        throw ConfigError("inversion schedule: values must be strictly descending");
    }
    if (order != 0 && order != 1) throw ConfigError("inversion schedule: order must be 0 or 1");
    if (order == 1 && s_values.size() < 2)
      throw ConfigError("inversion schedule: first-order extrapolation needs two values");
  }
};

/// Limit s -> 0 from samples at the two smallest s (linear in s) or the smallest.
inline double extrapolate_to_zero(double f_small, double s_small, double f_large, double s_large,
                                  int order) {
  if (order == 0) return f_small;
  return f_small - s_small * (f_large - f_small) / (s_large - s_small);
}

/// density(t) = -(1/pi) lim_{s->0} Im g(t + is) on each grid point.
template <class G>
std::vector<double> stieltjes_invert(G&& g, std::span<const double> grid,
                                     const InversionSchedule& sched = {}) {
  sched.validate();
  const std::size_t m = sched.s_values.size();
  const double s_small = sched.s_values[m - 1];
  const double s_large = m > 1 ? sched.s_values[m - 2] : s_small;
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double t = grid[i];
    Complex a = g(Complex(t, s_small));
    double fa = -a.imag() / kPi;
    double fb = fa;
    if (sched.order == 1) fb = -g(Complex(t, s_large)).imag() / kPi;
    if (!std::isfinite(fa) || !std::isfinite(fb))
      throw NumericalError("stieltjes_invert: non-finite transform value at t = " + std::to_string(t));
    out[i] = extrapolate_to_zero(fa, s_small, fb, s_large, sched.order);
  }
  return out;
}

}  // namespace typeb
