#pragma once

// Additive subordination functions, free additive convolution, and the
// multiplicative subordinator for the free Poisson base law.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "typeb/error.hpp"
#include "typeb/measures.hpp"
#include "typeb/transforms.hpp"

namespace typeb {

struct SubordinationResult {
  Complex omega1;
  Complex omega2;
  Complex g_eta;
  double residual = 0.0;
  int iterations = 0;
};

struct SubordinationOptions {
  int max_iter = 500;
  double tolerance = 1e-10;
  std::optional<Complex> start;  ///< optional initial omega1
};

namespace detail {

struct FWithDerivative {
  Complex f;
  Complex fp;
};

inline FWithDerivative f_pair(const Measure& m, Complex w) {
  auto [f, fp] = f_and_derivative(m, w);
  return {f, fp};
}

inline double subordination_residual(const Measure& mu1, const Measure& mu2, Complex z,
                                     Complex w1, Complex w2, Complex g) {
  double r1 = std::abs(cauchy(mu1, w1) - g);
  double r2 = std::abs(cauchy(mu2, w2) - g);
  double r3 = std::abs(w1 + w2 - z - 1.0 / g);
  return std::max({r1, r2, r3});
}

// Residuals are absolute for |G| <= 1 and relative beyond (near atoms |G|
// grows like 1/Im z and absolute accuracy is limited by rounding).
inline double residual_scale(Complex g) { return std::max(1.0, std::abs(g)); }

}  // namespace detail

/// Solves G1(w1) = G2(w2) = G(z), w1 + w2 = z + 1/G(z) for z in the upper
/// half-plane.
///
/// Iterates w1 <- z + h2(z + h1(w1)) with h = F - id, starting from
/// opt.start if given, then z + i, then z. Each step tries a Newton update on the fixed-point equation first and
/// keeps it only if it stays in {Im w >= Im z} and lowers the residual;
/// otherwise the plain step is taken, damped by 0.5 once progress stalls.
/// Success means residual <= tolerance * max(1, |G(z)|).
inline SubordinationResult additive_subordinators(const Measure& mu1, const Measure& mu2, Complex z,
                                                  const SubordinationOptions& opt = {}) {
  detail::require_upper(z, "additive_subordinators");
  const double floor_im = z.imag();

  // Fixed-point map and its defect at w1.
  struct Eval {
    Complex w1, w2, next, defect, dphi;
    bool ok = false;
  };
  auto evaluate = [&](Complex w1) {
    Eval e;
    e.w1 = w1;
    if (!(w1.imag() > 0.0)) return e;
    auto f1 = detail::f_pair(mu1, w1);
    e.w2 = z + f1.f - w1;
    if (!(e.w2.imag() > 0.0)) return e;
    auto f2 = detail::f_pair(mu2, e.w2);
    e.next = z + f2.f - e.w2;
    e.defect = e.next - w1;
    // d/dw1 of (next - w1) = h2'(w2) h1'(w1) - 1
    e.dphi = (f2.fp - 1.0) * (f1.fp - 1.0) - 1.0;
    e.ok = std::isfinite(e.defect.real()) && std::isfinite(e.defect.imag());
    return e;
  };

  auto solve_from = [&](Complex start, int& it) {
    Eval cur = evaluate(start);
    if (!cur.ok) return cur;
    double best = std::abs(cur.defect);
    int stall = 0;
    for (it = 0; it < opt.max_iter; ++it) {
      double d0 = std::abs(cur.defect);
      if (d0 <= 1e-3 * opt.tolerance || (stall >= 4 && d0 <= 1e-2 * opt.tolerance)) break;
      bool moved = false;
      if (cur.dphi != Complex(0.0, 0.0)) {
        Complex cand = cur.w1 - cur.defect / cur.dphi;
        if (cand.imag() >= floor_im) {
          Eval e = evaluate(cand);
          if (e.ok && std::abs(e.defect) < std::abs(cur.defect)) {
            cur = e;
            moved = true;
          }
        }
      }
      if (!moved) {
        double damping = stall >= 3 ? 0.5 : 1.0;
        Complex cand = cur.w1 + damping * cur.defect;
        if (cand.imag() < floor_im) cand = Complex(cand.real(), floor_im);
        Eval e = evaluate(cand);
        if (!e.ok) return e;
        cur = e;
      }
      double d = std::abs(cur.defect);
      if (d < 0.9 * best) {
        best = d;
        stall = 0;
      } else {
        ++stall;
      }
    }
    return cur;
  };

  // Near the axis the map barely moves points close to z (h1 is large
  // there), so the default start sits one unit above z; z itself is the
  // fallback.
  std::vector<Complex> starts;
  if (opt.start) starts.push_back(*opt.start);
  starts.push_back(z + Complex(0.0, 1.0));
  starts.push_back(z);
  Eval cur;
  int it = 0;
  double best_res = INFINITY;
  SubordinationResult r;
  for (Complex start : starts) {
    int iters = 0;
    Eval e = solve_from(start, iters);
    it += iters;
    if (!e.ok) continue;
    Complex g = cauchy(mu1, e.w1);
    double res = detail::subordination_residual(mu1, mu2, z, e.w1, e.w2, g);
    if (res < best_res) {
      best_res = res;
      r.omega1 = e.w1;
      r.omega2 = e.w2;
      r.g_eta = g;
      r.residual = res;
    }
    if (res <= opt.tolerance * detail::residual_scale(g)) break;
  }
  r.iterations = it;
  if (!(r.residual <= opt.tolerance * detail::residual_scale(r.g_eta)))
    throw ConvergenceError("additive_subordinators: no convergence after " + std::to_string(it) +
                               " iterations",
                           r.residual);
  return r;
}

struct ConvolutionResult {
  Measure law;
  double raw_mass = 0.0;       ///< mass recovered before renormalization
  double renormalization = 1.0;  ///< factor applied to the node weights
};

/// mu1 boxplus mu2 on the given ascending grid via Stieltjes inversion of the
/// subordinated Cauchy transform.
inline ConvolutionResult free_additive_convolve(const Measure& mu1, const Measure& mu2,
                                                std::span<const double> grid,
                                                const InversionSchedule& sched = {},
                                                const SubordinationOptions& opt = {},
                                                double atom_min_weight = 1e-3) {
  sched.validate();
  if (grid.size() < 2) throw ConfigError("free_additive_convolve: grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("free_additive_convolve: grid must be ascending");
  Interval s1 = mu1.support(), s2 = mu2.support();
  if (grid.front() > s1.lo + s2.lo || grid.back() < s1.hi + s2.hi)
    throw ConfigError("free_additive_convolve: grid does not cover the sum of the supports");

  auto g = [&](Complex z) { return additive_subordinators(mu1, mu2, z, opt).g_eta; };
  const std::size_t m = sched.s_values.size();
  const double s_small = sched.s_values[m - 1];
  const double s_next = m > 1 ? sched.s_values[m - 2] : s_small * 10.0;
  const double s_max = sched.s_values.front();

  auto atom_weight_at = [&](double t, double s) { return s * std::abs(g(Complex(t, s)).imag()); };
  auto is_stable_atom = [&](double t, double& weight) {
    double w_small = atom_weight_at(t, s_small);
    if (w_small < atom_min_weight) return false;
    double w_next = atom_weight_at(t, s_next);
    if (w_next < atom_min_weight || std::abs(w_small - w_next) > 0.1 * w_small) return false;
    weight = w_small;
    return true;
  };

  // Atom candidates: sums of input atoms whose weights exceed 1 together, then grid points.
  std::vector<Atom> atoms;
  for (const Atom& a : mu1.atoms())
    for (const Atom& b : mu2.atoms())
      if (a.weight + b.weight > 1.0 + 1e-12) {
        double w = 0.0;
        if (is_stable_atom(a.location + b.location, w)) atoms.push_back({a.location + b.location, w});
      }
  for (double t : grid) {
    bool near = std::any_of(atoms.begin(), atoms.end(),
                            [&](const Atom& a) { return std::abs(a.location - t) < 10.0 * s_small; });
    if (near) continue;
    double w = 0.0;
    if (is_stable_atom(t, w)) atoms.push_back({t, w});
  }
  atoms = normalize_atoms(std::move(atoms));

  // Continuous part with the atoms' Lorentzians removed.
  auto g_cont = [&](Complex z) {
    Complex v = g(z);
    for (const Atom& a : atoms) v -= a.weight / (z - a.location);
    return v;
  };
  std::vector<double> density = stieltjes_invert(g_cont, grid, sched);
  for (double& d : density) d = std::max(d, 0.0);

  // Mass of the Poisson-smoothed law at s_max over the grid window plus its
  // first-order tails.
  std::vector<double> pts(grid.begin(), grid.end());
  std::vector<double> w = trapezoid_weights(pts);
  double smoothed = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    smoothed += w[i] * (-g(Complex(pts[i], s_max)).imag() / kPi);
  double tails = s_max / kPi * (g(Complex(pts.back(), s_max)) - g(Complex(pts.front(), s_max))).real();
  double raw_mass = smoothed + tails;

  // Node values are the pointwise inversion. Inverse-square-root edges make
  // their trapezoid mass overshoot, so the node weights (not the values) are
  // rescaled to give the continuous part its remaining mass.
  double atom_mass = 0.0;
  for (const Atom& a : atoms) atom_mass += a.weight;
  double cont_mass = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) cont_mass += w[i] * density[i];
  if (atom_mass > 1.0 || cont_mass <= 0.0) {
    if (atoms.empty()) throw NumericalError("free_additive_convolve: no mass recovered");
    for (Atom& a : atoms) a.weight /= atom_mass;
    return {Measure::atomic(std::move(atoms)), raw_mass, 1.0 / atom_mass};
  }
  double factor = (1.0 - atom_mass) / cont_mass;
  GridDensity gd = trapezoid_grid(std::move(pts), std::move(density));
  for (double& wi : gd.weights) wi *= factor;
  return {Measure::from_grid(std::move(gd), std::move(atoms)), raw_mass, factor};
}

/// omega2 with omega2 / (1 - omega2) = psi_mu(z), mu the free Poisson law of
/// rate lambda (the multiplicative subordinator for a Wishart base).
inline Complex multiplicative_omega2_mp(double lambda, Complex z) {
  if (!(lambda > 0.0)) throw DomainError("multiplicative_omega2_mp: lambda must be positive");
  if (z == Complex(0.0, 0.0)) return 0.0;
  Complex t = 1.0 / z;
  if (z.imag() == 0.0) t = Complex(t.real(), 0.0);
  Complex psi_value;
  if (t.imag() < 0.0)
    psi_value = std::conj(psi_inverse_arg_mp(lambda, std::conj(t)));
  else
    psi_value = psi_inverse_arg_mp(lambda, t);
  Complex den = 1.0 + psi_value;
  if (std::abs(den) < 1e-14) throw DomainError("multiplicative_omega2_mp: pole of the Moebius map");
  return psi_value / den;
}

}  // namespace typeb
