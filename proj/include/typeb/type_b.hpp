#pragma once

// Type B (infinitesimal) free convolution for finite-rank perturbations:
// first-order corrections, outlier locations, and the h-function whose
// distributional derivative is the correction.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "typeb/error.hpp"
#include "typeb/measures.hpp"
#include "typeb/subordination.hpp"
#include "typeb/transforms.hpp"

namespace typeb {

inline constexpr double kCriticalSpike = 1.0 / std::numbers::sqrt2;

/// Nonzero eigenvalues theta_1..theta_N0 of the finite-rank perturbation.
struct SpikeSet {
  std::vector<double> thetas;

  SpikeSet() = default;
  explicit SpikeSet(std::vector<double> values) : thetas(std::move(values)) {
    for (double t : thetas)
      if (t == 0.0 || !std::isfinite(t)) throw ConfigError("spikes must be finite and nonzero");
  }
  std::size_t count() const { return thetas.size(); }
  bool empty() const { return thetas.empty(); }
};

enum class OutlierKind { additive, multiplicative };

struct OutlierRoot {
  double theta = 0.0;
  double location = 0.0;
  OutlierKind kind = OutlierKind::additive;
};

namespace detail {

// Sign-change bisection to machine resolution; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F&& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 400; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline void reject_critical_spikes(const SpikeSet& spikes) {
  for (double th : spikes.thetas)
    if (std::abs(std::abs(th) - kCriticalSpike) < 1e-12)
      throw DomainError("spike at the excluded critical value |theta| = 1/sqrt(2)");
}

inline Complex sigma_transform(Complex z) {
  if (z.imag() == 0.0 && std::abs(std::abs(z.real()) - kSqrt2) < 1e-12)
    throw DomainError("g_sigma: branch point");
  return 1.0 / (4.0 * (z - kSqrt2)) + 1.0 / (4.0 * (z + kSqrt2)) -
         1.0 / (2.0 * branch_sqrt_product(z, -kSqrt2, kSqrt2));
}

inline double sigma_continuous_density(double t) { return -1.0 / (2.0 * kPi * std::sqrt(2.0 - t * t)); }

// Distribution function of sigma (right-continuous).
inline double sigma_cdf(double t) {
  double atoms = (t >= -kSqrt2 ? 0.25 : 0.0) + (t >= kSqrt2 ? 0.25 : 0.0);
  double cont = t <= -kSqrt2 ? 0.0 : t >= kSqrt2 ? 0.5 : (std::asin(t / kSqrt2) + kPi / 2.0) / (2.0 * kPi);
  return atoms - cont;
}

// Arg of 1 - theta * G(t + i0), resolving the real-axis sign from the side
// Im G < 0.
inline double boundary_arg(Complex value, double side_sign) {
  if (value.imag() != 0.0) return std::arg(value);
  if (value.real() >= 0.0) return 0.0;
  return side_sign > 0.0 ? kPi : -kPi;
}

}  // namespace detail

/// GOE first-order correction sigma on the semicircle Chebyshev grid.
inline SignedMeasure sigma_correction(std::size_t grid_points = kDefaultGridPoints) {
  GridDensity g = tabulate(chebyshev_grid(-kSqrt2, kSqrt2, grid_points), detail::sigma_continuous_density);
  return SignedMeasure({{-kSqrt2, 0.25}, {kSqrt2, 0.25}}, std::move(g));
}

inline Complex g_sigma(Complex z) { return detail::sigma_transform(z); }

/// Cauchy transform of the additive correction:
/// F'(z) (sum_j 1/(F(z) - theta_j) - N0 G(z)) [+ g_sigma(z)].
inline Complex g_eta_prime_additive(const Measure& base, const SpikeSet& spikes, Complex z, bool goe) {
  if (z.imag() < 0.0) throw DomainError("g_eta_prime_additive: lower half-plane argument");
  if (goe && base.family() != Family::semicircle)
    throw ConfigError("g_eta_prime_additive: the GOE correction needs a semicircle base");
  Complex sum = 0.0;
  if (!spikes.empty()) {
    auto [f, fp] = f_and_derivative(base, z);
    Complex g = 1.0 / f;
    for (double th : spikes.thetas) {
      Complex d = f - th;
      if (std::abs(d) < 1e-14) throw DomainError("g_eta_prime_additive: pole at an outlier");
      sum += 1.0 / d;
    }
    sum -= static_cast<double>(spikes.count()) * g;
    sum *= fp;
  }
  if (goe) sum += detail::sigma_transform(z);
  return sum;
}

/// Real solutions of G(t) = 1/theta off the support of a semicircle or atomic base.
inline std::vector<OutlierRoot> solve_outliers_additive(const Measure& base, const SpikeSet& spikes) {
  std::vector<OutlierRoot> roots;
  if (base.family() == Family::semicircle && base.atoms().empty()) {
    detail::reject_critical_spikes(spikes);
    for (double th : spikes.thetas) {
      if (std::abs(th) < kCriticalSpike) continue;
      double target = 1.0 / th;
      // closed form straight up to the branch point, which cauchy_real refuses
      auto f = [&](double t) { return detail::semicircle_g(Complex(t, 0.0)).real() - target; };
      double far = kSqrt2 + 50.0 + 2.0 * std::abs(th);
      double edge = kSqrt2;
      double loc = th > 0.0 ? detail::bisect(f, edge, far) : detail::bisect(f, -far, -edge);
      roots.push_back({th, loc, OutlierKind::additive});
    }
    return roots;
  }
  if (base.family() != Family::none)
    throw ConfigError("solve_outliers_additive: base must be the semicircle or an atomic measure");

  const std::vector<Atom>& atoms = base.atoms();
  constexpr double pad = 1e-9;
  for (double th : spikes.thetas) {
    double target = 1.0 / th;
    auto f = [&](double t) { return cauchy_real(base, t).real() - target; };
    std::vector<double> found;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i)
      found.push_back(detail::bisect(f, atoms[i].location + pad, atoms[i + 1].location - pad));
    if (target > 0.0) {
      double lo = atoms.back().location + pad;
      double span = 1.0;
      while (f(lo + span) > 0.0) span *= 2.0;
      found.push_back(detail::bisect(f, lo, lo + span));
    } else {
      double hi = atoms.front().location - pad;
      double span = 1.0;
      while (f(hi - span) < 0.0) span *= 2.0;
      found.push_back(detail::bisect(f, hi - span, hi));
    }
    std::sort(found.begin(), found.end());
    for (double loc : found) roots.push_back({th, loc, OutlierKind::additive});
  }
  return roots;
}

/// nu_hat for spike theta on the semicircle bulk, normalized to mass 1 when
/// |theta| > 1/sqrt(2) and mass 0 otherwise:
/// (1/pi) theta (t - 2 theta) / ((2 theta (t - theta) - 1) sqrt(2 - t^2)).
inline double nu_hat_density(double theta, double t) {
  if (!(std::abs(t) < kSqrt2)) throw DomainError("nu_hat_density: t outside the open support");
  if (std::abs(std::abs(theta) - kCriticalSpike) < 1e-12)
    throw DomainError("nu_hat_density: critical spike value");
  return theta * (t - 2.0 * theta) / ((2.0 * theta * (t - theta) - 1.0) * std::sqrt(2.0 - t * t)) / kPi;
}

/// First-order correction of the spectral law of A + sum theta_j E_jj.
///
/// Semicircle base: +1 at each outlier, continuous part -sum nu_hat_j, plus
/// sigma when goe is set. Atomic base: +1 at every root of G = 1/theta and
/// -(number of roots) * mu.
inline SignedMeasure additive_correction(const Measure& base, const SpikeSet& spikes, bool goe,
                                         std::size_t grid_points = kDefaultGridPoints) {
  std::vector<OutlierRoot> roots = solve_outliers_additive(base, spikes);
  std::vector<Atom> atoms;
  for (const OutlierRoot& r : roots) atoms.push_back({r.location, 1.0});

  if (base.family() == Family::semicircle) {
    GridDensity g = chebyshev_grid(-kSqrt2, kSqrt2, grid_points);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double t = g.points[i];
      double d = 0.0;
      for (double th : spikes.thetas) d -= nu_hat_density(th, t);
      if (goe) d += detail::sigma_continuous_density(t);
      g.density[i] = d;
    }
    if (goe) {
      atoms.push_back({-kSqrt2, 0.25});
      atoms.push_back({kSqrt2, 0.25});
    }
    return SignedMeasure(std::move(atoms), std::move(g));
  }

  if (goe) throw ConfigError("additive_correction: the GOE correction needs a semicircle base");
  const double n_roots = static_cast<double>(roots.size());
  for (const Atom& a : base.atoms()) atoms.push_back({a.location, -n_roots * a.weight});
  return SignedMeasure(std::move(atoms));
}

/// Positive solutions of 1 + psi_mu(1/t)(1 - theta) = 0 off the free Poisson
/// support, i.e. omega2(1/t) = 1/theta.
inline std::vector<OutlierRoot> solve_outliers_multiplicative(double lambda, const SpikeSet& spikes) {
  if (!(lambda > 0.0)) throw ConfigError("solve_outliers_multiplicative: lambda must be positive");
  Interval sup = mp_support(lambda);
  std::vector<OutlierRoot> roots;
  for (double th : spikes.thetas) {
    if (!(th > 0.0)) throw DomainError("multiplicative spikes must be positive");
    if (th == 1.0) continue;
    auto f = [&](double t) { return 1.0 + psi_real_mp(lambda, t).real() * (1.0 - th); };
    const double pad = 1e-12 * std::max(1.0, sup.hi);
    // f increases to 1 at +infinity on (b, inf) and decreases from 1 at -infinity on (-inf, a).
    double right = sup.hi + pad;
    if (f(right) < 0.0) {
      double span = 1.0;
      while (f(right + span) < 0.0) span *= 2.0;
      roots.push_back({th, detail::bisect(f, right, right + span), OutlierKind::multiplicative});
    }
    double left = sup.lo - pad;
    if (f(left) < 0.0) {
      double span = 1.0;
      while (f(left - span) < 0.0) span *= 2.0;
      roots.push_back({th, detail::bisect(f, left - span, left), OutlierKind::multiplicative});
    }
  }
  return roots;
}

/// Uniform grid covering the free Poisson support and every outlier.
inline std::vector<double> mp_correction_grid(double lambda, const SpikeSet& spikes,
                                              std::size_t n = 4097) {
  Interval sup = mp_support(lambda);
  double lo = sup.lo, hi = sup.hi;
  for (const OutlierRoot& r : solve_outliers_multiplicative(lambda, spikes)) {
    lo = std::min(lo, r.location);
    hi = std::max(hi, r.location);
  }
  double margin = std::max(0.25, 0.1 * (hi - lo));
  return uniform_points(lo - margin, hi + margin, n);
}

struct MultiplicativeCorrection {
  SignedMeasure correction;
  HFunction h;
};

/// Correction for Sigma^{1/2} B B^* Sigma^{1/2}: L(t) = -(1/pi) sum_j
/// Arg(1 + psi_mu(1/(t+is))(1 - theta_j)) at s -> 0; atoms at the jumps of
/// L, density from central differences elsewhere. The limit is the
/// closed-form boundary value except within 1e-9 of the support endpoints,
/// where the schedule's extrapolation is used.
inline MultiplicativeCorrection multiplicative_correction(double lambda, const SpikeSet& spikes,
                                                          std::span<const double> grid,
                                                          const InversionSchedule& sched = {}) {
  sched.validate();
  if (grid.size() < 3) throw ConfigError("multiplicative_correction: grid needs at least three points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("multiplicative_correction: grid must be ascending");
  std::vector<OutlierRoot> roots = solve_outliers_multiplicative(lambda, spikes);
  Interval sup = mp_support(lambda);
  if (grid.front() >= sup.lo || grid.back() <= sup.hi)
    throw ConfigError("multiplicative_correction: grid must extend past the support");
  for (const OutlierRoot& r : roots)
    if (r.location <= grid.front() || r.location >= grid.back())
      throw ConfigError("multiplicative_correction: grid must cover every outlier");

  const std::size_t m = sched.s_values.size();
  const double s_small = sched.s_values[m - 1];
  const double s_large = m > 1 ? sched.s_values[m - 2] : s_small;
  auto l_at = [&](double t, double s) {
    double sum = 0.0;
    for (double th : spikes.thetas) {
      if (th == 1.0) continue;
      Complex v = 1.0 + psi_inverse_arg_mp(lambda, Complex(t, s)) * (1.0 - th);
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NumericalError("multiplicative_correction: non-finite Arg at t = " + std::to_string(t));
      sum += std::arg(v);
    }
    return -sum / kPi;
  };
  // Exact s -> 0 limit from the closed-form continuation. On the negative
  // real axis the side is fixed by Im psi(1/(t + is)) < 0.
  auto l_boundary = [&](double t) {
    double sum = 0.0;
    Complex p = psi_real_mp(lambda, t);
    for (double th : spikes.thetas) {
      if (th == 1.0) continue;
      Complex v = 1.0 + p * (1.0 - th);
      sum += v.imag() != 0.0 ? std::arg(v) : v.real() >= 0.0 ? 0.0 : (th > 1.0 ? kPi : -kPi);
    }
    return -sum / kPi;
  };

  const std::size_t n = grid.size();
  std::vector<double> pts(grid.begin(), grid.end());
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t = pts[i];
    bool branch = std::abs(t - sup.lo) < 1e-9 || std::abs(t - sup.hi) < 1e-9;
    l[i] = branch ? extrapolate_to_zero(l_at(t, s_small), s_small, l_at(t, s_large), s_large, sched.order)
                  : l_boundary(t);
  }

  // Jumps of L mark the outliers.
  std::vector<bool> jump(n - 1, false);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double dl = l[i + 1] - l[i];
    if (std::abs(dl) <= 0.5) continue;
    jump[i] = true;
    std::vector<double> inside;
    for (const OutlierRoot& r : roots)
      if (r.location >= pts[i] && r.location <= pts[i + 1]) inside.push_back(r.location);
    if (inside.empty())
      throw NumericalError("multiplicative_correction: jump in L without an outlier root");
    double w = std::round(dl) / static_cast<double>(inside.size());
    for (double loc : inside) atoms.push_back({loc, w});
  }

  std::vector<double> density(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    bool left_ok = i > 0 && !jump[i - 1];
    bool right_ok = i + 1 < n && !jump[i];
    if (left_ok && right_ok)
      density[i] = (l[i + 1] - l[i - 1]) / (pts[i + 1] - pts[i - 1]);
    else if (right_ok)
      density[i] = (l[i + 1] - l[i]) / (pts[i + 1] - pts[i]);
    else if (left_ok)
      density[i] = (l[i] - l[i - 1]) / (pts[i] - pts[i - 1]);
  }

  MultiplicativeCorrection out;
  out.h.t = pts;
  out.h.h = l;
  out.correction = SignedMeasure(std::move(atoms), trapezoid_grid(std::move(pts), std::move(density)));
  return out;
}

// ---------------------------------------------------------------------------

/// Type B law of sum theta_j E_jj: (delta_0, sum_j delta_theta_j - N0 delta_0).
inline TypeBLaw spike_law(const SpikeSet& spikes) {
  std::vector<Atom> atoms;
  for (double th : spikes.thetas) atoms.push_back({th, 1.0});
  if (!spikes.empty()) atoms.push_back({0.0, -static_cast<double>(spikes.count())});
  return {Measure::dirac(0.0), SignedMeasure(std::move(atoms)), {}};
}

/// Type B law of the GOE: (semicircle, sigma).
inline TypeBLaw goe_law(std::size_t grid_points = kDefaultGridPoints) {
  return {Measure::semicircle(grid_points), sigma_correction(grid_points), {}};
}

inline TypeBLaw gue_law(std::size_t grid_points = kDefaultGridPoints) {
  return {Measure::semicircle(grid_points), SignedMeasure(), {}};
}

namespace detail {

inline bool is_sigma(const SignedMeasure& c) {
  const auto& a = c.atoms();
  if (a.size() != 2) return false;
  if (std::abs(a[0].location + kSqrt2) > 1e-12 || std::abs(a[1].location - kSqrt2) > 1e-12) return false;
  if (std::abs(a[0].weight - 0.25) > 1e-12 || std::abs(a[1].weight - 0.25) > 1e-12) return false;
  const GridDensity& g = c.grid();
  if (g.empty()) return false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double ref = sigma_continuous_density(g.points[i]);
    if (std::abs(g.density[i] - ref) > 1e-9 * std::abs(ref)) return false;
  }
  return true;
}

inline SpikeSet spikes_from_law(const TypeBLaw& law) {
  const auto& base = law.law.atoms();
  if (!law.law.is_atomic() || base.size() != 1 || base[0].location != 0.0)
    throw ConfigError("spike law must have zeroth-order part delta_0");
  if (!law.correction.grid().empty() && !law.correction.is_zero())
    throw ConfigError("spike law correction must be purely atomic");
  std::vector<double> thetas;
  double at_zero = 0.0;
  for (const Atom& a : law.correction.atoms()) {
    if (a.location == 0.0) {
      at_zero = a.weight;
      continue;
    }
    double k = std::round(a.weight);
    if (k < 1.0 || std::abs(a.weight - k) > 1e-9)
      throw ConfigError("spike law atoms must carry positive integer multiplicities");
    for (int i = 0; i < static_cast<int>(k); ++i) thetas.push_back(a.location);
  }
  if (std::abs(at_zero + static_cast<double>(thetas.size())) > 1e-9)
    throw ConfigError("spike law must carry -N0 at the origin");
  return SpikeSet(std::move(thetas));
}

}  // namespace detail

/// h(t) = -(1/pi) sum_j Arg(1 - theta_j G(t + i0)) [+ sigma's distribution function].
inline HFunction additive_h(const Measure& base, const SpikeSet& spikes, bool goe,
                            std::span<const double> points) {
  HFunction h;
  h.t.assign(points.begin(), points.end());
  h.h.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double t = points[i];
    double sum = 0.0;
    Complex g = cauchy_real(base, t);
    for (double th : spikes.thetas) sum += detail::boundary_arg(1.0 - th * g, th);
    h.h[i] = -sum / kPi + (goe ? detail::sigma_cdf(t) : 0.0);
  }
  return h;
}

/// Grid for h: the semicircle Chebyshev nodes plus uniform points outside the
/// bulk reaching past every outlier.
inline std::vector<double> additive_h_grid(const std::vector<OutlierRoot>& roots,
                                           std::size_t grid_points = kDefaultGridPoints,
                                           std::size_t outer_points = 256) {
  double reach = kSqrt2;
  for (const OutlierRoot& r : roots) reach = std::max(reach, std::abs(r.location));
  reach += 1.0;
  std::vector<double> pts = chebyshev_grid(-kSqrt2, kSqrt2, grid_points).points;
  for (std::size_t i = 1; i <= outer_points; ++i) {
    double u = static_cast<double>(i) / static_cast<double>(outer_points);
    double t = kSqrt2 + 1e-6 + u * (reach - kSqrt2 - 1e-6);
    pts.push_back(t);
    pts.push_back(-t);
  }
  std::sort(pts.begin(), pts.end());
  // drop points that coincide with an outlier (h has a jump there)
  std::erase_if(pts, [&](double t) {
    return std::any_of(roots.begin(), roots.end(), [&](const OutlierRoot& r) { return std::abs(r.location - t) < 1e-9; });
  });
  return pts;
}

/// (eta, eta') = (mu, 0 or sigma) boxplus_B (delta_0, sum_j delta_theta_j - N0 delta_0).
inline TypeBLaw typeb_additive(const TypeBLaw& law1, const TypeBLaw& law2,
                               std::size_t grid_points = kDefaultGridPoints) {
  SpikeSet spikes = detail::spikes_from_law(law2);
  bool goe = false;
  if (!law1.correction.is_zero()) {
    if (!detail::is_sigma(law1.correction) || law1.law.family() != Family::semicircle)
      throw ConfigError("typeb_additive: first law's correction must be 0 or the GOE sigma");
    goe = true;
  }
  TypeBLaw out{law1.law, additive_correction(law1.law, spikes, goe, grid_points), {}};
  if (law1.law.family() == Family::semicircle) {
    std::vector<double> pts = additive_h_grid(solve_outliers_additive(law1.law, spikes), grid_points);
    out.h = additive_h(law1.law, spikes, goe, pts);
  }
  return out;
}

/// (eta, eta') for the spiked Wishart model with free Poisson base of rate lambda.
inline TypeBLaw typeb_multiplicative(double lambda, const SpikeSet& spikes,
                                     std::span<const double> grid, const InversionSchedule& sched = {}) {
  MultiplicativeCorrection mc = multiplicative_correction(lambda, spikes, grid, sched);
  return {Measure::marchenko_pastur(lambda), std::move(mc.correction), std::move(mc.h)};
}

}  // namespace typeb
