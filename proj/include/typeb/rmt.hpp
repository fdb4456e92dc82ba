#pragma once

// Monte Carlo random-matrix engine: seeded samplers for GUE, GOE,
// Haar-conjugated and spiked Wishart ensembles, eigenvalues, averaged
// histograms and moment estimators.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "typeb/error.hpp"
#include "typeb/measures.hpp"
#include "typeb/type_b.hpp"

namespace typeb {

using Matrix = Eigen::MatrixXcd;

enum class EnsembleKind { gue, goe, haar, wishart };

inline std::string ensemble_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::gue: return "gue";
    case EnsembleKind::goe: return "goe";
    case EnsembleKind::haar: return "haar";
    case EnsembleKind::wishart: return "wishart";
  }
  return "gue";
}

inline EnsembleKind parse_ensemble(const std::string& s) {
  if (s == "gue") return EnsembleKind::gue;
  if (s == "goe") return EnsembleKind::goe;
  if (s == "haar") return EnsembleKind::haar;
  if (s == "wishart") return EnsembleKind::wishart;
  throw ConfigError("unknown ensemble '" + s + "' (expected gue, goe, haar or wishart)");
}

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gue;
  int n = 100;
  SpikeSet spikes;                       ///< additive, theta_j E_jj
  std::vector<double> base_eigenvalues;  ///< haar: pattern tiled along the diagonal
  double lambda = 1.0;                   ///< wishart: p = round(lambda n)
  SpikeSet sigma_spikes;                 ///< wishart: leading eigenvalues of Sigma
  std::uint64_t seed = 0;
  int trials = 1;

  int wishart_columns() const { return static_cast<int>(std::lround(lambda * n)); }

  void validate() const {
    if (n < 1) throw ConfigError("ensemble: n must be positive");
    if (trials < 1) throw ConfigError("ensemble: trials must be positive");
    if (spikes.count() > static_cast<std::size_t>(n)) throw ConfigError("ensemble: more spikes than n");
    switch (kind) {
      case EnsembleKind::haar:
        if (base_eigenvalues.empty()) throw ConfigError("haar ensemble needs base eigenvalues");
        break;
      case EnsembleKind::wishart:
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("wishart: lambda must be positive");
        if (wishart_columns() < 1) throw ConfigError("wishart: round(lambda n) must be at least 1");
        if (!spikes.empty()) throw ConfigError("wishart: use sigma spikes, not additive spikes");
        if (sigma_spikes.count() > static_cast<std::size_t>(n))
          throw ConfigError("wishart: more sigma spikes than n");
        for (double th : sigma_spikes.thetas)
          if (!(th > 0.0)) throw ConfigError("wishart: sigma spikes must be positive");
        break;
      default: break;
    }
  }
};

/// SplitMix64 in counter mode keyed by (seed, stream); normals by Box-Muller.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed;
    std::uint64_t key = mix(s);
    std::uint64_t t = stream + 0x632BE59BD9B4E019ULL;
    state_ = key ^ mix(t);
  }

  std::uint64_t next() { return mix(state_); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {

inline Matrix ginibre(CounterRng& rng, int rows, int cols, double variance) {
  // complex entries with E|x|^2 = variance
  double sd = std::sqrt(variance / 2.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double re = rng.normal(), im = rng.normal();
      m(i, j) = {sd * re, sd * im};
    }
  return m;
}

inline Matrix haar_unitary(CounterRng& rng, int n) {
  Matrix z = ginibre(rng, n, n, 1.0);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    std::complex<double> d = r(j, j);
    double a = std::abs(d);
    q.col(j) *= a > 0.0 ? d / a : std::complex<double>(1.0, 0.0);
  }
  return q;
}

}  // namespace detail

/// One sample of the ensemble; trial_index selects the RNG stream.
inline Matrix sample_matrix(const EnsembleSpec& spec, std::uint64_t trial_index) {
  spec.validate();
  CounterRng rng(spec.seed, trial_index);
  const int n = spec.n;
  const double dn = static_cast<double>(n);
  Matrix m(n, n);
  switch (spec.kind) {
    case EnsembleKind::gue: {
      // E|a_ij|^2 = 1/(2n) for every entry, real diagonal
      double off = std::sqrt(1.0 / (4.0 * dn)), diag = std::sqrt(1.0 / (2.0 * dn));
      for (int i = 0; i < n; ++i) {
        m(i, i) = diag * rng.normal();
        for (int j = i + 1; j < n; ++j) {
          double re = rng.normal(), im = rng.normal();
          m(i, j) = {off * re, off * im};
          m(j, i) = std::conj(m(i, j));
        }
      }
      break;
    }
    case EnsembleKind::goe: {
      double off = std::sqrt(1.0 / (2.0 * dn)), diag = std::sqrt(1.0 / dn);
      for (int i = 0; i < n; ++i) {
        m(i, i) = diag * rng.normal();
        for (int j = i + 1; j < n; ++j) {
          m(i, j) = off * rng.normal();
          m(j, i) = m(i, j);
        }
      }
      break;
    }
    case EnsembleKind::haar: {
      Matrix u = detail::haar_unitary(rng, n);
      Eigen::VectorXcd lam(n);
      const auto& base = spec.base_eigenvalues;
      for (int i = 0; i < n; ++i) lam(i) = base[static_cast<std::size_t>(i) % base.size()];
      m = u * lam.asDiagonal() * u.adjoint();
      break;
    }
    case EnsembleKind::wishart: {
      Matrix b = detail::ginibre(rng, n, spec.wishart_columns(), 1.0 / dn);
      for (std::size_t j = 0; j < spec.sigma_spikes.count(); ++j)
        b.row(static_cast<int>(j)) *= std::sqrt(spec.sigma_spikes.thetas[j]);
      m = b * b.adjoint();
      break;
    }
  }
  for (std::size_t j = 0; j < spec.spikes.count(); ++j) {
    int k = static_cast<int>(j);
    m(k, k) += spec.spikes.thetas[j];
  }
  Matrix h = 0.5 * (m + m.adjoint());
  return h;
}

/// Ascending eigenvalues of a Hermitian matrix.
inline std::vector<double> hermitian_eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw DomainError("hermitian_eigenvalues: matrix must be square");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("hermitian_eigenvalues: matrix is not Hermitian");
  if (m.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("hermitian_eigenvalues: eigensolver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end());
  return out;
}

/// f(sample_matrix(spec, i), i) for every trial, in trial order. Trials run
/// on worker threads; each writes only its own slot, so the result does not
/// depend on scheduling.
template <class F>
auto map_trials(const EnsembleSpec& spec, F&& f, unsigned threads = 0) {
  spec.validate();
  using R = decltype(f(std::declval<const Matrix&>(), std::uint64_t{}));
  const std::size_t count = static_cast<std::size_t>(spec.trials);
  std::vector<R> out(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) out[i] = f(sample_matrix(spec, i), i);
  };
  if (threads <= 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        work(t, threads);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::vector<std::vector<double>> sample_spectra(const EnsembleSpec& spec) {
  return map_trials(spec, [](const Matrix& m, std::uint64_t) { return hermitian_eigenvalues(m); });
}

struct Histogram {
  std::vector<double> edges;
  std::vector<double> mean_counts;
  std::vector<double> stderrs;
  int trials = 0;
  int n = 0;

  std::size_t bins() const { return mean_counts.size(); }
};

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Sample mean and its standard error (zero for a single sample).
inline MeanEstimate mean_and_stderr(const std::vector<double>& xs) {
  MeanEstimate e;
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return e;
}

/// Per-trial eigenvalue counts in `bins` equal bins over `range`, averaged.
/// Eigenvalues outside the range land in the first or last bin.
inline Histogram histogram_from_spectra(const std::vector<std::vector<double>>& spectra, int bins,
                                        const Interval& range, int n) {
  if (bins < 1) throw ConfigError("histogram: bins must be positive");
  if (!(range.hi > range.lo)) throw ConfigError("histogram: empty range");
  Histogram h;
  h.trials = static_cast<int>(spectra.size());
  h.n = n;
  h.edges = uniform_points(range.lo, range.hi, static_cast<std::size_t>(bins) + 1);
  const std::size_t nb = static_cast<std::size_t>(bins);
  std::vector<std::vector<double>> per_bin(nb, std::vector<double>(spectra.size(), 0.0));
  const double width = (range.hi - range.lo) / bins;
  for (std::size_t t = 0; t < spectra.size(); ++t)
    for (double x : spectra[t]) {
      double u = std::floor((x - range.lo) / width);
      std::size_t b = u < 0.0 ? 0 : std::min(nb - 1, static_cast<std::size_t>(u));
      per_bin[b][t] += 1.0;
    }
  for (std::size_t b = 0; b < nb; ++b) {
    MeanEstimate e = mean_and_stderr(per_bin[b]);
    h.mean_counts.push_back(e.mean);
    h.stderrs.push_back(e.stderr_);
  }
  return h;
}

inline Histogram averaged_spectrum(const EnsembleSpec& spec, int bins, const Interval& range) {
  if (!(range.hi > range.lo)) throw ConfigError("averaged_spectrum: empty range");
  return histogram_from_spectra(sample_spectra(spec), bins, range, spec.n);
}

// ---------------------------------------------------------------------------

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// (1/N) Tr(A^k) from a Hermitian sample.
inline double normalized_trace_power(const Matrix& a, int k) {
  const double n = static_cast<double>(a.rows());
  if (k == 0) return 1.0;
  if (k == 1) return a.trace().real() / n;
  if (k == 2) return a.squaredNorm() / n;
  Matrix half = a;
  for (int i = 1; i < k / 2; ++i) half = half * a;
  Matrix other = k % 2 ? Matrix(half * a) : half;
  // Tr(XY) with X, Y Hermitian powers = sum conj(X) .* Y
  return (half.conjugate().cwiseProduct(other)).sum().real() / n;
}

}  // namespace detail

/// Limit moment tau(t^k) of the ensemble's bulk law.
inline double limit_moment(const EnsembleSpec& spec, int k) {
  if (k < 0 || k > kDefaultMaxMomentDegree) throw DomainError("limit_moment: unsupported degree");
  switch (spec.kind) {
    case EnsembleKind::gue:
    case EnsembleKind::goe: {
      if (k % 2) return 0.0;
      int m = k / 2;
      return detail::binomial(2 * m, m) / (m + 1) * std::pow(0.5, m);
    }
    case EnsembleKind::haar: {
      double s = 0.0;
      for (double x : spec.base_eigenvalues) s += std::pow(x, k);
      return s / static_cast<double>(spec.base_eigenvalues.size());
    }
    case EnsembleKind::wishart: {
      if (k == 0) return 1.0;
      // Narayana polynomial
      double s = 0.0;
      for (int j = 1; j <= k; ++j)
        s += detail::binomial(k, j) * detail::binomial(k, j - 1) / k * std::pow(spec.lambda, j);
      return s;
    }
  }
  throw DomainError("limit_moment: no closed form for this ensemble");
}

struct TauEstimate {
  int n = 0;
  double tau_hat = 0.0;
  double tau_prime_hat = 0.0;
  double stderr_ = 0.0;        ///< of tau_hat
  double prime_stderr = 0.0;  ///< of tau_prime_hat, n * stderr_
};

/// tau_N(t^k) by Monte Carlo at each n, and n (tau_N - tau).
inline std::vector<TauEstimate> estimate_tau_pair(const EnsembleSpec& spec, int k, const std::vector<int>& n_values) {
  std::vector<TauEstimate> out;
  for (int n : n_values) {
    EnsembleSpec s = spec;
    s.n = n;
    double tau = limit_moment(s, k);
    std::vector<double> samples =
        map_trials(s, [k](const Matrix& a, std::uint64_t) { return detail::normalized_trace_power(a, k); });
    MeanEstimate e = mean_and_stderr(samples);
    out.push_back({n, e.mean, n * (e.mean - tau), e.stderr_, n * e.stderr_});
  }
  return out;
}

struct EntryEstimate {
  std::complex<double> mean;
  double stderr_ = 0.0;
};

/// Monte Carlo mean of (A^k)_{a,b}, 1-based indices.
inline EntryEstimate entry_moment(const EnsembleSpec& spec, int k, int a, int b) {
  if (a < 1 || b < 1 || a > spec.n || b > spec.n) throw DomainError("entry_moment: index out of range");
  if (k < 0) throw DomainError("entry_moment: negative degree");
  auto values = map_trials(spec, [&](const Matrix& m, std::uint64_t) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Unit(spec.n, b - 1);
    for (int i = 0; i < k; ++i) v = m * v;
    return v(a - 1);
  });
  std::vector<double> re, im;
  for (const auto& v : values) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  MeanEstimate er = mean_and_stderr(re), ei = mean_and_stderr(im);
  return {{er.mean, ei.mean}, std::hypot(er.stderr_, ei.stderr_)};
}

}  // namespace typeb
