#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <random>

#include "support/jacobi_reference.hpp"
#include "typeb/rmt.hpp"

using namespace typeb;

namespace {

EnsembleSpec make(EnsembleKind kind, int n, int trials, std::uint64_t seed, std::vector<double> spikes = {}) {
  EnsembleSpec s;
  s.kind = kind;
  s.n = n;
  s.trials = trials;
  s.seed = seed;
  s.spikes = SpikeSet(std::move(spikes));
  return s;
}

EnsembleSpec haar_pm1(int n, int trials, std::uint64_t seed) {
  EnsembleSpec s = make(EnsembleKind::haar, n, trials, seed);
  s.base_eigenvalues = {-1.0, 1.0};
  return s;
}

MeanEstimate trace_power_mean(const EnsembleSpec& spec, int k) {
  return mean_and_stderr(
      map_trials(spec, [k](const Matrix& a, std::uint64_t) { return detail::normalized_trace_power(a, k); }));
}

int count_above(const std::vector<double>& ev, double x) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [x](double v) { return v > x; }));
}

}  // namespace

TEST(Sampler, GueSecondMomentIsOneHalf) {
  // sum of E|A_ij|^2 = N^2 / (2N)
  MeanEstimate e = trace_power_mean(make(EnsembleKind::gue, 100, 400, 11), 2);
  EXPECT_LE(std::abs(e.mean - 0.5), 3.0 * e.stderr_);
}

TEST(Sampler, GoeSecondMomentCarriesFirstOrderTerm) {
  MeanEstimate e = trace_power_mean(make(EnsembleKind::goe, 100, 400, 12), 2);
  EXPECT_LE(std::abs(e.mean - 0.505), 3.0 * e.stderr_);
}

TEST(Sampler, HaarConjugationPreservesSpectrum) {
  std::vector<double> ev = hermitian_eigenvalues(sample_matrix(haar_pm1(40, 1, 3), 0));
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(ev[i], -1.0, 1e-10);
  for (int i = 20; i < 40; ++i) EXPECT_NEAR(ev[i], 1.0, 1e-10);
}

TEST(Sampler, GoeIsRealSymmetric) {
  Matrix m = sample_matrix(make(EnsembleKind::goe, 20, 1, 5), 0);
  EXPECT_EQ(m.imag().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((m - m.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sampler, SpikesAreAddedOnTheDiagonal) {
  EnsembleSpec plain = make(EnsembleKind::gue, 10, 1, 9);
  EnsembleSpec spiked = make(EnsembleKind::gue, 10, 1, 9, {4.0, -2.0});
  Matrix d = sample_matrix(spiked, 0) - sample_matrix(plain, 0);
  EXPECT_NEAR(d(0, 0).real(), 4.0, 1e-14);
  EXPECT_NEAR(d(1, 1).real(), -2.0, 1e-14);
  d(0, 0) = d(1, 1) = 0.0;
  EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Sampler, WishartUsesSigmaSqrtConjugation) {
  // E (1/N) Tr(Sigma B B*) = p/N * (1/N) Tr Sigma
  EnsembleSpec s = make(EnsembleKind::wishart, 50, 300, 21);
  s.lambda = 0.5;
  s.sigma_spikes = SpikeSet({6.0});
  MeanEstimate e = trace_power_mean(s, 1);
  double expected = 25.0 / 50.0 * (49.0 + 6.0) / 50.0;
  EXPECT_LE(std::abs(e.mean - expected), 3.0 * e.stderr_);
}

TEST(Sampler, RejectsInvalidSpecs) {
  EXPECT_THROW(sample_matrix(make(EnsembleKind::gue, 1, 1, 0, {1.0, 2.0}), 0), ConfigError);
  EXPECT_THROW(sample_matrix(make(EnsembleKind::gue, 10, 0, 0), 0), ConfigError);
  EXPECT_THROW(sample_matrix(make(EnsembleKind::haar, 10, 1, 0), 0), ConfigError);
  EnsembleSpec w = make(EnsembleKind::wishart, 10, 1, 0);
  w.lambda = 0.01;
  EXPECT_THROW(sample_matrix(w, 0), ConfigError);
  EXPECT_THROW(parse_ensemble("gse"), ConfigError);
}

TEST(Eigen, DiagonalAndTwoByTwo) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  d(2, 2) = 2.0;
  EXPECT_EQ(hermitian_eigenvalues(d), (std::vector<double>{1.0, 2.0, 3.0}));
  Matrix x(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  std::vector<double> ev = hermitian_eigenvalues(x);
  EXPECT_NEAR(ev[0], -1.0, 1e-15);
  EXPECT_NEAR(ev[1], 1.0, 1e-15);
}

TEST(Eigen, MatchesJacobiReference) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  const int n = 50;
  std::vector<std::vector<std::complex<double>>> h(n, std::vector<std::complex<double>>(n));
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      std::complex<double> v(g(rng), i == j ? 0.0 : g(rng));
      h[i][j] = v;
      h[j][i] = std::conj(v);
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  std::vector<double> fast = hermitian_eigenvalues(m), slow = typeb_test::jacobi_eigenvalues(h);
  ASSERT_EQ(fast.size(), slow.size());
  for (int i = 0; i < n; ++i) EXPECT_NEAR(fast[i], slow[i], 1e-8);
}

TEST(Eigen, RejectsNonHermitian) {
  Matrix m(2, 2);
  m << 0.0, 1.0, 0.5, 0.0;
  EXPECT_THROW(hermitian_eigenvalues(m), DomainError);
}

TEST(Spectrum, SupercriticalSpikeGivesOneOutlier) {
  auto spectra = sample_spectra(make(EnsembleKind::gue, 100, 40, 1, {4.0}));
  int good = 0;
  for (const auto& ev : spectra) good += count_above(ev, 2.0) == 1;
  EXPECT_GE(good, 38);
}

TEST(Spectrum, SubcriticalSpikeGivesNoOutlier) {
  auto spectra = sample_spectra(make(EnsembleKind::gue, 100, 40, 1, {0.4}));
  int good = 0;
  for (const auto& ev : spectra) good += count_above(ev, 2.0) == 0;
  EXPECT_GE(good, 38);
}

TEST(Spectrum, HistogramConservesEigenvalues) {
  for (auto spec : {make(EnsembleKind::gue, 100, 10, 4, {4.0}), haar_pm1(30, 5, 2)}) {
    Histogram h = averaged_spectrum(spec, 37, {-1.0, 1.0});  // narrow range: clamping in play
    double total = 0.0;
    for (double c : h.mean_counts) total += c;
    EXPECT_NEAR(total, spec.n, 1e-9);
    EXPECT_EQ(h.edges.size(), 38u);
  }
  EXPECT_THROW(averaged_spectrum(make(EnsembleKind::gue, 5, 1, 0), 10, {1.0, 1.0}), ConfigError);
}

TEST(TauPair, GueSecondMomentHasNoFirstOrderTerm) {
  for (const TauEstimate& e : estimate_tau_pair(make(EnsembleKind::gue, 0, 500, 31), 2, {50, 100}))
    EXPECT_LE(std::abs(e.tau_prime_hat), 3.0 * e.prime_stderr) << "N = " << e.n;
}

TEST(TauPair, GoeSecondMomentFirstOrderTermIsOneHalf) {
  for (const TauEstimate& e : estimate_tau_pair(make(EnsembleKind::goe, 0, 500, 32), 2, {50, 100}))
    EXPECT_LE(std::abs(e.tau_prime_hat - 0.5), 3.0 * e.prime_stderr) << "N = " << e.n;
}

TEST(TauPair, GueFourthMomentConverges) {
  auto est = estimate_tau_pair(make(EnsembleKind::gue, 0, 200, 33), 4, {20, 80});
  EXPECT_LT(std::abs(est[1].tau_hat - 0.5), std::abs(est[0].tau_hat - 0.5));
  EXPECT_NEAR(est[1].tau_hat, 0.5, 0.01);
  // GUE: tau_N(t^4) = 1/2 + 1/(4 N^2), so N(tau_N - tau) shrinks like 1/N
  for (const auto& e : est) EXPECT_LE(std::abs(e.tau_prime_hat), 3.0 * e.prime_stderr + 1.0 / e.n);
}

TEST(TauPair, ClosedFormMoments) {
  EnsembleSpec w = make(EnsembleKind::wishart, 10, 1, 0);
  w.lambda = 2.0;
  EXPECT_DOUBLE_EQ(limit_moment(w, 2), 6.0);
  EXPECT_DOUBLE_EQ(limit_moment(make(EnsembleKind::gue, 10, 1, 0), 6), 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(limit_moment(haar_pm1(10, 1, 0), 3), 0.0);
  EXPECT_THROW(limit_moment(make(EnsembleKind::gue, 10, 1, 0), 40), DomainError);
}

TEST(EntryMoment, HaarDiagonalAndOffDiagonal) {
  EnsembleSpec s = haar_pm1(32, 300, 41);
  EntryEstimate d = entry_moment(s, 2, 1, 1);
  EXPECT_NEAR(d.mean.real(), 1.0, 1e-12);  // A^2 = I exactly
  EntryEstimate o = entry_moment(s, 1, 1, 2);
  EXPECT_LE(std::abs(o.mean), 3.0 * o.stderr_);
  EntryEstimate o3 = entry_moment(s, 3, 1, 2);
  EXPECT_LE(std::abs(o3.mean), 3.0 * o3.stderr_);
}

TEST(EntryMoment, GueDiagonal) {
  EntryEstimate e = entry_moment(make(EnsembleKind::gue, 64, 400, 42), 2, 1, 1);
  EXPECT_LE(std::abs(e.mean - 0.5), 3.0 * e.stderr_);
  EXPECT_THROW(entry_moment(make(EnsembleKind::gue, 4, 1, 0), 2, 5, 1), DomainError);
}

// Properties

TEST(RmtProperty, SamplingIsDeterministicAndOrderFree) {
  EnsembleSpec s = make(EnsembleKind::gue, 30, 7, 123, {2.0});
  auto serial = map_trials(s, [](const Matrix& m, std::uint64_t) { return m; }, 1);
  auto parallel = map_trials(s, [](const Matrix& m, std::uint64_t) { return m; }, 3);
  for (int t = 0; t < 7; ++t) {
    EXPECT_TRUE(serial[t] == parallel[t]);
    EXPECT_TRUE(serial[t] == sample_matrix(s, t));
  }
  EXPECT_FALSE(serial[0] == serial[1]);
}

TEST(RmtProperty, SpectrumConservation) {
  for (auto kind : {EnsembleKind::gue, EnsembleKind::goe, EnsembleKind::wishart}) {
    EnsembleSpec s = make(kind, 60, 3, 5);
    for (int t = 0; t < 3; ++t) {
      Matrix m = sample_matrix(s, t);
      std::vector<double> ev = hermitian_eigenvalues(m);
      double norm = m.norm(), s1 = 0.0, s2 = 0.0;
      for (double x : ev) {
        s1 += x;
        s2 += x * x;
      }
      EXPECT_NEAR(s1, m.trace().real(), 1e-9 * 60 * norm);
      EXPECT_NEAR(s2, (m * m).trace().real(), 1e-9 * 60 * norm * norm);
    }
  }
}

TEST(RmtProperty, HaarDiagonalEntriesAreIndexFree) {
  EnsembleSpec s = haar_pm1(64, 300, 8);
  s.base_eigenvalues = {-1.0, 0.5, 2.0};
  for (int k : {1, 3}) {
    EntryEstimate a = entry_moment(s, k, 1, 1), b = entry_moment(s, k, 32, 32);
    EXPECT_LT(std::abs(a.mean - b.mean), 4.0 * std::hypot(a.stderr_, b.stderr_)) << "k = " << k;
  }
}

TEST(RmtProperty, WishartBulkMatchesMarchenkoPastur) {
  EnsembleSpec s = make(EnsembleKind::wishart, 200, 20, 17);
  Histogram h = averaged_spectrum(s, 40, {0.0, 4.0});
  boost::math::quadrature::tanh_sinh<double> q;
  // oracle: sqrt(t (4 - t)) / (2 pi t)
  auto rho = [](double t) { return std::sqrt(std::max(0.0, t * (4.0 - t))) / (2.0 * kPi * t); };
  for (std::size_t b = 5; b + 3 < h.bins(); ++b) {
    double expected = 200.0 * q.integrate(rho, h.edges[b], h.edges[b + 1]);
    EXPECT_LE(std::abs(h.mean_counts[b] - expected), 3.0 * h.stderrs[b]) << "bin " << b;
  }
}
