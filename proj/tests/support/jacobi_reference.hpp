#pragma once

// Slow reference eigensolver for tests: cyclic Jacobi on the real symmetric
// 2n x 2n embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix. Every
// eigenvalue of the embedding appears twice.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace typeb_test {

inline std::vector<double> jacobi_eigenvalues(const std::vector<std::vector<std::complex<double>>>& h) {
  const std::size_t n = h.size(), m = 2 * n;
  std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = a[i + n][j + n] = h[i][j].real();
      a[i][j + n] = -h[i][j].imag();
      a[i + n][j] = h[i][j].imag();
    }
  double norm = 0.0;
  for (auto& row : a)
    for (double x : row) norm += x * x;
  norm = std::sqrt(norm);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) off += 2.0 * a[p][q] * a[p][q];
    if (std::sqrt(off) < 1e-14 * std::max(1.0, norm)) break;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) {
        if (a[p][q] == 0.0) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> d(m);
  for (std::size_t i = 0; i < m; ++i) d[i] = a[i][i];
  std::sort(d.begin(), d.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < m; i += 2) out.push_back(0.5 * (d[i] + d[i + 1]));
  return out;
}

}  // namespace typeb_test
