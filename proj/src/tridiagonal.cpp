#include "topoqst/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "topoqst/errors.hpp"

namespace topo {
namespace {

constexpr int kMaxIterationsPerEigenvalue = 60;

// Entries are pre-scaled to |x| <= 1, so the naive form cannot overflow.
inline double pythag(double a, double b) { return std::sqrt(a * a + b * b); }

// d: diagonal (overwritten with eigenvalues), e: sub-diagonal with e[i]
// coupling i and i+1, e[n-1] = 0 (destroyed). z: row j holds eigenvector j.
template <bool kWantVectors>
void ql_implicit(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z) {
  const std::size_t n = d.size();
  const double eps = std::numeric_limits<double>::epsilon();
  double shift_total = 0.0;
  double tst1 = 0.0;

  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxIterationsPerEigenvalue) {
          throw NumericalError("tridiagonal QL iteration did not converge", l);
        }
        // Wilkinson-type shift from the leading 2x2 block.
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = pythag(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        shift_total += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = pythag(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if constexpr (kWantVectors) {
            double* zi = &z[ii * n];
            double* zi1 = &z[(ii + 1) * n];
            for (std::size_t k = 0; k < n; ++k) {
              const double t = zi1[k];
              zi1[k] = s * zi[k] + c * t;
              zi[k] = c * zi[k] - s * t;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += shift_total;
    e[l] = 0.0;
  }

  // Selection sort keeps rows of z paired with their eigenvalue.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t k = i;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[j] < d[k]) k = j;
    }
    if (k != i) {
      std::swap(d[i], d[k]);
      if constexpr (kWantVectors) {
        std::swap_ranges(z.begin() + static_cast<std::ptrdiff_t>(i * n),
                         z.begin() + static_cast<std::ptrdiff_t>((i + 1) * n),
                         z.begin() + static_cast<std::ptrdiff_t>(k * n));
      }
    }
  }
}

double prepare(std::span<const double> diag, std::span<const double> offdiag,
               std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = diag.size();
  if (n == 0) throw ConfigError("tridiagonal matrix must have at least one row");
  if (offdiag.size() + 1 != n) {
    throw ConfigError("off-diagonal length must be one less than the diagonal length");
  }
  double scale = 0.0;
  bool finite = true;
  for (double x : diag) {
    finite = finite && std::isfinite(x);
    scale = std::max(scale, std::abs(x));
  }
  for (double x : offdiag) {
    finite = finite && std::isfinite(x);
    scale = std::max(scale, std::abs(x));
  }
  if (!finite) throw ConfigError("tridiagonal matrix has non-finite entries");
  if (scale == 0.0) scale = 1.0;

  d.resize(n);
  e.resize(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] / scale;
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = offdiag[i] / scale;
  e[n - 1] = 0.0;
  return scale;
}

}  // namespace

void tridiagonal_eigensystem(std::span<const double> diag, std::span<const double> offdiag,
                             TridiagonalEigensystem& out) {
  thread_local std::vector<double> e;
  const double scale = prepare(diag, offdiag, out.values, e);
  const std::size_t n = diag.size();
  out.vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + i] = 1.0;
  ql_implicit<true>(out.values, e, out.vectors);
  for (double& v : out.values) v *= scale;
}

std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag,
                                            std::span<const double> offdiag) {
  std::vector<double> d, e, unused;
  const double scale = prepare(diag, offdiag, d, e);
  ql_implicit<false>(d, e, unused);
  for (double& v : d) v *= scale;
  return d;
}

}  // namespace topo
