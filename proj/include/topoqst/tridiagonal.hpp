#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace topo {

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
///
/// `vectors` is stored row-major with one eigenvector per row:
/// component k of eigenvector j is `vectors[j * size() + k]`. Eigenvalues are
/// ascending and rows follow the same order.
struct TridiagonalEigensystem {
  std::vector<double> values;
  std::vector<double> vectors;

  std::size_t size() const noexcept { return values.size(); }
  double component(std::size_t j, std::size_t k) const { return vectors[j * size() + k]; }
};

/// Implicit-shift QL iteration (EISPACK tql2 lineage) on the matrix with
/// diagonal `diag` (length n) and off-diagonal `offdiag` (length n-1).
/// `out` is resized as needed, so a caller looping over many matrices of the
/// same size pays for allocation once.
void tridiagonal_eigensystem(std::span<const double> diag, std::span<const double> offdiag,
                             TridiagonalEigensystem& out);

/// Eigenvalues only (same iteration without the rotation accumulation), ascending.
std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag,
                                            std::span<const double> offdiag);

}  // namespace topo
