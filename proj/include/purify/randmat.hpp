#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "purify/error.hpp"
#include "purify/linalg.hpp"
#include "purify/rng.hpp"

namespace purify {

/// Haar-distributed element of U(N).
struct HaarUnitary {
  CMatrix entries;
  Eigen::Index dimension() const { return entries.rows(); }
};

/// Haar-distributed element of SO(m), m even.
struct SpecialOrthogonal {
  RMatrix entries;
  Eigen::Index dimension() const { return entries.rows(); }
};

/// Orthogonal projector of a given rank.
struct Projector {
  CMatrix entries;
  Eigen::Index rank = 0;
  Eigen::Index dimension() const { return entries.rows(); }
};

namespace randmat {

inline CMatrix ginibre(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  CMatrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.complex_normal();
  return g;
}

inline RMatrix real_ginibre(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  RMatrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
  return g;
}

/// First `cols` columns of a Haar unitary of size `rows`: QR of a complex
/// Ginibre block with the R-diagonal phases moved into Q.
inline CMatrix haar_isometry(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  CMatrix g = ginibre(rows, cols, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(rows, cols);
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const cplx rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= (a > 0.0 ? rjj / a : cplx(1.0));
  }
  return q;
}

}  // namespace randmat

inline HaarUnitary sample_haar_unitary(Eigen::Index n, RngStream& rng) {
  if (n < 1) throw InvalidDimension("Haar unitary dimension must be >= 1, got " + std::to_string(n));
  return {randmat::haar_isometry(n, n, rng)};
}

inline SpecialOrthogonal sample_haar_special_orthogonal(Eigen::Index m, RngStream& rng) {
  if (m < 2 || m % 2 != 0)
    throw InvalidDimension("SO(m) sampling needs even m >= 2, got " + std::to_string(m));
  RMatrix g = randmat::real_ginibre(m, m, rng);
  Eigen::HouseholderQR<RMatrix> qr(g);
  RMatrix q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  // Haar on O(m); a fixed reflection maps the det = -1 coset onto SO(m).
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return {std::move(q)};
}

inline Projector sample_random_projector(Eigen::Index n, Eigen::Index rank, RngStream& rng) {
  if (n < 1) throw InvalidDimension("projector dimension must be >= 1");
  if (rank <= 0 || rank >= n)
    throw InvalidRank("projector rank must lie in (0, N): rank=" + std::to_string(rank) +
                      ", N=" + std::to_string(n));
  CMatrix v = randmat::haar_isometry(n, rank, rng);
  CMatrix p = v * v.adjoint();
  return {linalg::hermitize(p), rank};
}

/// Compression E^dagger P E of a Haar rank-r projector in dimension N onto a
/// fixed d-dimensional subspace, stored through factors
///   B = plus * plus^dagger,   I - B = minus * minus^dagger.
///
/// With E^dagger U = L^{-1} [G1 G2] for Gaussian blocks G1 (d x r) and
/// G2 (d x (N - r)), B depends on G1 G1^dagger and G2 G2^dagger only, which are
/// independent complex Wishart matrices. When d does not exceed the degrees of
/// freedom they are drawn from the Bartlett decomposition, so the cost is
/// O(d^3) regardless of N.
struct CompressedProjector {
  CMatrix plus;
  CMatrix minus;

  CMatrix compression() const { return plus * plus.adjoint(); }
};

namespace randmat {

/// F with F F^dagger ~ complex Wishart_d(dof, I) (unit-variance entries).
inline CMatrix wishart_factor(Eigen::Index d, Eigen::Index dof, RngStream& rng) {
  if (d > dof) return ginibre(d, dof, rng);
  CMatrix t = CMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    t(i, i) = std::sqrt(rng.gamma(static_cast<double>(dof - i)));
    for (Eigen::Index j = 0; j < i; ++j) t(i, j) = rng.complex_normal();
  }
  return t;
}

}  // namespace randmat

inline CompressedProjector sample_projector_compression(Eigen::Index d, Eigen::Index n, Eigen::Index rank,
                                                        RngStream& rng) {
  if (d < 1 || d > n) throw InvalidDimension("compression dimension must lie in [1, N]");
  if (rank <= 0 || rank >= n) throw InvalidRank("projector rank must lie in (0, N)");
  CMatrix f1 = randmat::wishart_factor(d, rank, rng);
  CMatrix f2 = randmat::wishart_factor(d, n - rank, rng);
  CMatrix gram = f1 * f1.adjoint();
  gram.noalias() += f2 * f2.adjoint();
  Eigen::LLT<CMatrix> llt(gram);
  CompressedProjector out;
  out.plus = llt.matrixL().solve(f1);
  out.minus = llt.matrixL().solve(f2);
  return out;
}

}  // namespace purify
