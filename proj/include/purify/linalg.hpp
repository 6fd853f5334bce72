#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace purify {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

namespace linalg {

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// (A + A^dagger) / 2
inline CMatrix hermitize(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// (A - A^T) / 2
inline RMatrix antisymmetrize(const RMatrix& a) { return 0.5 * (a - a.transpose()); }

inline double hermiticity_defect(const CMatrix& a) { return max_abs(a - a.adjoint()); }

inline double antisymmetry_defect(const RMatrix& a) { return max_abs(a + a.transpose()); }

inline double unitarity_defect(const CMatrix& u) {
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.cols(), u.cols()));
}

inline double orthogonality_defect(const RMatrix& o) {
  return max_abs(o.transpose() * o - RMatrix::Identity(o.cols(), o.cols()));
}

/// Eigenvalues of a Hermitian matrix, ascending.
inline RVector hermitian_eigenvalues(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline RVector symmetric_eigenvalues(const RMatrix& h) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// tr(A B) for Hermitian A, B without forming the product.
inline double trace_product_hermitian(const CMatrix& a, const CMatrix& b) {
  return (a.transpose().cwiseProduct(b)).sum().real();
}

/// Determinant of a small real matrix with sign, via partial-pivot LU.
inline double determinant(const RMatrix& m) { return m.determinant(); }

}  // namespace linalg
}  // namespace purify
