#pragma once

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "purify/error.hpp"
#include "purify/fermion.hpp"
#include "purify/linalg.hpp"
#include "purify/rng.hpp"

namespace purify {

/// Dense Fock-space operators for n <= 5 modes (Jordan-Wigner).
/// Basis index bit mu is the occupation of mode mu.
class FockSpace {
 public:
  explicit FockSpace(int n) : n_(n), dim_(Eigen::Index{1} << n) {
    if (n < 1 || n > 5) throw SizeError("Fock oracle supports 1 <= n <= 5 modes");
    for (int mu = 0; mu < n; ++mu) {
      CMatrix a = CMatrix::Zero(dim_, dim_);
      for (Eigen::Index s = 0; s < dim_; ++s) {
        if (!((s >> mu) & 1)) continue;
        int parity = 0;
        for (int nu = 0; nu < mu; ++nu) parity += (s >> nu) & 1;
        a(s ^ (Eigen::Index{1} << mu), s) = (parity % 2) ? -1.0 : 1.0;
      }
      annihilators_.push_back(a);
      majoranas_.push_back(a + a.adjoint());
      majoranas_.push_back(cplx(0.0, 1.0) * (a - a.adjoint()));
    }
  }

  int modes() const { return n_; }
  Eigen::Index dimension() const { return dim_; }
  const CMatrix& a(int mu) const { return annihilators_[mu]; }
  const CMatrix& gamma(int i) const { return majoranas_[i]; }

  /// prod_mu (1 + i lambda_mu g_{2mu} g_{2mu+1}) / 2^n
  CMatrix product_state(const RVector& lambda) const {
    CMatrix rho = CMatrix::Identity(dim_, dim_);
    for (int mu = 0; mu < n_; ++mu) {
      const CMatrix f = CMatrix::Identity(dim_, dim_) +
                        cplx(0.0, lambda(mu)) * (majoranas_[2 * mu] * majoranas_[2 * mu + 1]);
      rho = rho * f;
    }
    return rho / static_cast<double>(dim_);
  }

  /// exp((1/4) sum_kl A_kl g_k g_l); conjugation by it maps M to e^A M e^{-A}.
  CMatrix majorana_unitary(const RMatrix& generator) const {
    CMatrix h = CMatrix::Zero(dim_, dim_);
    for (int k = 0; k < 2 * n_; ++k)
      for (int l = 0; l < 2 * n_; ++l)
        if (generator(k, l) != 0.0) h += 0.25 * generator(k, l) * (majoranas_[k] * majoranas_[l]);
    return h.exp();
  }

  /// exp(sum_ab h_ab a_a^dagger a_b); conjugation by it maps M to e^h M e^{-h}.
  CMatrix mode_unitary(const CMatrix& generator) const {
    CMatrix h = CMatrix::Zero(dim_, dim_);
    for (int x = 0; x < n_; ++x)
      for (int y = 0; y < n_; ++y) h += generator(x, y) * (annihilators_[x].adjoint() * annihilators_[y]);
    return h.exp();
  }

  RMatrix majorana_matrix(const CMatrix& rho) const {
    RMatrix m = RMatrix::Zero(2 * n_, 2 * n_);
    for (int i = 0; i < 2 * n_; ++i)
      for (int j = 0; j < 2 * n_; ++j) {
        const CMatrix comm = majoranas_[i] * majoranas_[j] - majoranas_[j] * majoranas_[i];
        m(i, j) = (cplx(0.0, 0.5) * (rho * comm).trace()).real();
      }
    return m;
  }

  CMatrix mode_matrix(const CMatrix& rho) const {
    CMatrix m(n_, n_);
    for (int x = 0; x < n_; ++x)
      for (int y = 0; y < n_; ++y)
        m(x, y) = 2.0 * (rho * annihilators_[x] * annihilators_[y].adjoint()).trace() - (x == y ? 1.0 : 0.0);
    return m;
  }

  /// Projector on mode j empty (a a^dagger) or filled (a^dagger a).
  CMatrix number_projector(int j, Branch branch) const {
    return branch == Branch::plus ? CMatrix(annihilators_[j] * annihilators_[j].adjoint())
                                  : CMatrix(annihilators_[j].adjoint() * annihilators_[j]);
  }

 private:
  int n_;
  Eigen::Index dim_;
  std::vector<CMatrix> annihilators_;
  std::vector<CMatrix> majoranas_;
};

/// Real antisymmetric logarithm of a rotation. An eigenvalue near -1 has no
/// unambiguous principal logarithm; such inputs are first composed with a
/// random rotation of angle 1e-8 and `nudged` is set.
inline RMatrix rotation_logarithm(const RMatrix& o, RngStream& rng, bool* nudged = nullptr) {
  RMatrix r = o;
  const Eigen::ComplexEigenSolver<CMatrix> es(o.cast<cplx>(), false);
  bool near_minus_one = false;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) + 1.0) < 1e-6) near_minus_one = true;
  if (near_minus_one) {
    RMatrix g = randmat::real_ginibre(o.rows(), o.cols(), rng);
    g = linalg::antisymmetrize(g);
    g *= 1e-8 / std::max(linalg::max_abs(g), 1e-300);
    r = o * g.exp();
    if (nudged) *nudged = true;
  }
  return linalg::antisymmetrize(RMatrix(r.log()));
}

struct FockBranch {
  double probability = 0.0;
  CMatrix rho;
  RMatrix majorana;
  CMatrix mode;
};

struct FockReport {
  CMatrix rho;             // dense input state
  RMatrix majorana;        // extracted before measurement
  CMatrix mode;
  FockBranch plus, minus;  // empty, filled
  bool nudged = false;
};

namespace detail {

inline FockReport measure_dense(const FockSpace& fs, const CMatrix& rho, int j) {
  FockReport rep;
  rep.rho = rho;
  rep.majorana = fs.majorana_matrix(rho);
  rep.mode = fs.mode_matrix(rho);
  for (Branch b : {Branch::plus, Branch::minus}) {
    FockBranch& out = b == Branch::plus ? rep.plus : rep.minus;
    const CMatrix p = fs.number_projector(j, b);
    out.probability = (p * rho).trace().real();
    if (out.probability > kZeroProbability) {
      out.rho = p * rho * p / out.probability;
      out.majorana = fs.majorana_matrix(out.rho);
      out.mode = fs.mode_matrix(out.rho);
    }
  }
  return rep;
}

/// Real Schur form of an antisymmetric matrix, M = Z C Z^T with Z in SO(2n)
/// and C canonical (signed Williamson values).
inline std::pair<RMatrix, RVector> majorana_normal_form(const RMatrix& m) {
  const Eigen::Index dim = m.rows(), n = dim / 2;
  Eigen::RealSchur<RMatrix> schur(m);
  RMatrix z = schur.matrixU();
  const RMatrix t = schur.matrixT();
  RVector lambda(n);
  // Blocks come as [[~0, b], [c, ~0]] with c = -b; 1x1 zero blocks are paired up.
  Eigen::Index i = 0, k = 0;
  std::vector<Eigen::Index> zeros;
  while (i < dim) {
    if (i + 1 < dim && std::abs(t(i + 1, i)) > 1e-14) {
      lambda(k++) = t(i, i + 1);
      i += 2;
    } else {
      zeros.push_back(i);
      i += 1;
    }
  }
  // Reorder columns so every mode occupies an adjacent pair.
  RMatrix zr(dim, dim);
  Eigen::Index col = 0;
  i = 0;
  while (i < dim) {
    if (i + 1 < dim && std::abs(t(i + 1, i)) > 1e-14) {
      zr.col(col++) = z.col(i);
      zr.col(col++) = z.col(i + 1);
      i += 2;
    } else {
      i += 1;
    }
  }
  for (Eigen::Index q = 0; q + 1 < static_cast<Eigen::Index>(zeros.size()); q += 2) {
    zr.col(col++) = z.col(zeros[q]);
    zr.col(col++) = z.col(zeros[q + 1]);
    lambda(k++) = 0.0;
  }
  if (zr.determinant() < 0.0) {
    zr.col(1) = -zr.col(1);
    lambda(0) = -lambda(0);
  }
  return {zr, lambda};
}

}  // namespace detail

/// Builds the dense state with Majorana matrix `m` as a rotated product state
/// and measures mode j with dense number projectors.
inline FockReport fock_oracle(const MajoranaCorrelationMatrix& m, int j, RngStream& rng) {
  validate_shape(m);
  const int n = static_cast<int>(m.modes());
  const FockSpace fs(n);
  if (j < 0 || j >= n) throw InvalidDimension("mode index out of range");
  auto [z, lambda] = detail::majorana_normal_form(m.entries);
  bool nudged = false;
  const RMatrix a = rotation_logarithm(z, rng, &nudged);
  const CMatrix u = fs.majorana_unitary(a);
  const CMatrix rho = u * fs.product_state(lambda) * u.adjoint();
  FockReport rep = detail::measure_dense(fs, linalg::hermitize(rho), j);
  rep.nudged = nudged;
  return rep;
}

/// Number-conserving route: M = U diag(eta) U^dagger built from the
/// single-particle generator log U.
inline FockReport fock_oracle(const ModeCorrelationMatrix& m, int j) {
  validate(m);
  const int n = static_cast<int>(m.modes());
  const FockSpace fs(n);
  if (j < 0 || j >= n) throw InvalidDimension("mode index out of range");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m.entries);
  const CMatrix u = es.eigenvectors();
  const CMatrix h = CMatrix(u.log());
  const CMatrix fu = fs.mode_unitary(h);
  const CMatrix rho = fu * fs.product_state(es.eigenvalues()) * fu.adjoint();
  return detail::measure_dense(fs, linalg::hermitize(rho), j);
}

}  // namespace purify
