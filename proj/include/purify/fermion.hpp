#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "purify/error.hpp"
#include "purify/linalg.hpp"
#include "purify/manybody.hpp"
#include "purify/parallel.hpp"
#include "purify/randmat.hpp"
#include "purify/rng.hpp"
#include "purify/stats.hpp"

namespace purify {

inline constexpr double kLog2 = std::numbers::ln2;

/// n x n Hermitian, M_{mu nu} = 2 tr(rho a_mu a_nu^dagger) - delta_{mu nu}.
/// A diagonal entry +1 means the mode is certainly empty.
struct ModeCorrelationMatrix {
  CMatrix entries;
  Eigen::Index modes() const { return entries.rows(); }
};

/// 2n x 2n real antisymmetric, M_ij = (i/2) tr(rho [g_i, g_j]) with
/// g_{2mu-1} = a + a^dagger, g_{2mu} = i (a - a^dagger). Zero-based index
/// 2j, 2j+1 holds mode j, and M_{2j,2j+1} = M_{jj} of the mode matrix.
struct MajoranaCorrelationMatrix {
  RMatrix entries;
  Eigen::Index modes() const { return entries.rows() / 2; }
};

/// Branch::plus is "empty" with probability (1 + alpha)/2; Branch::minus "filled".
struct FermionOutcome {
  Branch branch = Branch::none;
  double p_plus = 0.5;
  double p_minus = 0.5;

  double probability() const { return branch == Branch::minus ? p_minus : p_plus; }
};

enum class FermionVariant { conserving, general };

inline std::string_view to_string(FermionVariant v) { return v == FermionVariant::conserving ? "conserving" : "general"; }

inline FermionVariant parse_variant(std::string_view s) {
  if (s == "conserving") return FermionVariant::conserving;
  if (s == "general") return FermionVariant::general;
  throw ConfigError("unknown fermion variant '" + std::string(s) + "' (expected conserving or general)");
}

// ---------------------------------------------------------------------------
// Representations and invariants.
// ---------------------------------------------------------------------------

inline void validate(const ModeCorrelationMatrix& m) {
  if (m.entries.rows() != m.entries.cols() || m.entries.rows() < 1) throw InvalidState("mode matrix must be square");
  if (linalg::hermiticity_defect(m.entries) > 1e-12) throw InvalidState("mode matrix is not Hermitian");
  const RVector ev = linalg::hermitian_eigenvalues(m.entries);
  if (ev(0) < -1.0 - 1e-9 || ev(ev.size() - 1) > 1.0 + 1e-9) throw InvalidState("mode matrix eigenvalue outside [-1, 1]");
}

inline void validate_shape(const MajoranaCorrelationMatrix& m) {
  const auto& a = m.entries;
  if (a.rows() != a.cols() || a.rows() < 2 || a.rows() % 2 != 0)
    throw InvalidState("Majorana matrix must be 2n x 2n");
  if (linalg::antisymmetry_defect(a) > 1e-12) throw InvalidState("Majorana matrix is not antisymmetric");
}

/// Real 2x2-block image of a complex matrix: z -> [[Re z, -Im z], [Im z, Re z]].
inline RMatrix embed_complex(const CMatrix& z) {
  const Eigen::Index n = z.rows();
  RMatrix out(2 * z.rows(), 2 * z.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const cplx v = z(i, j);
      out(2 * i, 2 * j) = v.real();
      out(2 * i, 2 * j + 1) = -v.imag();
      out(2 * i + 1, 2 * j) = v.imag();
      out(2 * i + 1, 2 * j + 1) = v.real();
    }
  return out;
}

/// Majorana matrix of a number-conserving state: the block image of -i M.
inline MajoranaCorrelationMatrix to_majorana(const ModeCorrelationMatrix& m) {
  return {linalg::antisymmetrize(embed_complex(cplx(0.0, -1.0) * m.entries))};
}

inline SpecialOrthogonal embed_mode_unitary(const CMatrix& u) {
  if (u.rows() != u.cols() || linalg::unitarity_defect(u) > 1e-10)
    throw InvalidState("embed_mode_unitary needs a unitary matrix");
  return {embed_complex(u)};
}

/// Williamson values, descending, from the eigenvalues +-i lambda of M.
inline RVector williamson(const MajoranaCorrelationMatrix& m) {
  validate_shape(m);
  const RMatrix a = linalg::antisymmetrize(m.entries);
  // A^T A = -A^2 has eigenvalues lambda^2, each twice.
  const RVector ev = linalg::symmetric_eigenvalues(a.transpose() * a);
  const Eigen::Index n = m.modes();
  RVector out(n);
  for (Eigen::Index k = 0; k < n; ++k) out(k) = std::sqrt(std::max(ev(2 * n - 1 - 2 * k), 0.0));
  return out;
}

inline void validate(const MajoranaCorrelationMatrix& m) {
  validate_shape(m);
  const RVector w = williamson(m);
  if (w(0) > 1.0 + 1e-9) throw InvalidState("Williamson value exceeds 1");
}

/// Block-diagonal canonical matrix with block k = lambda_k [[0, 1], [-1, 0]].
inline MajoranaCorrelationMatrix canonical_majorana(const RVector& lambda) {
  const Eigen::Index n = lambda.size();
  RMatrix m = RMatrix::Zero(2 * n, 2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    m(2 * k, 2 * k + 1) = lambda(k);
    m(2 * k + 1, 2 * k) = -lambda(k);
  }
  return {m};
}

namespace detail {

inline double clamp_proxy(double s, Eigen::Index n) {
  const double hi = static_cast<double>(n) * kLog2;
  if (s < 0.0 && s > -1e-9) return 0.0;
  if (s > hi && s < hi + 1e-9) return hi;
  return s;
}

}  // namespace detail

/// (log 2)(n + tr M^2 / 2), in nats.
inline double s_proxy(const MajoranaCorrelationMatrix& m) {
  return detail::clamp_proxy(kLog2 * (static_cast<double>(m.modes()) - 0.5 * m.entries.squaredNorm()), m.modes());
}

/// (log 2)(n - tr M^2), in nats.
inline double s_proxy(const ModeCorrelationMatrix& m) {
  return detail::clamp_proxy(kLog2 * (static_cast<double>(m.modes()) - m.entries.squaredNorm()), m.modes());
}

inline double renyi2(const MajoranaCorrelationMatrix& m) {
  const RVector w = williamson(m);
  double s = static_cast<double>(m.modes()) * kLog2;
  for (double l : w) s -= std::log1p(l * l);
  return s;
}

/// Second Renyi entropy from the mode matrix spectrum eta: lambda = |eta|.
inline double renyi2(const ModeCorrelationMatrix& m) {
  const RVector ev = linalg::hermitian_eigenvalues(m.entries);
  double s = static_cast<double>(m.modes()) * kLog2;
  for (double l : ev) s -= std::log1p(l * l);
  return s;
}

inline MajoranaCorrelationMatrix apply_rotation(const MajoranaCorrelationMatrix& m, const SpecialOrthogonal& o) {
  if (o.dimension() != m.entries.rows()) throw InvalidDimension("rotation and state dimensions differ");
  return {linalg::antisymmetrize(o.entries * m.entries * o.entries.transpose())};
}

inline ModeCorrelationMatrix apply_mode_unitary(const ModeCorrelationMatrix& m, const CMatrix& u) {
  if (u.rows() != m.modes() || u.cols() != m.modes()) throw InvalidDimension("unitary and state dimensions differ");
  return {linalg::hermitize(u * m.entries * u.adjoint())};
}

// ---------------------------------------------------------------------------
// Single-mode number measurement.
// ---------------------------------------------------------------------------

namespace detail {

inline FermionOutcome outcome_probabilities(double alpha) {
  const double a = std::clamp(alpha, -1.0, 1.0);
  return {Branch::none, 0.5 * (1.0 + a), 0.5 * (1.0 - a)};
}

inline FermionOutcome sample_outcome(double alpha, RngStream& rng) {
  FermionOutcome o = outcome_probabilities(alpha);
  const double u = rng.uniform();
  if (o.p_plus < kZeroProbability)
    o.branch = Branch::minus;
  else if (o.p_minus < kZeroProbability)
    o.branch = Branch::plus;
  else
    o.branch = u < o.p_plus ? Branch::plus : Branch::minus;
  return o;
}

}  // namespace detail

/// Post-measurement mode matrix for a given branch (plus = empty).
inline ModeCorrelationMatrix conserving_branch(const ModeCorrelationMatrix& m, Eigen::Index j, Branch branch) {
  const Eigen::Index n = m.modes();
  if (j < 0 || j >= n) throw InvalidDimension("mode index out of range");
  const double s = branch == Branch::plus ? 1.0 : -1.0;
  const double denom = 1.0 + s * m.entries(j, j).real();
  if (denom < 2.0 * kZeroProbability) throw ZeroProbabilityBranch("measured branch has zero probability");
  const CVector col = m.entries.col(j);
  CMatrix out = m.entries - s * (col * m.entries.row(j)) / denom;
  out.row(j).setZero();
  out.col(j).setZero();
  out(j, j) = s;
  return {linalg::hermitize(out)};
}

inline std::pair<ModeCorrelationMatrix, FermionOutcome> measure_mode_conserving(const ModeCorrelationMatrix& m,
                                                                               Eigen::Index j, RngStream& rng) {
  if (j < 0 || j >= m.modes()) throw InvalidDimension("mode index out of range");
  FermionOutcome o = detail::sample_outcome(m.entries(j, j).real(), rng);
  return {conserving_branch(m, j, o.branch), o};
}

/// K and Q localized on the Majorana pair of mode j.
inline RMatrix pair_k(Eigen::Index dim, Eigen::Index j) {
  RMatrix k = RMatrix::Zero(dim, dim);
  k(2 * j, 2 * j + 1) = 1.0;
  k(2 * j + 1, 2 * j) = -1.0;
  return k;
}

inline MajoranaCorrelationMatrix general_branch(const MajoranaCorrelationMatrix& m, Eigen::Index j, Branch branch) {
  const Eigen::Index n = m.modes();
  if (j < 0 || j >= n) throw InvalidDimension("mode index out of range");
  const Eigen::Index dim = 2 * n;
  const double s = branch == Branch::plus ? 1.0 : -1.0;
  const double alpha = m.entries(2 * j, 2 * j + 1);
  const double denom = 1.0 + s * alpha;
  if (denom < 2.0 * kZeroProbability) throw ZeroProbabilityBranch("measured branch has zero probability");
  const RMatrix k = pair_k(dim, j);
  RMatrix inner = m.entries + (s / denom) * (m.entries * k * m.entries);
  // P (.) P with P = 1 - Q zeroes the two rows and columns of mode j.
  inner.middleRows(2 * j, 2).setZero();
  inner.middleCols(2 * j, 2).setZero();
  return {linalg::antisymmetrize(s * k + inner)};
}

inline std::pair<MajoranaCorrelationMatrix, FermionOutcome> measure_mode_general(const MajoranaCorrelationMatrix& m,
                                                                                Eigen::Index j, RngStream& rng) {
  if (j < 0 || j >= m.modes()) throw InvalidDimension("mode index out of range");
  FermionOutcome o = detail::sample_outcome(m.entries(2 * j, 2 * j + 1), rng);
  return {general_branch(m, j, o.branch), o};
}

/// Outcome-averaged change of S_proxy, closed form. Zero for a pure mode.
inline double delta_s_proxy_conserving(const ModeCorrelationMatrix& m, Eigen::Index j) {
  if (j < 0 || j >= m.modes()) throw InvalidDimension("mode index out of range");
  const double eta = m.entries(j, j).real();
  if (std::abs(eta) >= 1.0 - 1e-12) return 0.0;
  const double sq = m.entries.row(j).squaredNorm();  // (M^2)_jj
  return -kLog2 / (1.0 - eta * eta) * (1.0 - sq) * (1.0 - sq);
}

inline double delta_s_proxy_general(const MajoranaCorrelationMatrix& m, Eigen::Index j) {
  if (j < 0 || j >= m.modes()) throw InvalidDimension("mode index out of range");
  const double alpha = m.entries(2 * j, 2 * j + 1);
  if (std::abs(alpha) >= 1.0 - 1e-12) return 0.0;
  const auto x = m.entries.row(2 * j);
  const auto y = m.entries.row(2 * j + 1);
  // 2x2 block of 1 + M^2 at rows (2j, 2j+1): delta - x.x etc.
  const double g11 = 1.0 - x.squaredNorm(), g22 = 1.0 - y.squaredNorm(), g12 = -x.dot(y);
  return -kLog2 / (1.0 - alpha * alpha) * (g11 * g22 - g12 * g12);
}

/// p+ S(+) + p- S(-) - S, evaluated from both explicit branches.
inline double delta_s_proxy_direct(const ModeCorrelationMatrix& m, Eigen::Index j) {
  const FermionOutcome o = detail::outcome_probabilities(m.entries(j, j).real());
  double avg = 0.0;
  if (o.p_plus > kZeroProbability) avg += o.p_plus * s_proxy(conserving_branch(m, j, Branch::plus));
  if (o.p_minus > kZeroProbability) avg += o.p_minus * s_proxy(conserving_branch(m, j, Branch::minus));
  return avg - kLog2 * (static_cast<double>(m.modes()) - m.entries.squaredNorm());
}

inline double delta_s_proxy_direct(const MajoranaCorrelationMatrix& m, Eigen::Index j) {
  const FermionOutcome o = detail::outcome_probabilities(m.entries(2 * j, 2 * j + 1));
  double avg = 0.0;
  if (o.p_plus > kZeroProbability) avg += o.p_plus * s_proxy(general_branch(m, j, Branch::plus));
  if (o.p_minus > kZeroProbability) avg += o.p_minus * s_proxy(general_branch(m, j, Branch::minus));
  return avg - kLog2 * (static_cast<double>(m.modes()) - 0.5 * m.entries.squaredNorm());
}

// ---------------------------------------------------------------------------
// Random states.
// ---------------------------------------------------------------------------

/// M = U diag(eta) U^dagger with eta uniform in [-1, 1] and U Haar.
inline ModeCorrelationMatrix random_mode_state(Eigen::Index n, RngStream& rng) {
  const CMatrix u = sample_haar_unitary(n, rng).entries;
  RVector eta(n);
  for (Eigen::Index i = 0; i < n; ++i) eta(i) = 2.0 * rng.uniform() - 1.0;
  return {linalg::hermitize(u * eta.cast<cplx>().asDiagonal() * u.adjoint())};
}

/// O M0 O^T with Williamson values `lambda` and O Haar on SO(2n).
inline MajoranaCorrelationMatrix rotated_majorana(const RVector& lambda, RngStream& rng) {
  const SpecialOrthogonal o = sample_haar_special_orthogonal(2 * lambda.size(), rng);
  return apply_rotation(canonical_majorana(lambda), o);
}

inline MajoranaCorrelationMatrix random_majorana_state(Eigen::Index n, RngStream& rng) {
  RVector lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda(i) = rng.uniform();
  return rotated_majorana(lambda, rng);
}

// ---------------------------------------------------------------------------
// Purification runs.
//
// A Haar rotation followed by measuring mode 1 equals measuring along the
// image of mode 1 under the inverse rotation, and the next Haar rotation
// absorbs the frame change. So the state is kept in a fixed frame and each
// step measures along a fresh random direction: a uniform unit vector v for
// U(n), the first two rows (o1, o2) of a Haar SO(2n) element otherwise. The
// update is a rank-one or rank-two correction, O(n^2) per step.
// ---------------------------------------------------------------------------

/// Measurement along the mode b = sum_mu conj(v_mu) a_mu, |v| = 1.
inline FermionOutcome measure_direction_conserving(CMatrix& m, const CVector& v, RngStream& rng) {
  const CVector mv = m * v;
  const double eta = v.dot(mv).real();
  FermionOutcome o = detail::sample_outcome(eta, rng);
  const double s = o.branch == Branch::plus ? 1.0 : -1.0;
  CMatrix x = m - (s / (1.0 + s * eta)) * (mv * mv.adjoint());
  // Pi x Pi with Pi = 1 - v v^dagger.
  const CVector xv = x * v;
  const cplx vxv = v.dot(xv);
  const CVector vx = x.adjoint() * v;  // (v^dagger x)^dagger
  x -= v * vx.adjoint();
  x -= xv * v.adjoint();
  x += vxv * (v * v.adjoint());
  x += s * (v * v.adjoint());
  m = linalg::hermitize(x);
  return o;
}

/// Measurement of the Majorana pair (o1, o2), orthonormal real vectors.
inline FermionOutcome measure_frame_general(RMatrix& m, const RVector& o1, const RVector& o2, RngStream& rng) {
  const RVector m1 = m * o1, m2 = m * o2;
  const double alpha = o1.dot(m2);
  FermionOutcome o = detail::sample_outcome(alpha, rng);
  const double s = o.branch == Branch::plus ? 1.0 : -1.0;
  // M K M with K = o1 o2^T - o2 o1^T: (M o1)(o2^T M) - (M o2)(o1^T M); o^T M = -(M o)^T.
  RMatrix x = m + (s / (1.0 + s * alpha)) * (-(m1 * m2.transpose()) + m2 * m1.transpose());
  // P x P with P = 1 - o1 o1^T - o2 o2^T.
  RMatrix basis(m.rows(), 2);
  basis.col(0) = o1;
  basis.col(1) = o2;
  const RMatrix xb = x * basis;                     // 2n x 2
  const RMatrix bx = basis.transpose() * x;         // 2 x 2n
  const RMatrix bxb = basis.transpose() * xb;       // 2 x 2
  x -= xb * basis.transpose();
  x -= basis * bx;
  x += basis * bxb * basis.transpose();
  x += s * (o1 * o2.transpose() - o2 * o1.transpose());
  m = linalg::antisymmetrize(x);
  return o;
}

inline CVector random_unit_vector(Eigen::Index n, RngStream& rng) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
  return v / v.norm();
}

/// First two rows of a Haar element of SO(2n) (Gram-Schmidt of Gaussians).
inline std::pair<RVector, RVector> random_two_frame(Eigen::Index dim, RngStream& rng) {
  RVector a(dim), b(dim);
  for (Eigen::Index i = 0; i < dim; ++i) a(i) = rng.normal();
  for (Eigen::Index i = 0; i < dim; ++i) b(i) = rng.normal();
  a /= a.norm();
  b -= a.dot(b) * a;
  b /= b.norm();
  return {a, b};
}

enum class FermionProtocol { frame, literal };

struct FermionWalker {
  std::vector<double> s_proxy;  // per recorded step, nats
  std::vector<double> renyi2;
};

struct FermionEnsemble {
  FermionVariant variant = FermionVariant::conserving;
  Eigen::Index n = 0;
  std::int64_t steps = 0;
  std::int64_t record_every = 1;
  std::size_t walkers = 0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> times;
  std::vector<FermionWalker> paths;
  std::vector<double> mean_density;    // s bar(t) = S_proxy / (n log 2)
  std::vector<double> stderr_density;
  std::vector<double> mean_s_proxy;    // nats

  /// First recorded t with s bar <= 1/2.
  std::optional<std::int64_t> half_entropy_time() const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (mean_density[i] <= 0.5) return times[i];
    return std::nullopt;
  }

  /// First recorded t with mean S_proxy <= log 2, i.e. one bit left.
  std::optional<std::int64_t> order_one_purity_time() const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (mean_s_proxy[i] <= kLog2) return times[i];
    return std::nullopt;
  }

  /// Largest excess of s bar over (1 + t/n)^{-1} + k stderr; <= 0 means the bound holds.
  double max_bound_excess(double k_sigma = 3.0) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double bound = 1.0 / (1.0 + static_cast<double>(times[i]) / static_cast<double>(n));
      worst = std::max(worst, mean_density[i] - bound - k_sigma * stderr_density[i]);
    }
    return worst;
  }
};

struct FermionRunOptions {
  std::int64_t record_every = 1;
  FermionProtocol protocol = FermionProtocol::frame;
  bool record_renyi2 = true;
  std::size_t workers = 1;
};

/// From the maximally mixed state, alternate a Haar unitary and a measurement
/// of mode 1, `steps` times. Walker w uses RngStream(seed, w).
inline FermionEnsemble run_purification(Eigen::Index n, std::int64_t steps, FermionVariant variant,
                                        std::size_t walkers, std::uint64_t seed, const FermionRunOptions& opt = {}) {
  if (n < 2) throw InvalidDimension("run_purification needs n >= 2");
  if (steps < 0 || walkers < 2 || opt.record_every < 1) throw std::invalid_argument("bad purification run sizes");
  FermionEnsemble ens;
  ens.variant = variant;
  ens.n = n;
  ens.steps = steps;
  ens.record_every = opt.record_every;
  ens.walkers = walkers;
  ens.seed = seed;
  for (std::int64_t t = 0; t <= steps; t += opt.record_every) ens.times.push_back(t);
  if (ens.times.back() != steps) ens.times.push_back(steps);
  ens.paths.resize(walkers);

  parallel_for(walkers, opt.workers, [&](std::size_t w) {
    RngStream rng(seed, w);
    FermionWalker& out = ens.paths[w];
    out.s_proxy.reserve(ens.times.size());
    std::size_t next = 0;
    auto record = [&](std::int64_t t, double sp, auto&& renyi) {
      if (next < ens.times.size() && ens.times[next] == t) {
        out.s_proxy.push_back(sp);
        if (opt.record_renyi2) out.renyi2.push_back(renyi());
        ++next;
      }
    };
    if (variant == FermionVariant::conserving) {
      ModeCorrelationMatrix m{CMatrix::Zero(n, n)};
      record(0, s_proxy(m), [&] { return renyi2(m); });
      for (std::int64_t t = 1; t <= steps; ++t) {
        if (opt.protocol == FermionProtocol::frame) {
          measure_direction_conserving(m.entries, random_unit_vector(n, rng), rng);
        } else {
          m = apply_mode_unitary(m, sample_haar_unitary(n, rng).entries);
          m = measure_mode_conserving(m, 0, rng).first;
        }
        record(t, s_proxy(m), [&] { return renyi2(m); });
      }
    } else {
      MajoranaCorrelationMatrix m{RMatrix::Zero(2 * n, 2 * n)};
      record(0, s_proxy(m), [&] { return renyi2(m); });
      for (std::int64_t t = 1; t <= steps; ++t) {
        if (opt.protocol == FermionProtocol::frame) {
          const auto [o1, o2] = random_two_frame(2 * n, rng);
          measure_frame_general(m.entries, o1, o2, rng);
        } else {
          m = apply_rotation(m, sample_haar_special_orthogonal(2 * n, rng));
          m = measure_mode_general(m, 0, rng).first;
        }
        record(t, s_proxy(m), [&] { return renyi2(m); });
      }
    }
  });

  const double norm = static_cast<double>(n) * kLog2;
  std::vector<double> col(walkers);
  for (std::size_t i = 0; i < ens.times.size(); ++i) {
    for (std::size_t w = 0; w < walkers; ++w) col[w] = ens.paths[w].s_proxy[i] / norm;
    const McEstimate e = stats::estimate(col);
    ens.mean_density.push_back(e.mean);
    ens.stderr_density.push_back(e.standard_error);
    ens.mean_s_proxy.push_back(e.mean * norm);
  }
  return ens;
}

// ---------------------------------------------------------------------------
// Pairing case: Haar average of |Delta S_proxy|.
// ---------------------------------------------------------------------------

struct PairingReport {
  Eigen::Index n = 0;
  McEstimate mc;            // |Delta S_proxy| over Haar O
  double leading_order = 0.0;
  double lower_bound = 0.0;  // second line of the bound, in terms of s = S_proxy/(n log 2)
  double relative_deviation() const { return std::abs(mc.mean / leading_order - 1.0); }
};

/// (log 2 / 4 n^2) [ (tr(1 + M^2))^2 - tr (1 + M^2)^2 ]
inline double pairing_leading_order(const MajoranaCorrelationMatrix& m) {
  const Eigen::Index dim = m.entries.rows();
  const double n = static_cast<double>(m.modes());
  const RMatrix g = RMatrix::Identity(dim, dim) + m.entries * m.entries;
  const double tr = g.trace();
  return kLog2 / (4.0 * n * n) * (tr * tr - g.squaredNorm());
}

inline double pairing_lower_bound(const MajoranaCorrelationMatrix& m) {
  const double n = static_cast<double>(m.modes());
  const double s = s_proxy(m) / (n * kLog2);
  return kLog2 * (s * s - s / (2.0 * n));
}

/// Sample i uses rng.split(i).
inline PairingReport mc_delta_s_pairing(const MajoranaCorrelationMatrix& m, std::size_t samples, const RngStream& rng,
                                        std::size_t workers = 1) {
  validate(m);
  if (m.modes() < 8) throw InvalidDimension("mc_delta_s_pairing needs n >= 8");
  std::vector<double> vals(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    RngStream local = rng.split(i);
    const SpecialOrthogonal o = sample_haar_special_orthogonal(m.entries.rows(), local);
    // Only the first two rows of O enter the mode-1 quantities.
    const RMatrix rows = o.entries.topRows(2);
    const RMatrix sub = rows * m.entries * rows.transpose();
    const RMatrix g = RMatrix::Identity(2, 2) + rows * (m.entries * m.entries) * rows.transpose();
    const double alpha = sub(0, 1);
    vals[i] = std::abs(alpha) >= 1.0 - 1e-12 ? 0.0 : kLog2 / (1.0 - alpha * alpha) * g.determinant();
  });
  return {m.modes(), stats::estimate(vals), pairing_leading_order(m), pairing_lower_bound(m)};
}

}  // namespace purify
