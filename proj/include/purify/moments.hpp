#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "purify/error.hpp"
#include "purify/linalg.hpp"
#include "purify/manybody.hpp"
#include "purify/parallel.hpp"
#include "purify/randmat.hpp"
#include "purify/rng.hpp"
#include "purify/stats.hpp"

namespace purify {

/// tr rho^2, tr rho^3, tr rho^4.
struct TraceProfile {
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;

  static TraceProfile from_spectrum(const RVector& lambda) {
    TraceProfile p;
    for (double l : lambda) {
      const double l2 = l * l;
      p.t2 += l2;
      p.t3 += l2 * l;
      p.t4 += l2 * l2;
    }
    return p;
  }

  static TraceProfile from_state(const DensityMatrix& rho) {
    return from_spectrum(linalg::hermitian_eigenvalues(rho.entries));
  }

  /// Schatten monotonicity: t3 <= t2^{3/2}, t4 <= t2^2.
  bool schatten_consistent(double tol = 1e-12) const {
    return t3 <= std::pow(t2, 1.5) + tol && t4 <= t2 * t2 + tol;
  }
};

inline double analytic_postselected_mean(const TraceProfile& p, double n) {
  return p.t2 + (1.0 - 4.0 * p.t3 + 3.0 * p.t2 * p.t2) / n;
}

inline double analytic_measured_mean(const TraceProfile& p, double n) {
  return p.t2 + (1.0 - 2.0 * p.t3 + p.t2 * p.t2) / n;
}

/// Leading-order variance of the purity update (same in both modes).
inline double analytic_noise(const TraceProfile& p, double n) {
  return 4.0 / n * (p.t4 - 2.0 * p.t3 * p.t2 + p.t2 * p.t2 * p.t2);
}

/// Leading order of E[delta^2], delta = tr(P rho) - 1/2.
inline double analytic_delta_sq(const TraceProfile& p, double n) { return p.t2 / (4.0 * n); }

/// Exact Haar averages for a rank-N/2 projector, from E[P (x) P] = a I + b S.
namespace exact {

inline double weingarten_a(double n) { return (n * n / 4.0 - 0.5) / (n * n - 1.0); }
inline double weingarten_b(double n) { return (n / 4.0) / (n * n - 1.0); }

/// E[tr P rho P rho]
inline double pp_trace(const TraceProfile& p, double n) { return weingarten_a(n) * p.t2 + weingarten_b(n); }

/// E[(tr P rho - 1/2)^2]
inline double delta_sq(const TraceProfile& p, double n) { return (n * p.t2 - 1.0) / (4.0 * (n * n - 1.0)); }

}  // namespace exact

enum class PurityStatistic {
  postselected,
  measured,
  postselected_second_moment,
  measured_second_moment,
  delta,
  delta_sq,
  pp_trace,
};

inline constexpr std::array<PurityStatistic, 7> kAllPurityStatistics = {
    PurityStatistic::postselected,  PurityStatistic::measured, PurityStatistic::postselected_second_moment,
    PurityStatistic::measured_second_moment, PurityStatistic::delta, PurityStatistic::delta_sq,
    PurityStatistic::pp_trace};

inline std::string_view to_string(PurityStatistic s) {
  switch (s) {
    case PurityStatistic::postselected: return "postselected";
    case PurityStatistic::measured: return "measured";
    case PurityStatistic::postselected_second_moment: return "postselected_second_moment";
    case PurityStatistic::measured_second_moment: return "measured_second_moment";
    case PurityStatistic::delta: return "delta";
    case PurityStatistic::delta_sq: return "delta_sq";
    case PurityStatistic::pp_trace: return "pp_trace";
  }
  return "?";
}

/// Per-sample traces for one Haar projector P:
/// a = tr P rho, b = tr P rho P rho, c = tr P rho^2.
struct TraceSample {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Draws `samples` rank-N/2 Haar projectors and records the traces against a
/// state with spectrum `lambda` (zero eigenvalues may be omitted). Sample i
/// uses rng.split(i), so results do not depend on `workers`.
inline std::vector<TraceSample> mc_trace_samples(const RVector& lambda, Eigen::Index n, std::size_t samples,
                                                 const RngStream& rng, std::size_t workers = 1) {
  if (n < 2 || n % 2 != 0) throw InvalidDimension("Monte Carlo estimators need even N >= 2");
  const Eigen::Index d = lambda.size();
  if (d < 1 || d > n) throw InvalidState("spectrum length must lie in [1, N]");
  std::vector<TraceSample> out(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    RngStream local = rng.split(i);
    const CMatrix b = sample_projector_compression(d, n, n / 2, local).compression();
    const CMatrix lb = lambda.asDiagonal() * b;
    TraceSample s;
    s.a = lb.trace().real();
    s.b = (lb.transpose().cwiseProduct(lb)).sum().real();  // tr(Lambda B Lambda B)
    s.c = (lambda.cwiseProduct(lambda).asDiagonal() * b).trace().real();
    out[i] = s;
  });
  return out;
}

/// Per-sample values of one statistic. Samples whose post-selected branch
/// has probability below threshold are dropped and counted.
struct StatisticSamples {
  std::vector<double> values;
  std::size_t excluded = 0;
};

inline StatisticSamples statistic_values(const std::vector<TraceSample>& ts, double t2, PurityStatistic stat) {
  StatisticSamples out;
  out.values.reserve(ts.size());
  for (const auto& s : ts) {
    const double a = s.a, b = s.b;
    const double am = 1.0 - a, bm = t2 - 2.0 * s.c + b;  // complementary branch
    switch (stat) {
      case PurityStatistic::postselected:
      case PurityStatistic::postselected_second_moment:
        if (a < kZeroProbability) {
          ++out.excluded;
          continue;
        }
        out.values.push_back(stat == PurityStatistic::postselected ? b / (a * a) : (b * b) / (a * a * a * a));
        break;
      case PurityStatistic::measured:
      case PurityStatistic::measured_second_moment: {
        // Born-weighted over both branches; a branch below threshold carries no weight.
        double v = 0.0;
        const bool square = stat == PurityStatistic::measured_second_moment;
        if (a >= kZeroProbability) v += square ? b * b / (a * a * a) : b / a;
        if (am >= kZeroProbability) v += square ? bm * bm / (am * am * am) : bm / am;
        out.values.push_back(v);
        break;
      }
      case PurityStatistic::delta: out.values.push_back(a - 0.5); break;
      case PurityStatistic::delta_sq: out.values.push_back((a - 0.5) * (a - 0.5)); break;
      case PurityStatistic::pp_trace: out.values.push_back(b); break;
    }
  }
  return out;
}

inline McEstimate estimate_statistic(const std::vector<TraceSample>& ts, double t2, PurityStatistic stat) {
  const StatisticSamples v = statistic_values(ts, t2, stat);
  if (static_cast<double>(v.excluded) > 1e-3 * static_cast<double>(ts.size()))
    throw ZeroProbabilityBranch(std::to_string(v.excluded) + " of " + std::to_string(ts.size()) +
                                " samples hit a zero-probability branch (limit 0.1%)");
  return stats::estimate(v.values);
}

/// Variance of the updated purity: E[second moment] - E[first moment]^2.
inline McEstimate estimate_noise(const std::vector<TraceSample>& ts, double t2, Mode mode) {
  const auto first = statistic_values(
      ts, t2, mode == Mode::measurement ? PurityStatistic::measured : PurityStatistic::postselected);
  const auto second =
      statistic_values(ts, t2,
                       mode == Mode::measurement ? PurityStatistic::measured_second_moment
                                                 : PurityStatistic::postselected_second_moment);
  if (static_cast<double>(first.excluded) > 1e-3 * static_cast<double>(ts.size()))
    throw ZeroProbabilityBranch("too many zero-probability samples for the noise estimate");
  return stats::variance_estimate(first.values, second.values);
}

inline McEstimate mc_purity_statistic(const DensityMatrix& rho, PurityStatistic stat, std::size_t samples,
                                      const RngStream& rng, std::size_t workers = 1) {
  if (samples < 100) throw std::invalid_argument("mc_purity_statistic needs at least 100 samples");
  validate(rho);
  const RVector lambda = linalg::hermitian_eigenvalues(rho.entries);
  const auto ts = mc_trace_samples(lambda, rho.dimension(), samples, rng, workers);
  return estimate_statistic(ts, lambda.squaredNorm(), stat);
}

/// Value each statistic is compared against. Second-moment statistics are
/// checked through the noise, so their target is first^2 + noise.
inline double analytic_target(const TraceProfile& p, double n, PurityStatistic stat) {
  switch (stat) {
    case PurityStatistic::postselected: return analytic_postselected_mean(p, n);
    case PurityStatistic::measured: return analytic_measured_mean(p, n);
    case PurityStatistic::postselected_second_moment: {
      const double m = analytic_postselected_mean(p, n);
      return m * m + analytic_noise(p, n);
    }
    case PurityStatistic::measured_second_moment: {
      const double m = analytic_measured_mean(p, n);
      return m * m + analytic_noise(p, n);
    }
    case PurityStatistic::delta: return 0.0;
    case PurityStatistic::delta_sq: return analytic_delta_sq(p, n);
    case PurityStatistic::pp_trace: return p.t2 / 4.0 + 1.0 / (4.0 * n);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Covariance of M = 2 P - 1.
// ---------------------------------------------------------------------------

struct CovarianceEntry {
  std::array<int, 4> index{};  // zero-based a, b, c, d
  double expected = 0.0;       // delta_ad delta_bc / N
  McEstimate estimate;         // real part of M_ab M_cd
  double imag_mean = 0.0;
};

struct MeanEntry {
  std::array<int, 2> index{};
  McEstimate estimate;
};

struct CovarianceReport {
  Eigen::Index N = 0;
  std::vector<CovarianceEntry> second;
  std::vector<MeanEntry> first;
};

/// Only the top-left 4 x 4 block of P is needed, which is exactly the
/// compression of P onto the first four basis vectors.
inline CovarianceReport mc_m_covariance(Eigen::Index n, std::size_t samples, const RngStream& rng,
                                        std::size_t workers = 1) {
  if (n < 4 || n % 2 != 0) throw InvalidDimension("mc_m_covariance needs even N >= 4");
  const std::vector<std::array<int, 4>> quads = {{0, 1, 1, 0}, {0, 0, 0, 0}, {0, 1, 0, 1}, {0, 0, 1, 1}};
  const std::vector<std::array<int, 2>> pairs = {{0, 1}, {0, 0}};
  std::vector<CMatrix> ms(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    RngStream local = rng.split(i);
    const CMatrix b = sample_projector_compression(4, n, n / 2, local).compression();
    ms[i] = 2.0 * b - CMatrix::Identity(4, 4);
  });
  CovarianceReport rep;
  rep.N = n;
  std::vector<double> re(samples), im(samples);
  for (const auto& q : quads) {
    for (std::size_t i = 0; i < samples; ++i) {
      const cplx v = ms[i](q[0], q[1]) * ms[i](q[2], q[3]);
      re[i] = v.real();
      im[i] = v.imag();
    }
    CovarianceEntry e;
    e.index = q;
    e.expected = (q[0] == q[3] && q[1] == q[2]) ? 1.0 / static_cast<double>(n) : 0.0;
    e.estimate = stats::estimate(re);
    e.imag_mean = stats::mean(im);
    rep.second.push_back(e);
  }
  for (const auto& pr : pairs) {
    for (std::size_t i = 0; i < samples; ++i) re[i] = ms[i](pr[0], pr[1]).real();
    rep.first.push_back({pr, stats::estimate(re)});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Quartic moments of Haar SO(m).
//
// E = E_O[O|a><b|O^T (x) O|c><d|O^T] = x I + y S + z W. The traces against
// I, S, W are (d_ab d_cd, d_ad d_bc, d_ac d_bd) and the Gram matrix of
// {I, S, W} is m(m-1) 1 + m J, whose inverse is (1 - J/(m+2)) / (m(m-1)).
// ---------------------------------------------------------------------------

struct CommutantCoefficients {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline CommutantCoefficients so_commutant_coefficients(int m, int a, int b, int c, int d) {
  if (m < 3) throw std::logic_error("quartic moment system is singular for m < 3");
  const double md = m;
  const std::array<double, 3> rhs = {double(a == b && c == d), double(a == d && b == c), double(a == c && b == d)};
  const double sum = rhs[0] + rhs[1] + rhs[2];
  const double scale = 1.0 / (md * (md - 1.0));
  std::array<double, 3> sol{};
  for (int i = 0; i < 3; ++i) sol[i] = scale * (rhs[i] - sum / (md + 2.0));
  return {sol[0], sol[1], sol[2]};
}

/// Entry <j,k| E |j',k'> of x I + y S + z W.
inline double commutant_entry(const CommutantCoefficients& e, int j, int k, int jp, int kp) {
  double v = 0.0;
  if (j == jp && k == kp) v += e.x;
  if (j == kp && k == jp) v += e.y;
  if (j == k && jp == kp) v += e.z;
  return v;
}

/// Dense m^2 x m^2 matrix of x I + y S + z W (row index j*m + k).
inline RMatrix commutant_matrix(const CommutantCoefficients& e, int m) {
  RMatrix out = RMatrix::Zero(m * m, m * m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      out(j * m + k, j * m + k) += e.x;
      out(j * m + k, k * m + j) += e.y;
      if (j == k)
        for (int l = 0; l < m; ++l) out(j * m + j, l * m + l) += e.z;
    }
  return out;
}

/// max |E (R (x) R) - (R (x) R) E| over entries.
inline double commutant_defect(const RMatrix& e, const RMatrix& r) {
  const RMatrix rr = Eigen::kroneckerProduct(r, r);
  return linalg::max_abs(RMatrix(e * rr - rr * e));
}

struct QuarticMoment {
  std::string name;
  double exact = 0.0;          // from the commutant solve
  double leading_order = 0.0;  // large-n expansion
  McEstimate estimate;
};

struct QuarticReport {
  int n = 0;
  std::vector<QuarticMoment> moments;
  double max_commutant_defect = 0.0;
};

/// Moments with rows j=0, k=1 of O: <O_j1^2 O_k2^2>, <O_j1 O_j2 O_k1 O_k2>,
/// <O_j1^2 O_j2^2>.
inline QuarticReport so_quartic_moments(int n, std::size_t samples, const RngStream& rng, std::size_t workers = 1,
                                        int commutant_trials = 10) {
  if (n < 4) throw InvalidDimension("so_quartic_moments needs n >= 4");
  const int m = 2 * n;
  const double nd = n;
  QuarticReport rep;
  rep.n = n;

  const auto e_diag = so_commutant_coefficients(m, 0, 0, 1, 1);
  const auto e_cross = so_commutant_coefficients(m, 0, 1, 0, 1);
  const double jk = commutant_entry(e_diag, 0, 1, 0, 1);
  const double cross = commutant_entry(e_cross, 0, 1, 0, 1);
  const double same = commutant_entry(e_diag, 0, 0, 0, 0);

  // Commutant property on a moderate size so the Kronecker check stays cheap.
  const int mc = std::min(m, 16);
  RngStream rcheck = rng.split(~std::uint64_t{0});
  for (const auto& coeff : {so_commutant_coefficients(mc, 0, 0, 1, 1), so_commutant_coefficients(mc, 0, 1, 0, 1),
                            so_commutant_coefficients(mc, 0, 1, 1, 0)}) {
    const RMatrix e = commutant_matrix(coeff, mc);
    for (int t = 0; t < commutant_trials; ++t) {
      const RMatrix r = sample_haar_special_orthogonal(mc, rcheck).entries;
      rep.max_commutant_defect = std::max(rep.max_commutant_defect, commutant_defect(e, r));
    }
  }

  std::vector<std::array<double, 3>> vals(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    RngStream local = rng.split(i);
    const RMatrix o = sample_haar_special_orthogonal(m, local).entries;
    const double j1 = o(0, 0), j2 = o(0, 1), k1 = o(1, 0), k2 = o(1, 1);
    vals[i] = {j1 * j1 * k2 * k2, j1 * j2 * k1 * k2, j1 * j1 * j2 * j2};
  });
  std::vector<double> col(samples);
  const std::array<std::string, 3> names = {"jk_diagonal", "cross", "same_row"};
  const std::array<double, 3> exact = {jk, cross, same};
  const std::array<double, 3> lead = {1.0 / (4.0 * nd * nd), -1.0 / (8.0 * nd * nd * nd),
                                      1.0 / (4.0 * nd * nd) - 1.0 / (4.0 * nd * nd * nd)};
  for (int q = 0; q < 3; ++q) {
    for (std::size_t i = 0; i < samples; ++i) col[i] = vals[i][q];
    rep.moments.push_back({names[q], exact[q], lead[q], stats::estimate(col)});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Nearly pure states.
// ---------------------------------------------------------------------------

struct NoiseBoundReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // noise / (4 eps^2 / N)
};

/// Spectrum with one large eigenvalue and a random tail, purity exactly 1 - eps.
inline RVector nearly_pure_spectrum(double eps, Eigen::Index tail, RngStream& rng) {
  RVector w(tail);
  for (Eigen::Index i = 0; i < tail; ++i) w(i) = rng.uniform_pos();
  w /= w.sum();
  const double q = 1.0 + w.squaredNorm();
  const double s = (1.0 - std::sqrt(1.0 - eps * q)) / q;  // tail weight
  RVector lam(tail + 1);
  lam(0) = 1.0 - s;
  lam.tail(tail) = s * w;
  return lam;
}

inline NoiseBoundReport nearly_pure_noise_bound_check(double eps, Eigen::Index n, std::size_t trials, RngStream& rng) {
  if (!(eps >= 0.0 && eps < 0.5)) throw std::invalid_argument("epsilon must lie in [0, 1/2)");
  NoiseBoundReport rep;
  rep.trials = trials;
  const double bound = 4.0 * eps * eps / static_cast<double>(n);
  const double slack = 4.0 * eps * eps * eps / static_cast<double>(n) + 1e-15;
  for (std::size_t i = 0; i < trials; ++i) {
    const Eigen::Index tail = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
    const RVector lam = nearly_pure_spectrum(eps, tail, rng);
    const double noise = analytic_noise(TraceProfile::from_spectrum(lam), static_cast<double>(n));
    if (noise > bound + slack) ++rep.violations;
    if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, noise / bound);
  }
  return rep;
}

}  // namespace purify
