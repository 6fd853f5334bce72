#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "purify/error.hpp"
#include "purify/linalg.hpp"
#include "purify/randmat.hpp"
#include "purify/rng.hpp"

namespace purify {

inline constexpr double kZeroProbability = 1e-12;
inline constexpr double kEntropyCutoff = 1e-14;
/// Relative eigenvalue floor below which the spectral engine drops a direction.
inline constexpr double kSpectralCutoff = 1e-14;

struct DensityMatrix {
  CMatrix entries;
  Eigen::Index dimension() const { return entries.rows(); }
};

enum class Branch { none, plus, minus };
enum class Mode { measurement, postselection };

inline std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::plus: return "plus";
    case Branch::minus: return "minus";
    default: return "none";
  }
}

inline std::string_view to_string(Mode m) { return m == Mode::measurement ? "measurement" : "postselection"; }

inline Mode parse_mode(std::string_view s) {
  if (s == "measurement") return Mode::measurement;
  if (s == "postselection") return Mode::postselection;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected measurement or postselection)");
}

/// Realized branch and its probability; for Branch::plus this is tr(P rho).
struct MeasurementOutcome {
  Branch branch = Branch::none;
  double probability = 1.0;
};

struct TrajectoryRow {
  std::int64_t step = 0;
  double purity = 0.0;
  double entropy_nats = 0.0;
  Branch branch = Branch::none;
  double prob = 1.0;
};

struct TrajectoryRecord {
  Mode mode = Mode::measurement;
  Eigen::Index N = 0;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<TrajectoryRow> rows;
  /// Set when post-selection hit a zero-probability branch; rows stop there.
  bool aborted = false;

  double final_purity() const { return rows.empty() ? 0.0 : rows.back().purity; }

  /// First step with purity >= threshold, if any.
  std::optional<std::int64_t> steps_to_purity(double threshold) const {
    for (const auto& r : rows)
      if (r.purity >= threshold) return r.step;
    return std::nullopt;
  }
};

inline DensityMatrix maximally_mixed(Eigen::Index n) {
  if (n < 2) throw InvalidDimension("maximally_mixed needs N >= 2");
  return {CMatrix::Identity(n, n) / static_cast<double>(n)};
}

/// rho = (1/d) diag(1,...,1,0,...,0) with d ones.
inline DensityMatrix mixed_on_support(Eigen::Index n, Eigen::Index d) {
  if (n < 2) throw InvalidDimension("state dimension must be >= 2");
  if (d < 1 || d > n) throw InvalidRank("support rank must lie in [1, N]");
  CMatrix rho = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < d; ++i) rho(i, i) = 1.0 / static_cast<double>(d);
  return {rho};
}

inline DensityMatrix diagonal_state(const RVector& probs) {
  if (probs.size() < 2) throw InvalidDimension("state dimension must be >= 2");
  if (probs.minCoeff() < -1e-9 || std::abs(probs.sum() - 1.0) > 1e-9)
    throw InvalidState("diagonal entries must be non-negative and sum to 1");
  return {probs.cast<cplx>().asDiagonal().toDenseMatrix()};
}

/// Random full-rank state G G^dagger / tr, G complex Ginibre of size N x rank.
inline DensityMatrix random_density_matrix(Eigen::Index n, Eigen::Index rank, RngStream& rng) {
  CMatrix g = randmat::ginibre(n, rank, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return {linalg::hermitize(rho)};
}

inline void validate(const DensityMatrix& rho) {
  const auto& a = rho.entries;
  if (a.rows() != a.cols() || a.rows() < 1) throw InvalidState("density matrix must be square");
  if (linalg::hermiticity_defect(a) > 1e-12) throw InvalidState("density matrix is not Hermitian");
  if (std::abs(a.trace().real() - 1.0) > 1e-9) throw InvalidState("density matrix trace differs from 1");
  if (linalg::hermitian_eigenvalues(a)(0) < -1e-9) throw InvalidState("density matrix has a negative eigenvalue");
}

namespace detail {

inline double clamp_purity(double p, double n) {
  const double lo = 1.0 / n;
  if (p < lo && p > lo - 1e-9) return lo;
  if (p > 1.0 && p < 1.0 + 1e-9) return 1.0;
  return p;
}

inline double entropy_of(const RVector& evals) {
  double s = 0.0;
  for (double l : evals)
    if (l > kEntropyCutoff) s -= l * std::log(l);
  return s;
}

inline double purity_of(const RVector& evals) { return evals.squaredNorm(); }

}  // namespace detail

inline double purity(const DensityMatrix& rho) {
  return detail::clamp_purity(rho.entries.squaredNorm(), static_cast<double>(rho.dimension()));
}

inline double vn_entropy(const DensityMatrix& rho) {
  return detail::entropy_of(linalg::hermitian_eigenvalues(rho.entries));
}

namespace detail {

inline DensityMatrix project(const DensityMatrix& rho, const CMatrix& proj) {
  CMatrix out = proj * rho.entries * proj;
  out = linalg::hermitize(out);
  out /= out.trace().real();
  return {std::move(out)};
}

}  // namespace detail

inline DensityMatrix postselect_step(const DensityMatrix& rho, const Projector& proj) {
  if (proj.dimension() != rho.dimension()) throw InvalidDimension("projector and state dimensions differ");
  const double p = linalg::trace_product_hermitian(proj.entries, rho.entries);
  if (p <= kZeroProbability)
    throw ZeroProbabilityBranch("post-selected branch probability " + std::to_string(p) + " below threshold");
  return detail::project(rho, proj.entries);
}

/// Born-rule choice; the draw is consumed even when the branch is forced.
inline MeasurementOutcome choose_branch(double p_plus, RngStream& rng) {
  const double u = rng.uniform();
  if (p_plus < kZeroProbability) return {Branch::minus, 1.0 - p_plus};
  if (p_plus > 1.0 - kZeroProbability) return {Branch::plus, p_plus};
  return u < p_plus ? MeasurementOutcome{Branch::plus, p_plus} : MeasurementOutcome{Branch::minus, 1.0 - p_plus};
}

inline std::pair<DensityMatrix, MeasurementOutcome> measure_step(const DensityMatrix& rho, const Projector& proj,
                                                                RngStream& rng) {
  if (proj.dimension() != rho.dimension()) throw InvalidDimension("projector and state dimensions differ");
  const double p = std::clamp(linalg::trace_product_hermitian(proj.entries, rho.entries), 0.0, 1.0);
  const MeasurementOutcome out = choose_branch(p, rng);
  if (out.branch == Branch::plus) return {detail::project(rho, proj.entries), out};
  const CMatrix comp = CMatrix::Identity(rho.dimension(), rho.dimension()) - proj.entries;
  return {detail::project(rho, comp), out};
}

/// Rank-2 predictions for the mean purity from a rank-2 state of purity 1/2.
/// Only trustworthy for t << N.
inline double rank2_theory_purity(double t, double n, Mode mode) {
  if (t < 0.0 || n < 2.0) throw std::invalid_argument("rank2_theory_purity needs t >= 0 and N >= 2");
  if (mode == Mode::measurement) return 1.0 - 1.0 / (3.0 * std::exp(t / n) - 1.0);
  return 1.0 - 1.0 / (3.0 * t / n + 2.0);
}

struct BranchAverages {
  double entropy = 0.0;
  double sqrt_purity = 0.0;
};

/// Outcome-averaged entropy and square-root purity for a complete orthogonal
/// projective measurement.
inline BranchAverages avg_entropy_after_measurement(const DensityMatrix& rho, const std::vector<CMatrix>& projs) {
  const Eigen::Index n = rho.dimension();
  if (projs.empty()) throw InvalidMeasurement("empty projector set");
  CMatrix total = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < projs.size(); ++i) {
    if (projs[i].rows() != n || projs[i].cols() != n) throw InvalidMeasurement("projector dimension mismatch");
    total += projs[i];
    for (std::size_t j = i; j < projs.size(); ++j) {
      const CMatrix prod = projs[i] * projs[j];
      const double defect = i == j ? linalg::max_abs(prod - projs[i]) : linalg::max_abs(prod);
      if (defect > 1e-10) throw InvalidMeasurement("projectors are not mutually orthogonal idempotents");
    }
  }
  if (linalg::max_abs(total - CMatrix::Identity(n, n)) > 1e-10)
    throw InvalidMeasurement("projectors do not sum to the identity");

  BranchAverages avg;
  for (const auto& p : projs) {
    const double prob = linalg::trace_product_hermitian(p, rho.entries);
    if (prob <= kZeroProbability) continue;
    const DensityMatrix sigma = detail::project(rho, p);
    const RVector ev = linalg::hermitian_eigenvalues(sigma.entries);
    avg.entropy += prob * detail::entropy_of(ev);
    avg.sqrt_purity += prob * std::sqrt(detail::purity_of(ev));
  }
  return avg;
}

// ---------------------------------------------------------------------------
// Spectral engine.
//
// Haar projectors make every step statistically invariant under unitary
// conjugation of the state, so a trajectory of spectra can be simulated
// without the N x N matrix. With Lambda the nonzero eigenvalues and B the
// compression of P onto the support, tr(P rho) = tr(Lambda B) and the
// nonzero spectrum of P rho P equals that of Lambda^{1/2} B Lambda^{1/2}.
// The cost per step is O(d^3) in the current rank d, which collapses quickly
// once measurements start.
// ---------------------------------------------------------------------------

struct SpectralState {
  Eigen::Index N = 0;
  RVector lambda;  // nonzero eigenvalues, sum 1

  double purity() const { return detail::clamp_purity(lambda.squaredNorm(), static_cast<double>(N)); }
  double entropy() const { return detail::entropy_of(lambda); }
};

inline SpectralState spectral_mixed_on_support(Eigen::Index n, Eigen::Index d) {
  if (n < 2) throw InvalidDimension("state dimension must be >= 2");
  if (d < 1 || d > n) throw InvalidRank("support rank must lie in [1, N]");
  return {n, RVector::Constant(d, 1.0 / static_cast<double>(d))};
}

namespace detail {

/// Drops eigenvalues below kSpectralCutoff relative to the largest and renormalizes.
inline RVector truncate_spectrum(const RVector& ev) {
  const double top = ev.maxCoeff();
  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(ev.size()));
  for (double v : ev)
    if (v > kSpectralCutoff * top) kept.push_back(v);
  RVector out = Eigen::Map<RVector>(kept.data(), static_cast<Eigen::Index>(kept.size()));
  return out / out.sum();
}

}  // namespace detail

/// One step of the spectral engine with a rank-`rank` Haar projector.
///
/// Draws the same Wishart factors as sample_projector_compression. Only the
/// realized branch factor Y = Lambda^{1/2} L^{-1} F is formed, and its
/// spectrum is taken from whichever of Y Y^dagger, Y^dagger Y is smaller.
inline MeasurementOutcome spectral_step(SpectralState& state, Eigen::Index rank, Mode mode, RngStream& rng) {
  const Eigen::Index d = state.lambda.size();
  const Eigen::Index n = state.N;
  if (rank <= 0 || rank >= n) throw InvalidRank("projector rank must lie in (0, N)");
  CMatrix f1 = randmat::wishart_factor(d, rank, rng);
  CMatrix f2 = randmat::wishart_factor(d, n - rank, rng);
  CMatrix gram = CMatrix::Zero(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(f1);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(f2);
  const Eigen::LLT<CMatrix, Eigen::Lower> llt(gram);
  const RVector root = state.lambda.cwiseSqrt();
  llt.matrixL().solveInPlace(f1);
  f1 = root.asDiagonal() * f1;
  const double p = std::clamp(f1.squaredNorm(), 0.0, 1.0);
  MeasurementOutcome out{Branch::plus, p};
  if (mode == Mode::postselection) {
    if (p <= kZeroProbability)
      throw ZeroProbabilityBranch("post-selected branch probability " + std::to_string(p) + " below threshold");
  } else {
    out = choose_branch(p, rng);
  }
  CMatrix* y = &f1;
  if (out.branch == Branch::minus) {
    llt.matrixL().solveInPlace(f2);
    f2 = root.asDiagonal() * f2;
    y = &f2;
  }
  const bool wide = y->cols() < y->rows();
  CMatrix h = CMatrix::Zero(wide ? y->cols() : y->rows(), wide ? y->cols() : y->rows());
  if (wide)
    h.selfadjointView<Eigen::Lower>().rankUpdate(y->adjoint());
  else
    h.selfadjointView<Eigen::Lower>().rankUpdate(*y);
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  state.lambda = detail::truncate_spectrum(es.eigenvalues() / out.probability);
  return out;
}

enum class Engine { spectral, dense };

struct TrajectoryOptions {
  Engine engine = Engine::spectral;
  /// Initial state is maximally mixed on this many dimensions; 0 means N.
  Eigen::Index initial_rank = 0;
};

/// Trajectory from a state maximally mixed on `initial_rank` dimensions,
/// driven by rank-N/2 Haar projectors.
inline TrajectoryRecord run_trajectory(Eigen::Index n, std::int64_t steps, Mode mode, RngStream rng,
                                       const TrajectoryOptions& opt = {}) {
  if (n < 2 || n % 2 != 0) throw InvalidDimension("run_trajectory needs even N >= 2");
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  const Eigen::Index d0 = opt.initial_rank == 0 ? n : opt.initial_rank;
  const Eigen::Index rank = n / 2;

  TrajectoryRecord rec;
  rec.mode = mode;
  rec.N = n;
  rec.steps = steps;
  rec.seed = rng.seed();
  rec.stream = rng.stream_index();
  rec.rows.reserve(static_cast<std::size_t>(steps) + 1);

  if (opt.engine == Engine::spectral) {
    SpectralState s = spectral_mixed_on_support(n, d0);
    rec.rows.push_back({0, s.purity(), s.entropy(), Branch::none, 1.0});
    for (std::int64_t t = 1; t <= steps; ++t) {
      MeasurementOutcome o;
      try {
        o = spectral_step(s, rank, mode, rng);
      } catch (const ZeroProbabilityBranch&) {
        rec.aborted = true;
        break;
      }
      rec.rows.push_back({t, s.purity(), s.entropy(), o.branch, o.probability});
    }
    return rec;
  }

  DensityMatrix rho = mixed_on_support(n, d0);
  rec.rows.push_back({0, purity(rho), vn_entropy(rho), Branch::none, 1.0});
  for (std::int64_t t = 1; t <= steps; ++t) {
    const Projector p = sample_random_projector(n, rank, rng);
    MeasurementOutcome o;
    if (mode == Mode::postselection) {
      const double prob = linalg::trace_product_hermitian(p.entries, rho.entries);
      try {
        rho = postselect_step(rho, p);
      } catch (const ZeroProbabilityBranch&) {
        rec.aborted = true;
        break;
      }
      o = {Branch::plus, prob};
    } else {
      auto [next, outcome] = measure_step(rho, p, rng);
      rho = std::move(next);
      o = outcome;
    }
    rec.rows.push_back({t, purity(rho), vn_entropy(rho), o.branch, o.probability});
  }
  return rec;
}

inline TrajectoryRecord run_trajectory(Eigen::Index n, std::int64_t steps, Mode mode, std::uint64_t seed,
                                       const TrajectoryOptions& opt = {}) {
  return run_trajectory(n, steps, mode, RngStream(seed, 0), opt);
}

}  // namespace purify
