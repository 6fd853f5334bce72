#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "purify/error.hpp"
#include "purify/linalg.hpp"
#include "purify/manybody.hpp"
#include "purify/parallel.hpp"
#include "purify/rng.hpp"
#include "purify/stats.hpp"

namespace purify {

inline constexpr double kDegenerateGap = 1e-8;
inline constexpr double kDegenerateSplit = 1e-7;
inline constexpr double kCovarianceClip = 1e-12;
inline constexpr double kSpectrumClip = 1e-9;

/// Eigenvalues of a rank <= d state; entries sum to 1.
struct Spectrum {
  RVector values;

  Eigen::Index rank() const { return values.size(); }
  double purity() const { return values.squaredNorm(); }

  double min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < values.size(); ++a)
      for (Eigen::Index b = a + 1; b < values.size(); ++b) g = std::min(g, std::abs(values(a) - values(b)));
    return g;
  }

  /// Smallest gap among pairs of strictly positive eigenvalues; pairs that
  /// involve a zero eigenvalue contribute no drift.
  double active_min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < values.size(); ++a)
      for (Eigen::Index b = a + 1; b < values.size(); ++b)
        if (values(a) > 0.0 && values(b) > 0.0) g = std::min(g, std::abs(values(a) - values(b)));
    return g;
  }

  bool degenerate() const { return active_min_gap() < kDegenerateGap; }

  static Spectrum uniform(Eigen::Index d) { return {RVector::Constant(d, 1.0 / static_cast<double>(d))}; }
};

inline void validate(const Spectrum& s) {
  if (s.values.size() < 1) throw InvalidState("spectrum must be non-empty");
  if (std::abs(s.values.sum() - 1.0) > 1e-9) throw InvalidState("spectrum must sum to 1");
  if (s.values.minCoeff() < -kSpectrumClip) throw InvalidState("spectrum has a negative entry");
}

struct GeneratorCoefficients {
  RVector drift;
  RMatrix diffusion;
};

/// mu_a = sum_{b != a} l_a l_b / (l_a - l_b),
/// Sigma_ab = l_a l_b (delta_ab - l_a - l_b + S), S = sum l^2.
inline GeneratorCoefficients generator_coefficients(const Spectrum& s) {
  const RVector& l = s.values;
  const Eigen::Index d = l.size();
  if (s.degenerate())
    throw DegenerateSpectrum("spectrum gap " + std::to_string(s.active_min_gap()) + " below " +
                             std::to_string(kDegenerateGap));
  const double sq = l.squaredNorm();
  GeneratorCoefficients g{RVector::Zero(d), RMatrix::Zero(d, d)};
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a + 1; b < d; ++b) {
      if (l(a) * l(b) == 0.0) continue;
      const double term = l(a) * l(b) / (l(a) - l(b));
      g.drift(a) += term;
      g.drift(b) -= term;
    }
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      g.diffusion(a, b) = l(a) * l(b) * ((a == b ? 1.0 : 0.0) - l(a) - l(b) + sq);
  return g;
}

/// D F from the coefficients, given the gradient and Hessian of F.
inline double apply_generator(const GeneratorCoefficients& g, const RVector& grad, const RMatrix& hess) {
  return grad.dot(g.drift) + 0.5 * hess.cwiseProduct(g.diffusion).sum();
}

/// D applied to F = sum l^2 in closed form.
inline double apply_generator_to_purity(const Spectrum& s) {
  const RVector& l = s.values;
  const double sum = l.sum();
  const double sq = l.squaredNorm();
  const double cube = l.array().cube().sum();
  return sum * sum - sq + sq - 2.0 * cube + sq * sq;
}

/// Spreads every cluster of eigenvalues closer than the degeneracy threshold
/// to a symmetric ladder with spacing 1e-7 around the cluster mean. Returns
/// the number of clusters touched. Values end sorted in descending order.
inline int split_degeneracies(Spectrum& s) {
  RVector& l = s.values;
  std::sort(l.data(), l.data() + l.size(), std::greater<>());
  int touched = 0;
  Eigen::Index i = 0;
  while (i < l.size()) {
    Eigen::Index j = i + 1;
    while (j < l.size() && l(j - 1) - l(j) < kDegenerateGap) ++j;
    const Eigen::Index k = j - i;
    const double mean = l.segment(i, k).mean();
    // A cluster sitting on zero is left alone: it carries no drift.
    if (k > 1 && mean > static_cast<double>(k) * kDegenerateSplit) {
      for (Eigen::Index q = 0; q < k; ++q)
        l(i + q) = mean + (0.5 * static_cast<double>(k - 1) - static_cast<double>(q)) * kDegenerateSplit;
      ++touched;
    }
    i = j;
  }
  return touched;
}

/// Symmetric square root factor of a PSD matrix: L L^T = Sigma.
inline RMatrix psd_factor(const RMatrix& sigma, const Spectrum& at) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(sigma);
  RVector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kCovarianceClip) {
      std::string msg = "diffusion matrix eigenvalue " + std::to_string(ev(i)) + " at spectrum (";
      for (Eigen::Index a = 0; a < at.values.size(); ++a) msg += (a ? ", " : "") + std::to_string(at.values(a));
      throw CovarianceError(msg + ")");
    }
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal();
}

struct StepDiagnostics {
  std::int64_t substeps = 0;
  std::int64_t splits = 0;
  bool clipped = false;  // the renormalization/positivity safety net fired
};

/// Largest stable substep: the pair drift over the substep stays below a
/// tenth of the pair gap.
inline double stable_substep(const Spectrum& s, double kappa = 0.1) {
  const RVector& l = s.values;
  double h = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < l.size(); ++a)
    for (Eigen::Index b = a + 1; b < l.size(); ++b) {
      const double prod = l(a) * l(b);
      if (prod <= 0.0) continue;
      const double gap = l(a) - l(b);
      h = std::min(h, kappa * gap * gap / prod);
    }
  return h;
}

/// One Euler-Maruyama step of length dt. When some pair is so close that a
/// single step would overshoot the gap, the step is split into substeps.
inline Spectrum euler_maruyama_step(const Spectrum& in, double dt, RngStream& rng, StepDiagnostics* diag = nullptr) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  Spectrum s = in;
  StepDiagnostics local;
  double remaining = dt;
  while (remaining > 0.0) {
    if (s.degenerate()) local.splits += split_degeneracies(s);
    const double h = std::min(remaining, stable_substep(s));
    remaining = h < remaining ? remaining - h : 0.0;
    ++local.substeps;

    const GeneratorCoefficients g = generator_coefficients(s);
    const RMatrix factor = psd_factor(g.diffusion, s);
    RVector xi(s.values.size());
    for (Eigen::Index a = 0; a < xi.size(); ++a) xi(a) = rng.normal();
    RVector next = s.values + g.drift * h + factor * xi * std::sqrt(h);

    const double sum = next.sum();
    if (std::abs(sum - 1.0) > 1e-9) local.clipped = true;
    for (Eigen::Index a = 0; a < next.size(); ++a)
      if (next(a) < 0.0) {
        if (next(a) < -kSpectrumClip) local.clipped = true;
        next(a) = 0.0;
      }
    next /= next.sum();
    std::sort(next.data(), next.data() + next.size(), std::greater<>());
    s.values = next;
  }
  if (diag) {
    diag->substeps += local.substeps;
    diag->splits += local.splits;
    diag->clipped = diag->clipped || local.clipped;
  }
  return s;
}

struct SdeEnsemble {
  Eigen::Index d = 0;
  double dt = 0.0;
  std::int64_t steps = 0;
  std::size_t walkers = 0;
  /// path[w][t] = spectrum of walker w after t steps (t = 0..steps), descending.
  std::vector<std::vector<RVector>> paths;
  std::int64_t clipped_steps = 0;
  std::int64_t substeps = 0;
  std::int64_t splits = 0;
  /// Walkers whose smallest eigenvalue touched the positivity floor; reported
  /// because the boundary behaviour at lambda = 0 is not pinned down.
  std::size_t boundary_hits = 0;

  double clipped_fraction() const {
    const double total = static_cast<double>(steps) * static_cast<double>(walkers);
    return total > 0 ? static_cast<double>(clipped_steps) / total : 0.0;
  }

  std::vector<double> mean_purity() const {
    std::vector<double> out(static_cast<std::size_t>(steps) + 1);
    std::vector<double> col(walkers);
    for (std::size_t t = 0; t < out.size(); ++t) {
      for (std::size_t w = 0; w < walkers; ++w) col[w] = paths[w][t].squaredNorm();
      out[t] = stats::mean(col);
    }
    return out;
  }
};

/// Walker w uses RngStream(seed, w).
inline SdeEnsemble run_sde_ensemble(const Spectrum& start, double dt, std::int64_t steps, std::size_t walkers,
                                    std::uint64_t seed, std::size_t workers = 1) {
  validate(start);
  SdeEnsemble ens;
  ens.d = start.rank();
  ens.dt = dt;
  ens.steps = steps;
  ens.walkers = walkers;
  ens.paths.resize(walkers);
  std::vector<StepDiagnostics> diags(walkers);
  std::vector<std::int64_t> clipped(walkers, 0);
  std::vector<char> hit(walkers, 0);
  parallel_for(walkers, workers, [&](std::size_t w) {
    RngStream rng(seed, w);
    Spectrum s = start;
    std::sort(s.values.data(), s.values.data() + s.values.size(), std::greater<>());
    auto& path = ens.paths[w];
    path.reserve(static_cast<std::size_t>(steps) + 1);
    path.push_back(s.values);
    for (std::int64_t t = 0; t < steps; ++t) {
      StepDiagnostics dg;
      s = euler_maruyama_step(s, dt, rng, &dg);
      diags[w].substeps += dg.substeps;
      diags[w].splits += dg.splits;
      if (dg.clipped) ++clipped[w];
      if (s.rank() > 1 && s.values(s.rank() - 1) <= 0.0) hit[w] = 1;
      path.push_back(s.values);
    }
  });
  for (std::size_t w = 0; w < walkers; ++w) {
    ens.clipped_steps += clipped[w];
    ens.substeps += diags[w].substeps;
    ens.splits += diags[w].splits;
    ens.boundary_hits += hit[w] ? 1 : 0;
  }
  return ens;
}

struct MicroscopicComparison {
  Eigen::Index d = 0;
  Eigen::Index N = 0;
  std::int64_t steps = 0;
  std::size_t walkers = 0;
  /// Per step: ensemble means of the descending eigenvalues and of l_a l_b.
  std::vector<RVector> micro_first, sde_first;
  std::vector<RMatrix> micro_second, sde_second;
  std::vector<double> micro_purity, sde_purity;
  double max_sum_defect = 0.0;
  double sde_clipped_fraction = 0.0;
  std::size_t sde_boundary_hits = 0;

  /// max_t |sde/micro - 1| for mean purity over t <= t_max.
  double max_relative_purity_gap(std::int64_t t_max) const {
    double m = 0.0;
    for (std::int64_t t = 0; t <= std::min(t_max, steps); ++t)
      m = std::max(m, std::abs(sde_purity[t] / micro_purity[t] - 1.0));
    return m;
  }
};

namespace detail {

inline void ensemble_moments(const std::vector<std::vector<RVector>>& paths, Eigen::Index d, std::int64_t steps,
                             std::vector<RVector>& first, std::vector<RMatrix>& second, std::vector<double>& purity) {
  const std::size_t walkers = paths.size();
  first.assign(static_cast<std::size_t>(steps) + 1, RVector::Zero(d));
  second.assign(static_cast<std::size_t>(steps) + 1, RMatrix::Zero(d, d));
  purity.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  std::vector<double> col(walkers);
  for (std::size_t t = 0; t <= static_cast<std::size_t>(steps); ++t) {
    for (Eigen::Index a = 0; a < d; ++a) {
      for (std::size_t w = 0; w < walkers; ++w) col[w] = paths[w][t](a);
      first[t](a) = stats::mean(col);
      for (Eigen::Index b = a; b < d; ++b) {
        for (std::size_t w = 0; w < walkers; ++w) col[w] = paths[w][t](a) * paths[w][t](b);
        second[t](a, b) = second[t](b, a) = stats::mean(col);
      }
    }
    for (std::size_t w = 0; w < walkers; ++w) col[w] = paths[w][t].squaredNorm();
    purity[t] = stats::mean(col);
  }
}

}  // namespace detail

/// Many-body trajectories (spectral engine, measurement mode) from the state
/// maximally mixed on d dimensions, against the SDE with dt = 1/N. Walker w
/// of the many-body side uses RngStream(seed, w); the SDE side uses seed + 1.
inline MicroscopicComparison microscopic_comparison(Eigen::Index d, Eigen::Index n, std::int64_t steps,
                                                    std::size_t walkers, std::uint64_t seed,
                                                    std::size_t workers = 1) {
  if (d < 1 || d > 8) throw InvalidDimension("microscopic_comparison needs 1 <= d <= 8");
  if (n < 100 * d || n % 2 != 0) throw InvalidDimension("microscopic_comparison needs even N >= 100 d");
  MicroscopicComparison rep;
  rep.d = d;
  rep.N = n;
  rep.steps = steps;
  rep.walkers = walkers;

  std::vector<std::vector<RVector>> micro(walkers);
  std::vector<double> sum_defect(walkers, 0.0);
  parallel_for(walkers, workers, [&](std::size_t w) {
    RngStream rng(seed, w);
    SpectralState s = spectral_mixed_on_support(n, d);
    auto& path = micro[w];
    path.reserve(static_cast<std::size_t>(steps) + 1);
    auto padded = [&] {
      RVector v = RVector::Zero(d);
      RVector l = s.lambda;
      std::sort(l.data(), l.data() + l.size(), std::greater<>());
      v.head(l.size()) = l;
      return v;
    };
    path.push_back(padded());
    for (std::int64_t t = 0; t < steps; ++t) {
      spectral_step(s, n / 2, Mode::measurement, rng);
      sum_defect[w] = std::max(sum_defect[w], std::abs(s.lambda.sum() - 1.0));
      path.push_back(padded());
    }
  });
  detail::ensemble_moments(micro, d, steps, rep.micro_first, rep.micro_second, rep.micro_purity);

  const SdeEnsemble sde =
      run_sde_ensemble(Spectrum::uniform(d), 1.0 / static_cast<double>(n), steps, walkers, seed + 1, workers);
  detail::ensemble_moments(sde.paths, d, steps, rep.sde_first, rep.sde_second, rep.sde_purity);
  for (const auto& p : sde.paths)
    for (const auto& v : p) rep.max_sum_defect = std::max(rep.max_sum_defect, std::abs(v.sum() - 1.0));
  for (double x : sum_defect) rep.max_sum_defect = std::max(rep.max_sum_defect, x);
  rep.sde_clipped_fraction = sde.clipped_fraction();
  rep.sde_boundary_hits = sde.boundary_hits;
  return rep;
}

}  // namespace purify
