#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "purify/error.hpp"
#include "purify/parallel.hpp"
#include "purify/rng.hpp"

namespace purify {

/// Pauli string on n <= 64 qubits without phase: bit q of x (z) is the X (Z)
/// part on qubit q, so Y is x = z = 1.
struct PauliString {
  int n = 0;
  std::uint64_t x = 0;
  std::uint64_t z = 0;

  bool is_identity() const { return x == 0 && z == 0; }
  bool operator==(const PauliString&) const = default;

  PauliString& operator*=(const PauliString& o) {
    x ^= o.x;
    z ^= o.z;
    return *this;
  }

  static PauliString single(int n, int qubit, char op) {
    PauliString p{n, 0, 0};
    const std::uint64_t bit = std::uint64_t{1} << qubit;
    if (op == 'X' || op == 'Y') p.x |= bit;
    if (op == 'Z' || op == 'Y') p.z |= bit;
    return p;
  }

  /// "XIZY..." with qubit 0 first.
  static PauliString parse(std::string_view s) {
    if (s.empty() || s.size() > 64) throw InvalidDimension("Pauli string length must lie in [1, 64]");
    PauliString p{static_cast<int>(s.size()), 0, 0};
    for (std::size_t q = 0; q < s.size(); ++q) {
      const char c = s[q];
      if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') throw std::invalid_argument("bad Pauli letter");
      p *= single(p.n, static_cast<int>(q), c);
    }
    return p;
  }

  std::string str() const {
    std::string s(static_cast<std::size_t>(n), 'I');
    for (int q = 0; q < n; ++q) {
      const bool bx = (x >> q) & 1, bz = (z >> q) & 1;
      s[static_cast<std::size_t>(q)] = bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
    }
    return s;
  }
};

/// 0 if p and q commute, 1 if they anticommute.
inline int symplectic_product(const PauliString& p, const PauliString& q) {
  if (p.n != q.n) throw SizeError("Pauli strings have different lengths");
  return std::popcount((p.x & q.z) ^ (p.z & q.x)) & 1;
}

/// Rank over the two-element field of a set of 2n-bit rows.
inline int gf2_rank(std::vector<PauliString> rows) {
  int rank = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PauliString& r = rows[i];
    if (r.is_identity()) continue;
    ++rank;
    // Pivot on the lowest set bit, X part first.
    const bool in_x = r.x != 0;
    const std::uint64_t bit = in_x ? (r.x & -r.x) : (r.z & -r.z);
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      if ((in_x ? rows[j].x : rows[j].z) & bit) rows[j] *= r;
  }
  return rank;
}

enum class MeasureCase { added, replaced, redundant, identity };

inline std::string_view to_string(MeasureCase c) {
  switch (c) {
    case MeasureCase::added: return "added";
    case MeasureCase::replaced: return "replaced";
    case MeasureCase::redundant: return "redundant";
    case MeasureCase::identity: return "identity";
  }
  return "?";
}

struct StabilizerTableau {
  int n = 0;
  std::vector<PauliString> rows;

  explicit StabilizerTableau(int qubits = 0) : n(qubits) {
    if (qubits < 0 || qubits > 64) throw InvalidDimension("stabilizer tableau supports 0..64 qubits");
  }

  int k() const { return static_cast<int>(rows.size()); }

  bool in_span(const PauliString& p) const {
    std::vector<PauliString> all = rows;
    all.push_back(p);
    return gf2_rank(all) == gf2_rank(rows);
  }

  /// Independent rows, pairwise commuting, k <= n.
  bool valid() const {
    if (k() > n) return false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].n != n) return false;
      for (std::size_t j = i + 1; j < rows.size(); ++j)
        if (symplectic_product(rows[i], rows[j])) return false;
    }
    return gf2_rank(rows) == k();
  }
};

inline int entropy_bits(const StabilizerTableau& t) { return t.n - t.k(); }

/// Projective measurement of p, phases ignored. Anticommuting rows are fixed
/// up against the lowest-index one, which is then traded for p.
inline MeasureCase measure_pauli(StabilizerTableau& t, const PauliString& p) {
  if (p.n != t.n) throw SizeError("Pauli string length differs from tableau size");
  if (p.is_identity()) return MeasureCase::identity;
  std::optional<std::size_t> pivot;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (!symplectic_product(t.rows[i], p)) continue;
    if (!pivot)
      pivot = i;
    else
      t.rows[i] *= t.rows[*pivot];
  }
  if (pivot) {
    t.rows[*pivot] = p;
    return MeasureCase::replaced;
  }
  if (t.in_span(p)) return MeasureCase::redundant;
  t.rows.push_back(p);
  return MeasureCase::added;
}

enum class PauliSampling { uniform_all_paulis, uniform_nonidentity };

inline std::string_view to_string(PauliSampling s) {
  return s == PauliSampling::uniform_all_paulis ? "uniform_all_paulis" : "uniform_nonidentity";
}

inline PauliSampling parse_sampling(std::string_view s) {
  if (s == "uniform_all_paulis") return PauliSampling::uniform_all_paulis;
  if (s == "uniform_nonidentity") return PauliSampling::uniform_nonidentity;
  throw ConfigError("unknown Pauli sampling '" + std::string(s) + "'");
}

inline PauliString random_pauli(int n, PauliSampling sampling, RngStream& rng) {
  const std::uint64_t mask = n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
  for (;;) {
    PauliString p{n, rng() & mask, rng() & mask};
    if (sampling == PauliSampling::uniform_all_paulis || !p.is_identity()) return p;
  }
}

struct StabilizerRow {
  std::int64_t step = 0;
  int entropy_bits = 0;
  MeasureCase measure_case = MeasureCase::identity;
};

struct StabilizerRecord {
  int n = 0;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  PauliSampling sampling = PauliSampling::uniform_all_paulis;
  std::vector<StabilizerRow> rows;           // rows[0] is the initial state
  std::vector<std::int64_t> visits_at_k;     // measurements made while holding k stabilizers
  std::vector<std::int64_t> added_at_k;
  std::optional<std::int64_t> steps_to_pure;
};

/// Until `steps` measurements, or until pure when stop_when_pure is set.
inline StabilizerRecord run_purification(int n, std::int64_t steps, PauliSampling sampling, RngStream rng,
                                         bool stop_when_pure = false) {
  if (n < 1 || n > 64) throw InvalidDimension("stabilizer run needs 1 <= n <= 64");
  StabilizerRecord rec;
  rec.n = n;
  rec.steps = steps;
  rec.seed = rng.seed();
  rec.stream = rng.stream_index();
  rec.sampling = sampling;
  rec.visits_at_k.assign(static_cast<std::size_t>(n) + 1, 0);
  rec.added_at_k.assign(static_cast<std::size_t>(n) + 1, 0);
  StabilizerTableau tab(n);
  rec.rows.push_back({0, entropy_bits(tab), MeasureCase::identity});
  for (std::int64_t t = 1; t <= steps; ++t) {
    const int k = tab.k();
    const MeasureCase c = measure_pauli(tab, random_pauli(n, sampling, rng));
    ++rec.visits_at_k[static_cast<std::size_t>(k)];
    if (c == MeasureCase::added) ++rec.added_at_k[static_cast<std::size_t>(k)];
    rec.rows.push_back({t, entropy_bits(tab), c});
    if (tab.k() == n && !rec.steps_to_pure) {
      rec.steps_to_pure = t;
      if (stop_when_pure) break;
    }
  }
  return rec;
}

inline StabilizerRecord run_purification(int n, std::int64_t steps, PauliSampling sampling, std::uint64_t seed,
                                         bool stop_when_pure = false) {
  return run_purification(n, steps, sampling, RngStream(seed, 0), stop_when_pure);
}

/// 2^{-k} (1 - 4^{-(n-k)}) for uniform sampling over all 4^n strings.
inline double added_probability(int n, int k) {
  return std::ldexp(1.0, -k) * (1.0 - std::ldexp(1.0, -2 * (n - k)));
}

/// Expected number of measurements to reach a pure state (uniform over all strings).
inline double expected_steps_to_pure(int n) {
  double t = 0.0;
  for (int k = 0; k < n; ++k) t += 1.0 / added_probability(n, k);
  return t;
}

struct StabilizerEnsemble {
  int n = 0;
  std::size_t trajectories = 0;
  std::vector<std::int64_t> visits_at_k;
  std::vector<std::int64_t> added_at_k;
  std::vector<std::int64_t> steps_to_pure;  // per trajectory, -1 when not reached
  std::int64_t entropy_violations = 0;
  std::int64_t measurements = 0;
  std::vector<StabilizerRecord> records;    // kept only when requested

  double mean_steps_to_pure() const {
    double s = 0.0;
    std::size_t c = 0;
    for (auto v : steps_to_pure)
      if (v >= 0) {
        s += static_cast<double>(v);
        ++c;
      }
    return c ? s / static_cast<double>(c) : 0.0;
  }
};

/// Trajectory i uses RngStream(seed, i) and runs until pure or max_steps.
/// Per-step rows are dropped after tallying unless keep_records is set.
inline StabilizerEnsemble run_stabilizer_ensemble(int n, std::size_t trajectories, std::int64_t max_steps,
                                                  PauliSampling sampling, std::uint64_t seed, std::size_t workers = 1,
                                                  bool keep_records = false) {
  std::vector<StabilizerRecord> recs(trajectories);
  std::vector<std::int64_t> violations(trajectories, 0), measured(trajectories, 0);
  parallel_for(trajectories, workers, [&](std::size_t i) {
    StabilizerRecord r = run_purification(n, max_steps, sampling, RngStream(seed, i), true);
    for (std::size_t t = 1; t < r.rows.size(); ++t) {
      ++measured[i];
      const int d = r.rows[t].entropy_bits - r.rows[t - 1].entropy_bits;
      if (d > 0 || d < -1) ++violations[i];
    }
    if (!keep_records) r.rows = {};
    recs[i] = std::move(r);
  });
  StabilizerEnsemble ens;
  ens.n = n;
  ens.trajectories = trajectories;
  ens.visits_at_k.assign(static_cast<std::size_t>(n) + 1, 0);
  ens.added_at_k.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t i = 0; i < trajectories; ++i) {
    const auto& r = recs[i];
    for (int k = 0; k <= n; ++k) {
      ens.visits_at_k[static_cast<std::size_t>(k)] += r.visits_at_k[static_cast<std::size_t>(k)];
      ens.added_at_k[static_cast<std::size_t>(k)] += r.added_at_k[static_cast<std::size_t>(k)];
    }
    ens.steps_to_pure.push_back(r.steps_to_pure.value_or(-1));
    ens.measurements += measured[i];
    ens.entropy_violations += violations[i];
  }
  if (keep_records) ens.records = std::move(recs);
  return ens;
}

}  // namespace purify
