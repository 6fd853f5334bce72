#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "purify/dyson.hpp"
#include "purify/error.hpp"
#include "purify/fermion.hpp"
#include "purify/fock.hpp"
#include "purify/manybody.hpp"
#include "purify/moments.hpp"
#include "purify/stabilizer.hpp"
#include "purify/stats.hpp"

#define PURIFY_VERSION "0.1.0"

namespace purify::harness {

using json = nlohmann::ordered_json;

inline constexpr const char* kOutDirEnv = "PURIFY_OUT_DIR";
inline constexpr const char* kDefaultOutDir = "purify-out";

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Formatting and digests.
// ---------------------------------------------------------------------------

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Row-oriented CSV text with a fixed header.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { line(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("CSV row width differs from header");
    line(cells);
  }

  const std::string& str() const { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_.push_back(',');
      text_ += cells[i];
    }
    text_.push_back('\n');
  }

  std::size_t width_;
  std::string text_;
};

// ---------------------------------------------------------------------------
// Configuration.
// ---------------------------------------------------------------------------

struct TrajectoryParams {
  std::int64_t N = 2000;
  std::int64_t steps = 6000;
  std::vector<std::string> modes{"measurement", "postselection"};
  std::int64_t trajectories = 1;
  std::string engine = "spectral";
  std::int64_t initial_rank = 0;           // 0 means N
  std::int64_t measurements_per_step = 1;  // projectors applied between recorded rows
  std::int64_t csv_trajectories = 1;       // trajectories written out row by row
};

struct DysonParams {
  std::int64_t d = 2;
  std::int64_t N = 1000;
  std::int64_t steps = 200;
  std::int64_t walkers = 1000;
  double dt = 0.0;  // 0 means 1/N
  std::int64_t record_every = 1;
  bool compare_microscopic = false;
};

struct FermionParams {
  std::string variant = "conserving";
  std::int64_t modes = 32;
  std::int64_t steps = 2048;
  std::int64_t walkers = 200;
  std::int64_t record_every = 16;
  std::string protocol = "frame";
};

struct StabilizerParams {
  std::int64_t qubits = 10;
  std::int64_t trajectories = 1000;
  std::int64_t max_steps = 1000000;
  std::string sampling = "uniform_all_paulis";
  std::int64_t csv_trajectories = 1;
};

struct MomentsParams {
  std::vector<std::int64_t> dims{32, 64, 128};
  std::int64_t samples = 20000;
};

inline const std::vector<std::string>& all_suites() {
  static const std::vector<std::string> s{"moments", "fermion-oracle", "dyson-identity", "inequalities",
                                          "stabilizer-stats"};
  return s;
}

struct VerifyParams {
  std::vector<std::string> suites = all_suites();
  std::vector<std::int64_t> moments_dims{32, 64, 128};
  std::int64_t moments_samples = 20000;
  std::int64_t fermion_states = 100;
  std::int64_t dyson_spectra = 1000;
  std::int64_t inequality_cases = 1000;
  std::int64_t stabilizer_trajectories = 10000;
};

inline const std::vector<std::string>& all_kinds() {
  static const std::vector<std::string> k{"manybody", "rank2", "dyson", "fermion", "stabilizer", "verify-moments",
                                          "verify"};
  return k;
}

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 1;
  std::int64_t workers = 1;
  std::string out;  // empty: environment variable, then the built-in default

  TrajectoryParams manybody;
  TrajectoryParams rank2 = [] {
    TrajectoryParams p;
    p.modes = {"measurement"};
    p.initial_rank = 2;
    return p;
  }();
  DysonParams dyson;
  FermionParams fermion;
  StabilizerParams stabilizer;
  MomentsParams moments;
  VerifyParams verify;

  static ExperimentConfig defaults(const std::string& kind) {
    ExperimentConfig c;
    c.kind = kind;
    return c;
  }
};

namespace detail {

/// Reads one JSON object, tracking which keys were consumed so leftovers can
/// be reported with their full path.
class FieldReader {
 public:
  FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    read(v, out, where(key));
  }

  void mark(const std::string& key) { seen_.insert(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown field");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  static void read(const json& v, std::int64_t& out, const std::string& at) {
    if (!v.is_number_integer()) throw ConfigError(at + ": expected an integer");
    out = v.get<std::int64_t>();
  }
  static void read(const json& v, std::uint64_t& out, const std::string& at) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(at + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void read(const json& v, double& out, const std::string& at) {
    if (!v.is_number()) throw ConfigError(at + ": expected a number");
    out = v.get<double>();
  }
  static void read(const json& v, bool& out, const std::string& at) {
    if (!v.is_boolean()) throw ConfigError(at + ": expected true or false");
    out = v.get<bool>();
  }
  static void read(const json& v, std::string& out, const std::string& at) {
    if (!v.is_string()) throw ConfigError(at + ": expected a string");
    out = v.get<std::string>();
  }
  template <class T>
  static void read(const json& v, std::vector<T>& out, const std::string& at) {
    if (!v.is_array()) throw ConfigError(at + ": expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      T x{};
      read(v[i], x, at + "[" + std::to_string(i) + "]");
      out.push_back(x);
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void positive(std::int64_t v, const std::string& at) {
  if (v <= 0) throw ConfigError(at + ": must be positive (got " + std::to_string(v) + ")");
}

inline void read_section(FieldReader& r, TrajectoryParams& p) {
  r.get("N", p.N);
  r.get("steps", p.steps);
  r.get("modes", p.modes);
  r.get("trajectories", p.trajectories);
  r.get("engine", p.engine);
  r.get("initial_rank", p.initial_rank);
  r.get("measurements_per_step", p.measurements_per_step);
  r.get("csv_trajectories", p.csv_trajectories);
}

inline void read_section(FieldReader& r, DysonParams& p) {
  r.get("d", p.d);
  r.get("N", p.N);
  r.get("steps", p.steps);
  r.get("walkers", p.walkers);
  r.get("dt", p.dt);
  r.get("record_every", p.record_every);
  r.get("compare_microscopic", p.compare_microscopic);
}

inline void read_section(FieldReader& r, FermionParams& p) {
  r.get("variant", p.variant);
  r.get("modes", p.modes);
  r.get("steps", p.steps);
  r.get("walkers", p.walkers);
  r.get("record_every", p.record_every);
  r.get("protocol", p.protocol);
}

inline void read_section(FieldReader& r, StabilizerParams& p) {
  r.get("qubits", p.qubits);
  r.get("trajectories", p.trajectories);
  r.get("max_steps", p.max_steps);
  r.get("sampling", p.sampling);
  r.get("csv_trajectories", p.csv_trajectories);
}

inline void read_section(FieldReader& r, MomentsParams& p) {
  r.get("dims", p.dims);
  r.get("samples", p.samples);
}

inline void read_section(FieldReader& r, VerifyParams& p) {
  r.get("suites", p.suites);
  r.get("moments_dims", p.moments_dims);
  r.get("moments_samples", p.moments_samples);
  r.get("fermion_states", p.fermion_states);
  r.get("dyson_spectra", p.dyson_spectra);
  r.get("inequality_cases", p.inequality_cases);
  r.get("stabilizer_trajectories", p.stabilizer_trajectories);
}

inline json section_json(const TrajectoryParams& p) {
  return {{"N", p.N},
          {"steps", p.steps},
          {"modes", p.modes},
          {"trajectories", p.trajectories},
          {"engine", p.engine},
          {"initial_rank", p.initial_rank},
          {"measurements_per_step", p.measurements_per_step},
          {"csv_trajectories", p.csv_trajectories}};
}

inline json section_json(const DysonParams& p) {
  return {{"d", p.d},         {"N", p.N},   {"steps", p.steps}, {"walkers", p.walkers},
          {"dt", p.dt},       {"record_every", p.record_every}, {"compare_microscopic", p.compare_microscopic}};
}

inline json section_json(const FermionParams& p) {
  return {{"variant", p.variant}, {"modes", p.modes},
          {"steps", p.steps},     {"walkers", p.walkers},
          {"record_every", p.record_every}, {"protocol", p.protocol}};
}

inline json section_json(const StabilizerParams& p) {
  return {{"qubits", p.qubits},
          {"trajectories", p.trajectories},
          {"max_steps", p.max_steps},
          {"sampling", p.sampling},
          {"csv_trajectories", p.csv_trajectories}};
}

inline json section_json(const MomentsParams& p) { return {{"dims", p.dims}, {"samples", p.samples}}; }

inline json section_json(const VerifyParams& p) {
  return {{"suites", p.suites},
          {"moments_dims", p.moments_dims},
          {"moments_samples", p.moments_samples},
          {"fermion_states", p.fermion_states},
          {"dyson_spectra", p.dyson_spectra},
          {"inequality_cases", p.inequality_cases},
          {"stabilizer_trajectories", p.stabilizer_trajectories}};
}

template <class F>
decltype(auto) visit_section(ExperimentConfig& c, F&& f) {
  if (c.kind == "manybody") return f(c.manybody);
  if (c.kind == "rank2") return f(c.rank2);
  if (c.kind == "dyson") return f(c.dyson);
  if (c.kind == "fermion") return f(c.fermion);
  if (c.kind == "stabilizer") return f(c.stabilizer);
  if (c.kind == "verify-moments") return f(c.moments);
  if (c.kind == "verify") return f(c.verify);
  throw ConfigError("kind: unknown experiment kind '" + c.kind + "'");
}

inline void validate_trajectory(const TrajectoryParams& p, const std::string& s) {
  positive(p.N, s + ".N");
  if (p.N < 2 || p.N % 2) throw ConfigError(s + ".N: must be even and at least 2");
  positive(p.steps, s + ".steps");
  positive(p.trajectories, s + ".trajectories");
  positive(p.measurements_per_step, s + ".measurements_per_step");
  if (p.initial_rank < 0 || p.initial_rank > p.N) throw ConfigError(s + ".initial_rank: must lie in [0, N]");
  if (p.csv_trajectories < 0 || p.csv_trajectories > p.trajectories)
    throw ConfigError(s + ".csv_trajectories: must lie in [0, trajectories]");
  if (p.modes.empty()) throw ConfigError(s + ".modes: at least one mode is required");
  for (std::size_t i = 0; i < p.modes.size(); ++i) try {
      parse_mode(p.modes[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(s + ".modes[" + std::to_string(i) + "]: " + e.what());
    }
  if (p.engine != "spectral" && p.engine != "dense")
    throw ConfigError(s + ".engine: expected spectral or dense");
  if (p.engine == "dense" && p.N > 512) throw ConfigError(s + ".engine: dense engine is limited to N <= 512");
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  using detail::positive;
  if (std::find(all_kinds().begin(), all_kinds().end(), c.kind) == all_kinds().end())
    throw ConfigError("kind: unknown experiment kind '" + c.kind + "'");
  positive(c.workers, "workers");
  const std::string s = c.kind;
  if (c.kind == "manybody") detail::validate_trajectory(c.manybody, s);
  if (c.kind == "rank2") detail::validate_trajectory(c.rank2, s);
  if (c.kind == "dyson") {
    const auto& p = c.dyson;
    positive(p.d, s + ".d");
    positive(p.N, s + ".N");
    positive(p.steps, s + ".steps");
    positive(p.walkers, s + ".walkers");
    positive(p.record_every, s + ".record_every");
    if (p.dt < 0.0 || !std::isfinite(p.dt)) throw ConfigError(s + ".dt: must be finite and non-negative");
    if (p.d > p.N) throw ConfigError(s + ".d: must not exceed N");
    if (p.compare_microscopic && (p.d > 8 || p.N < 100 * p.d || p.N % 2))
      throw ConfigError(s + ".compare_microscopic: needs d <= 8 and even N >= 100 d");
  }
  if (c.kind == "fermion") {
    const auto& p = c.fermion;
    try {
      parse_variant(p.variant);
    } catch (const ConfigError& e) {
      throw ConfigError(s + ".variant: " + e.what());
    }
    positive(p.modes, s + ".modes");
    if (p.modes < 2) throw ConfigError(s + ".modes: at least 2 modes are required");
    positive(p.steps, s + ".steps");
    positive(p.walkers, s + ".walkers");
    if (p.walkers < 2) throw ConfigError(s + ".walkers: at least 2 walkers are required");
    positive(p.record_every, s + ".record_every");
    if (p.protocol != "frame" && p.protocol != "literal") throw ConfigError(s + ".protocol: expected frame or literal");
  }
  if (c.kind == "stabilizer") {
    const auto& p = c.stabilizer;
    positive(p.qubits, s + ".qubits");
    if (p.qubits > 64) throw ConfigError(s + ".qubits: at most 64 qubits are supported");
    positive(p.trajectories, s + ".trajectories");
    positive(p.max_steps, s + ".max_steps");
    if (p.csv_trajectories < 0 || p.csv_trajectories > p.trajectories)
      throw ConfigError(s + ".csv_trajectories: must lie in [0, trajectories]");
    try {
      parse_sampling(p.sampling);
    } catch (const ConfigError& e) {
      throw ConfigError(s + ".sampling: " + e.what());
    }
  }
  auto check_dims = [](const std::vector<std::int64_t>& dims, const std::string& at) {
    if (dims.empty()) throw ConfigError(at + ": at least one dimension is required");
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (dims[i] < 4 || dims[i] % 2) throw ConfigError(at + "[" + std::to_string(i) + "]: must be even and >= 4");
  };
  if (c.kind == "verify-moments") {
    check_dims(c.moments.dims, s + ".dims");
    if (c.moments.samples < 100) throw ConfigError(s + ".samples: at least 100 samples are required");
  }
  if (c.kind == "verify") {
    const auto& p = c.verify;
    if (p.suites.empty()) throw ConfigError(s + ".suites: at least one suite is required");
    for (std::size_t i = 0; i < p.suites.size(); ++i)
      if (std::find(all_suites().begin(), all_suites().end(), p.suites[i]) == all_suites().end())
        throw ConfigError(s + ".suites[" + std::to_string(i) + "]: unknown suite '" + p.suites[i] + "'");
    check_dims(p.moments_dims, s + ".moments_dims");
    if (p.moments_samples < 100) throw ConfigError(s + ".moments_samples: at least 100 samples are required");
    positive(p.fermion_states, s + ".fermion_states");
    positive(p.dyson_spectra, s + ".dyson_spectra");
    positive(p.inequality_cases, s + ".inequality_cases");
    positive(p.stabilizer_trajectories, s + ".stabilizer_trajectories");
  }
}

inline json to_json(const ExperimentConfig& c) {
  json j{{"kind", c.kind}, {"seed", c.seed}, {"workers", c.workers}, {"out", c.out}};
  ExperimentConfig copy = c;
  j[c.kind] = detail::visit_section(copy, [](const auto& p) { return detail::section_json(p); });
  return j;
}

/// Strict parse: unknown fields, wrong types and sections for another kind
/// are errors naming the offending path. `kind` may be supplied by the caller
/// when the document omits it.
inline ExperimentConfig config_from_json(const json& j, const std::string& kind_hint = "") {
  ExperimentConfig c;
  detail::FieldReader r(j, "");
  r.get("kind", c.kind);
  if (c.kind.empty()) c.kind = kind_hint;
  if (c.kind.empty()) throw ConfigError("kind: missing experiment kind");
  if (!kind_hint.empty() && c.kind != kind_hint)
    throw ConfigError("kind: config is for '" + c.kind + "' but the '" + kind_hint + "' command was run");
  r.get("seed", c.seed);
  r.get("workers", c.workers);
  r.get("out", c.out);
  detail::visit_section(c, [&](auto& p) {
    if (j.contains(c.kind)) {
      detail::FieldReader sr(j.at(c.kind), c.kind);
      detail::read_section(sr, p);
      sr.finish();
      r.mark(c.kind);
    }
  });
  r.finish();
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const std::string& kind_hint = "") {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file '" + path.string() + "' cannot be read");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return config_from_json(j, kind_hint);
}

inline std::filesystem::path resolve_out_dir(const ExperimentConfig& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return kDefaultOutDir;
}

// ---------------------------------------------------------------------------
// Manifest.
// ---------------------------------------------------------------------------

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  json config;
  std::string artifact_version = PURIFY_VERSION;
  std::string started;
  std::string finished;
  json worker_seeds = json::array();
  std::vector<OutputFile> outputs;
  bool passed = true;  // verification outcome; always true for plain runs

  json to_json() const {
    json files = json::array();
    for (const auto& f : outputs) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return {{"artifact_version", artifact_version},
            {"config", config},
            {"started", started},
            {"finished", finished},
            {"worker_seeds", worker_seeds},
            {"outputs", files},
            {"passed", passed}};
  }
};

/// Work is split by walker index: worker w handles indices i with i % W == w,
/// each with its own stream derived from (seed, i).
inline json worker_seed_table(std::uint64_t seed, std::int64_t workers) {
  json t = json::array();
  for (std::int64_t w = 0; w < workers; ++w)
    t.push_back({{"worker", w},
                 {"seed", seed},
                 {"indices", "i % " + std::to_string(workers) + " == " + std::to_string(w)},
                 {"stream", "RngStream(seed, i)"}});
  return t;
}

/// Collects outputs under one directory and digests them as written.
class OutputSink {
 public:
  explicit OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
    files_.push_back({name, sha256_hex(content), content.size()});
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const std::vector<OutputFile>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

// ---------------------------------------------------------------------------
// Verification suites.
// ---------------------------------------------------------------------------

struct SuiteReport {
  std::string suite;
  bool passed = true;
  json details = json::object();
};

inline json to_json(const McEstimate& e) {
  return {{"mean", e.mean}, {"stderr", e.standard_error}, {"samples", e.samples}};
}

/// Moment checks at each N for the maximally mixed state and diag(0.7, 0.3):
/// every statistic against its analytic value within 3 stderr + 4/N^2, and
/// the update variance in both modes within 3 stderr + 8/N^2.
inline SuiteReport moments_suite(const std::vector<std::int64_t>& dims, std::size_t samples, std::uint64_t seed,
                                 std::size_t workers) {
  SuiteReport rep{"moments"};
  json entries = json::array();
  std::uint64_t stream = 0;
  for (std::int64_t n : dims) {
    const double nd = static_cast<double>(n);
    struct NamedState {
      std::string name;
      RVector lambda;
    };
    RVector rank2(2);
    rank2 << 0.7, 0.3;
    const std::vector<NamedState> states{{"maximally_mixed", RVector::Constant(n, 1.0 / nd)}, {"rank2", rank2}};
    for (const auto& st : states) {
      const TraceProfile prof = TraceProfile::from_spectrum(st.lambda);
      const auto ts = mc_trace_samples(st.lambda, n, samples, RngStream(seed, stream++), workers);
      auto add = [&](const std::string& stat, double analytic, const McEstimate& e, double slack) {
        const bool pass = e.agrees_with(analytic, 3.0, slack);
        rep.passed = rep.passed && pass;
        entries.push_back({{"N", n},
                           {"state", st.name},
                           {"statistic", stat},
                           {"analytic", analytic},
                           {"mc_mean", e.mean},
                           {"mc_stderr", e.standard_error},
                           {"deviation", e.mean - analytic},
                           {"slack", slack},
                           {"pass", pass}});
      };
      for (PurityStatistic s : kAllPurityStatistics)
        add(std::string(to_string(s)), analytic_target(prof, nd, s), estimate_statistic(ts, prof.t2, s),
            4.0 / (nd * nd));
      for (Mode m : {Mode::measurement, Mode::postselection})
        add("noise_" + std::string(to_string(m)), analytic_noise(prof, nd), estimate_noise(ts, prof.t2, m),
            8.0 / (nd * nd));
    }
  }
  rep.details["samples"] = samples;
  rep.details["entries"] = entries;
  return rep;
}

/// Closed-form updates and entropy changes against the dense Fock oracle.
inline SuiteReport fermion_oracle_suite(std::size_t states_per_n, std::uint64_t seed, double tol = 1e-10) {
  SuiteReport rep{"fermion-oracle"};
  json per_n = json::array();
  double worst = 0.0;
  for (int n = 2; n <= 5; ++n) {
    double dev_general = 0.0, dev_conserving = 0.0, dev_prob = 0.0, dev_ds = 0.0;
    std::size_t nudged = 0;
    for (std::size_t i = 0; i < states_per_n; ++i) {
      RngStream rng(seed, static_cast<std::uint64_t>(n) * 1000000 + i);
      const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

      const MajoranaCorrelationMatrix m = random_majorana_state(n, rng);
      const FockReport fr = fock_oracle(m, j, rng);
      nudged += fr.nudged ? 1 : 0;
      for (Branch b : {Branch::plus, Branch::minus}) {
        const FockBranch& fb = b == Branch::plus ? fr.plus : fr.minus;
        const FermionOutcome po = purify::detail::outcome_probabilities(m.entries(2 * j, 2 * j + 1));
        dev_prob = std::max(dev_prob, std::abs((b == Branch::plus ? po.p_plus : po.p_minus) - fb.probability));
        if (fb.probability <= kZeroProbability) continue;
        dev_general = std::max(dev_general, linalg::max_abs(general_branch(m, j, b).entries - fb.majorana));
      }
      dev_ds = std::max(dev_ds, std::abs(delta_s_proxy_general(m, j) - delta_s_proxy_direct(m, j)));

      const ModeCorrelationMatrix c = random_mode_state(n, rng);
      const FockReport cr = fock_oracle(c, j);
      for (Branch b : {Branch::plus, Branch::minus}) {
        const FockBranch& fb = b == Branch::plus ? cr.plus : cr.minus;
        const FermionOutcome po = purify::detail::outcome_probabilities(c.entries(j, j).real());
        dev_prob = std::max(dev_prob, std::abs((b == Branch::plus ? po.p_plus : po.p_minus) - fb.probability));
        if (fb.probability <= kZeroProbability) continue;
        dev_conserving = std::max(dev_conserving, linalg::max_abs(conserving_branch(c, j, b).entries - fb.mode));
      }
      dev_ds = std::max(dev_ds, std::abs(delta_s_proxy_conserving(c, j) - delta_s_proxy_direct(c, j)));
    }
    const double w = std::max({dev_general, dev_conserving, dev_prob, dev_ds});
    worst = std::max(worst, w);
    per_n.push_back({{"n", n},
                     {"states", states_per_n},
                     {"max_dev_general_update", dev_general},
                     {"max_dev_conserving_update", dev_conserving},
                     {"max_dev_probability", dev_prob},
                     {"max_dev_delta_s_proxy", dev_ds},
                     {"nudged_logarithms", nudged}});
  }
  rep.passed = worst < tol;
  rep.details = {{"tolerance", tol}, {"max_deviation", worst}, {"per_n", per_n}};
  return rep;
}

/// Random spectrum of length d from a flat Dirichlet draw.
inline Spectrum random_spectrum(Eigen::Index d, RngStream& rng) {
  RVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.gamma(1.0);
  v /= v.sum();
  return {v};
}

/// The generator applied to purity by quadrature of its coefficients, against
/// the closed form and against 1 - 2 tr rho^3 + (tr rho^2)^2; plus the kernel
/// check on F = (sum l)^3 + sin(sum l).
inline SuiteReport dyson_identity_suite(std::size_t spectra, std::uint64_t seed, double tol = 1e-12) {
  SuiteReport rep{"dyson-identity"};
  double dev_closed = 0.0, dev_trace = 0.0, dev_kernel = 0.0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < spectra; ++i) {
    RngStream rng(seed, i);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(7));
    const Spectrum s = random_spectrum(d, rng);
    if (s.degenerate()) {
      ++skipped;
      continue;
    }
    const GeneratorCoefficients g = generator_coefficients(s);
    const RVector& l = s.values;
    const double quad = apply_generator(g, 2.0 * l, 2.0 * RMatrix::Identity(d, d));
    const double closed = apply_generator_to_purity(s);
    const TraceProfile p = TraceProfile::from_spectrum(l);
    dev_closed = std::max(dev_closed, std::abs(quad - closed));
    dev_trace = std::max(dev_trace, std::abs(closed - (1.0 - 2.0 * p.t3 + p.t2 * p.t2)));
    const double sum = l.sum();
    const double f1 = 3.0 * sum * sum + std::cos(sum), f2 = 6.0 * sum - std::sin(sum);
    const double kern =
        apply_generator(g, RVector::Constant(d, f1), RMatrix::Constant(d, d, f2));
    dev_kernel = std::max(dev_kernel, std::abs(kern));
  }
  rep.passed = dev_closed < tol && dev_trace < tol && dev_kernel < tol && skipped < spectra;
  rep.details = {{"spectra", spectra},
                 {"degenerate_skipped", skipped},
                 {"tolerance", tol},
                 {"max_dev_quadrature_vs_closed_form", dev_closed},
                 {"max_dev_closed_form_vs_trace_formula", dev_trace},
                 {"max_abs_generator_on_function_of_sum", dev_kernel}};
  return rep;
}

/// Random complete orthogonal measurement: columns of a Haar unitary split
/// into k consecutive nonempty groups, k uniform in [2, n].
inline std::vector<CMatrix> random_projective_measurement(Eigen::Index n, RngStream& rng) {
  const CMatrix u = sample_haar_unitary(n, rng).entries;
  const auto k = static_cast<Eigen::Index>(2 + rng.below(static_cast<std::uint64_t>(n - 1)));
  // k - 1 distinct cut points in 1..n-1.
  std::vector<Eigen::Index> cuts;
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n - 1; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
  for (Eigen::Index c = 0; c < k - 1; ++c) {
    const auto pick = static_cast<std::size_t>(rng.below(pool.size()));
    cuts.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(n);
  std::vector<CMatrix> projs;
  Eigen::Index start = 0;
  for (Eigen::Index end : cuts) {
    const CMatrix v = u.middleCols(start, end - start);
    projs.push_back(v * v.adjoint());
    start = end;
  }
  return projs;
}

/// Outcome-averaged entropy never increases and outcome-averaged square-root
/// purity never decreases, each to 1e-9.
inline SuiteReport inequalities_suite(std::size_t cases, std::uint64_t seed, double slack = 1e-9) {
  SuiteReport rep{"inequalities"};
  const std::vector<Eigen::Index> dims{4, 8, 16};
  std::size_t entropy_violations = 0, sqrt_purity_violations = 0;
  double worst_entropy = -std::numeric_limits<double>::infinity();
  double worst_sqrt = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cases; ++i) {
    RngStream rng(seed, i);
    const Eigen::Index n = dims[i % dims.size()];
    const auto rank = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(n)));
    const DensityMatrix rho = random_density_matrix(n, rank, rng);
    const auto projs = random_projective_measurement(n, rng);
    const BranchAverages avg = avg_entropy_after_measurement(rho, projs);
    const double de = avg.entropy - vn_entropy(rho);
    const double ds = std::sqrt(purity(rho)) - avg.sqrt_purity;
    worst_entropy = std::max(worst_entropy, de);
    worst_sqrt = std::max(worst_sqrt, ds);
    if (de > slack) ++entropy_violations;
    if (ds > slack) ++sqrt_purity_violations;
  }
  rep.passed = entropy_violations == 0 && sqrt_purity_violations == 0;
  rep.details = {{"cases", cases},
                 {"dims", dims},
                 {"slack", slack},
                 {"entropy_violations", entropy_violations},
                 {"sqrt_purity_violations", sqrt_purity_violations},
                 {"max_entropy_increase", worst_entropy},
                 {"max_sqrt_purity_decrease", worst_sqrt}};
  return rep;
}

struct ExponentialFit {
  double base = 0.0;
  double log2_slope = 0.0;
  json points = json::array();
};

/// Mean steps-to-pure at each n, fitted as c * base^n on a log scale.
inline ExponentialFit fit_steps_to_pure(const std::vector<int>& ns, std::size_t trajectories, std::uint64_t seed,
                                        std::size_t workers) {
  ExponentialFit fit;
  std::vector<double> x, y;
  for (int n : ns) {
    const StabilizerEnsemble e = run_stabilizer_ensemble(n, trajectories, 1000000, PauliSampling::uniform_all_paulis,
                                                         seed + static_cast<std::uint64_t>(n), workers);
    const double m = e.mean_steps_to_pure();
    x.push_back(n);
    y.push_back(std::log2(m));
    fit.points.push_back({{"n", n}, {"mean_steps_to_pure", m}, {"expected", expected_steps_to_pure(n)}});
  }
  const stats::LinearFit lf = stats::least_squares(x, y);
  fit.log2_slope = lf.slope;
  fit.base = std::exp2(lf.slope);
  return fit;
}

/// Added-case frequencies per k against 2^{-k}(1 - 4^{-(n-k)}) within 3
/// binomial stderr where k was visited >= 300 times; entropy monotone; the
/// steps-to-pure growth has base 2 +- 0.2 over n in {6, 8, 10}.
inline SuiteReport stabilizer_stats_suite(std::size_t trajectories, std::uint64_t seed, std::size_t workers) {
  SuiteReport rep{"stabilizer-stats"};
  const int n = 10;
  const StabilizerEnsemble e =
      run_stabilizer_ensemble(n, trajectories, 1000000, PauliSampling::uniform_all_paulis, seed, workers);
  json per_k = json::array();
  bool freq_ok = true;
  for (int k = 0; k <= n; ++k) {
    const auto visits = e.visits_at_k[static_cast<std::size_t>(k)];
    const auto added = e.added_at_k[static_cast<std::size_t>(k)];
    const double p = added_probability(n, k);
    const double freq = visits ? static_cast<double>(added) / static_cast<double>(visits) : 0.0;
    const double se = visits ? std::sqrt(p * (1.0 - p) / static_cast<double>(visits)) : 0.0;
    const bool checked = visits >= 300;
    const bool pass = !checked || std::abs(freq - p) <= 3.0 * se;
    freq_ok = freq_ok && pass;
    per_k.push_back({{"k", k},
                     {"visits", visits},
                     {"added", added},
                     {"frequency", freq},
                     {"expected", p},
                     {"binomial_stderr", se},
                     {"checked", checked},
                     {"pass", pass}});
  }
  const ExponentialFit fit = fit_steps_to_pure({6, 8, 10}, trajectories, seed, workers);
  const bool fit_ok = std::abs(fit.base - 2.0) <= 0.2;
  rep.passed = freq_ok && e.entropy_violations == 0 && fit_ok;
  rep.details = {{"n", n},
                 {"trajectories", trajectories},
                 {"per_k", per_k},
                 {"measurements", e.measurements},
                 {"entropy_violations", e.entropy_violations},
                 {"steps_to_pure_fit", {{"base", fit.base}, {"points", fit.points}, {"pass", fit_ok}}}};
  return rep;
}

inline SuiteReport run_suite(const std::string& name, const VerifyParams& p, std::uint64_t seed,
                             std::size_t workers) {
  if (name == "moments")
    return moments_suite(p.moments_dims, static_cast<std::size_t>(p.moments_samples), seed, workers);
  if (name == "fermion-oracle") return fermion_oracle_suite(static_cast<std::size_t>(p.fermion_states), seed);
  if (name == "dyson-identity") return dyson_identity_suite(static_cast<std::size_t>(p.dyson_spectra), seed);
  if (name == "inequalities") return inequalities_suite(static_cast<std::size_t>(p.inequality_cases), seed);
  if (name == "stabilizer-stats")
    return stabilizer_stats_suite(static_cast<std::size_t>(p.stabilizer_trajectories), seed, workers);
  throw ConfigError("verify.suites: unknown suite '" + name + "'");
}

// ---------------------------------------------------------------------------
// Experiment runners. Each writes its files through the sink and returns
// whether verification passed (plain runs always pass).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trajectory_csv(const TrajectoryRecord& rec, std::int64_t every) {
  Csv csv({"step", "purity", "entropy_nats", "branch", "prob"});
  for (const auto& r : rec.rows) {
    if (r.step % every) continue;
    csv.row({std::to_string(r.step / every), fmt(r.purity), fmt(r.entropy_nats), std::string(to_string(r.branch)),
             fmt(r.prob)});
  }
  return csv.str();
}

inline json trajectory_summary(const TrajectoryRecord& rec, std::int64_t every) {
  std::optional<std::int64_t> s99;
  for (const auto& r : rec.rows)
    if (r.purity >= 0.99) {
      s99 = (r.step + every - 1) / every;
      break;
    }
  return {{"mode", to_string(rec.mode)},
          {"N", rec.N},
          {"steps", rec.steps / every},
          {"measurements_per_step", every},
          {"seed", rec.seed},
          {"stream", rec.stream},
          {"final_purity", rec.final_purity()},
          {"steps_to_purity_0.99", s99 ? json(*s99) : json(nullptr)},
          {"aborted", rec.aborted}};
}

inline bool run_trajectories(const std::string& kind, const TrajectoryParams& p, std::uint64_t seed,
                             std::size_t workers, OutputSink& sink) {
  TrajectoryOptions opt;
  opt.engine = p.engine == "dense" ? Engine::dense : Engine::spectral;
  opt.initial_rank = p.initial_rank;
  const std::int64_t total = p.steps * p.measurements_per_step;
  json summary = json::array();
  for (const auto& mode_name : p.modes) {
    const Mode mode = parse_mode(mode_name);
    std::vector<TrajectoryRecord> recs(static_cast<std::size_t>(p.trajectories));
    parallel_for(recs.size(), workers,
                 [&](std::size_t i) { recs[i] = run_trajectory(p.N, total, mode, RngStream(seed, i), opt); });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (static_cast<std::int64_t>(i) < p.csv_trajectories)
        sink.write(kind + "_" + mode_name + "_traj" + std::to_string(i) + ".csv",
                 trajectory_csv(recs[i], p.measurements_per_step));
      summary.push_back(trajectory_summary(recs[i], p.measurements_per_step));
    }
    if (kind == "rank2" && recs.size() > 1) {
      Csv csv({"step", "mean_purity", "stderr", "walkers", "theory"});
      std::vector<double> col;
      for (std::int64_t t = 0; t <= p.steps; ++t) {
        const auto row = static_cast<std::size_t>(t * p.measurements_per_step);
        col.clear();
        for (const auto& r : recs)
          if (row < r.rows.size()) col.push_back(r.rows[row].purity);
        if (col.size() < 2) break;
        const McEstimate e = stats::estimate(col);
        const double theory = p.initial_rank == 2
                                  ? rank2_theory_purity(static_cast<double>(row), static_cast<double>(p.N), mode)
                                  : std::nan("");
        csv.row({std::to_string(t), fmt(e.mean), fmt(e.standard_error), std::to_string(col.size()), fmt(theory)});
      }
      sink.write(kind + "_" + mode_name + "_mean.csv", csv.str());
    }
  }
  sink.write_json(kind + "_summary.json", summary);
  return true;
}

inline bool run_dyson(const DysonParams& p, std::uint64_t seed, std::size_t workers, OutputSink& sink) {
  const double dt = p.dt > 0.0 ? p.dt : 1.0 / static_cast<double>(p.N);
  const SdeEnsemble ens =
      run_sde_ensemble(Spectrum::uniform(p.d), dt, p.steps, static_cast<std::size_t>(p.walkers), seed, workers);
  std::vector<std::string> header{"step", "walker"};
  for (std::int64_t a = 1; a <= p.d; ++a) header.push_back("lambda" + std::to_string(a));
  Csv csv(header);
  json moments = json::array();
  const auto purity = ens.mean_purity();
  std::vector<double> col(ens.walkers);
  for (std::int64_t t = 0; t <= p.steps; ++t) {
    const bool last = t == p.steps;
    if (t % p.record_every && !last) continue;
    const auto ti = static_cast<std::size_t>(t);
    for (std::size_t w = 0; w < ens.walkers; ++w) {
      std::vector<std::string> cells{std::to_string(t), std::to_string(w)};
      for (std::int64_t a = 0; a < p.d; ++a) cells.push_back(fmt(ens.paths[w][ti](a)));
      csv.row(cells);
    }
    json mean_l = json::array();
    for (std::int64_t a = 0; a < p.d; ++a) {
      for (std::size_t w = 0; w < ens.walkers; ++w) col[w] = ens.paths[w][ti](a);
      mean_l.push_back(stats::mean(col));
    }
    moments.push_back({{"step", t}, {"mean_purity", purity[ti]}, {"mean_lambda", mean_l}});
  }
  sink.write("dyson_paths.csv", csv.str());
  json summary{{"d", p.d},
               {"N", p.N},
               {"dt", dt},
               {"steps", p.steps},
               {"walkers", p.walkers},
               {"clipped_fraction", ens.clipped_fraction()},
               {"substeps", ens.substeps},
               {"degeneracy_splits", ens.splits},
               {"boundary_hits", ens.boundary_hits},
               {"moments", moments}};
  if (p.compare_microscopic) {
    const MicroscopicComparison mc =
        microscopic_comparison(p.d, p.N, p.steps, static_cast<std::size_t>(p.walkers), seed, workers);
    json rows = json::array();
    for (std::int64_t t = 0; t <= p.steps; ++t)
      if (t % p.record_every == 0 || t == p.steps)
        rows.push_back({{"step", t},
                        {"micro_purity", mc.micro_purity[static_cast<std::size_t>(t)]},
                        {"sde_purity", mc.sde_purity[static_cast<std::size_t>(t)]}});
    summary["microscopic_comparison"] = {{"max_relative_purity_gap", mc.max_relative_purity_gap(p.steps)},
                                         {"max_sum_defect", mc.max_sum_defect},
                                         {"sde_clipped_fraction", mc.sde_clipped_fraction},
                                         {"sde_boundary_hits", mc.sde_boundary_hits},
                                         {"purity", rows}};
  }
  sink.write_json("dyson_summary.json", summary);
  return true;
}

inline json optional_json(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

inline bool run_fermion(const FermionParams& p, std::uint64_t seed, std::size_t workers, OutputSink& sink) {
  FermionRunOptions opt;
  opt.record_every = p.record_every;
  opt.protocol = p.protocol == "literal" ? FermionProtocol::literal : FermionProtocol::frame;
  opt.workers = workers;
  const FermionEnsemble ens = run_purification(p.modes, p.steps, parse_variant(p.variant),
                                               static_cast<std::size_t>(p.walkers), seed, opt);
  Csv csv({"step", "walker", "s_proxy_nats", "renyi2_nats"});
  for (std::size_t i = 0; i < ens.times.size(); ++i)
    for (std::size_t w = 0; w < ens.walkers; ++w)
      csv.row({std::to_string(ens.times[i]), std::to_string(w), fmt(ens.paths[w].s_proxy[i]),
               fmt(ens.paths[w].renyi2[i])});
  sink.write("fermion_paths.csv", csv.str());
  json series = json::array();
  for (std::size_t i = 0; i < ens.times.size(); ++i)
    series.push_back({{"step", ens.times[i]},
                      {"mean_density", ens.mean_density[i]},
                      {"stderr_density", ens.stderr_density[i]},
                      {"bound", 1.0 / (1.0 + static_cast<double>(ens.times[i]) / static_cast<double>(p.modes))}});
  sink.write_json("fermion_summary.json", {{"variant", p.variant},
                                           {"protocol", p.protocol},
                                           {"modes", p.modes},
                                           {"steps", p.steps},
                                           {"walkers", p.walkers},
                                           {"half_entropy_time", optional_json(ens.half_entropy_time())},
                                           {"order_one_purity_time", optional_json(ens.order_one_purity_time())},
                                           {"max_bound_excess_3sigma", ens.max_bound_excess(3.0)},
                                           {"series", series}});
  return true;
}

inline bool run_stabilizer(const StabilizerParams& p, std::uint64_t seed, std::size_t workers, OutputSink& sink) {
  const auto n = static_cast<int>(p.qubits);
  const PauliSampling sampling = parse_sampling(p.sampling);
  const StabilizerEnsemble ens = run_stabilizer_ensemble(n, static_cast<std::size_t>(p.trajectories), p.max_steps,
                                                         sampling, seed, workers);
  for (std::int64_t i = 0; i < p.csv_trajectories; ++i) {
    const StabilizerRecord r =
        run_purification(n, p.max_steps, sampling, RngStream(seed, static_cast<std::uint64_t>(i)), true);
    Csv csv({"step", "entropy_bits", "case"});
    for (const auto& row : r.rows)
      csv.row({std::to_string(row.step), std::to_string(row.entropy_bits),
               row.step == 0 ? std::string("initial") : std::string(to_string(row.measure_case))});
    sink.write("stabilizer_traj" + std::to_string(i) + ".csv", csv.str());
  }
  json per_k = json::array();
  for (int k = 0; k <= n; ++k) {
    const auto v = ens.visits_at_k[static_cast<std::size_t>(k)];
    const auto a = ens.added_at_k[static_cast<std::size_t>(k)];
    per_k.push_back({{"k", k},
                     {"visits", v},
                     {"added", a},
                     {"frequency", v ? static_cast<double>(a) / static_cast<double>(v) : 0.0},
                     {"expected", added_probability(n, k)}});
  }
  sink.write_json("stabilizer_summary.json", {{"qubits", n},
                                              {"sampling", p.sampling},
                                              {"trajectories", p.trajectories},
                                              {"mean_steps_to_pure", ens.mean_steps_to_pure()},
                                              {"expected_steps_to_pure", expected_steps_to_pure(n)},
                                              {"entropy_violations", ens.entropy_violations},
                                              {"per_k", per_k},
                                              {"steps_to_pure", ens.steps_to_pure}});
  return true;
}

}  // namespace detail

/// Dispatches to the owning module, writes outputs and the manifest.
inline RunManifest run(const ExperimentConfig& cfg) {
  validate(cfg);
  RunManifest man;
  man.config = to_json(cfg);
  man.started = utc_now();
  man.worker_seeds = worker_seed_table(cfg.seed, cfg.workers);
  OutputSink sink(resolve_out_dir(cfg));
  const auto workers = static_cast<std::size_t>(cfg.workers);
  bool passed = true;
  if (cfg.kind == "manybody") passed = detail::run_trajectories("manybody", cfg.manybody, cfg.seed, workers, sink);
  if (cfg.kind == "rank2") passed = detail::run_trajectories("rank2", cfg.rank2, cfg.seed, workers, sink);
  if (cfg.kind == "dyson") passed = detail::run_dyson(cfg.dyson, cfg.seed, workers, sink);
  if (cfg.kind == "fermion") passed = detail::run_fermion(cfg.fermion, cfg.seed, workers, sink);
  if (cfg.kind == "stabilizer") passed = detail::run_stabilizer(cfg.stabilizer, cfg.seed, workers, sink);
  if (cfg.kind == "verify-moments") {
    const SuiteReport r = moments_suite(cfg.moments.dims, static_cast<std::size_t>(cfg.moments.samples), cfg.seed,
                                        workers);
    passed = r.passed;
    sink.write_json("verify_moments_report.json", {{"suite", r.suite}, {"passed", r.passed}, {"details", r.details}});
  }
  if (cfg.kind == "verify") {
    json suites = json::array();
    for (const auto& name : cfg.verify.suites) {
      const SuiteReport r = run_suite(name, cfg.verify, cfg.seed, workers);
      passed = passed && r.passed;
      suites.push_back({{"suite", r.suite}, {"passed", r.passed}, {"details", r.details}});
    }
    sink.write_json("verify_report.json", {{"passed", passed}, {"suites", suites}});
  }
  man.passed = passed;
  man.outputs = sink.files();
  man.finished = utc_now();
  std::ofstream out(sink.dir() / "manifest.json");
  out << man.to_json().dump(2) << "\n";
  if (!out) throw IoError("cannot write manifest.json");
  return man;
}

/// Recomputes the digest of every file a manifest lists.
inline bool digests_match(const RunManifest& man, const std::filesystem::path& dir) {
  for (const auto& f : man.outputs) {
    std::ifstream in(dir / f.path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    if (sha256_hex(ss.str()) != f.sha256) return false;
  }
  return true;
}

}  // namespace purify::harness
