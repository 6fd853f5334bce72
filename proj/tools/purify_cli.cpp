// Command-line front end: one subcommand per experiment kind.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "purify/harness.hpp"

namespace {

using purify::ConfigError;
using purify::harness::ExperimentConfig;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

/// Flag values; unset ones leave the config untouched.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> workers;
  std::optional<std::string> out;
  std::string config;

  std::optional<std::int64_t> N, steps, trajectories, initial_rank, per_step;
  std::vector<std::string> modes;
  std::optional<std::string> engine;

  std::optional<std::int64_t> d, walkers, record_every;
  std::optional<double> dt;
  bool compare = false;

  std::optional<std::string> variant, protocol;
  std::optional<std::int64_t> fermion_modes;

  std::optional<std::int64_t> qubits, max_steps, csv_trajectories;
  std::optional<std::string> sampling;

  std::vector<std::int64_t> dims;
  std::optional<std::int64_t> samples;
  std::vector<std::string> suites;
};

template <class T>
void set_if(const std::optional<T>& v, T& dst) {
  if (v) dst = *v;
}

void apply(const Overrides& o, ExperimentConfig& c) {
  set_if(o.seed, c.seed);
  set_if(o.workers, c.workers);
  set_if(o.out, c.out);
  auto traj = [&](purify::harness::TrajectoryParams& p) {
    set_if(o.N, p.N);
    set_if(o.steps, p.steps);
    set_if(o.trajectories, p.trajectories);
    set_if(o.initial_rank, p.initial_rank);
    set_if(o.per_step, p.measurements_per_step);
    set_if(o.engine, p.engine);
    set_if(o.csv_trajectories, p.csv_trajectories);
    if (!o.modes.empty()) p.modes = o.modes;
  };
  if (c.kind == "manybody") traj(c.manybody);
  if (c.kind == "rank2") traj(c.rank2);
  if (c.kind == "dyson") {
    auto& p = c.dyson;
    set_if(o.d, p.d);
    set_if(o.N, p.N);
    set_if(o.steps, p.steps);
    set_if(o.walkers, p.walkers);
    set_if(o.dt, p.dt);
    set_if(o.record_every, p.record_every);
    if (o.compare) p.compare_microscopic = true;
  }
  if (c.kind == "fermion") {
    auto& p = c.fermion;
    set_if(o.variant, p.variant);
    set_if(o.protocol, p.protocol);
    set_if(o.fermion_modes, p.modes);
    set_if(o.steps, p.steps);
    set_if(o.walkers, p.walkers);
    set_if(o.record_every, p.record_every);
  }
  if (c.kind == "stabilizer") {
    auto& p = c.stabilizer;
    set_if(o.qubits, p.qubits);
    set_if(o.trajectories, p.trajectories);
    set_if(o.max_steps, p.max_steps);
    set_if(o.sampling, p.sampling);
    set_if(o.csv_trajectories, p.csv_trajectories);
  }
  if (c.kind == "verify-moments") {
    if (!o.dims.empty()) c.moments.dims = o.dims;
    set_if(o.samples, c.moments.samples);
  }
  if (c.kind == "verify") {
    if (!o.suites.empty()) c.verify.suites = o.suites;
    if (!o.dims.empty()) c.verify.moments_dims = o.dims;
    set_if(o.samples, c.verify.moments_samples);
  }
}

void shared_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--seed", o.seed, "Base seed");
  sub->add_option("--workers", o.workers, "Worker threads");
  sub->add_option("--out", o.out, "Output directory (default: $PURIFY_OUT_DIR, then ./purify-out)");
  sub->add_option("--config", o.config, "JSON config; flags override its fields");
}

void trajectory_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--N", o.N, "Hilbert space dimension (even)");
  sub->add_option("--steps", o.steps, "Recorded steps");
  sub->add_option("--mode", o.modes, "measurement and/or postselection (repeatable)");
  sub->add_option("--trajectories", o.trajectories, "Independent trajectories per mode");
  sub->add_option("--engine", o.engine, "spectral or dense");
  sub->add_option("--initial-rank", o.initial_rank, "Start maximally mixed on this many dimensions (0 = N)");
  sub->add_option("--measurements-per-step", o.per_step, "Projectors applied between recorded rows");
  sub->add_option("--csv-trajectories", o.csv_trajectories, "Trajectories written as CSV");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-induced purification experiments"};
  app.require_subcommand(1);
  Overrides o;

  auto* manybody = app.add_subcommand("manybody", "Many-body purity trajectories from the maximally mixed state");
  auto* rank2 = app.add_subcommand("rank2", "Trajectories from a rank-2 state, with ensemble means and theory");
  auto* dyson = app.add_subcommand("dyson", "Eigenvalue SDE ensemble");
  auto* fermion = app.add_subcommand("fermion", "Free-fermion purification ensemble");
  auto* stabilizer = app.add_subcommand("stabilizer", "Random Pauli measurements on stabilizer states");
  auto* vmoments = app.add_subcommand("verify-moments", "Monte Carlo checks of the purity update moments");
  auto* verify = app.add_subcommand("verify", "Run verification suites");

  for (auto* s : {manybody, rank2, dyson, fermion, stabilizer, vmoments, verify}) shared_flags(s, o);
  trajectory_flags(manybody, o);
  trajectory_flags(rank2, o);

  dyson->add_option("--d", o.d, "Initial rank (maximally mixed on d dimensions)");
  dyson->add_option("--N", o.N, "Dimension; the default time step is 1/N");
  dyson->add_option("--steps", o.steps, "Steps");
  dyson->add_option("--walkers", o.walkers, "Walkers");
  dyson->add_option("--dt", o.dt, "Time step (0 = 1/N)");
  dyson->add_option("--record-every", o.record_every, "CSV stride");
  dyson->add_flag("--compare", o.compare, "Also run the microscopic comparison");

  fermion->add_option("--variant", o.variant, "conserving or general");
  fermion->add_option("--modes", o.fermion_modes, "Number of modes n");
  fermion->add_option("--steps", o.steps, "Measurements");
  fermion->add_option("--walkers", o.walkers, "Walkers");
  fermion->add_option("--record-every", o.record_every, "CSV stride");
  fermion->add_option("--protocol", o.protocol, "frame or literal");

  stabilizer->add_option("--qubits", o.qubits, "Number of qubits");
  stabilizer->add_option("--trajectories", o.trajectories, "Trajectories");
  stabilizer->add_option("--steps", o.max_steps, "Maximum measurements per trajectory");
  stabilizer->add_option("--sampling", o.sampling, "uniform_all_paulis or uniform_nonidentity");
  stabilizer->add_option("--csv-trajectories", o.csv_trajectories, "Trajectories written as CSV");

  vmoments->add_option("--N", o.dims, "Dimensions (repeatable)");
  vmoments->add_option("--samples", o.samples, "Haar samples per state");

  verify->add_option("--suite", o.suites, "Suite name (repeatable); default all");
  verify->add_option("--N", o.dims, "Dimensions for the moments suite (repeatable)");
  verify->add_option("--samples", o.samples, "Haar samples for the moments suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitConfig;
  }

  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    ExperimentConfig cfg =
        o.config.empty() ? ExperimentConfig::defaults(kind) : purify::harness::load_config(o.config, kind);
    apply(o, cfg);
    purify::harness::validate(cfg);
    const auto man = purify::harness::run(cfg);
    std::cout << "wrote " << man.outputs.size() << " files and manifest.json to "
              << purify::harness::resolve_out_dir(cfg).string() << "\n";
    if (!man.passed) {
      std::cerr << "verification failed\n";
      return kExitFail;
    }
    return kExitPass;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const purify::harness::IoError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitFail;
  }
}
