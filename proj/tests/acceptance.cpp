// Acceptance run: one line per criterion, "criterion K PASS|FAIL: details".
// Arguments select a subset of criteria 1..13; 14 always reruns the selection
// with a different worker count and compares result digests.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "purify/dyson.hpp"
#include "purify/fermion.hpp"
#include "purify/harness.hpp"
#include "purify/manybody.hpp"
#include "purify/moments.hpp"
#include "purify/stabilizer.hpp"

using namespace purify;
using harness::json;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = false;
  std::string detail;
  json data;  // canonical numbers behind the verdict, digested for criterion 14
};

std::string num(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

// Shared trace samples for criteria 1-3, keyed by (N, state).
struct MomentCase {
  Eigen::Index n;
  std::string state;
  RVector lambda;
  TraceProfile prof;
  std::vector<TraceSample> ts;
};

// Criteria 1-3 share draws; cached per worker count so criterion 14 still recomputes.
const MomentCase& moment_case(Eigen::Index n, const std::string& state, std::size_t samples, std::size_t workers) {
  static std::map<std::tuple<Eigen::Index, std::string, std::size_t, std::size_t>, MomentCase> cache;
  const auto key = std::make_tuple(n, state, samples, workers);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  RVector l;
  if (state == "maximally_mixed") {
    l = RVector::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    l.resize(2);
    l << 0.7, 0.3;
  }
  const std::uint64_t stream = static_cast<std::uint64_t>(n) * 10 + (state == "rank2" ? 1 : 0);
  return cache[key] = {n, state, l, TraceProfile::from_spectrum(l),
                       mc_trace_samples(l, n, samples, RngStream(kSeed, stream), workers)};
}

Outcome drift_criterion(PurityStatistic stat, std::size_t workers) {
  Outcome o{true, "", json::array()};
  for (const char* st : {"maximally_mixed", "rank2"}) {
    const MomentCase& c = moment_case(64, st, 200000, workers);
    const double nd = 64.0;
    const McEstimate e = estimate_statistic(c.ts, c.prof.t2, stat);
    const double target = analytic_target(c.prof, nd, stat);
    const double budget = 3.0 * e.standard_error + 4.0 / (nd * nd);
    const bool ok = std::abs(e.mean - target) <= budget;
    o.pass = o.pass && ok;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + st + " |dev| " + num(std::abs(e.mean - target)) +
                " vs budget " + num(budget);
    o.data.push_back({{"state", st}, {"mean", e.mean}, {"stderr", e.standard_error}, {"target", target}});
  }
  return o;
}

Outcome criterion1(std::size_t w) { return drift_criterion(PurityStatistic::measured, w); }
Outcome criterion2(std::size_t w) { return drift_criterion(PurityStatistic::postselected, w); }

Outcome criterion3(std::size_t workers) {
  Outcome o{true, "", json::array()};
  double worst = 0.0;
  for (Eigen::Index n : {32, 64})
    for (const char* st : {"maximally_mixed", "rank2"}) {
      const MomentCase& c = moment_case(n, st, 200000, workers);
      const double nd = static_cast<double>(n);
      const double target = analytic_noise(c.prof, nd);
      for (Mode m : {Mode::measurement, Mode::postselection}) {
        const McEstimate e = estimate_noise(c.ts, c.prof.t2, m);
        const double budget = 3.0 * e.standard_error + 8.0 / (nd * nd);
        o.pass = o.pass && std::abs(e.mean - target) <= budget;
        worst = std::max(worst, std::abs(e.mean - target) / budget);
        o.data.push_back({{"N", n}, {"state", st}, {"mode", to_string(m)}, {"variance", e.mean},
                          {"stderr", e.standard_error}, {"target", target}});
      }
    }
  o.detail = "8 cases (N 32/64, two states, two modes), worst |dev|/budget " + num(worst);
  return o;
}

Outcome criterion4(std::size_t workers) {
  const Eigen::Index n = 500;
  const std::int64_t tmax = n / 5;
  const std::size_t walkers = 1000;
  Outcome o{true, "", json::object()};
  for (Mode m : {Mode::measurement, Mode::postselection}) {
    std::vector<std::vector<double>> pur(walkers);
    parallel_for(walkers, workers, [&](std::size_t w) {
      const auto rec = run_trajectory(n, tmax, m, RngStream(kSeed + 4 + (m == Mode::measurement ? 0 : 1), w),
                                      {Engine::spectral, 2});
      for (const auto& r : rec.rows) pur[w].push_back(r.purity);
    });
    double worst = 0.0;
    json means = json::array();
    std::vector<double> col(walkers);
    for (std::int64_t t = 0; t <= tmax; ++t) {
      for (std::size_t w = 0; w < walkers; ++w) col[w] = pur[w][static_cast<std::size_t>(t)];
      const double mean = stats::mean(col);
      worst = std::max(worst, std::abs(mean / rank2_theory_purity(double(t), double(n), m) - 1.0));
      means.push_back(mean);
    }
    o.pass = o.pass && worst <= 0.02;
    o.detail += std::string(o.detail.empty() ? "" : "; ") + std::string(to_string(m)) + " max rel dev " + num(worst);
    o.data[std::string(to_string(m))] = means;
  }
  o.detail += " (limit 0.02, t <= N/5)";
  return o;
}

// Criterion 5 helpers on one purity series p[0..T].
double initial_slope_times_n(const std::vector<double>& p, double n) {
  const std::size_t end = static_cast<std::size_t>(n / 2);
  std::vector<double> x, y;
  for (std::size_t t = 0; t <= end && t < p.size(); ++t) {
    x.push_back(double(t));
    y.push_back(p[t]);
  }
  return stats::least_squares(x, y).slope * n;
}

// Longest run of strictly decreasing consecutive steps.
int longest_decreasing_run(const std::vector<double>& p) {
  int best = 0, cur = 0;
  for (std::size_t t = 1; t < p.size(); ++t) {
    cur = p[t] < p[t - 1] ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

// Longest stretch after a local maximum with purity in [0.3, 0.95] during
// which purity stays strictly below that maximum.
int longest_drawdown(const std::vector<double>& p) {
  int best = 0;
  for (std::size_t t = 1; t + 1 < p.size(); ++t) {
    if (!(p[t] >= p[t - 1] && p[t] > p[t + 1])) continue;
    if (p[t] < 0.3 || p[t] > 0.95) continue;
    std::size_t u = t + 1;
    while (u < p.size() && p[u] < p[t]) ++u;
    best = std::max(best, static_cast<int>(u - t - 1));
  }
  return best;
}

// -slope of log(1 - p) on the stretch where p > 0.99 and 1 - p stays above 1e-12, times N.
double late_rate_times_n(const std::vector<double>& p, double n) {
  std::vector<double> x, y;
  for (std::size_t t = 0; t < p.size(); ++t)
    if (p[t] > 0.99 && 1.0 - p[t] > 1e-12) {
      x.push_back(double(t));
      y.push_back(std::log(1.0 - p[t]));
    }
  if (x.size() < 10) return std::nan("");
  return -stats::least_squares(x, y).slope * n;
}

Outcome criterion5(std::size_t workers) {
  const Eigen::Index n = 2000;
  const std::int64_t steps = 12000;
  const std::size_t seeds = 10;
  std::vector<std::vector<double>> pur(seeds);
  parallel_for(seeds, workers, [&](std::size_t s) {
    const auto rec = run_trajectory(n, steps, Mode::measurement, RngStream(kSeed + 5, s));
    for (const auto& r : rec.rows) pur[s].push_back(r.purity);
  });
  int pa = 0, pb = 0, pc = 0;
  json rows = json::array();
  std::string sa, sb, sc, sr;
  for (std::size_t s = 0; s < seeds; ++s) {
    const double a = initial_slope_times_n(pur[s], double(n));
    const int draw = longest_drawdown(pur[s]);
    const int run = longest_decreasing_run(pur[s]);
    const double c = late_rate_times_n(pur[s], double(n));
    const bool oka = std::abs(a - 1.0) <= 0.3, okb = draw >= 20, okc = std::abs(c - 1.0) <= 0.5;
    pa += oka;
    pb += okb;
    pc += okc;
    sa += (s ? "," : "") + num(a, 3);
    sb += (s ? "," : "") + std::to_string(draw);
    sr += (s ? "," : "") + std::to_string(run);
    sc += (s ? "," : "") + num(c, 3);
    rows.push_back({{"stream", s},
                    {"slope_times_N", a},
                    {"longest_drawdown", draw},
                    {"longest_strict_decrease", run},
                    {"late_rate_times_N", c},
                    {"final_purity", pur[s].back()}});
  }
  Outcome o;
  o.pass = pa >= 8 && pb >= 8 && pc >= 8;
  o.detail = "(a) slope*N in [0.7,1.3] " + std::to_string(pa) + "/10 [" + sa + "]; (b) drawdown >= 20 steps " +
             std::to_string(pb) + "/10 [" + sb + "], longest strict decrease [" + sr + "]; (c) late rate*N in " +
             "[0.5,1.5] " + std::to_string(pc) + "/10 [" + sc + "]";
  o.data = rows;
  return o;
}

Outcome from_suite(const harness::SuiteReport& r, const std::string& detail) {
  return {r.passed, detail, r.details};
}

Outcome criterion6(std::size_t) {
  const auto r = harness::inequalities_suite(1000, kSeed + 6);
  return from_suite(r, "1000 cases at N 4/8/16, entropy violations " +
                           r.details["entropy_violations"].dump() + ", sqrt-purity violations " +
                           r.details["sqrt_purity_violations"].dump() + ", max entropy increase " +
                           num(r.details["max_entropy_increase"].get<double>()));
}

Outcome criterion7(std::size_t) {
  const auto r = harness::dyson_identity_suite(1000, kSeed + 7);
  return from_suite(r, "1000 spectra d 2..8, quadrature vs closed form " +
                           num(r.details["max_dev_quadrature_vs_closed_form"].get<double>()) + ", vs trace formula " +
                           num(r.details["max_dev_closed_form_vs_trace_formula"].get<double>()) + ", kernel " +
                           num(r.details["max_abs_generator_on_function_of_sum"].get<double>()) + " (limit 1e-12)");
}

Outcome criterion8(std::size_t workers) {
  const MicroscopicComparison c = microscopic_comparison(2, 1000, 200, 1000, kSeed + 8, workers);
  const double gap = c.max_relative_purity_gap(200);
  Outcome o;
  o.pass = gap <= 0.02;
  o.detail = "d 2, N 1000, 1000 walkers, max rel purity gap over t <= 200: " + num(gap) + " (limit 0.02), SDE at t=200 " +
             num(c.sde_purity.back(), 6) + " vs microscopic " + num(c.micro_purity.back(), 6);
  o.data = {{"micro", c.micro_purity}, {"sde", c.sde_purity}};
  return o;
}

Outcome criterion9(std::size_t) {
  const auto r = harness::fermion_oracle_suite(100, kSeed + 9);
  return from_suite(r, "100 states per n in 2..5, max deviation " + num(r.details["max_deviation"].get<double>()) +
                           " (limit 1e-10)");
}

Outcome criterion10(std::size_t workers) {
  Outcome o{true, "", json::array()};
  std::vector<double> ln, lhalf, lone;
  double worst_excess = -1e300;
  for (Eigen::Index n : {16, 32, 64}) {
    FermionRunOptions opt;
    opt.record_every = 1;
    opt.record_renyi2 = false;
    opt.workers = workers;
    const std::int64_t steps = 3 * n * n;
    const FermionEnsemble e =
        run_purification(n, steps, FermionVariant::conserving, 200, kSeed + 10 + static_cast<std::uint64_t>(n), opt);
    const double excess = e.max_bound_excess(3.0);
    worst_excess = std::max(worst_excess, excess);
    const auto th = e.half_entropy_time();
    const auto to = e.order_one_purity_time();
    o.data.push_back({{"n", n}, {"bound_excess", excess}, {"half_entropy_time", th ? *th : -1},
                      {"order_one_time", to ? *to : -1}, {"mean_density", e.mean_density}});
    if (!th || !to) {
      o.pass = false;
      o.detail += "n " + std::to_string(n) + " did not reach a threshold within " + std::to_string(steps) + " steps; ";
      continue;
    }
    ln.push_back(std::log(double(n)));
    lhalf.push_back(std::log(double(*th)));
    lone.push_back(std::log(double(*to)));
    o.detail += "n " + std::to_string(n) + ": t_half " + std::to_string(*th) + ", t_one " + std::to_string(*to) + "; ";
  }
  const bool bound_ok = worst_excess <= 0.0;
  o.pass = o.pass && bound_ok;
  if (ln.size() == 3) {
    const double e_half = stats::least_squares(ln, lhalf).slope, e_one = stats::least_squares(ln, lone).slope;
    o.pass = o.pass && std::abs(e_half - 1.0) <= 0.2 && std::abs(e_one - 2.0) <= 0.3;
    o.detail += "exponents half " + num(e_half) + " (1 +- 0.2), order-one " + num(e_one) + " (2 +- 0.3); ";
  }
  o.detail += "max excess over (1+t/n)^-1 + 3 stderr " + num(worst_excess) + (bound_ok ? " (bound holds)" : " (violated)");
  return o;
}

Outcome criterion11(std::size_t workers) {
  const Eigen::Index n = 32;
  RngStream rot(kSeed + 11, 1000);
  RVector half = RVector::Zero(n);
  half.tail(n / 2).setOnes();
  const std::vector<std::pair<std::string, MajoranaCorrelationMatrix>> states{
      {"maximally_mixed", canonical_majorana(RVector::Zero(n))},
      {"half_mixed", rotated_majorana(half, rot)},
      {"near_pure", rotated_majorana(RVector::Constant(n, 0.9), rot)}};
  Outcome o{true, "", json::array()};
  std::uint64_t stream = 0;
  for (const auto& [name, m] : states) {
    const PairingReport r = mc_delta_s_pairing(m, 10000, RngStream(kSeed + 11, stream++), workers);
    const double dev = r.relative_deviation();
    o.pass = o.pass && dev <= 0.10;
    o.detail += name + " mc " + num(r.mc.mean) + " vs " + num(r.leading_order) + " (rel " + num(dev, 3) + "); ";
    o.data.push_back({{"state", name}, {"mean", r.mc.mean}, {"stderr", r.mc.standard_error},
                      {"leading_order", r.leading_order}});
  }
  o.detail += "limit 0.10";
  return o;
}

Outcome criterion12(std::size_t workers) {
  const int n = 16;
  const QuarticReport r = so_quartic_moments(n, 100000, RngStream(kSeed + 12), workers);
  const double slack = 4.0 / std::pow(double(n), 4);
  Outcome o;
  o.pass = r.max_commutant_defect <= 1e-10;
  o.detail = "commutant defect " + num(r.max_commutant_defect) + " (limit 1e-10); ";
  o.data = json::array();
  for (const auto& q : r.moments) {
    const bool ok = q.estimate.agrees_with(q.leading_order, 3.0, slack);
    o.pass = o.pass && ok;
    o.detail += q.name + " " + num(q.estimate.mean) + " vs " + num(q.leading_order) + (ok ? " ok; " : " off; ");
    o.data.push_back({{"name", q.name}, {"mean", q.estimate.mean}, {"stderr", q.estimate.standard_error}});
  }
  o.detail += "100000 samples, slack 4/n^4";
  return o;
}

Outcome criterion13(std::size_t workers) {
  const auto r = harness::stabilizer_stats_suite(10000, kSeed + 13, workers);
  int checked = 0, ok = 0;
  for (const auto& k : r.details["per_k"]) {
    if (!k["checked"].get<bool>()) continue;
    ++checked;
    ok += k["pass"].get<bool>();
  }
  return from_suite(r, "n 10, 10000 trajectories, P(added|k) within 3 binomial stderr " + std::to_string(ok) + "/" +
                           std::to_string(checked) + " checked k, entropy violations " +
                           r.details["entropy_violations"].dump() + ", fitted base " +
                           num(r.details["steps_to_pure_fit"]["base"].get<double>()));
}

const std::map<int, std::function<Outcome(std::size_t)>>& criteria() {
  static const std::map<int, std::function<Outcome(std::size_t)>> c{
      {1, criterion1}, {2, criterion2},   {3, criterion3},   {4, criterion4},   {5, criterion5},
      {6, criterion6}, {7, criterion7},   {8, criterion8},   {9, criterion9},   {10, criterion10},
      {11, criterion11}, {12, criterion12}, {13, criterion13}};
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (!criteria().count(k)) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..13)\n", argv[i]);
      return 2;
    }
    selected.insert(k);
  }
  if (selected.empty())
    for (const auto& [k, fn] : criteria()) selected.insert(k);

  const std::size_t w1 = 1, w2 = 3;
  std::map<int, std::string> digest;
  bool all = true;
  for (int k : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = criteria().at(k)(w1);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    digest[k] = harness::sha256_hex(o.data.dump());
    all = all && o.pass;
    std::printf("criterion %d %s: %s [%.1f s]\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }

  std::vector<int> mismatched;
  for (int k : selected)
    if (harness::sha256_hex(criteria().at(k)(w2).data.dump()) != digest[k]) mismatched.push_back(k);
  std::string list;
  for (int k : mismatched) list += (list.empty() ? "" : ",") + std::to_string(k);
  const bool det = mismatched.empty();
  all = all && det;
  std::printf("criterion 14 %s: %zu criteria rerun with %zu vs %zu workers, digests %s\n", det ? "PASS" : "FAIL",
              selected.size(), w1, w2, det ? "identical" : ("differ for " + list).c_str());
  return all ? 0 : 1;
}
