#include "otdp/verify.hpp"

#include <algorithm>
#include <cfloat>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

#include "otdp/bench.hpp"
#include "otdp/catalog.hpp"
#include "otdp/error.hpp"
#include "otdp/fleet_oracle.hpp"
#include "otdp/linprog.hpp"
#include "otdp/lqr.hpp"
#include "otdp/random_instances.hpp"
#include "otdp/report.hpp"
#include "otdp/transport.hpp"

namespace otdp {
namespace {

using boost::multiprecision::cpp_int;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Vec random_weights(Rng& rng, std::size_t n) {
  Vec w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = uniform(rng, 0.05, 1.0);
  return w / w.sum();
}

std::string num(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

std::string num(ExtReal v) { return v.is_infinite() ? "+inf" : num(v.value()); }

// Values compared after rounding to multiples of 1e-9.
bool equal_rounded(ExtReal a, ExtReal b) {
  if (a.is_infinite() || b.is_infinite()) return a.is_infinite() && b.is_infinite();
  return std::llround(a.value() * 1e9) == std::llround(b.value() * 1e9);
}

std::string rounded(ExtReal v) {
  if (v.is_infinite()) return "+inf";
  return num(static_cast<double>(std::llround(v.value() * 1e9)) / 1e9);
}

bool at_least(ExtReal a, ExtReal b, double tol) {
  if (a.is_infinite()) return true;
  return b.is_finite() && a.value() >= b.value() - tol;
}

CheckResult check(std::string id, std::string name) {
  CheckResult r;
  r.id = std::move(id);
  r.name = std::move(name);
  return r;
}

std::string count_of(std::size_t hit, std::size_t total) { return std::to_string(hit) + "/" + std::to_string(total); }

nlohmann::json run_bundled(const VerifyOptions& o, const std::string& name, const RunFlags& flags = {}) {
  return run(load_scenario(resolve_scenario(name, o.scenario_dir)), flags).report;
}

// ---------------------------------------------------------------------------
// 1-3: bundled counterexamples, end to end through the scenario files.

CheckResult multimarginal_counterexample(const VerifyOptions& o) {
  CheckResult r = check("1", "multimarginal-counterexample");
  Timer t;
  RunFlags flags;
  flags.mode = LiftMode::both;
  const auto report = run_bundled(o, "counterexample_multimarginal", flags);
  const ExtReal v0 = ext_from_json(report["values"]["multi"]), v2 = ext_from_json(report["values"]["two"]);
  r.seconds = t.seconds();
  r.summary = "V0 = " + rounded(v0) + ", two-marginal = " + rounded(v2);
  r.passed = equal_rounded(v0, 0.0) && equal_rounded(v2, 2.0) && r.seconds < 1.0;
  if (r.seconds >= 1.0) r.details.push_back("runtime above 1 s");
  return r;
}

CheckResult noise_counterexample(const VerifyOptions& o) {
  CheckResult r = check("2", "noise-counterexample");
  Timer t;
  const auto report = run_bundled(o, "noise_counterexample");
  const ExtReal naive = ext_from_json(report["values"]["naive"]), exact = ext_from_json(report["values"]["exact"]);
  r.seconds = t.seconds();
  r.summary = "naive lift = " + rounded(naive) + ", fleet optimum = " + rounded(exact);
  r.passed = equal_rounded(naive, 1.0) && equal_rounded(exact, 0.0) && r.seconds < 1.0;
  if (r.seconds >= 1.0) r.details.push_back("runtime above 1 s");
  return r;
}

CheckResult mass_splitting(const VerifyOptions& o) {
  CheckResult r = check("3", "mass-splitting");
  const auto report = run_bundled(o, "split_mass");
  const auto& inputs = report["rollout"]["stages"][0]["inputs"];
  double to_minus = 0.0, to_plus = 0.0, elsewhere = 0.0;
  for (const auto& e : inputs) {
    const double m = e["mass"].get<double>();
    const std::string x = e["state"], u = e["input"];
    if (x == "0" && u == "-1") {
      to_minus += m;
    } else if (x == "0" && u == "1") {
      to_plus += m;
    } else {
      elsewhere += m;
    }
  }
  const bool is_map = report["plan"]["is_map"].get<bool>();
  r.summary = "Lambda_0(0, -1) = " + num(to_minus) + ", Lambda_0(0, +1) = " + num(to_plus) +
              ", plan is a map: " + (is_map ? "yes" : "no");
  r.passed = std::abs(to_minus - 0.5) <= 1e-9 && std::abs(to_plus - 0.5) <= 1e-9 && elsewhere <= 1e-9 && !is_map;
  return r;
}

// ---------------------------------------------------------------------------
// 4: integrator fleets against the assignment oracle.

Particles random_cloud(Rng& rng, std::size_t m) {
  Particles out(m, Vec(2));
  for (auto& p : out) {
    for (Eigen::Index i = 0; i < 2; ++i) p[i] = uniform(rng, -3.0, 3.0);
  }
  return out;
}

Assignment squared_distance_assignment(const Particles& a, const Particles& b) {
  CostTensor c({a.size(), b.size()});
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) c[i * b.size() + j] = (a[i] - b[j]).squaredNorm();
  }
  return solve_assignment(c);
}

CheckResult integrator_formula(const VerifyOptions& o) {
  CheckResult r = check("4", "integrator-formula");
  Timer t;
  Rng rng(o.seed);
  const std::size_t trials = 100;
  std::size_t first_ok = 0, later = 0, later_ok = 0, remaining = 0, remaining_ok = 0, landed = 0;
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t m = pick(rng, 2, 8), horizon = pick(rng, 2, 5);
    const Particles mu0 = random_cloud(rng, m), targets = random_cloud(rng, m);
    const auto roll = integrator_rollout(horizon, mu0, targets);
    const double n = static_cast<double>(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
      const double w2 = squared_distance_assignment(roll.states[k], targets).value;
      const double lifted = roll.lifts[k].value.value();
      const double literal = (n - static_cast<double>(k)) / (n * n) * w2;
      const bool ok = std::abs(lifted - literal) <= 1e-9;
      if (k == 0) {
        first_ok += ok;
      } else {
        ++later;
        later_ok += ok;
        worst = std::max(worst, std::abs(lifted - literal));
      }
      ++remaining;
      remaining_ok += std::abs(lifted - w2 / (n - static_cast<double>(k))) <= 1e-9;
    }
    const auto final_match = squared_distance_assignment(roll.states[horizon], targets);
    double gap = 0.0;
    for (std::size_t i = 0; i < m; ++i) gap = std::max(gap, (roll.states[horizon][i] - targets[final_match.permutation[i]]).norm());
    landed += gap <= 1e-9;
  }
  r.seconds = t.seconds();
  r.summary = "((N-k)/N^2) W2^2(mu_k, rho_N) matches the lifted value at k = 0 in " + count_of(first_ok, trials) +
              " trials and at k >= 1 in " + count_of(later_ok, later) + " stage checks; feedback lands in " +
              count_of(landed, trials);
  r.details.push_back("largest deviation at k >= 1: " + num(worst));
  r.details.push_back("lifted value equals W2^2(mu_k, rho_N) / (N - k) in " + count_of(remaining_ok, remaining) +
                      " stage checks");
  r.passed = first_ok == trials && later_ok == later && landed == trials && r.seconds < 10.0;
  if (r.seconds >= 10.0) r.details.push_back("runtime above 10 s");
  return r;
}

// ---------------------------------------------------------------------------
// 5 and 9 share the seeded random fleets.

bool constant_references(const FleetProblem& p) {
  return std::all_of(p.refs.begin(), p.refs.end(), [&](const Vec& v) { return v == p.refs.back(); });
}

bool splits_particles(const TransportPlan& plan, std::size_t m) {
  return std::any_of(plan.entries.begin(), plan.entries.end(), [&](const TransportPlan::Entry& e) {
    const double count = e.mass * static_cast<double>(m);
    return std::abs(count - std::round(count)) > 1e-9;
  });
}

constexpr std::size_t kRandomFleets = 200;

CheckResult oracle_equivalence(const VerifyOptions& o) {
  CheckResult r = check("5", "oracle-equivalence");
  Timer t;
  Rng rng(o.seed);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < kRandomFleets; ++i) {
    const auto inst = random_fleet_instance(rng);
    const auto lifted = lifted_value(dpa_multi(inst.system), inst.problem.mu0, inst.problem.refs, 0);
    const auto oracle = oracle_solve(inst.system, inst.particles, inst.problem.refs);
    if (equal_rounded(lifted.value, oracle.value)) {
      ++agree;
      continue;
    }
    r.details.push_back("instance " + std::to_string(i) + ": lifted " + num(lifted.value) + ", oracle " +
                        num(oracle.value) + ", M = " + std::to_string(inst.particles.size()) +
                        ", plan splits a particle: " +
                        (splits_particles(lifted.plan, inst.particles.size()) ? "yes" : "no"));
  }
  r.seconds = t.seconds();
  r.summary = "lifted value equals the brute-force fleet optimum on " + count_of(agree, kRandomFleets) + " instances";
  r.passed = agree == kRandomFleets && r.seconds < 60.0;
  if (r.seconds >= 60.0) r.details.push_back("runtime above 60 s");
  return r;
}

CheckResult dominance(const VerifyOptions& o) {
  CheckResult r = check("9", "dominance");
  Rng rng(o.seed);
  std::size_t compared = 0, dominated = 0;
  for (std::size_t i = 0; i < kRandomFleets; ++i) {
    const auto inst = random_fleet_instance(rng);
    const bool reference_free = !inst.system.stage_cost_depends_on_reference();
    if (!reference_free && !constant_references(inst.problem)) continue;
    const auto multi = lifted_value(dpa_multi(inst.system), inst.problem.mu0, inst.problem.refs, 0);
    DpOptions frozen;
    frozen.freeze_reference = !reference_free;
    const auto two =
        lifted_value(dpa_simple(inst.system, frozen), inst.problem.mu0, std::span(inst.problem.refs).last(1), 0);
    ++compared;
    if (at_least(two.value, multi.value, 1e-9)) {
      ++dominated;
    } else {
      r.details.push_back("instance " + std::to_string(i) + ": two-marginal " + num(two.value) + " < " +
                          num(multi.value));
    }
  }
  RunFlags flags;
  flags.mode = LiftMode::both;
  const auto report = run_bundled(o, "counterexample_multimarginal", flags);
  const ExtReal v0 = ext_from_json(report["values"]["multi"]), v2 = ext_from_json(report["values"]["two"]);
  const bool strict = v0.is_finite() && at_least(v2, v0.value() + 1e-9, 0.0);
  r.summary = "two-marginal >= multi-marginal on " + count_of(dominated, compared) +
              " comparable instances; counterexample " + rounded(v2) + " > " + rounded(v0) + ": " +
              (strict ? "yes" : "no");
  r.passed = dominated == compared && compared > 0 && strict;
  return r;
}

// ---------------------------------------------------------------------------
// 6: transport identities on random instances.

CostTensor random_cost(Rng& rng, std::vector<std::size_t> shape, double inf_rate) {
  CostTensor c(std::move(shape));
  for (std::size_t i = 0; i < c.cells(); ++i) {
    c[i] = uniform(rng, 0.0, 1.0) < inf_rate ? ExtReal::infinity() : ExtReal(uniform(rng, 0.0, 4.0));
  }
  return c;
}

// K_c(l#mu, nu) = K_{c o (l x id)}(mu, nu).
bool pushforward_stability_instance(Rng& rng) {
  const std::size_t n = pick(rng, 1, 5), image = pick(rng, 1, 5), m = pick(rng, 1, 5);
  std::vector<std::size_t> l(n);
  for (auto& v : l) v = pick(rng, 0, image - 1);
  const Vec mu = random_weights(rng, n), nu = random_weights(rng, m);
  const auto c = random_cost(rng, {image, m}, 0.1);
  std::vector<std::size_t> used;
  Vec pushed = Vec::Zero(static_cast<Eigen::Index>(image));
  for (std::size_t i = 0; i < n; ++i) pushed[static_cast<Eigen::Index>(l[i])] += mu[static_cast<Eigen::Index>(i)];
  for (std::size_t y = 0; y < image; ++y) {
    if (pushed[static_cast<Eigen::Index>(y)] > 0.0) used.push_back(y);
  }
  Vec pushed_w(static_cast<Eigen::Index>(used.size()));
  CostTensor c_pushed({used.size(), m});
  for (std::size_t a = 0; a < used.size(); ++a) {
    pushed_w[static_cast<Eigen::Index>(a)] = pushed[static_cast<Eigen::Index>(used[a])];
    for (std::size_t j = 0; j < m; ++j) c_pushed[a * m + j] = c[used[a] * m + j];
  }
  CostTensor c_pulled({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) c_pulled[i * m + j] = c[l[i] * m + j];
  }
  return near(ot2(pushed_w, nu, c_pushed).value, ot2(mu, nu, c_pulled).value, 1e-9);
}

// E_mu[v] + K_c(l#mu, nu) = K_{v + c o (l x id)}(mu, nu).
bool compositionality_instance(Rng& rng) {
  const std::size_t n = pick(rng, 1, 5), image = pick(rng, 1, 4), m = pick(rng, 1, 5);
  std::vector<std::size_t> l(n);
  for (auto& v : l) v = pick(rng, 0, image - 1);
  std::vector<ExtReal> v(n);
  for (auto& x : v) x = uniform(rng, 0.0, 1.0) < 0.1 ? ExtReal::infinity() : ExtReal(uniform(rng, 0.0, 3.0));
  const Vec mu = random_weights(rng, n), nu = random_weights(rng, m);
  const auto c = random_cost(rng, {image, m}, 0.1);
  Vec pushed = Vec::Zero(static_cast<Eigen::Index>(image));
  for (std::size_t i = 0; i < n; ++i) pushed[static_cast<Eigen::Index>(l[i])] += mu[static_cast<Eigen::Index>(i)];
  std::vector<std::size_t> used;
  for (std::size_t y = 0; y < image; ++y) {
    if (pushed[static_cast<Eigen::Index>(y)] > 0.0) used.push_back(y);
  }
  Vec pushed_w(static_cast<Eigen::Index>(used.size()));
  CostTensor c_used({used.size(), m});
  for (std::size_t a = 0; a < used.size(); ++a) {
    pushed_w[static_cast<Eigen::Index>(a)] = pushed[static_cast<Eigen::Index>(used[a])];
    for (std::size_t j = 0; j < m; ++j) c_used[a * m + j] = c[used[a] * m + j];
  }
  ExtReal expectation = 0.0;
  for (std::size_t i = 0; i < n; ++i) expectation += scale(mu[static_cast<Eigen::Index>(i)], v[i]);
  CostTensor combined({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) combined[i * m + j] = v[i] + c[l[i] * m + j];
  }
  return near(expectation + ot2(pushed_w, nu, c_used).value, ot2(mu, nu, combined).value, 1e-9);
}

// K_{c1}(mu1, nu) + min over free y of K_{c2}(mu1, mu2, y) equals the joint
// problem with cost c1 + c2 and the same free marginal.
bool sum_of_discrepancies_instance(Rng& rng) {
  const std::size_t n1 = pick(rng, 1, 4), n2 = pick(rng, 1, 4), ny = pick(rng, 1, 4), nz = pick(rng, 1, 4);
  const Vec mu1 = random_weights(rng, n1), mu2 = random_weights(rng, n2), nu = random_weights(rng, nz);
  const auto c1 = random_cost(rng, {n1, nz}, 0.1);
  const auto c2 = random_cost(rng, {n1, n2, ny}, 0.1);
  const ExtReal first = ot2(mu1, nu, c1).value;
  std::vector<std::optional<Vec>> free2{mu1, mu2, std::nullopt};
  const ExtReal second = mmot_partial(free2, c2).value;
  CostTensor c({n1, n2, ny, nz});
  std::vector<std::size_t> idx(4, 0);
  do {
    c.set(idx, c1.at(std::vector<std::size_t>{idx[0], idx[3]}) + c2.at(std::vector<std::size_t>{idx[0], idx[1], idx[2]}));
  } while (next_multi_index(idx, c.shape()));
  std::vector<std::optional<Vec>> free4{mu1, mu2, std::nullopt, nu};
  return near(first + second, mmot_partial(free4, c).value, 1e-9);
}

CheckResult lemma_identities(const VerifyOptions& o) {
  CheckResult r = check("6", "lemma-identities");
  Rng rng(o.seed);
  const std::vector<std::pair<const char*, std::function<bool(Rng&)>>> suites{
      {"pushforward stability", pushforward_stability_instance},
      {"compositionality", compositionality_instance},
      {"sum of discrepancies", sum_of_discrepancies_instance}};
  bool all = true;
  std::string summary;
  for (const auto& [name, instance] : suites) {
    std::size_t ok = 0;
    for (int i = 0; i < 100; ++i) ok += instance(rng);
    all = all && ok == 100;
    summary += (summary.empty() ? "" : ", ") + std::string(name) + " " + count_of(ok, 100);
  }
  r.summary = summary;
  r.passed = all;
  return r;
}

// ---------------------------------------------------------------------------
// 7: linear-quadratic recursions.

Mat random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double range) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -range, range);
  return m;
}

Mat random_psd(Rng& rng, Eigen::Index n, double shift) {
  const Mat l = random_matrix(rng, n, n, 1.0);
  return l * l.transpose() + shift * Mat::Identity(n, n);
}

lqr::System<double> random_lqr(Rng& rng, Eigen::Index n, bool with_q) {
  const std::size_t horizon = pick(rng, 1, 4);
  const Eigen::Index p = pick(rng, 1, 2) == 1 ? 1 : n;
  lqr::System<double> sys;
  for (std::size_t k = 0; k < horizon; ++k) {
    sys.stages.push_back({random_matrix(rng, n, n, 1.2), random_matrix(rng, n, p, 1.0), random_psd(rng, p, 0.3),
                          with_q ? random_psd(rng, n, 0.0) : Mat()});
  }
  sys.terminal = random_psd(rng, n, 0.1);
  sys.validate();
  return sys;
}

double simulate_pair(const lqr::System<double>& sys, const lqr::QuadraticCostToGo<double>& c, const Vec& x0,
                     const Vec& y) {
  Vec x = x0;
  double cost = 0.0;
  for (std::size_t k = 0; k < sys.horizon(); ++k) {
    const auto& s = sys.stages[k];
    const Vec u = c.input(k, x, y);
    cost += u.dot(s.r * u);
    if (s.q.size() != 0) cost += (x - y).dot(s.q * (x - y));
    x = s.a * x + s.b * u;
  }
  return cost + (x - y).dot(sys.terminal * (x - y));
}

CheckResult lqr_suites(const VerifyOptions& o) {
  CheckResult r = check("7", "lqr");
  Rng rng(o.seed);
  std::size_t rollout_ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = trial % 2 == 0 ? 1 : 2;
    const auto sys = random_lqr(rng, n, pick(rng, 0, 1) == 1);
    const auto c = lqr::pair_recursion(sys);
    const Vec x0 = random_matrix(rng, n, 1, 2.0), y = random_matrix(rng, n, 1, 2.0);
    const double gap = std::abs(simulate_pair(sys, c, x0, y) - c.cost(0, x0, y));
    worst = std::max(worst, gap);
    rollout_ok += gap <= 1e-8;
  }

  const Mat one = Mat::Constant(1, 1, 1.0);
  const auto unit = lqr::pair_recursion(lqr::System<double>::time_invariant(1, one, one, one, one));
  const bool half = std::abs(unit.px[0](0, 0) - 0.5) <= 1e-12 && std::abs(unit.py[0](0, 0) - 0.5) <= 1e-12 &&
                    std::abs(unit.pxy[0](0, 0) + 0.5) <= 1e-12;

  std::size_t classic_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = trial % 2 == 0 ? 1 : 2;
    const auto sys = random_lqr(rng, n, true);
    lqr::VarianceWeights<double> w;
    for (const auto& s : sys.stages) {
      w.q1.push_back(s.q);
      w.q2.push_back(s.q);
    }
    w.terminal1 = w.terminal2 = sys.terminal;
    const auto classic = lqr::classic(sys);
    const auto va = lqr::variance_aware(sys, w);
    double diff = 0.0, scale = 1.0;
    for (std::size_t k = 0; k <= sys.horizon(); ++k) {
      scale = std::max(scale, classic.p[k].cwiseAbs().maxCoeff());
      diff = std::max({diff, (va.mean.p[k] - classic.p[k]).cwiseAbs().maxCoeff(),
                       (va.spread.p[k] - classic.p[k]).cwiseAbs().maxCoeff()});
      if (k < sys.horizon()) {
        diff = std::max({diff, (va.mean.k[k] - classic.k[k]).cwiseAbs().maxCoeff(),
                         (va.spread.k[k] - classic.k[k]).cwiseAbs().maxCoeff()});
      }
    }
    classic_ok += diff <= 1e-12 * scale;
  }
  r.summary = "rollout cost equals c_0 on " + count_of(rollout_ok, 100) + " systems; one-step scalar c_0 = (x - y)^2 / 2: " +
              (half ? "yes" : "no") + "; variance-aware equals classic on " + count_of(classic_ok, 100);
  r.details.push_back("largest rollout gap: " + num(worst));
  r.passed = rollout_ok == 100 && half && classic_ok == 100;
  return r;
}

// ---------------------------------------------------------------------------
// 8: configuration counts and the overflow column.

cpp_int binomial_product(std::size_t m, std::size_t n) {
  cpp_int c = 1;
  for (std::size_t i = 1; i <= m; ++i) c = c * (n - 1 + i) / i;
  return c;
}

CheckResult complexity_counters(const VerifyOptions&) {
  CheckResult r = check("8", "complexity-counters");
  const bool small = config_count(10, 10) == 92378 && binomial_product(10, 10) == 92378;
  const cpp_int largest_double = ((cpp_int(1) << 53) - 1) << 971;
  const std::string csv = bench_csv(bench_counts(BenchGrid{}));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  bool header = line == kBenchHeader, rows_ok = true, single = false, huge = false;
  std::size_t rows = 0, marked = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string m, n, count, ops, overflow;
    std::getline(fields, m, ',');
    std::getline(fields, n, ',');
    std::getline(fields, count, ',');
    std::getline(fields, ops, ',');
    std::getline(fields, overflow, ',');
    const auto mv = std::stoull(m), nv = std::stoull(n);
    const cpp_int exact = binomial_product(mv, nv);
    const bool over = exact > largest_double;
    rows_ok = rows_ok && cpp_int(count) == exact && overflow == (over ? "1" : "0") && ops == n;
    if (mv == 1 && nv == 10) single = count == "10" && overflow == "0";
    if (mv == 1000 && nv == 10'000'000) huge = overflow == "1";
    ++rows;
    marked += over;
  }
  r.summary = std::string("config_count(10, 10) = ") + config_count(10, 10).str() + "; overflow marked on " +
              count_of(marked, rows) + " rows, exactly where the count exceeds the largest double: " +
              (rows_ok ? "yes" : "no");
  r.passed = small && header && rows_ok && single && huge;
  if (!header) r.details.push_back("unexpected CSV header");
  return r;
}

// ---------------------------------------------------------------------------
// Published reference values.

std::vector<CheckResult> reference_values(const VerifyOptions& o) {
  std::vector<CheckResult> out;
  auto add = [&](const char* name, bool ok, const std::string& summary) {
    out.push_back({"P" + std::to_string(out.size() + 1), name, ok, summary, {}, 0.0});
  };
  RunFlags both;
  both.mode = LiftMode::both;
  const auto counter = run_bundled(o, "counterexample_multimarginal", both);
  const ExtReal v0 = ext_from_json(counter["values"]["multi"]), v2 = ext_from_json(counter["values"]["two"]);
  add("multimarginal-value", equal_rounded(v0, 0.0), "V0 = " + rounded(v0));
  add("two-marginal-value", equal_rounded(v2, 2.0), "two-marginal = " + rounded(v2));
  const auto noisy = run_bundled(o, "noise_counterexample");
  const ExtReal naive = ext_from_json(noisy["values"]["naive"]), exact = ext_from_json(noisy["values"]["exact"]);
  add("naive-noisy-lift", equal_rounded(naive, 1.0), "naive = " + rounded(naive));
  add("noisy-fleet-optimum", equal_rounded(exact, 0.0), "fleet optimum = " + rounded(exact));
  // N = 4, k = 2: two of four unit steps from 0 to 2 leave x_2 = 1.
  const Vec x2 = Vec::Constant(1, 1.0), target = Vec::Constant(1, 2.0), x0 = Vec::Zero(1);
  const double remaining = lqr::integrator_cost_to_go<double>(4, 2, x2, target);
  const double through_start = (4.0 - 2.0) / 16.0 * (target - x0).squaredNorm();
  add("integrator-cost-to-go", std::abs(remaining - 0.5) <= 1e-12 && std::abs(through_start - 0.5) <= 1e-12,
      "N = 4, k = 2: " + num(remaining) + " (from x_2 = 1), " + num(through_start) + " (through x_0 = 0)");
  add("configuration-count", config_count(10, 10) == 92378 && binomial_product(10, 10) == 92378,
      "C(19, 10) = " + config_count(10, 10).str());
  return out;
}

// ---------------------------------------------------------------------------

using Criterion = CheckResult (*)(const VerifyOptions&);

const std::vector<std::pair<std::string, Criterion>>& criteria() {
  static const std::vector<std::pair<std::string, Criterion>> list{
      {"multimarginal-counterexample", multimarginal_counterexample},
      {"noise-counterexample", noise_counterexample},
      {"mass-splitting", mass_splitting},
      {"integrator-formula", integrator_formula},
      {"oracle-equivalence", oracle_equivalence},
      {"lemma-identities", lemma_identities},
      {"lqr", lqr_suites},
      {"complexity-counters", complexity_counters},
      {"dominance", dominance},
  };
  return list;
}

CheckResult guarded(std::size_t index, const VerifyOptions& o) {
  const auto& [name, fn] = criteria()[index];
  Timer t;
  try {
    CheckResult r = fn(o);
    if (r.seconds == 0.0) r.seconds = t.seconds();
    return r;
  } catch (const Error& e) {
    return {std::to_string(index + 1), name, false, std::string("error [") + e.module() + "]: " + e.what(), {}, t.seconds()};
  } catch (const std::exception& e) {
    return {std::to_string(index + 1), name, false, std::string("error: ") + e.what(), {}, t.seconds()};
  }
}

std::vector<CheckResult> run_criteria(const VerifyOptions& o) {
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < criteria().size(); ++i) out.push_back(guarded(i, o));
  return out;
}

CheckResult determinism(const VerifyOptions& o, std::vector<CheckResult>* first_pass) {
  Timer t;
  auto first = run_criteria(o);
  const auto second = run_criteria(o);
  const bool same = format_results(first, false) == format_results(second, false);
  if (first_pass != nullptr) *first_pass = std::move(first);
  return {"10", "determinism", same,
          same ? "two passes over criteria 1-9 with seed " + std::to_string(o.seed) + " render identically"
               : "two passes over criteria 1-9 render differently",
          {},
          t.seconds()};
}

}  // namespace

std::vector<std::string> verify_suites() {
  std::vector<std::string> out{"all", "paper-values"};
  for (const auto& [name, _] : criteria()) out.push_back(name);
  out.push_back("determinism");
  return out;
}

std::vector<CheckResult> run_verify(const std::string& suite, const VerifyOptions& options) {
  VerifyOptions o = options;
  if (o.scenario_dir.empty()) o.scenario_dir = default_scenario_dir();
  if (suite == "all") {
    std::vector<CheckResult> out;
    CheckResult last = determinism(o, &out);
    out.push_back(std::move(last));
    return out;
  }
  if (suite == "paper-values") {
    try {
      return reference_values(o);
    } catch (const Error& e) {
      return {{"P", "paper-values", false, std::string("error [") + e.module() + "]: " + e.what(), {}, 0.0}};
    }
  }
  if (suite == "determinism") return {determinism(o, nullptr)};
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    if (criteria()[i].first == suite) return {guarded(i, o)};
  }
  throw DomainError("verify", "unknown suite '" + suite + "'");
}

std::string format_results(const std::vector<CheckResult>& results, bool timings) {
  std::ostringstream out;
  std::size_t passed = 0;
  for (const auto& r : results) {
    passed += r.passed;
    out << (r.passed ? "PASS" : "FAIL") << "  " << std::left << std::setw(3) << r.id << ' ' << r.name << ": "
        << r.summary;
    if (timings) out << " [" << std::fixed << std::setprecision(3) << r.seconds << " s]" << std::defaultfloat;
    out << '\n';
    for (const auto& d : r.details) out << "      " << d << '\n';
  }
  out << passed << " of " << results.size() << " checks passed\n";
  return out.str();
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace otdp
