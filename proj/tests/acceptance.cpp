// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "decept/gp_solver.hpp"
#include "decept/instance.hpp"
#include "decept/report.hpp"
#include "decept/scp.hpp"
#include "support.hpp"

using namespace decept;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const char* kInstance = DECEPT_DATA_DIR "/sf_grid_synthetic.json";

Outcome worked_example() {
  Outcome o;
  const MdpModel m = test::fig1_model();
  const AdversaryProfile p = test::fig1_profile();
  const auto& u = test::fig1_utilities();
  const auto r = defender_rewards(p, u);
  const double ra = expected_immediate_reward(m, r, 0, 0);
  const double rb = expected_immediate_reward(m, r, 0, 1);
  const double ha = perceived_expected_reward(m, u, p, 0, 0);
  const double hb = perceived_expected_reward(m, u, p, 0, 1);
  o.require(std::abs(ra - 2.3) <= 1e-12, fmt("r_a = %.17g", ra));
  o.require(std::abs(rb - 2.5) <= 1e-12, fmt("r_b = %.17g", rb));
  o.require(std::abs(ha - 2.0678) <= 1e-3, fmt("r_a^h = %.6f", ha));
  o.require(std::abs(hb - 1.8617) <= 1e-3, fmt("r_b^h = %.6f", hb));
  o.require(ha > hb && ra < rb, "no preference reversal");
  if (o.pass) o.detail = fmt("r_a=%.4f r_b=%.4f r_a^h=%.4f r_b^h=%.4f", ra, rb, ha, hb);
  return o;
}

Outcome weighting_suite() {
  Outcome o;
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double p = i / 1000.0;
    worst = std::max(worst, std::abs(weight_probability(p, 1.0) - p));
  }
  o.require(worst <= 1e-12, fmt("w(p,1) error %.3g", worst));
  o.require(weight_probability(0.0, 0.6) == 0.0 && weight_probability(1.0, 0.6) == 1.0,
            "endpoints");

  bool monotone = true;
  double prev = 0.0;
  for (int i = 1; i <= 100000; ++i) {
    const double w = weight_probability(i / 100000.0, 0.6);
    monotone = monotone && w > prev;
    prev = w;
  }
  o.require(monotone, "not monotone at gamma 0.6");

  for (double gamma : {0.3, 0.5, 0.6, 0.75, 0.9, 0.99}) {
    int crossings = 0;
    int last = 0;
    for (int i = 1; i < 100000; ++i) {
      const double p = i / 100000.0;
      const double d = weight_probability(p, gamma) - p;
      const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
      if (sign != 0 && last != 0 && sign != last) ++crossings;
      if (sign != 0) last = sign;
    }
    o.require(crossings == 1, fmt("gamma %.2f has %d crossings", gamma, crossings));
  }
  if (o.pass) o.detail = fmt("max |w(p,1)-p| = %.3g, one crossover for 6 values of gamma", worst);
  return o;
}

Outcome evaluator_oracle() {
  Outcome o;
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  int cases = 0;
  double worst_q = 0.0, worst_p = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const MdpModel m = test::random_model(rng, 4, 3);
    const Policy pi = test::random_policy(rng, m);
    std::vector<double> r(m.num_states());
    for (auto& v : r) v = pos(rng);
    const int h = static_cast<int>(rng() % 5);
    const double q = expected_cost(m, pi, r, h).total;
    const double qe = test::enumerate_cost(m, pi, r, h);
    const double p = reach_probability(m, pi, h).total;
    const double pe = test::enumerate_reach(m, pi, h);
    worst_q = std::max(worst_q, std::abs(q - qe) / std::max(1.0, std::abs(qe)));
    worst_p = std::max(worst_p, std::abs(p - pe));
    ++cases;
  }
  o.require(cases >= 100, "too few cases");
  o.require(worst_q <= 1e-9, fmt("Q error %.3g", worst_q));
  o.require(worst_p <= 1e-9, fmt("reach error %.3g", worst_p));
  if (o.pass) o.detail = fmt("%d cases, max Q error %.2g, max reach error %.2g", cases, worst_q, worst_p);
  return o;
}

Outcome monte_carlo_consistency() {
  Outcome o;
  const Instance inst = load_instance(kInstance);
  const Allocation u = Allocation::uniform(inst.model.num_states(), inst.problem.budget);
  const Evaluation exact = evaluate_allocation(inst, u.utilities);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  int q_hits = 0, p_hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto mc = monte_carlo(inst.model, exact.policy, exact.rewards, inst.problem.horizon,
                                {.paths = 100000, .seed = seed, .workers = workers});
    q_hits += std::abs(mc.cost.mean - exact.cost.total) <= 3.0 * mc.cost.std_error;
    p_hits += std::abs(mc.reach.mean - exact.reach.total) <= 3.0 * mc.reach.std_error;
  }
  o.require(q_hits >= 19, fmt("Q within 3 SE for %d/20 seeds", q_hits));
  o.require(p_hits >= 19, fmt("reach within 3 SE for %d/20 seeds", p_hits));
  if (o.pass) o.detail = fmt("Q %d/20, reach %d/20 seeds within 3 SE", q_hits, p_hits);
  return o;
}

Outcome monomial_approximation_check() {
  Outcome o;
  auto vars = std::make_shared<VarTable>();
  const std::vector<VarId> ids{vars->intern("a"), vars->intern("b"), vars->intern("c")};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> coef(0.1, 10.0), expo(-2.5, 2.5), pos(0.2, 5.0);
  auto point = [&] {
    Assignment a(vars);
    for (VarId id : ids) a.set(id, pos(rng));
    return a;
  };
  double worst_value = 0.0, worst_grad = 0.0;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Monomial> terms;
    const int k = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < k; ++i) {
      std::vector<Monomial::Factor> f;
      for (VarId id : ids) f.push_back({id, expo(rng)});
      terms.emplace_back(coef(rng), std::move(f));
    }
    const Posynomial f(std::move(terms));
    const Assignment at = point();
    const Monomial m = monomial_approximation(f, at);
    const double fv = evaluate(f, at);
    worst_value = std::max(worst_value, std::abs(m.evaluate(at) - fv) / fv);
    std::map<std::uint32_t, double> gm;
    for (auto [id, v] : gradient(Posynomial(m), at)) gm[id.index] = v;
    for (auto [id, v] : gradient(f, at)) {
      const double scale = std::max(1.0, std::abs(v));
      worst_grad = std::max(worst_grad, std::abs(gm[id.index] - v) / scale);
    }
    const Assignment x = point();
    if (m.evaluate(x) > evaluate(f, x) * (1.0 + 1e-12)) ++violations;
  }
  o.require(worst_value <= 1e-12, fmt("value error %.3g", worst_value));
  o.require(worst_grad <= 1e-9, fmt("gradient error %.3g", worst_grad));
  o.require(violations == 0, fmt("%d underestimation violations", violations));
  if (o.pass) {
    o.detail = fmt("1000 triples, value error %.2g, gradient error %.2g", worst_value, worst_grad);
  }
  return o;
}

Outcome gp_canonical() {
  Outcome o;
  auto vars = std::make_shared<VarTable>();
  const VarId x = vars->intern("x"), y = vars->intern("y");
  auto mono = [&](double c, double ex, double ey) {
    std::vector<Monomial::Factor> f;
    if (ex != 0.0) f.push_back({x, ex});
    if (ey != 0.0) f.push_back({y, ey});
    return Monomial(c, std::move(f));
  };
  auto start = [](std::shared_ptr<const VarTable> v, std::vector<double> values) {
    Assignment a(std::move(v));
    for (std::uint32_t i = 0; i < values.size(); ++i) a.set(VarId{i}, values[i]);
    return a;
  };

  auto one = std::make_shared<VarTable>();
  const VarId only = one->intern("x");
  GpProblem bound;
  bound.vars = one;
  bound.objective = Posynomial(Monomial::variable(only));
  bound.inequalities.push_back({Posynomial(Monomial::variable(only, -1.0)), ConstraintKind::Cost, "x^-1 <= 1"});

  GpProblem box;
  box.vars = vars;
  box.objective = Posynomial(mono(1.0, -1.0, -1.0));
  box.inequalities.push_back({mono(0.5, 1.0, 0.0), ConstraintKind::Cost, "x <= 2"});
  box.inequalities.push_back({mono(1.0 / 3.0, 0.0, 1.0), ConstraintKind::Cost, "y <= 3"});

  GpProblem amgm;
  amgm.vars = vars;
  amgm.objective = Posynomial(mono(1.0, 1.0, 0.0)) + mono(1.0, 0.0, 1.0);
  amgm.inequalities.push_back({mono(1.0, -1.0, -1.0), ConstraintKind::Cost, "xy >= 1"});

  struct Case {
    const char* name;
    const GpProblem* gp;
    Assignment start;
    double expected;
  };
  const std::vector<Case> cases{{"x", &bound, start(one, {3.0}), 1.0},
                                {"1/(xy)", &box, start(vars, {1.0, 1.0}), 1.0 / 6.0},
                                {"x+y", &amgm, start(vars, {2.0, 2.0}), 2.0}};
  std::string summary;
  for (const auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const GpSolution sol = solve(*c.gp, c.start);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const double err = std::abs(sol.objective - c.expected) / c.expected;
    const KktReport kkt = kkt_report(*c.gp, sol, 1e-6);
    o.require(sol.status == GpStatus::Optimal, fmt("%s: status %s", c.name, to_string(sol.status)));
    o.require(err <= 1e-6, fmt("%s: objective error %.3g", c.name, err));
    o.require(kkt.optimal, fmt("%s: KKT stat %.2g comp %.2g primal %.2g", c.name, kkt.stationarity,
                               kkt.complementarity, kkt.primal_inequality));
    const double kmax = std::max({kkt.stationarity, kkt.complementarity, kkt.primal_inequality,
                                  kkt.primal_equality, kkt.dual_infeasibility});
    summary += fmt("%s%s err %.1g kkt %.1g %.1fms", summary.empty() ? "" : ", ", c.name, err, kmax, ms);
  }
  if (o.pass) o.detail = summary;
  return o;
}

Outcome end_to_end(SolveReport& report, const Instance& inst) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  report = run(inst.model, inst.profile, inst.problem, inst.scp);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Evaluation check = evaluate_allocation(inst, report.allocation.utilities);
  const double budget = report.allocation.total();
  const double rel = std::abs(check.cost.total - report.q) / std::abs(check.cost.total);
  const int iters = static_cast<int>(report.iterations.size());
  o.require(report.converged, "not converged: " + report.message);
  o.require(iters <= 100, fmt("%d outer iterations", iters));
  o.require(report.reach_probability <= inst.problem.lambda + 1e-9,
            fmt("reach %.6f", report.reach_probability));
  o.require(std::abs(budget - inst.problem.budget) <= 1e-6, fmt("budget %.9f", budget));
  o.require(report.q <= report.q_uniform, fmt("Q %.4f above uniform %.4f", report.q, report.q_uniform));
  o.require(rel <= 1e-6, fmt("report Q differs from recomputation by %.3g", rel));
  o.detail += fmt("%s%d iterations, Q %.4f (uniform %.4f), reach %.4f, budget %.6f, %.0f s",
                  o.detail.empty() ? "" : "; ", iters, report.q, report.q_uniform,
                  report.reach_probability, budget, secs);
  return o;
}

// 2-3 state instances: the two symmetric ones plus random draws on which the
// grid search finds a feasible allocation.
Outcome small_instances() {
  Outcome o;
  auto twin = [](bool sensitive) {
    const std::size_t n = sensitive ? 3 : 2;
    std::vector<std::vector<ActionRow>> rows(n);
    for (StateId s = 0; s < 2; ++s) {
      std::vector<Transition> move{{1 - s, 1.0}};
      if (sensitive) move = {{1 - s, 0.8}, {2, 0.2}};
      rows[s] = {ActionRow{0, {{s, 1.0}}}, ActionRow{1, move}};
    }
    std::vector<double> nu{0.5, 0.5};
    if (sensitive) {
      rows[2] = {ActionRow{0, {{0, 0.5}, {1, 0.5}}}};
      nu.push_back(0.0);
    }
    return MdpModel({"stay", "move"}, std::move(rows), std::move(nu),
                    sensitive ? std::vector<StateId>{2} : std::vector<StateId>{});
  };

  int compared = 0;
  double worst_ratio = 0.0;
  double worst_asym = 0.0;
  auto compare = [&](const MdpModel& m, const AdversaryProfile& p, int h, double lambda,
                     bool symmetric) {
    const double budget = 10.0;
    const auto bf = brute_force_allocation(m, p, h, budget, lambda, 0.01);
    if (!bf.feasible) return false;
    const SolveReport r = run(m, p, {.horizon = h, .budget = budget, .lambda = lambda});
    const double ratio = r.q / bf.q;
    worst_ratio = std::max(worst_ratio, ratio);
    o.require(r.reach_probability <= lambda + 1e-6,
              fmt("instance %d: reach %.4f > %.4f", compared, r.reach_probability, lambda));
    o.require(ratio <= 1.05, fmt("instance %d: Q %.6f vs grid %.6f", compared, r.q, bf.q));
    if (symmetric) {
      const double asym = std::abs(r.allocation.utilities[0] - r.allocation.utilities[1]) / budget;
      worst_asym = std::max(worst_asym, asym);
      o.require(asym <= 1e-4, fmt("instance %d: asymmetry %.3g", compared, asym));
    }
    ++compared;
    return true;
  };

  compare(twin(false), AdversaryProfile::from_counts(std::vector<double>{4.0, 4.0}, 0.6, 0.88, -1.0),
          5, 0.3, true);
  compare(twin(true),
          AdversaryProfile::from_counts(std::vector<double>{4.0, 4.0, 1.0}, 0.6, 0.88, -1.0), 4,
          0.3, true);
  compare(twin(true),
          AdversaryProfile::from_counts(std::vector<double>{9.0, 9.0, 2.0}, 0.6, 0.88, -1.0), 3,
          0.25, true);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> count(0.5, 20.0), unit(0.0, 1.0);
  int random_cases = 0;
  for (int draw = 0; draw < 200 && random_cases < 15; ++draw) {
    const MdpModel m = test::random_model(rng, 3, 3, true);
    std::vector<double> c(m.num_states());
    for (auto& v : c) v = count(rng);
    const auto p = AdversaryProfile::from_counts(c, 0.6, 0.88, -1.0);
    const int h = 1 + static_cast<int>(rng() % 5);
    const double lambda = 0.3 + 0.6 * unit(rng);
    if (m.num_states() < 2) continue;
    random_cases += compare(m, p, h, lambda, false);
  }
  o.require(compared >= 15, fmt("only %d comparable instances", compared));
  if (o.pass) {
    o.detail = fmt("%d instances, worst Q ratio to grid optimum %.4f, worst asymmetry %.2g",
                   compared, worst_ratio, worst_asym);
  }
  return o;
}

Outcome determinism(const SolveReport& first, const Instance& inst) {
  Outcome o;
  const SolveReport second = run(inst.model, inst.profile, inst.problem, inst.scp);
  const std::string a = solve_report_json(inst, first);
  const std::string b = solve_report_json(inst, second);
  o.require(a == b, "reports differ");
  if (o.pass) o.detail = fmt("two solves, %zu-byte reports identical", a.size());
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  auto print = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %d %s: %s (%s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  auto guarded = [](auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      Outcome o;
      o.require(false, std::string("exception: ") + e.what());
      return o;
    }
  };

  print(1, "two-action worked example", guarded(worked_example));
  print(2, "weighting function", guarded(weighting_suite));
  print(3, "evaluator against path enumeration", guarded(evaluator_oracle));
  print(4, "Monte Carlo consistency", guarded(monte_carlo_consistency));
  print(5, "monomial approximation", guarded(monomial_approximation_check));
  print(6, "GP canonical instances", guarded(gp_canonical));

  SolveReport report;
  bool solved = false;
  Instance inst;
  print(7, "end-to-end SCP on the bundled grid", guarded([&] {
          inst = load_instance(kInstance);
          Outcome o = end_to_end(report, inst);
          solved = true;
          return o;
        }));
  print(8, "small-instance optimality", guarded(small_instances));
  print(9, "determinism", guarded([&] {
          if (!solved) {
            inst = load_instance(kInstance);
            report = run(inst.model, inst.profile, inst.problem, inst.scp);
          }
          return determinism(report, inst);
        }));
  std::printf("%d of 9 criteria failed\n", failed);
  return failed;
}
