#include "decept/scp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace decept {

void ScpSettings::check() const {
  if (!(epsilon > 0.0)) throw InvalidModel("epsilon must be positive");
  if (!(delta0 > 0.0)) throw InvalidModel("delta0 must be positive");
  if (!(mu_delta > 1.0)) throw InvalidModel("mu_delta must exceed 1");
  if (!(delta_max >= delta0)) throw InvalidModel("delta_max must be at least delta0");
  if (!(eta > 1.0)) throw InvalidModel("eta must exceed 1");
  if (max_outer_iterations < 1) throw InvalidModel("at least one outer iteration is required");
}

Allocation normalize_allocation(std::span<const double> utilities, double budget) {
  const double total = std::accumulate(utilities.begin(), utilities.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("allocation must have positive total");
  Allocation a;
  a.budget = budget;
  a.utilities.reserve(utilities.size());
  for (double u : utilities) {
    if (!(u > 0.0)) throw DomainError("utilities must be strictly positive");
    a.utilities.push_back(u * budget / total);
  }
  return a;
}

LiftedPoint lift_allocation(const SpProblem& sp, const MdpModel& model,
                            const AdversaryProfile& profile, std::span<const double> utilities) {
  const auto& p = sp.params;
  LiftedPoint lp;
  lp.allocation = Allocation{{utilities.begin(), utilities.end()}, p.budget};
  lp.rewards = defender_rewards(profile, utilities);
  lp.policy = derive_policy(model, utilities, profile);
  lp.cost = expected_cost(model, lp.policy, lp.rewards, p.horizon);
  lp.reach = reach_probability(model, lp.policy, p.horizon, 0.0);
  lp.reach_floored = reach_probability(model, lp.policy, p.horizon, p.reach_floor);

  double worst = 0.0;
  for (const auto& row : lp.reach_floored.p) {
    double total = 0.0;
    for (StateId s = 0; s < model.num_states(); ++s) total += model.initial()[s] * row[s];
    worst = std::max(worst, total);
  }
  lp.tau = std::max(1.0, worst / p.lambda);

  Assignment a(sp.vars);
  for (StateId s = 0; s < model.num_states(); ++s) {
    a.set(sp.utility[s], utilities[s]);
    a.set(sp.reward[s], lp.rewards[s]);
    const auto pi = lp.policy.at(s);
    for (std::size_t k = 0; k < pi.size(); ++k) a.set(sp.policy[s][k], pi[k]);
  }
  for (std::size_t t = 0; t < sp.cost.size(); ++t) {
    for (StateId s = 0; s < model.num_states(); ++s) {
      a.set(sp.cost[t][s], lp.cost.q[t][s]);
      if (auto id = sp.reach[t][s]) a.set(*id, lp.reach_floored.p[t][s]);
    }
  }
  a.set(sp.slack, lp.tau);
  lp.assignment = std::move(a);
  return lp;
}

LiftedPoint initial_point(const SpProblem& sp, const MdpModel& model,
                          const AdversaryProfile& profile) {
  const auto uniform = Allocation::uniform(model.num_states(), sp.params.budget);
  return lift_allocation(sp, model, profile, uniform.utilities);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double merit(const LiftedPoint& lp, double delta, double lambda) {
  return lp.q() + delta * std::max(1.0, lp.reach_total() / lambda);
}

// Largest relative slack 1 - g(x) over GP constraints of one kind.
double slack_of(const GpProblem& gp, const Assignment& x, ConstraintKind kind) {
  double worst = 0.0;
  for (const auto& c : gp.inequalities) {
    if (c.kind != kind) continue;
    worst = std::max(worst, 1.0 - evaluate(c.lhs, x));
  }
  return worst;
}

// Cost recursion evaluated on the GP's own utilities and policy entries.
double recursion_cost(const SpProblem& sp, const MdpModel& model, const AdversaryProfile& profile,
                      const Assignment& x) {
  std::vector<double> u(model.num_states());
  std::vector<std::vector<double>> pi(model.num_states());
  for (StateId s = 0; s < model.num_states(); ++s) {
    u[s] = x.at(sp.utility[s]);
    for (VarId id : sp.policy[s]) pi[s].push_back(x.at(id));
  }
  return expected_cost(model, Policy(std::move(pi)), defender_rewards(profile, u),
                       sp.params.horizon)
      .total;
}

// The lifted point makes every recursion tight. Inflating Q_t and P_t by
// (1+k)^(H-t+1) and tau by (1+k)^(H+3) turns them strict while staying inside
// the trust region, so the solver can skip its feasibility phase.
Assignment interior_start(const SpProblem& sp, const LiftedPoint& lp, double eta) {
  const int h = sp.params.horizon;
  const double k = std::pow(eta, 1.0 / (2.0 * (h + 3))) - 1.0;
  Assignment a = lp.assignment;
  for (std::size_t t = 0; t < sp.cost.size(); ++t) {
    const double f = std::pow(1.0 + k, h - static_cast<int>(t) + 1);
    for (std::size_t s = 0; s < sp.cost[t].size(); ++s) {
      a.set(sp.cost[t][s], a.at(sp.cost[t][s]) * f);
      if (auto id = sp.reach[t][s]) a.set(*id, a.at(*id) * f);
    }
  }
  a.set(sp.slack, a.at(sp.slack) * std::pow(1.0 + k, h + 3));
  return a;
}

}  // namespace

SolveReport run(const MdpModel& model, const AdversaryProfile& profile, const SpParameters& problem,
                const ScpSettings& settings, const IterationCallback& on_iteration) {
  const auto start = Clock::now();
  settings.check();
  SpParameters params = problem;
  params.delta = settings.delta0;
  params.reach_floor = settings.reach_floor;
  SpProblem sp = build_sp(model, profile, params);

  SolveReport report;
  report.settings = settings;
  report.problem = params;

  LiftedPoint current = initial_point(sp, model, profile);
  report.q_uniform = current.q();
  report.reach_uniform = current.reach_total();

  double delta = settings.delta0;
  double eta = settings.eta;
  const double lambda = params.lambda;
  std::optional<GpSolution> last_accepted;
  std::optional<GpProblem> last_gp;

  for (int k = 1; k <= settings.max_outer_iterations; ++k) {
    const auto iter_start = Clock::now();
    ScpIteration rec;
    rec.index = k;
    rec.delta = delta;
    rec.eta = eta;

    sp.params.delta = delta;
    GpProblem gp = trust_region(condense(sp, current.assignment), current.assignment, eta);
    GpSolution sol = solve(gp, interior_start(sp, current, eta), settings.solver);
    rec.gp_status = sol.status;
    rec.newton_steps = sol.newton_steps;
    rec.gp_objective = sol.objective;

    // A capped solve still returns a strictly feasible phase-2 iterate; the
    // merit test decides whether it is good enough.
    bool accept = sol.status == GpStatus::Optimal || sol.status == GpStatus::MaxIterations;
    std::optional<LiftedPoint> candidate;
    if (accept) {
      rec.gp_cost = evaluate(sp.cost_objective, sol.assignment);
      rec.gp_cost_check = recursion_cost(sp, model, profile, sol.assignment);
      std::vector<double> u(model.num_states());
      for (StateId s = 0; s < model.num_states(); ++s) u[s] = sol.assignment.at(sp.utility[s]);
      const Allocation next = normalize_allocation(u, params.budget);
      for (StateId s = 0; s < model.num_states(); ++s) {
        const double r = next.utilities[s] / current.allocation.utilities[s];
        rec.max_step_ratio = std::max({rec.max_step_ratio, r, 1.0 / r});
      }
      candidate = lift_allocation(sp, model, profile, next.utilities);
      const double before = merit(current, delta, lambda);
      const double after = merit(*candidate, delta, lambda);
      accept = !settings.merit_test || after <= before + 1e-12 * std::abs(before);
    }

    if (!accept) {
      // Shrink the trust region toward 1 and retry from the same point.
      eta = 1.0 + (eta - 1.0) / 2.0;
      rec.accepted = false;
      rec.q = current.q();
      rec.reach = current.reach_total();
      rec.tau = std::max(1.0, current.reach_total() / lambda);
      rec.merit = merit(current, delta, lambda);
      rec.wall_seconds = seconds_since(iter_start);
      report.solver_seconds += rec.wall_seconds;
      report.iterations.push_back(rec);
      if (on_iteration) on_iteration(rec);
      if (eta - 1.0 < 1e-9) {
        report.message = "trust region collapsed";
        break;
      }
      continue;
    }

    const double change = std::abs(candidate->q() - current.q());
    current = std::move(*candidate);
    eta = settings.eta;
    last_accepted = std::move(sol);
    last_gp = std::move(gp);

    rec.accepted = true;
    rec.q = current.q();
    rec.reach = current.reach_total();
    rec.tau = std::max(1.0, current.reach_total() / lambda);
    rec.merit = merit(current, delta, lambda);

    const bool reach_ok = current.reach_total() <= lambda + 1e-6;
    if (!reach_ok) delta = std::min(settings.mu_delta * delta, settings.delta_max);
    rec.wall_seconds = seconds_since(iter_start);
    report.solver_seconds += rec.wall_seconds;
    report.iterations.push_back(rec);
    if (on_iteration) on_iteration(rec);

    if (change < settings.epsilon && (reach_ok || delta >= settings.delta_max)) {
      report.converged = reach_ok;
      report.message = reach_ok ? "converged" : "cost stalled with the reach bound violated";
      break;
    }
  }
  if (report.message.empty()) report.message = "outer iteration cap reached";

  report.allocation = current.allocation;
  report.policy = current.policy;
  report.rewards = current.rewards;
  report.cost = current.cost;
  report.reach = current.reach;
  report.q = current.q();
  report.reach_probability = current.reach_total();
  report.tau = std::max(1.0, current.reach_total() / lambda);
  if (last_accepted) {
    report.cost_tightness = slack_of(*last_gp, last_accepted->assignment, ConstraintKind::Cost);
    report.reach_tightness = slack_of(*last_gp, last_accepted->assignment, ConstraintKind::Reach);
  }
  report.total_seconds = seconds_since(start);
  return report;
}

BruteForceResult brute_force_allocation(const MdpModel& model, const AdversaryProfile& profile,
                                        int horizon, double budget, double lambda,
                                        double resolution) {
  const std::size_t n = model.num_states();
  if (n == 0 || n > 3) throw DomainError("brute force search supports 1 to 3 states");
  if (!(resolution > 0.0 && resolution < 1.0)) throw DomainError("resolution must lie in (0,1)");
  const int steps = static_cast<int>(std::lround(1.0 / resolution));

  BruteForceResult best;
  auto consider = [&](std::vector<double> u) {
    const Policy pi = derive_policy(model, u, profile);
    const auto rewards = defender_rewards(profile, u);
    const double q = expected_cost(model, pi, rewards, horizon).total;
    const double reach = reach_probability(model, pi, horizon).total;
    ++best.evaluated;
    if (reach > lambda + 1e-12) return;
    if (!best.feasible || q < best.q) {
      best.feasible = true;
      best.q = q;
      best.reach = reach;
      best.allocation = Allocation{std::move(u), budget};
    }
  };
  const double unit = budget / steps;
  if (n == 1) {
    consider({budget});
  } else if (n == 2) {
    for (int i = 1; i < steps; ++i) consider({unit * i, unit * (steps - i)});
  } else {
    for (int i = 1; i < steps; ++i) {
      for (int j = 1; i + j < steps; ++j) consider({unit * i, unit * j, unit * (steps - i - j)});
    }
  }
  return best;
}

}  // namespace decept
