#include "decept/report.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

namespace decept {

using nlohmann::ordered_json;

namespace {

ordered_json state_entry(const Instance& inst, StateId s) {
  ordered_json e;
  e["state"] = s;
  const auto& labels = inst.model.labels();
  if (s < labels.size()) {
    e["label"] = labels[s].name;
    if (labels[s].row) e["row"] = *labels[s].row;
    if (labels[s].col) e["col"] = *labels[s].col;
  }
  return e;
}

ordered_json allocation_block(const Instance& inst, std::span<const double> utilities,
                              std::span<const double> rewards) {
  ordered_json rows = ordered_json::array();
  for (StateId s = 0; s < inst.model.num_states(); ++s) {
    ordered_json e = state_entry(inst, s);
    e["crime"] = inst.crime_counts.at(s);
    e["sensitive"] = inst.model.is_sensitive(s);
    e["utility"] = utilities[s];
    e["reward"] = rewards[s];
    rows.push_back(std::move(e));
  }
  return rows;
}

ordered_json policy_block(const Instance& inst, const Policy& policy) {
  ordered_json rows = ordered_json::array();
  const auto& m = inst.model;
  for (StateId s = 0; s < m.num_states(); ++s) {
    ordered_json probs = ordered_json::object();
    const auto acts = m.actions_at(s);
    const auto pi = policy.at(s);
    for (std::size_t k = 0; k < acts.size(); ++k) probs[m.action_names()[acts[k].action]] = pi[k];
    ordered_json e = state_entry(inst, s);
    e["actions"] = std::move(probs);
    rows.push_back(std::move(e));
  }
  return rows;
}

ordered_json per_state(const Instance& inst, const CostTable& cost, const ReachTable& reach) {
  ordered_json rows = ordered_json::array();
  for (StateId s = 0; s < inst.model.num_states(); ++s) {
    ordered_json e = state_entry(inst, s);
    e["Q0"] = cost.q.front()[s];
    e["P0"] = reach.p.front()[s];
    rows.push_back(std::move(e));
  }
  return rows;
}

ordered_json header(const Instance& inst, const char* command) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["instance"] = inst.name;
  j["synthetic"] = inst.synthetic;
  j["states"] = inst.model.num_states();
  j["sensitive"] = inst.model.sensitive();
  return j;
}

ordered_json problem_block(const SpParameters& p) {
  return {{"horizon", p.horizon}, {"budget", p.budget}, {"lambda", p.lambda},
          {"reach_floor", p.reach_floor}};
}

double relative_difference(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace

std::string solve_report_json(const Instance& inst, const SolveReport& r) {
  ordered_json j = header(inst, "solve");
  j["problem"] = problem_block(r.problem);
  const auto& s = r.settings;
  const auto& g = s.solver;
  j["settings"] = {{"epsilon", s.epsilon},
                   {"delta0", s.delta0},
                   {"mu_delta", s.mu_delta},
                   {"delta_max", s.delta_max},
                   {"eta", s.eta},
                   {"max_outer_iterations", s.max_outer_iterations},
                   {"profile",
                    {{"gamma", inst.profile.gamma},
                     {"alpha", inst.profile.alpha},
                     {"reward_exponent", inst.profile.reward_exponent},
                     {"coefficient_floor", inst.profile.min_coefficient}}},
                   {"solver",
                    {{"max_newton_per_stage", g.max_newton_per_stage},
                     {"max_stages", g.max_stages},
                     {"initial_t", g.initial_t},
                     {"barrier_multiplier", g.barrier_multiplier},
                     {"primal_tolerance", g.primal_tolerance},
                     {"line_search_alpha", g.line_search_alpha},
                     {"line_search_beta", g.line_search_beta}}}};

  ordered_json iters = ordered_json::array();
  for (const auto& it : r.iterations) {
    iters.push_back({{"iteration", it.index},
                     {"accepted", it.accepted},
                     {"gp_status", to_string(it.gp_status)},
                     {"Q", it.q},
                     {"reach", it.reach},
                     {"tau", it.tau},
                     {"delta", it.delta},
                     {"eta", it.eta},
                     {"merit", it.merit},
                     {"max_step_ratio", it.max_step_ratio},
                     {"gp_Q", it.gp_cost},
                     {"gp_Q_recursion", it.gp_cost_check},
                     {"newton_steps", it.newton_steps}});
  }
  j["iterations"] = std::move(iters);

  const double total = std::accumulate(r.allocation.utilities.begin(), r.allocation.utilities.end(), 0.0);
  j["result"] = {{"converged", r.converged},
                 {"message", r.message},
                 {"outer_iterations", r.iterations.size()},
                 {"Q", r.q},
                 {"reach", r.reach_probability},
                 {"reach_feasible", r.reach_probability <= r.problem.lambda + 1e-6},
                 {"tau", r.tau},
                 {"Q_uniform", r.q_uniform},
                 {"reach_uniform", r.reach_uniform},
                 {"budget_total", total},
                 {"cost_tightness", r.cost_tightness},
                 {"reach_tightness", r.reach_tightness}};
  j["allocation"] = allocation_block(inst, r.allocation.utilities, r.rewards);
  j["policy"] = policy_block(inst, r.policy);

  // Independent recomputation from the final allocation alone.
  const Evaluation check = evaluate_allocation(inst, r.allocation.utilities);
  j["cross_check"] = {{"Q", check.cost.total},
                      {"reach", check.reach.total},
                      {"Q_relative_difference", relative_difference(r.q, check.cost.total)},
                      {"reach_difference", std::abs(r.reach_probability - check.reach.total)}};
  return j.dump(2) + "\n";
}

std::string solve_timing_json(const SolveReport& r) {
  ordered_json j;
  j["solver_seconds"] = r.solver_seconds;
  j["total_seconds"] = r.total_seconds;
  ordered_json per = ordered_json::array();
  for (const auto& it : r.iterations) per.push_back(it.wall_seconds);
  j["iteration_seconds"] = std::move(per);
  return j.dump(2) + "\n";
}

Evaluation evaluate_allocation(const Instance& inst, std::span<const double> utilities) {
  if (utilities.size() != inst.model.num_states()) {
    throw InputError("allocation has " + std::to_string(utilities.size()) + " entries for " +
                     std::to_string(inst.model.num_states()) + " states");
  }
  Evaluation e;
  e.rewards = defender_rewards(inst.profile, utilities);
  e.policy = derive_policy(inst.model, utilities, inst.profile);
  e.cost = expected_cost(inst.model, e.policy, e.rewards, inst.problem.horizon);
  e.reach = reach_probability(inst.model, e.policy, inst.problem.horizon);
  return e;
}

std::string evaluate_report_json(const Instance& inst, std::span<const double> utilities,
                                 const Evaluation& e) {
  ordered_json j = header(inst, "evaluate");
  j["problem"] = problem_block(inst.problem);
  j["result"] = {{"Q", e.cost.total},
                 {"reach", e.reach.total},
                 {"reach_feasible", e.reach.total <= inst.problem.lambda + 1e-6},
                 {"budget_total", std::accumulate(utilities.begin(), utilities.end(), 0.0)}};
  j["per_state"] = per_state(inst, e.cost, e.reach);
  j["allocation"] = allocation_block(inst, utilities, e.rewards);
  j["policy"] = policy_block(inst, e.policy);
  return j.dump(2) + "\n";
}

std::string simulate_report_json(const Instance& inst, std::span<const double> utilities,
                                 const MonteCarloOptions& options, const Evaluation& exact,
                                 const MonteCarloResult& mc) {
  (void)utilities;
  ordered_json j = header(inst, "simulate");
  j["problem"] = problem_block(inst.problem);
  j["paths"] = mc.paths;
  j["seed"] = options.seed;
  const auto z = [](double est, double se, double truth) {
    return se > 0.0 ? (est - truth) / se : (est == truth ? 0.0 : INFINITY);
  };
  j["cost"] = {{"estimate", mc.cost.mean},
               {"std_error", mc.cost.std_error},
               {"exact", exact.cost.total},
               {"z", z(mc.cost.mean, mc.cost.std_error, exact.cost.total)}};
  j["reach"] = {{"estimate", mc.reach.mean},
                {"std_error", mc.reach.std_error},
                {"exact", exact.reach.total},
                {"z", z(mc.reach.mean, mc.reach.std_error, exact.reach.total)}};
  if (mc.paths == 1) {
    ordered_json path;
    path["states"] = mc.first_path.states;
    ordered_json acts = ordered_json::array();
    for (ActionId a : mc.first_path.actions) acts.push_back(inst.model.action_names()[a]);
    path["actions"] = std::move(acts);
    j["trajectory"] = std::move(path);
  }
  return j.dump(2) + "\n";
}

}  // namespace decept
