#include "decept/program.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace decept {

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Cost: return "cost";
    case ConstraintKind::CostBase: return "cost_base";
    case ConstraintKind::Reach: return "reach";
    case ConstraintKind::ReachBase: return "reach_base";
    case ConstraintKind::ReachBound: return "reach_bound";
    case ConstraintKind::SlackFloor: return "slack_floor";
    case ConstraintKind::Policy: return "policy";
    case ConstraintKind::RewardLink: return "reward_link";
    case ConstraintKind::Budget: return "budget";
    case ConstraintKind::TrustRegion: return "trust_region";
  }
  return "unknown";
}

Posynomial SpProblem::objective() const {
  return cost_objective + Posynomial(Monomial(params.delta, {{slack, 1.0}}));
}

std::size_t SpProblem::count(ConstraintKind kind) const {
  auto pred = [kind](const auto& c) { return c.kind == kind; };
  return static_cast<std::size_t>(std::count_if(inequalities.begin(), inequalities.end(), pred) +
                                  std::count_if(equalities.begin(), equalities.end(), pred));
}

namespace {

class Builder {
 public:
  Builder(const MdpModel& model, const AdversaryProfile& profile, const SpParameters& params)
      : model_(model), profile_(profile), n_(model.num_states()) {
    sp_.vars = std::make_shared<VarTable>();
    sp_.params = params;
  }

  SpProblem build() {
    declare_variables();
    add_cost_constraints();
    add_reach_constraints();
    add_policy_constraints();
    add_reward_and_budget();
    return std::move(sp_);
  }

 private:
  VarId declare(std::string name, VarInfo info) {
    VarId id = sp_.vars->declare(name);
    sp_.info.push_back(info);
    return id;
  }

  static Monomial var(VarId id) { return Monomial::variable(id); }

  // With no sensitive states the reach probability is identically zero.
  bool tracks_reach(StateId s) const {
    return !model_.sensitive().empty() && !model_.is_sensitive(s);
  }

  void declare_variables() {
    const int horizon = sp_.params.horizon;
    for (StateId s = 0; s < n_; ++s) {
      sp_.utility.push_back(declare("U_" + std::to_string(s), {VarKind::Utility, s, 0, 0}));
    }
    sp_.policy.resize(n_);
    for (StateId s = 0; s < n_; ++s) {
      for (const auto& row : model_.actions_at(s)) {
        sp_.policy[s].push_back(declare(
            "pi_" + std::to_string(s) + "_" + model_.action_names().at(row.action),
            {VarKind::Policy, s, row.action, 0}));
      }
    }
    sp_.cost.resize(static_cast<std::size_t>(horizon) + 1);
    for (int t = 0; t <= horizon; ++t) {
      for (StateId s = 0; s < n_; ++s) {
        sp_.cost[t].push_back(declare("Q_" + std::to_string(t) + "_" + std::to_string(s),
                                      {VarKind::Cost, s, 0, t}));
      }
    }
    sp_.reach.resize(static_cast<std::size_t>(horizon) + 1);
    for (int t = 0; t <= horizon; ++t) {
      for (StateId s = 0; s < n_; ++s) {
        if (!tracks_reach(s)) {
          sp_.reach[t].emplace_back(std::nullopt);
        } else {
          sp_.reach[t].emplace_back(declare("P_" + std::to_string(t) + "_" + std::to_string(s),
                                            {VarKind::Reach, s, 0, t}));
        }
      }
    }
    for (StateId s = 0; s < n_; ++s) {
      sp_.reward.push_back(declare("R_" + std::to_string(s), {VarKind::Reward, s, 0, 0}));
    }
    sp_.slack = declare("tau", {VarKind::Slack, 0, 0, 0});
  }

  void add_cost_constraints() {
    const int horizon = sp_.params.horizon;
    for (int t = 0; t < horizon; ++t) {
      for (StateId s = 0; s < n_; ++s) {
        Posynomial rhs(var(sp_.reward[s]));
        const auto rows = model_.actions_at(s);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          for (const auto& tr : rows[k].outcomes) {
            rhs.add(Monomial(tr.prob, {{sp_.policy[s][k], 1.0}, {sp_.cost[t + 1][tr.next], 1.0}}));
          }
        }
        sp_.inequalities.push_back({std::move(rhs), var(sp_.cost[t][s]), ConstraintKind::Cost,
                                    "cost t=" + std::to_string(t) + " s=" + std::to_string(s)});
      }
    }
    for (StateId s = 0; s < n_; ++s) {
      sp_.inequalities.push_back({Posynomial(var(sp_.reward[s])), var(sp_.cost[horizon][s]),
                                  ConstraintKind::CostBase, "cost_base s=" + std::to_string(s)});
    }
    Posynomial objective;
    for (StateId s = 0; s < n_; ++s) {
      const double nu = model_.initial()[s];
      if (nu > 0.0) objective.add(Monomial(nu, {{sp_.cost[0][s], 1.0}}));
    }
    if (objective.empty()) throw InvalidModel("initial distribution has no support");
    sp_.cost_objective = std::move(objective);
  }

  void add_reach_constraints() {
    const auto& p = sp_.params;
    for (int t = 0; t < p.horizon; ++t) {
      for (StateId s = 0; s < n_; ++s) {
        if (!tracks_reach(s)) continue;
        Posynomial rhs;
        const auto rows = model_.actions_at(s);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          double pinned = 0.0;  // mass that lands in S_s, where P = 1
          for (const auto& tr : rows[k].outcomes) {
            if (model_.is_sensitive(tr.next)) {
              pinned += tr.prob;
            } else {
              rhs.add(Monomial(tr.prob, {{sp_.policy[s][k], 1.0},
                                         {*sp_.reach[t + 1][tr.next], 1.0}}));
            }
          }
          if (pinned > 0.0) rhs.add(Monomial(pinned, {{sp_.policy[s][k], 1.0}}));
        }
        sp_.inequalities.push_back({std::move(rhs), var(*sp_.reach[t][s]), ConstraintKind::Reach,
                                    "reach t=" + std::to_string(t) + " s=" + std::to_string(s)});
      }
    }
    for (StateId s = 0; s < n_; ++s) {
      if (!tracks_reach(s)) continue;
      sp_.inequalities.push_back({Posynomial(Monomial::constant(p.reach_floor)),
                                  var(*sp_.reach[p.horizon][s]), ConstraintKind::ReachBase,
                                  "reach_base s=" + std::to_string(s)});
    }
    double pinned_mass = 0.0;
    for (StateId s : model_.sensitive()) pinned_mass += model_.initial()[s];
    for (int t = 0; t <= p.horizon; ++t) {
      Posynomial lhs;
      for (StateId s = 0; s < n_; ++s) {
        const double nu = model_.initial()[s];
        if (nu > 0.0 && tracks_reach(s)) {
          lhs.add(Monomial(nu, {{*sp_.reach[t][s], 1.0}}));
        }
      }
      if (pinned_mass > 0.0) lhs.add(Monomial::constant(pinned_mass));
      if (lhs.empty()) continue;
      sp_.inequalities.push_back({std::move(lhs), Monomial(p.lambda, {{sp_.slack, 1.0}}),
                                  ConstraintKind::ReachBound,
                                  "reach_bound t=" + std::to_string(t)});
    }
    sp_.inequalities.push_back({Posynomial(Monomial::constant(1.0)), var(sp_.slack),
                                ConstraintKind::SlackFloor, "slack_floor"});
  }

  // sum_{s'} f(U(s')) w(T(s,a,s')) as a posynomial in U.
  Posynomial perceived(const ActionRow& row) const {
    const double power = profile_.alpha * profile_.reward_exponent;
    Posynomial p;
    for (const auto& tr : row.outcomes) {
      const double w = weight_probability(tr.prob, profile_.gamma);
      if (w <= 0.0) continue;
      const double c = std::pow(profile_.coefficients[tr.next], profile_.alpha);
      p.add(Monomial(c * w, {{sp_.utility[tr.next], power}}));
    }
    return p;
  }

  void add_policy_constraints() {
    for (StateId s = 0; s < n_; ++s) {
      const auto rows = model_.actions_at(s);
      std::vector<Posynomial> numerators;
      Posynomial denominator;
      for (const auto& row : rows) {
        numerators.push_back(perceived(row));
        denominator = denominator + numerators.back();
      }
      denominator = simplify(denominator);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        sp_.equalities.push_back(
            {denominator * var(sp_.policy[s][k]), numerators[k], ConstraintKind::Policy,
             "policy s=" + std::to_string(s) + " a=" +
                 model_.action_names().at(rows[k].action)});
      }
    }
  }

  void add_reward_and_budget() {
    for (StateId s = 0; s < n_; ++s) {
      sp_.equalities.push_back(
          {Posynomial(var(sp_.reward[s])),
           Posynomial(Monomial(profile_.coefficients[s],
                               {{sp_.utility[s], profile_.reward_exponent}})),
           ConstraintKind::RewardLink, "reward s=" + std::to_string(s)});
    }
    Posynomial total;
    for (StateId s = 0; s < n_; ++s) total.add(var(sp_.utility[s]));
    sp_.equalities.push_back({std::move(total), Posynomial(Monomial::constant(sp_.params.budget)),
                              ConstraintKind::Budget, "budget"});
  }

  const MdpModel& model_;
  const AdversaryProfile& profile_;
  std::size_t n_;
  SpProblem sp_;
};

}  // namespace

SpProblem build_sp(const MdpModel& model, const AdversaryProfile& profile,
                   const SpParameters& params) {
  if (auto report = validate(model); !report.ok()) {
    throw InvalidModel("invalid model: " + report.findings.front());
  }
  profile.check(model.num_states());
  if (params.horizon < 0) throw InvalidModel("horizon must be nonnegative");
  if (!(params.budget > 0.0)) throw InvalidModel("budget must be positive");
  if (!(params.lambda > 0.0 && params.lambda <= 1.0)) throw InvalidModel("lambda must lie in (0,1]");
  if (!(params.delta > 0.0)) throw InvalidModel("penalty delta must be positive");
  if (!(params.reach_floor > 0.0 && params.reach_floor < 1.0)) {
    throw InvalidModel("reach floor must lie in (0,1)");
  }
  return Builder(model, profile, params).build();
}

GpProblem condense(const SpProblem& sp, const Assignment& point) {
  GpProblem gp;
  gp.vars = sp.vars;
  gp.objective = sp.objective();
  gp.inequalities.reserve(sp.inequalities.size());
  for (const auto& c : sp.inequalities) {
    gp.inequalities.push_back({c.lhs / c.rhs, c.kind, c.label});
  }
  gp.equalities.reserve(sp.equalities.size());
  for (const auto& e : sp.equalities) {
    const Monomial lhs = monomial_approximation(e.lhs, point);
    const Monomial rhs = monomial_approximation(e.rhs, point);
    gp.equalities.push_back({lhs / rhs, e.kind, e.label});
  }
  return gp;
}

GpProblem trust_region(GpProblem gp, const Assignment& point, double eta,
                       std::span<const VarId> only) {
  if (!(eta > 1.0)) throw DomainError("trust-region factor must exceed 1");
  if (std::isinf(eta)) return gp;
  auto add = [&](VarId id) {
    const double x0 = point.at(id);
    const std::string& name = gp.vars->name(id);
    gp.inequalities.push_back(
        {Posynomial(Monomial(1.0 / (eta * x0), {{id, 1.0}})), ConstraintKind::TrustRegion,
         "trust_upper " + name});
    gp.inequalities.push_back(
        {Posynomial(Monomial(x0 / eta, {{id, -1.0}})), ConstraintKind::TrustRegion,
         "trust_lower " + name});
  };
  if (only.empty()) {
    for (std::uint32_t i = 0; i < gp.vars->size(); ++i) add(VarId{i});
  } else {
    for (VarId id : only) add(id);
  }
  return gp;
}

std::vector<std::string> lint(const GpProblem& gp) {
  std::vector<std::string> issues;
  const std::size_t nvars = gp.vars ? gp.vars->size() : 0;
  auto check_monomial = [&](const Monomial& m, const std::string& where) {
    if (!(m.coefficient() > 0.0) || !std::isfinite(m.coefficient())) {
      issues.push_back(where + ": nonpositive coefficient");
    }
    for (const auto& [id, a] : m.exponents()) {
      if (id.index >= nvars) issues.push_back(where + ": unknown variable");
      if (!std::isfinite(a)) issues.push_back(where + ": non-finite exponent");
    }
  };
  if (gp.objective.empty()) issues.push_back("objective is empty");
  for (const auto& m : gp.objective.terms()) check_monomial(m, "objective");
  for (const auto& c : gp.inequalities) {
    if (c.lhs.empty()) issues.push_back(c.label + ": empty posynomial");
    for (const auto& m : c.lhs.terms()) check_monomial(m, c.label);
  }
  for (const auto& e : gp.equalities) check_monomial(e.lhs, e.label);
  return issues;
}

ResidualSummary residuals(const SpProblem& sp, const Assignment& point) {
  ResidualSummary r;
  for (const auto& c : sp.inequalities) {
    const double v = evaluate(c.lhs, point) / c.rhs.evaluate(point) - 1.0;
    if (v > r.max_inequality) {
      r.max_inequality = v;
      if (v >= r.max_equality) r.worst_label = c.label;
    }
  }
  for (const auto& e : sp.equalities) {
    const double v = std::abs(evaluate(e.lhs, point) / evaluate(e.rhs, point) - 1.0);
    if (v > r.max_equality) {
      r.max_equality = v;
      if (v >= r.max_inequality) r.worst_label = e.label;
    }
  }
  return r;
}

ResidualSummary residuals(const GpProblem& gp, const Assignment& point) {
  ResidualSummary r;
  for (const auto& c : gp.inequalities) {
    const double v = evaluate(c.lhs, point) - 1.0;
    if (v > r.max_inequality) {
      r.max_inequality = v;
      if (v >= r.max_equality) r.worst_label = c.label;
    }
  }
  for (const auto& e : gp.equalities) {
    const double v = std::abs(e.lhs.evaluate(point) - 1.0);
    if (v > r.max_equality) {
      r.max_equality = v;
      if (v >= r.max_inequality) r.worst_label = e.label;
    }
  }
  return r;
}

std::string to_text(const SpProblem& sp) {
  std::ostringstream os;
  os << "minimize " << to_text(SignomialExpr(sp.objective()), *sp.vars) << '\n';
  for (const auto& c : sp.inequalities) {
    os << to_string(c.kind) << ": " << to_text(SignomialExpr(c.lhs), *sp.vars)
       << " <= " << to_text(c.rhs, *sp.vars) << '\n';
  }
  for (const auto& e : sp.equalities) {
    os << to_string(e.kind) << ": " << to_text(SignomialExpr(e.lhs), *sp.vars)
       << " == " << to_text(SignomialExpr(e.rhs), *sp.vars) << '\n';
  }
  return os.str();
}

std::string to_text(const GpProblem& gp) {
  std::ostringstream os;
  os << "minimize " << to_text(SignomialExpr(gp.objective), *gp.vars) << '\n';
  for (const auto& c : gp.inequalities) {
    os << to_string(c.kind) << ": " << to_text(SignomialExpr(c.lhs), *gp.vars) << " <= 1\n";
  }
  for (const auto& e : gp.equalities) {
    os << to_string(e.kind) << ": " << to_text(e.lhs, *gp.vars) << " == 1\n";
  }
  return os.str();
}

}  // namespace decept
