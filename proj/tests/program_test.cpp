#include <doctest.h>

#include <cmath>

#include "decept/instance.hpp"
#include "decept/program.hpp"
#include "decept/scp.hpp"
#include "support.hpp"

using namespace decept;

namespace {

MdpModel single_state() {
  std::vector<std::vector<ActionRow>> rows(1);
  rows[0] = {ActionRow{0, {{0, 1.0}}}};
  return MdpModel({"stay"}, std::move(rows), {1.0}, {});
}

AdversaryProfile unit_profile(std::size_t n) {
  AdversaryProfile p;
  p.coefficients.assign(n, 1.0);
  return p;
}

std::size_t count_kind(const SpProblem& sp, VarKind kind) {
  std::size_t n = 0;
  for (const auto& i : sp.info) n += i.kind == kind;
  return n;
}

}  // namespace

TEST_CASE("degenerate single-state program") {
  const SpProblem sp = build_sp(single_state(), unit_profile(1), {.horizon = 1});
  CHECK(sp.vars->size() == 6);
  for (const char* name : {"U_0", "pi_0_stay", "Q_0_0", "Q_1_0", "R_0", "tau"}) {
    CHECK(sp.vars->find(name).has_value());
  }
  REQUIRE(sp.count(ConstraintKind::Policy) == 1);

  Assignment a(sp.vars);
  a.set(sp.utility[0], 3.0);
  for (double pi : {0.2, 1.0, 4.0}) {
    a.set(sp.policy[0][0], pi);
    for (const auto& e : sp.equalities) {
      if (e.kind != ConstraintKind::Policy) continue;
      const bool holds = std::abs(evaluate(e.lhs, a) - evaluate(e.rhs, a)) < 1e-12;
      CHECK(holds == (pi == 1.0));
    }
  }
}

TEST_CASE("policy equalities reproduce the two-action example") {
  const MdpModel m = test::fig1_model();
  const SpProblem sp = build_sp(m, test::fig1_profile(), {.horizon = 1, .budget = 13.0});
  Assignment a(sp.vars);
  const auto& u = test::fig1_utilities();
  for (StateId s = 0; s < 5; ++s) a.set(sp.utility[s], u[s]);
  const double pa = test::oracle::fig1_pi_a;
  a.set(sp.policy[0][0], pa);
  a.set(sp.policy[0][1], 1.0 - pa);
  for (StateId s = 1; s < 5; ++s) a.set(sp.policy[s][0], 1.0);
  int checked = 0;
  for (const auto& e : sp.equalities) {
    if (e.kind != ConstraintKind::Policy) continue;
    const double l = evaluate(e.lhs, a), r = evaluate(e.rhs, a);
    CHECK(std::abs(l / r - 1.0) < 1e-12);
    ++checked;
  }
  CHECK(checked == 6);
}

TEST_CASE("lifted point satisfies the program") {
  const MdpModel m = test::fig1_model();
  const SpProblem sp = build_sp(m, test::fig1_profile(), {.horizon = 3, .budget = 13.0});
  const LiftedPoint lp = lift_allocation(sp, m, test::fig1_profile(), test::fig1_utilities());
  const auto r = residuals(sp, lp.assignment);
  CHECK(r.max_equality < 1e-12);
  CHECK(r.max_inequality < 1e-12);
}

TEST_CASE("variable count on the bundled grid") {
  const Instance inst = load_instance(DECEPT_DATA_DIR "/sf_grid_synthetic.json");
  const SpProblem sp = build_sp(inst.model, inst.profile, inst.problem);
  const std::size_t n = 35, h = 20, sa = inst.model.num_state_actions();
  CHECK(sa == 116);
  CHECK(sp.vars->size() == n + sa + n * (h + 1) + (n - 3) * (h + 1) + n + 1);
  CHECK(sp.vars->size() == 1594);
  CHECK(count_kind(sp, VarKind::Utility) == n);
  CHECK(count_kind(sp, VarKind::Policy) == sa);
  CHECK(count_kind(sp, VarKind::Cost) == n * (h + 1));
  CHECK(count_kind(sp, VarKind::Reach) == (n - 3) * (h + 1));
  CHECK(count_kind(sp, VarKind::Slack) == 1);
  CHECK(sp.count(ConstraintKind::Cost) == n * h);
  CHECK(sp.count(ConstraintKind::Reach) == (n - 3) * h);
  CHECK(sp.count(ConstraintKind::ReachBound) == h + 1);
  CHECK(sp.count(ConstraintKind::Policy) == sa);
  CHECK(sp.count(ConstraintKind::Budget) == 1);
}

TEST_CASE("build_sp rejects bad parameters") {
  const MdpModel m = single_state();
  CHECK_THROWS_AS(build_sp(m, unit_profile(1), {.horizon = -1}), InvalidModel);
  CHECK_THROWS_AS(build_sp(m, unit_profile(1), {.budget = 0.0}), InvalidModel);
  CHECK_THROWS_AS(build_sp(m, unit_profile(1), {.lambda = 1.5}), InvalidModel);
  CHECK_THROWS_AS(build_sp(m, unit_profile(2), {}), InvalidModel);
}

TEST_CASE("condense") {
  auto vars = std::make_shared<VarTable>();
  const VarId x = vars->intern("x"), y = vars->intern("y");
  SpProblem sp;
  sp.vars = vars;
  sp.info.resize(2);
  sp.slack = x;
  sp.cost_objective = Posynomial(Monomial::variable(y));
  sp.equalities.push_back({Posynomial(Monomial::variable(x)) + Monomial::variable(y),
                           Posynomial(Monomial(2.0)), ConstraintKind::Budget, "budget"});
  sp.equalities.push_back({Posynomial(Monomial(4.0, {{x, 2.0}})), Posynomial(Monomial(2.0, {{y, 1.0}})),
                           ConstraintKind::RewardLink, "mono"});
  sp.inequalities.push_back({Posynomial(Monomial::variable(x)), Monomial(3.0, {{y, 1.0}}),
                             ConstraintKind::Cost, "ineq"});
  Assignment at(vars);
  at.set(x, 1.0);
  at.set(y, 1.0);
  const GpProblem gp = condense(sp, at);
  CHECK(lint(gp).empty());

  REQUIRE(gp.equalities.size() == 2);
  const Monomial& budget = gp.equalities[0].lhs;
  CHECK(budget.coefficient() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(budget.exponent_of(x) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(budget.exponent_of(y) == doctest::Approx(0.5).epsilon(1e-14));

  const Monomial& mono = gp.equalities[1].lhs;
  CHECK(mono.coefficient() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mono.exponent_of(x) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mono.exponent_of(y) == doctest::Approx(-1.0).epsilon(1e-14));

  REQUIRE(gp.inequalities.size() == 1);
  CHECK(to_text(SignomialExpr(gp.inequalities[0].lhs), *vars) == "+0.3333333333333333 * x^1 * y^-1");
}

TEST_CASE("trust region") {
  auto vars = std::make_shared<VarTable>();
  const VarId x = vars->intern("x");
  GpProblem gp;
  gp.vars = vars;
  gp.objective = Posynomial(Monomial::variable(x));
  Assignment at(vars);
  at.set(x, 2.0);
  const GpProblem tr = trust_region(gp, at, 1.5);
  REQUIRE(tr.inequalities.size() == 2);
  auto holds = [&](double v) {
    Assignment p(vars);
    p.set(x, v);
    return residuals(tr, p).max_inequality <= 1e-12;
  };
  CHECK(holds(4.0 / 3.0));
  CHECK(holds(3.0));
  CHECK(holds(2.0));
  CHECK_FALSE(holds(4.0 / 3.0 * 0.999));
  CHECK_FALSE(holds(3.0 * 1.001));
  CHECK(trust_region(gp, at, INFINITY).inequalities.empty());
  CHECK_THROWS_AS(trust_region(gp, at, 1.0), DomainError);
}

TEST_CASE("lint flags malformed programs") {
  auto vars = std::make_shared<VarTable>();
  const VarId x = vars->intern("x");
  GpProblem gp;
  gp.vars = vars;
  CHECK_FALSE(lint(gp).empty());
  gp.objective = Posynomial(Monomial::variable(x));
  CHECK(lint(gp).empty());
  gp.inequalities.push_back({Posynomial(), ConstraintKind::Cost, "empty"});
  CHECK_FALSE(lint(gp).empty());
  gp.inequalities.clear();
  gp.equalities.push_back({Monomial(1.0, {{VarId{7}, 1.0}}), ConstraintKind::Budget, "stray"});
  CHECK_FALSE(lint(gp).empty());
}

TEST_CASE("program text is stable") {
  const SpProblem sp = build_sp(single_state(), unit_profile(1), {.horizon = 1, .budget = 2.0});
  const std::string text = to_text(sp);
  CHECK(text == to_text(build_sp(single_state(), unit_profile(1), {.horizon = 1, .budget = 2.0})));
  CHECK(text.find("minimize +1 * Q_0_0^1 +1 * tau^1") == 0);
  CHECK(text.find("budget: +1 * U_0^1 == +2") != std::string::npos);
}
