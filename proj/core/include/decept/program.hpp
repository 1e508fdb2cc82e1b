#pragma once

// The deception signomial program and its condensation into geometric
// programs.
//
// Decision quantities become GP variables: utilities U(s), policy entries
// pi(s,a), costs Q_t(s), reach probabilities P_t(s) for non-sensitive s,
// rewards R(s) and the reach slack tau. Transition weights, nu and the pinned
// reach values of sensitive states are folded into coefficients.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decept/adversary.hpp"
#include "decept/mdp.hpp"
#include "decept/signomial.hpp"

namespace decept {

/// P_H(s) for non-sensitive states; GP variables cannot be zero.
inline constexpr double kReachFloor = 1e-6;

enum class VarKind { Utility, Policy, Cost, Reach, Reward, Slack };

struct VarInfo {
  VarKind kind = VarKind::Utility;
  StateId state = 0;
  ActionId action = 0;
  int time = 0;
};

enum class ConstraintKind {
  Cost,         // Q_t(s) >= R(s) + sum pi T Q_{t+1}
  CostBase,     // Q_H(s) >= R(s)
  Reach,        // P_t(s) >= sum pi T P_{t+1}
  ReachBase,    // P_H(s) >= floor
  ReachBound,   // sum nu P_t <= lambda tau
  SlackFloor,   // tau >= 1
  Policy,       // pi(s,a) * sum_a' r^h_a' = r^h_a
  RewardLink,   // R(s) = c_s U(s)^e
  Budget,       // sum U = D
  TrustRegion,
};

const char* to_string(ConstraintKind kind);

/// lhs <= rhs
struct SpInequality {
  Posynomial lhs;
  Monomial rhs;
  ConstraintKind kind;
  std::string label;
};

/// lhs == rhs
struct SpEquality {
  Posynomial lhs;
  Posynomial rhs;
  ConstraintKind kind;
  std::string label;
};

struct SpParameters {
  int horizon = 20;
  double budget = 400.0;
  double lambda = 0.3;
  double delta = 1.0;
  double reach_floor = kReachFloor;
};

struct SpProblem {
  std::shared_ptr<VarTable> vars;
  std::vector<VarInfo> info;  // indexed by VarId
  SpParameters params;

  /// sum_s nu(s) Q_0(s)
  Posynomial cost_objective;
  std::vector<SpInequality> inequalities;
  std::vector<SpEquality> equalities;

  std::vector<VarId> utility;                          // [s]
  std::vector<VarId> reward;                           // [s]
  std::vector<std::vector<VarId>> policy;              // [s][row index]
  std::vector<std::vector<VarId>> cost;                // [t][s]
  std::vector<std::vector<std::optional<VarId>>> reach;  // [t][s]; empty for sensitive s, or everywhere if none is sensitive
  VarId slack{};

  /// cost_objective + delta * tau
  Posynomial objective() const;
  std::size_t count(ConstraintKind kind) const;
};

/// Throws InvalidModel on an invalid model or out-of-range parameters.
SpProblem build_sp(const MdpModel& model, const AdversaryProfile& profile,
                   const SpParameters& params);

struct GpInequality {
  Posynomial lhs;  // lhs <= 1
  ConstraintKind kind;
  std::string label;
};

struct GpEquality {
  Monomial lhs;  // lhs == 1
  ConstraintKind kind;
  std::string label;
};

struct GpProblem {
  std::shared_ptr<const VarTable> vars;
  Posynomial objective;
  std::vector<GpInequality> inequalities;
  std::vector<GpEquality> equalities;
};

/// Replaces both sides of every equality by their monomial approximation at
/// `point` and divides every inequality through by its right-hand side.
GpProblem condense(const SpProblem& sp, const Assignment& point);

/// Adds x <= eta * x0 and x0 <= eta * x for every listed variable (all
/// variables of the table when `only` is empty).
GpProblem trust_region(GpProblem gp, const Assignment& point, double eta,
                       std::span<const VarId> only = {});

/// Structural problems: empty posynomials, non-monomial equalities, unknown
/// variables. Empty result means the GP is well formed.
std::vector<std::string> lint(const GpProblem& gp);

struct ResidualSummary {
  double max_inequality = 0.0;  // max over lhs/rhs - 1, clipped at 0
  double max_equality = 0.0;    // max |lhs/rhs - 1|
  std::string worst_label;
};

ResidualSummary residuals(const SpProblem& sp, const Assignment& point);
ResidualSummary residuals(const GpProblem& gp, const Assignment& point);

/// Canonical text dump, one constraint per line.
std::string to_text(const SpProblem& sp);
std::string to_text(const GpProblem& gp);

}  // namespace decept
