#pragma once

// Sequential convex programming for the deception program: normalize the
// allocation, lift it to a consistent point of the signomial program,
// condense around that point, solve the geometric program and repeat.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decept/adversary.hpp"
#include "decept/evaluator.hpp"
#include "decept/gp_solver.hpp"
#include "decept/program.hpp"

namespace decept {

struct ScpSettings {
  double epsilon = 1e-4;
  double delta0 = 1.0;
  double mu_delta = 2.0;
  double delta_max = 1e8;
  double eta = 1.5;
  int max_outer_iterations = 100;
  double reach_floor = kReachFloor;
  /// Reject a step whose merit q + delta*max(1, reach/lambda) is worse than
  /// the current one and retry with a smaller trust region.
  bool merit_test = true;
  SolverSettings solver;

  void check() const;
};

/// An allocation together with everything the program needs at that point.
struct LiftedPoint {
  Allocation allocation;
  Policy policy;
  std::vector<double> rewards;
  CostTable cost;
  ReachTable reach;          // exact first-hit probabilities
  ReachTable reach_floored;  // with P_H = reach floor, as in the program
  double tau = 1.0;          // smallest slack admitted by reach_floored
  Assignment assignment;

  double q() const noexcept { return cost.total; }
  double reach_total() const noexcept { return reach.total; }
};

LiftedPoint lift_allocation(const SpProblem& sp, const MdpModel& model,
                            const AdversaryProfile& profile, std::span<const double> utilities);

/// The uniform allocation lifted into the program.
LiftedPoint initial_point(const SpProblem& sp, const MdpModel& model,
                          const AdversaryProfile& profile);

/// Rescales positive utilities so they sum to `budget`.
Allocation normalize_allocation(std::span<const double> utilities, double budget);

struct ScpIteration {
  int index = 0;
  bool accepted = false;
  GpStatus gp_status = GpStatus::Optimal;
  double q = 0.0;       // evaluator cost at the current iterate
  double reach = 0.0;   // evaluator reach probability at the current iterate
  double tau = 1.0;
  double delta = 0.0;   // penalty used for this GP
  double eta = 0.0;     // trust-region factor used for this GP
  double merit = 0.0;   // q + delta * max(1, reach / lambda)
  double max_step_ratio = 1.0;
  double gp_objective = 0.0;
  double gp_cost = 0.0;        // sum nu Q_0 carried by the GP solution
  double gp_cost_check = 0.0;  // recursion on the GP's own (U, pi)
  int newton_steps = 0;
  double wall_seconds = 0.0;
};

struct SolveReport {
  ScpSettings settings;
  SpParameters problem;
  std::vector<ScpIteration> iterations;
  Allocation allocation;
  Policy policy;
  std::vector<double> rewards;
  CostTable cost;
  ReachTable reach;
  double q = 0.0;
  double reach_probability = 0.0;
  double tau = 1.0;
  double q_uniform = 0.0;
  double reach_uniform = 0.0;
  bool converged = false;
  std::string message;
  /// Largest relative slack of the cost and reach recursions in the last
  /// accepted GP solution.
  double cost_tightness = 0.0;
  double reach_tightness = 0.0;
  double solver_seconds = 0.0;
  double total_seconds = 0.0;
};

using IterationCallback = std::function<void(const ScpIteration&)>;

SolveReport run(const MdpModel& model, const AdversaryProfile& profile, const SpParameters& problem,
                const ScpSettings& settings = {}, const IterationCallback& on_iteration = {});

struct BruteForceResult {
  bool feasible = false;
  Allocation allocation;
  double q = 0.0;
  double reach = 0.0;
  std::size_t evaluated = 0;
};

/// Exhaustive search over the allocation simplex on a grid of the given
/// resolution (fraction of the budget). Only for models with at most 3 states.
BruteForceResult brute_force_allocation(const MdpModel& model, const AdversaryProfile& profile,
                                        int horizon, double budget, double lambda,
                                        double resolution);

}  // namespace decept
