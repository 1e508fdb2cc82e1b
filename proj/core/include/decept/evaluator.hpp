#pragma once

// Exact finite-horizon evaluation of a fixed policy: expected accumulated
// defender cost and first-hit reachability of the sensitive states. Monte
// Carlo rollouts serve as an independent check.

#include <cstdint>
#include <span>
#include <vector>

#include "decept/mdp.hpp"

namespace decept {

/// Q[t][s] for t = 0..H. Q[H] = R.
struct CostTable {
  std::vector<std::vector<double>> q;
  double total = 0.0;
  int horizon() const noexcept { return static_cast<int>(q.size()) - 1; }
};

/// P[t][s] for t = 0..H; sensitive states are pinned to 1.
struct ReachTable {
  std::vector<std::vector<double>> p;
  double total = 0.0;
};

CostTable expected_cost(const MdpModel& model, const Policy& policy,
                        std::span<const double> rewards, int horizon);

/// `terminal` is the value of P_H for non-sensitive states: 0 for the exact
/// probability, a small positive floor when seeding the program.
ReachTable reach_probability(const MdpModel& model, const Policy& policy, int horizon,
                             double terminal = 0.0);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct MonteCarloResult {
  Estimate cost;
  Estimate reach;
  std::uint64_t paths = 0;
  /// Filled only when a single path was sampled.
  Path first_path;
};

struct MonteCarloOptions {
  std::uint64_t paths = 100000;
  std::uint64_t seed = 20181001;
  unsigned workers = 1;
};

/// Rollouts of length `horizon` drawn from nu, pi and T. Paths are split into
/// fixed chunks with their own seeded streams, so results do not depend on
/// the worker count.
MonteCarloResult monte_carlo(const MdpModel& model, const Policy& policy,
                             std::span<const double> rewards, int horizon,
                             const MonteCarloOptions& options);

}  // namespace decept
