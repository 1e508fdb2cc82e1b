#pragma once

// Prospect-theory adversary: probability weighting, the defender's reward
// law, the adversary's perceived rewards and the resulting stochastic policy.

#include <span>
#include <vector>

#include "decept/mdp.hpp"

namespace decept {

inline constexpr double kDefaultMinCoefficient = 1e-3;

/// Defender reward R(s) = c_s * U(s)^e. The adversary perceives R(s)^alpha.
struct AdversaryProfile {
  double gamma = 0.6;
  double alpha = 0.88;
  double reward_exponent = -1.0;
  std::vector<double> coefficients;  // c_s, one per state
  double min_coefficient = kDefaultMinCoefficient;

  /// Builds a profile whose coefficients are the raw counts floored at
  /// `min_coefficient`.
  static AdversaryProfile from_counts(std::span<const double> counts, double gamma, double alpha,
                                      double reward_exponent,
                                      double min_coefficient = kDefaultMinCoefficient);

  /// Throws InvalidModel when parameters are out of range.
  void check(std::size_t num_states) const;
};

struct Allocation {
  std::vector<double> utilities;
  double budget = 0.0;

  static Allocation uniform(std::size_t num_states, double budget);
  double total() const;
};

/// w(p) = p^g / (p^g + (1-p)^g)^(1/g).
double weight_probability(double p, double gamma);

double defender_reward(double utility, double coefficient, double exponent);

/// (c_s U^e)^alpha for state s.
double perceived_reward(double utility, const AdversaryProfile& profile, StateId s);

std::vector<double> defender_rewards(const AdversaryProfile& profile,
                                     std::span<const double> utilities);

/// sum_{s'} R(s') T(s,a,s').
double expected_immediate_reward(const MdpModel& model, std::span<const double> rewards,
                                 StateId s, ActionId a);

/// sum_{s'} f(U(s')) w(T(s,a,s')) over successors with T > 0.
double perceived_expected_reward(const MdpModel& model, std::span<const double> utilities,
                                 const AdversaryProfile& profile, StateId s, ActionId a);

/// pi(s,a) proportional to the perceived expected reward among actions
/// available at s.
Policy derive_policy(const MdpModel& model, std::span<const double> utilities,
                     const AdversaryProfile& profile);

}  // namespace decept
