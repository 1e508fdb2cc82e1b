#include "decept/adversary.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace decept {

AdversaryProfile AdversaryProfile::from_counts(std::span<const double> counts, double gamma,
                                               double alpha, double reward_exponent,
                                               double min_coefficient) {
  AdversaryProfile p;
  p.gamma = gamma;
  p.alpha = alpha;
  p.reward_exponent = reward_exponent;
  p.min_coefficient = min_coefficient;
  p.coefficients.reserve(counts.size());
  for (double c : counts) p.coefficients.push_back(std::max(c, min_coefficient));
  return p;
}

void AdversaryProfile::check(std::size_t num_states) const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidModel("gamma must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidModel("alpha must be positive");
  if (!std::isfinite(reward_exponent)) throw InvalidModel("reward exponent must be finite");
  if (!(min_coefficient > 0.0)) throw InvalidModel("minimum coefficient must be positive");
  if (coefficients.size() != num_states) {
    throw InvalidModel("profile has " + std::to_string(coefficients.size()) +
                       " reward coefficients for " + std::to_string(num_states) + " states");
  }
  for (std::size_t s = 0; s < coefficients.size(); ++s) {
    if (!(coefficients[s] >= min_coefficient) || !std::isfinite(coefficients[s])) {
      throw InvalidModel("reward coefficient of state " + std::to_string(s) +
                         " is below the floor");
    }
  }
}

Allocation Allocation::uniform(std::size_t num_states, double budget) {
  return Allocation{std::vector<double>(num_states, budget / static_cast<double>(num_states)),
                    budget};
}

double Allocation::total() const {
  return std::accumulate(utilities.begin(), utilities.end(), 0.0);
}

double weight_probability(double p, double gamma) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0,1]");
  if (!(gamma > 0.0)) throw DomainError("weighting exponent must be positive");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double pg = std::pow(p, gamma);
  const double qg = std::pow(1.0 - p, gamma);
  return pg / std::pow(pg + qg, 1.0 / gamma);
}

double defender_reward(double utility, double coefficient, double exponent) {
  if (!(utility > 0.0)) throw DomainError("utility must be strictly positive");
  return coefficient * std::pow(utility, exponent);
}

double perceived_reward(double utility, const AdversaryProfile& profile, StateId s) {
  return std::pow(defender_reward(utility, profile.coefficients.at(s), profile.reward_exponent),
                  profile.alpha);
}

std::vector<double> defender_rewards(const AdversaryProfile& profile,
                                     std::span<const double> utilities) {
  std::vector<double> r(utilities.size());
  for (std::size_t s = 0; s < utilities.size(); ++s) {
    r[s] = defender_reward(utilities[s], profile.coefficients.at(s), profile.reward_exponent);
  }
  return r;
}

namespace {

const ActionRow& require_action(const MdpModel& model, StateId s, ActionId a) {
  const ActionRow* row = model.find_action(s, a);
  if (row == nullptr) {
    throw DomainError("action " + std::to_string(a) + " is not available at state " +
                      std::to_string(s));
  }
  return *row;
}

double perceived_row_reward(const ActionRow& row, std::span<const double> utilities,
                            const AdversaryProfile& profile) {
  double acc = 0.0;
  for (const auto& t : row.outcomes) {
    if (t.prob <= 0.0) continue;
    acc += perceived_reward(utilities[t.next], profile, t.next) *
           weight_probability(t.prob, profile.gamma);
  }
  return acc;
}

}  // namespace

double expected_immediate_reward(const MdpModel& model, std::span<const double> rewards,
                                 StateId s, ActionId a) {
  double acc = 0.0;
  for (const auto& t : require_action(model, s, a).outcomes) acc += rewards[t.next] * t.prob;
  return acc;
}

double perceived_expected_reward(const MdpModel& model, std::span<const double> utilities,
                                 const AdversaryProfile& profile, StateId s, ActionId a) {
  return perceived_row_reward(require_action(model, s, a), utilities, profile);
}

Policy derive_policy(const MdpModel& model, std::span<const double> utilities,
                     const AdversaryProfile& profile) {
  if (utilities.size() != model.num_states()) {
    throw DomainError("allocation size does not match the model");
  }
  std::vector<std::vector<double>> probs(model.num_states());
  for (StateId s = 0; s < model.num_states(); ++s) {
    const auto rows = model.actions_at(s);
    auto& p = probs[s];
    p.reserve(rows.size());
    double total = 0.0;
    for (const auto& row : rows) {
      p.push_back(perceived_row_reward(row, utilities, profile));
      total += p.back();
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw DomainError("perceived rewards at state " + std::to_string(s) +
                        " do not admit a policy");
    }
    for (double& v : p) v /= total;
  }
  return Policy(std::move(probs));
}

}  // namespace decept
