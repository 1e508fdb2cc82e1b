#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "decept/adversary.hpp"
#include "decept/evaluator.hpp"
#include "decept/mdp.hpp"

namespace decept::test {

// mpmath, 30 significant digits.
namespace oracle {
inline constexpr double w_0p1_g0p6 = 0.187988621347500040025721853621;
inline constexpr double w_0p9_g0p6 = 0.702549725724740771063268278122;
inline constexpr double w_0p5_g0p6 = 0.415618948071393889021320170944;
inline constexpr double five_pow_0p88 = 4.12186348357345273690232255564;
inline constexpr double two_and_half_pow_0p88 = 2.23968637308618755152707081758;
inline constexpr double fig1_ra_h = 2.06781859678317637848645207747;
inline constexpr double fig1_rb_h = 1.86171218878383335677849053516;
inline constexpr double fig1_pi_a = 0.526225320432195443115349799346;
inline constexpr double crossover_g0p6 = 0.333643216835588021125604111071;
inline constexpr double log10_106 = 2.02530586526477024084673118635;
}  // namespace oracle

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// s0 with actions a (0.1 -> s1, 0.9 -> s2) and b (0.5 -> s3, 0.5 -> s4).
// The leaves only have a self loop.
inline MdpModel fig1_model() {
  std::vector<std::vector<ActionRow>> rows(5);
  rows[0] = {ActionRow{0, {{1, 0.1}, {2, 0.9}}}, ActionRow{1, {{3, 0.5}, {4, 0.5}}}};
  for (StateId s = 1; s < 5; ++s) rows[s] = {ActionRow{0, {{s, 1.0}}}};
  return MdpModel({"a", "b"}, std::move(rows), {1.0, 0.0, 0.0, 0.0, 0.0}, {});
}

inline AdversaryProfile fig1_profile() {
  AdversaryProfile p;
  p.gamma = 0.6;
  p.alpha = 0.88;
  p.reward_exponent = 1.0;
  p.coefficients.assign(5, 1.0);
  return p;
}

inline const std::vector<double>& fig1_utilities() {
  static const std::vector<double> u{1.0, 5.0, 2.0, 2.5, 2.5};
  return u;
}

// A random model with up to `max_states` states and `max_actions` actions.
// Every state keeps at least one action; successor rows have 1..3 entries.
inline MdpModel random_model(std::mt19937_64& rng, std::size_t max_states,
                             std::size_t max_actions, bool with_sensitive = true) {
  std::uniform_int_distribution<std::size_t> n_dist(1, max_states);
  std::uniform_int_distribution<std::size_t> a_dist(1, max_actions);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  const std::size_t n = n_dist(rng);
  const std::size_t na = a_dist(rng);
  std::vector<std::string> names;
  for (std::size_t a = 0; a < na; ++a) names.push_back("a" + std::to_string(a));

  std::vector<std::vector<ActionRow>> rows(n);
  for (StateId s = 0; s < n; ++s) {
    for (ActionId a = 0; a < na; ++a) {
      if (a > 0 && std::bernoulli_distribution(0.3)(rng)) continue;
      std::vector<StateId> next(n);
      for (StateId k = 0; k < n; ++k) next[k] = k;
      std::shuffle(next.begin(), next.end(), rng);
      const std::size_t m = std::min<std::size_t>(n, 1 + rng() % 3);
      std::vector<Transition> out;
      double total = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        out.push_back({next[k], unit(rng)});
        total += out.back().prob;
      }
      std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.next < y.next; });
      for (auto& t : out) t.prob /= total;
      rows[s].push_back({a, std::move(out)});
    }
  }
  std::vector<double> nu(n);
  double total = 0.0;
  for (auto& v : nu) total += (v = unit(rng));
  for (auto& v : nu) v /= total;
  std::vector<StateId> sensitive;
  if (with_sensitive && n > 1) {
    for (StateId s = 0; s < n; ++s) {
      if (std::bernoulli_distribution(0.3)(rng)) sensitive.push_back(s);
    }
  }
  return MdpModel(std::move(names), std::move(rows), std::move(nu), std::move(sensitive));
}

inline Policy random_policy(std::mt19937_64& rng, const MdpModel& model) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<std::vector<double>> probs(model.num_states());
  for (StateId s = 0; s < model.num_states(); ++s) {
    double total = 0.0;
    for (std::size_t k = 0; k < model.actions_at(s).size(); ++k) {
      probs[s].push_back(unit(rng));
      total += probs[s].back();
    }
    for (auto& p : probs[s]) p /= total;
  }
  return Policy(std::move(probs));
}

// Visits every path of exactly `horizon` steps with positive probability.
inline void for_each_path(const MdpModel& model, const Policy& policy, int horizon,
                          const std::function<void(const Path&, double)>& visit) {
  Path path;
  std::function<void(double)> extend = [&](double prob) {
    if (static_cast<int>(path.actions.size()) == horizon) {
      visit(path, prob);
      return;
    }
    const StateId s = path.states.back();
    const auto rows = model.actions_at(s);
    const auto pi = policy.at(s);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (const auto& t : rows[k].outcomes) {
        path.actions.push_back(rows[k].action);
        path.states.push_back(t.next);
        extend(prob * pi[k] * t.prob);
        path.states.pop_back();
        path.actions.pop_back();
      }
    }
  };
  for (StateId s = 0; s < model.num_states(); ++s) {
    if (model.initial()[s] <= 0.0) continue;
    path.states = {s};
    path.actions.clear();
    extend(model.initial()[s]);
  }
}

// Sum over all length-H paths of probability times the collected reward.
inline double enumerate_cost(const MdpModel& model, const Policy& policy,
                             const std::vector<double>& rewards, int horizon) {
  double total = 0.0;
  for_each_path(model, policy, horizon, [&](const Path& p, double prob) {
    double r = 0.0;
    for (StateId s : p.states) r += rewards[s];
    total += prob * r;
  });
  return total;
}

// First-hit sum over paths truncated at their first sensitive state.
inline double enumerate_reach(const MdpModel& model, const Policy& policy, int horizon) {
  double total = 0.0;
  Path path;
  std::function<void(double)> extend = [&](double prob) {
    const StateId s = path.states.back();
    if (model.is_sensitive(s)) {
      total += prob;
      return;
    }
    if (static_cast<int>(path.actions.size()) == horizon) return;
    const auto rows = model.actions_at(s);
    const auto pi = policy.at(s);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (const auto& t : rows[k].outcomes) {
        path.actions.push_back(rows[k].action);
        path.states.push_back(t.next);
        extend(prob * pi[k] * t.prob);
        path.states.pop_back();
        path.actions.pop_back();
      }
    }
  };
  for (StateId s = 0; s < model.num_states(); ++s) {
    if (model.initial()[s] <= 0.0) continue;
    path.states = {s};
    path.actions.clear();
    extend(model.initial()[s]);
  }
  return total;
}

}  // namespace decept::test
