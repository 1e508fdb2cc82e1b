#pragma once

// Finite MDPs: states, per-state available actions with sparse transition
// rows, an initial distribution and a set of sensitive states.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decept/error.hpp"

namespace decept {

using StateId = std::size_t;
using ActionId = std::size_t;

struct Transition {
  StateId next = 0;
  double prob = 0.0;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// One available action at a state together with its successor distribution.
struct ActionRow {
  ActionId action = 0;
  std::vector<Transition> outcomes;
  friend bool operator==(const ActionRow&, const ActionRow&) = default;
};

struct StateLabel {
  std::string name;
  std::optional<int> row;
  std::optional<int> col;
  friend bool operator==(const StateLabel&, const StateLabel&) = default;
};

/// Transition entries below this are dropped when a model is built.
inline constexpr double kPruneThreshold = 1e-12;
inline constexpr double kProbabilityTolerance = 1e-9;

class MdpModel {
 public:
  MdpModel() = default;
  /// Stores the model as given, except that transition entries below
  /// kPruneThreshold are pruned and their row rescaled to its original sum.
  /// Call validate() to check the remaining invariants.
  MdpModel(std::vector<std::string> action_names, std::vector<std::vector<ActionRow>> rows,
           std::vector<double> initial, std::vector<StateId> sensitive,
           std::vector<StateLabel> labels = {});

  std::size_t num_states() const noexcept { return rows_.size(); }
  std::size_t num_actions() const noexcept { return action_names_.size(); }
  const std::vector<std::string>& action_names() const noexcept { return action_names_; }

  std::span<const ActionRow> actions_at(StateId s) const;
  /// Returns nullptr when `a` is not available at `s`.
  const ActionRow* find_action(StateId s, ActionId a) const;
  /// Probability T(s, a, next); throws if `a` is unavailable at `s`.
  double transition(StateId s, ActionId a, StateId next) const;

  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<StateId>& sensitive() const noexcept { return sensitive_; }
  bool is_sensitive(StateId s) const { return sensitive_mask_.at(s); }
  const std::vector<StateLabel>& labels() const noexcept { return labels_; }
  std::size_t num_state_actions() const noexcept;

  friend bool operator==(const MdpModel& a, const MdpModel& b) {
    return a.action_names_ == b.action_names_ && a.rows_ == b.rows_ &&
           a.initial_ == b.initial_ && a.sensitive_ == b.sensitive_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::string> action_names_;
  std::vector<std::vector<ActionRow>> rows_;
  std::vector<double> initial_;
  std::vector<StateId> sensitive_;
  std::vector<bool> sensitive_mask_;
  std::vector<StateLabel> labels_;
};

struct ValidationReport {
  std::vector<std::string> findings;
  bool ok() const noexcept { return findings.empty(); }
};

ValidationReport validate(const MdpModel& model);

/// Memoryless randomized policy. probs[s][k] belongs to model.actions_at(s)[k].
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<std::vector<double>> probs) : probs_(std::move(probs)) {}

  std::span<const double> at(StateId s) const { return probs_.at(s); }
  /// Probability of action `a` at `s` (0 if unavailable).
  double prob(const MdpModel& model, StateId s, ActionId a) const;
  const std::vector<std::vector<double>>& rows() const noexcept { return probs_; }

 private:
  std::vector<std::vector<double>> probs_;
};

ValidationReport validate(const MdpModel& model, const Policy& policy);

struct Path {
  std::vector<StateId> states;    // s_0 ... s_N
  std::vector<ActionId> actions;  // a_0 ... a_{N-1}
};

/// nu(s_0) * prod_i pi(s_i, a_i) T(s_i, a_i, s_{i+1}).
double path_probability(const MdpModel& model, const Policy& policy, const Path& path);

enum class GridAction : ActionId { Left = 0, Right = 1, Up = 2, Down = 3 };

struct GridSpec {
  int rows = 0;
  int cols = 0;
  std::vector<double> crime_counts;
  std::vector<StateId> sensitive;
  double move_success = 0.95;
  /// Empty means uniform.
  std::vector<double> initial;
};

/// Grid world numbered from the bottom-left corner, row by row. Only moves
/// toward existing neighbors are available; a move reaches its target with
/// probability move_success and slips evenly to the other neighbors.
MdpModel build_grid(const GridSpec& spec);

inline StateId grid_state(int row, int col, int cols) {
  return static_cast<StateId>(row * cols + col);
}

std::vector<ActionId> available_actions(const MdpModel& model, StateId s);

}  // namespace decept
