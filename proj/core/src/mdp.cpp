#include "decept/mdp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace decept {

MdpModel::MdpModel(std::vector<std::string> action_names,
                   std::vector<std::vector<ActionRow>> rows, std::vector<double> initial,
                   std::vector<StateId> sensitive, std::vector<StateLabel> labels)
    : action_names_(std::move(action_names)),
      rows_(std::move(rows)),
      initial_(std::move(initial)),
      sensitive_(std::move(sensitive)),
      labels_(std::move(labels)) {
  for (auto& state_rows : rows_) {
    for (auto& row : state_rows) {
      double before = 0.0;
      for (const auto& t : row.outcomes) before += t.prob;
      const auto old_size = row.outcomes.size();
      std::erase_if(row.outcomes, [](const Transition& t) { return t.prob < kPruneThreshold; });
      if (row.outcomes.size() != old_size && !row.outcomes.empty()) {
        double after = 0.0;
        for (const auto& t : row.outcomes) after += t.prob;
        for (auto& t : row.outcomes) t.prob *= before / after;
      }
      std::sort(row.outcomes.begin(), row.outcomes.end(),
                [](const Transition& a, const Transition& b) { return a.next < b.next; });
    }
    std::sort(state_rows.begin(), state_rows.end(),
              [](const ActionRow& a, const ActionRow& b) { return a.action < b.action; });
  }
  std::sort(sensitive_.begin(), sensitive_.end());
  sensitive_.erase(std::unique(sensitive_.begin(), sensitive_.end()), sensitive_.end());
  sensitive_mask_.assign(rows_.size(), false);
  for (StateId s : sensitive_) {
    if (s < rows_.size()) sensitive_mask_[s] = true;
  }
}

std::span<const ActionRow> MdpModel::actions_at(StateId s) const {
  if (s >= rows_.size()) throw DomainError("unknown state " + std::to_string(s));
  return rows_[s];
}

const ActionRow* MdpModel::find_action(StateId s, ActionId a) const {
  for (const auto& row : actions_at(s)) {
    if (row.action == a) return &row;
  }
  return nullptr;
}

double MdpModel::transition(StateId s, ActionId a, StateId next) const {
  const ActionRow* row = find_action(s, a);
  if (row == nullptr) {
    throw DomainError("action " + std::to_string(a) + " is not available at state " +
                      std::to_string(s));
  }
  for (const auto& t : row->outcomes) {
    if (t.next == next) return t.prob;
  }
  return 0.0;
}

std::size_t MdpModel::num_state_actions() const noexcept {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

ValidationReport validate(const MdpModel& model) {
  ValidationReport report;
  auto add = [&](std::string msg) { report.findings.push_back(std::move(msg)); };
  const std::size_t n = model.num_states();
  if (n == 0) add("model has no states");

  for (StateId s = 0; s < n; ++s) {
    const auto rows = model.actions_at(s);
    if (rows.empty()) add("state " + std::to_string(s) + " has no available action");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& row = rows[k];
      const std::string where =
          "T(" + std::to_string(s) + "," + std::to_string(row.action) + ",.)";
      if (row.action >= model.num_actions()) add(where + " uses undeclared action");
      if (k > 0 && rows[k - 1].action == row.action) add(where + " is declared twice");
      double sum = 0.0;
      for (const auto& t : row.outcomes) {
        if (t.next >= n) add(where + " points to unknown state " + std::to_string(t.next));
        if (!(t.prob >= 0.0 && t.prob <= 1.0)) add(where + " has entry outside [0,1]");
        sum += t.prob;
      }
      if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        std::ostringstream os;
        os << where << " sums to " << sum;
        add(os.str());
      }
    }
  }

  const auto& nu = model.initial();
  if (nu.size() != n) {
    add("initial distribution nu has " + std::to_string(nu.size()) + " entries for " +
        std::to_string(n) + " states");
  } else {
    double sum = 0.0;
    bool bad = false;
    for (double p : nu) {
      bad = bad || !(p >= 0.0 && p <= 1.0);
      sum += p;
    }
    if (bad) add("initial distribution nu has entries outside [0,1]");
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream os;
      os << "initial distribution nu sums to " << sum;
      add(os.str());
    }
  }
  for (StateId s : model.sensitive()) {
    if (s >= n) add("sensitive state " + std::to_string(s) + " does not exist");
  }
  if (!model.labels().empty() && model.labels().size() != n) add("label count does not match states");
  return report;
}

double Policy::prob(const MdpModel& model, StateId s, ActionId a) const {
  const auto rows = model.actions_at(s);
  const auto& p = probs_.at(s);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].action == a) return p.at(k);
  }
  return 0.0;
}

ValidationReport validate(const MdpModel& model, const Policy& policy) {
  ValidationReport report;
  if (policy.rows().size() != model.num_states()) {
    report.findings.push_back("policy covers " + std::to_string(policy.rows().size()) +
                              " states, model has " + std::to_string(model.num_states()));
    return report;
  }
  for (StateId s = 0; s < model.num_states(); ++s) {
    const auto p = policy.at(s);
    if (p.size() != model.actions_at(s).size()) {
      report.findings.push_back("policy row " + std::to_string(s) + " does not match actions");
      continue;
    }
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) report.findings.push_back("negative policy entry at " + std::to_string(s));
      sum += v;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      report.findings.push_back("policy row " + std::to_string(s) + " does not sum to 1");
    }
  }
  return report;
}

double path_probability(const MdpModel& model, const Policy& policy, const Path& path) {
  if (path.states.empty()) throw DomainError("path has no states");
  if (path.actions.size() + 1 != path.states.size()) {
    throw DomainError("path must alternate states and actions");
  }
  double p = model.initial().at(path.states.front());
  for (std::size_t i = 0; i < path.actions.size(); ++i) {
    const StateId s = path.states[i];
    const ActionId a = path.actions[i];
    if (model.find_action(s, a) == nullptr) {
      throw DomainError("path uses action " + std::to_string(a) + " unavailable at state " +
                        std::to_string(s));
    }
    p *= policy.prob(model, s, a) * model.transition(s, a, path.states[i + 1]);
  }
  return p;
}

MdpModel build_grid(const GridSpec& spec) {
  if (spec.rows <= 0 || spec.cols <= 0) throw InvalidModel("grid dimensions must be positive");
  const auto n = static_cast<std::size_t>(spec.rows) * static_cast<std::size_t>(spec.cols);
  if (!spec.crime_counts.empty() && spec.crime_counts.size() != n) {
    throw InvalidModel("grid has " + std::to_string(n) + " cells but " +
                       std::to_string(spec.crime_counts.size()) + " crime counts");
  }
  if (!(spec.move_success > 0.0 && spec.move_success <= 1.0)) {
    throw InvalidModel("move_success must lie in (0,1]");
  }
  for (StateId s : spec.sensitive) {
    if (s >= n) throw InvalidModel("sensitive id " + std::to_string(s) + " is outside the grid");
  }
  if (!spec.initial.empty() && spec.initial.size() != n) {
    throw InvalidModel("initial distribution size does not match grid");
  }

  constexpr std::array<std::array<int, 2>, 4> kMoves{{{0, -1}, {0, 1}, {1, 0}, {-1, 0}}};
  std::vector<std::vector<ActionRow>> rows(n);
  std::vector<StateLabel> labels(n);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const StateId s = grid_state(r, c, spec.cols);
      labels[s] = StateLabel{"(" + std::to_string(r) + "," + std::to_string(c) + ")", r, c};
      std::vector<std::pair<ActionId, StateId>> neighbors;
      for (ActionId a = 0; a < kMoves.size(); ++a) {
        const int nr = r + kMoves[a][0];
        const int nc = c + kMoves[a][1];
        if (nr >= 0 && nr < spec.rows && nc >= 0 && nc < spec.cols) {
          neighbors.emplace_back(a, grid_state(nr, nc, spec.cols));
        }
      }
      for (const auto& [a, target] : neighbors) {
        ActionRow row{a, {}};
        const std::size_t others = neighbors.size() - 1;
        if (others == 0) {
          row.outcomes.push_back({target, 1.0});
        } else {
          const double slip = (1.0 - spec.move_success) / static_cast<double>(others);
          for (const auto& [b, other] : neighbors) {
            row.outcomes.push_back({other, b == a ? spec.move_success : slip});
          }
        }
        rows[s].push_back(std::move(row));
      }
    }
  }
  std::vector<double> nu = spec.initial;
  if (nu.empty()) nu.assign(n, 1.0 / static_cast<double>(n));
  return MdpModel({"left", "right", "up", "down"}, std::move(rows), std::move(nu),
                  spec.sensitive, std::move(labels));
}

std::vector<ActionId> available_actions(const MdpModel& model, StateId s) {
  std::vector<ActionId> out;
  for (const auto& row : model.actions_at(s)) out.push_back(row.action);
  return out;
}

}  // namespace decept
