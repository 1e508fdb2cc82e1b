#include "decept/instance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace decept {

using nlohmann::json;

namespace {

// Maps JSON pointers to the line on which their value starts. nlohmann::json
// does not keep source positions, so a light scan over the (already valid)
// text recovers them for diagnostics.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : text_(text) {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

  int line_of(const std::string& pointer) const {
    for (std::string p = pointer;; p = p.substr(0, p.rfind('/'))) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      if (p.empty()) return 1;
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
      } else if (c != ' ' && c != '\t' && c != '\r') {
        break;
      }
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out.push_back(text_[pos_++]);
    }
    ++pos_;
    return out;
  }

  void value(const std::string& pointer) {
    lines_.emplace(pointer, line_);
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(pointer + "/" + key);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (int i = 0; pos_ < text_.size() && text_[pos_] != ']'; ++i) {
        value(pointer + "/" + std::to_string(i));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && std::string_view(",]} \t\r\n").find(text_[pos_]) ==
                                        std::string_view::npos) {
        ++pos_;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

int line_at_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

class Reader {
 public:
  explicit Reader(const LineIndex& index) : index_(index) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw InputError(message, index_.line_of(pointer));
  }

  const json& object(const json& parent, const std::string& pointer, const char* key) const {
    const json& v = parent.at(key);
    if (!v.is_object()) fail(pointer + "/" + key, std::string("'") + key + "' must be an object");
    return v;
  }

  void only_keys(const json& obj, const std::string& pointer,
                 std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(pointer + "/" + key, "unknown key '" + key + "'");
      }
    }
  }

  void require(const json& obj, const std::string& pointer, const char* key) const {
    if (!obj.contains(key)) fail(pointer, std::string("missing required key '") + key + "'");
  }

  double number(const json& obj, const std::string& pointer, const char* key,
                double fallback) const {
    if (!obj.contains(key)) return fallback;
    return number_value(obj.at(key), pointer + "/" + key, key);
  }

  double number_value(const json& v, const std::string& pointer, const std::string& what) const {
    if (!v.is_number()) fail(pointer, "'" + what + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(pointer, "'" + what + "' must be finite");
    return x;
  }

  int integer(const json& obj, const std::string& pointer, const char* key, int fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(pointer + "/" + key, std::string("'") + key + "' must be an integer");
    return v.get<int>();
  }

  std::string text(const json& obj, const std::string& pointer, const char* key) const {
    if (!obj.contains(key)) return {};
    const json& v = obj.at(key);
    if (!v.is_string()) fail(pointer + "/" + key, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json& obj, const std::string& pointer, const char* key) const {
    std::vector<double> out;
    if (!obj.contains(key)) return out;
    const json& v = obj.at(key);
    const std::string p = pointer + "/" + key;
    if (!v.is_array()) fail(p, std::string("'") + key + "' must be an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number_value(v[i], p + "/" + std::to_string(i), key));
    }
    return out;
  }

  std::vector<StateId> state_ids(const json& obj, const std::string& pointer, const char* key,
                                 std::size_t num_states) const {
    std::vector<StateId> out;
    if (!obj.contains(key)) return out;
    const json& v = obj.at(key);
    const std::string p = pointer + "/" + key;
    if (!v.is_array()) fail(p, std::string("'") + key + "' must be an array of state ids");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string pi = p + "/" + std::to_string(i);
      if (!v[i].is_number_integer()) fail(pi, "state id must be an integer");
      const auto id = v[i].get<long long>();
      if (id < 0 || static_cast<std::size_t>(id) >= num_states) {
        fail(pi, "state id " + std::to_string(id) + " out of range [0," +
                     std::to_string(num_states) + ")");
      }
      out.push_back(static_cast<StateId>(id));
    }
    return out;
  }

 private:
  const LineIndex& index_;
};

MdpModel read_explicit_mdp(const Reader& r, const json& mdp, std::vector<StateId> sensitive,
                           std::vector<double> initial, const json& root) {
  r.only_keys(mdp, "/mdp", {"actions", "states"});
  r.require(mdp, "/mdp", "actions");
  r.require(mdp, "/mdp", "states");
  const json& actions = mdp.at("actions");
  if (!actions.is_array() || actions.empty()) r.fail("/mdp/actions", "'actions' must be a non-empty array of names");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!actions[i].is_string()) r.fail("/mdp/actions/" + std::to_string(i), "action name must be a string");
    names.push_back(actions[i].get<std::string>());
  }
  const json& states = mdp.at("states");
  if (!states.is_array() || states.empty()) r.fail("/mdp/states", "'states' must be a non-empty array");
  const std::size_t n = states.size();
  std::vector<std::vector<ActionRow>> rows(n);
  std::vector<StateLabel> labels(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::string ps = "/mdp/states/" + std::to_string(s);
    const json& st = states[s];
    if (!st.is_object()) r.fail(ps, "state entry must be an object");
    r.only_keys(st, ps, {"label", "row", "col", "actions"});
    r.require(st, ps, "actions");
    labels[s].name = r.text(st, ps, "label");
    if (labels[s].name.empty()) labels[s].name = "s" + std::to_string(s);
    if (st.contains("row")) labels[s].row = r.integer(st, ps, "row", 0);
    if (st.contains("col")) labels[s].col = r.integer(st, ps, "col", 0);
    const json& acts = r.object(st, ps, "actions");
    for (const auto& [name, outcomes] : acts.items()) {
      const std::string pa = ps + "/actions/" + name;
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) r.fail(pa, "unknown action '" + name + "'");
      ActionRow row;
      row.action = static_cast<ActionId>(it - names.begin());
      if (!outcomes.is_array()) r.fail(pa, "outcomes must be an array of [next, prob] pairs");
      for (std::size_t k = 0; k < outcomes.size(); ++k) {
        const std::string po = pa + "/" + std::to_string(k);
        const json& o = outcomes[k];
        if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() || !o[1].is_number()) {
          r.fail(po, "outcome must be a [next, prob] pair");
        }
        const auto next = o[0].get<long long>();
        if (next < 0 || static_cast<std::size_t>(next) >= n) r.fail(po, "successor state out of range");
        row.outcomes.push_back({static_cast<StateId>(next), o[1].get<double>()});
      }
      rows[s].push_back(std::move(row));
    }
  }
  (void)root;
  for (StateId s : sensitive) {
    if (s >= n) r.fail("/sensitive", "sensitive state out of range");
  }
  return MdpModel(std::move(names), std::move(rows), std::move(initial), std::move(sensitive),
                  std::move(labels));
}

void check_model(const Reader& r, const MdpModel& model, const char* pointer) {
  const auto report = validate(model);
  if (!report.ok()) r.fail(pointer, "invalid model: " + report.findings.front());
}

}  // namespace

MdpModel grid_model(const GridShape& shape, std::span<const double> crime_counts,
                    std::vector<StateId> sensitive, std::vector<double> initial) {
  GridSpec spec;
  spec.rows = shape.rows;
  spec.cols = shape.cols;
  spec.crime_counts.assign(crime_counts.begin(), crime_counts.end());
  spec.sensitive = std::move(sensitive);
  spec.move_success = shape.move_success;
  spec.initial = std::move(initial);
  return build_grid(spec);
}

Instance parse_instance(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what(),
                     line_at_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  const LineIndex index(text);
  const Reader r(index);
  if (!root.is_object()) r.fail("", "instance must be a JSON object");
  r.only_keys(root, "", {"schema", "name", "description", "synthetic", "grid", "mdp", "crime_counts",
                         "sensitive", "initial", "profile", "problem", "scp", "solver"});
  r.require(root, "", "schema");
  if (r.text(root, "", "schema") != kInstanceSchema) {
    r.fail("/schema", "unsupported schema '" + root.at("schema").dump() + "', expected '" +
                          std::string(kInstanceSchema) + "'");
  }

  Instance inst;
  inst.name = r.text(root, "", "name");
  inst.description = r.text(root, "", "description");
  if (root.contains("synthetic")) {
    if (!root.at("synthetic").is_boolean()) r.fail("/synthetic", "'synthetic' must be a boolean");
    inst.synthetic = root.at("synthetic").get<bool>();
  }
  if (root.contains("grid") == root.contains("mdp")) {
    r.fail("", "exactly one of 'grid' and 'mdp' must be present");
  }
  r.require(root, "", "crime_counts");
  inst.crime_counts = r.numbers(root, "", "crime_counts");
  for (std::size_t i = 0; i < inst.crime_counts.size(); ++i) {
    if (inst.crime_counts[i] < 0.0) r.fail("/crime_counts/" + std::to_string(i), "crime counts must be non-negative");
  }
  inst.initial = r.numbers(root, "", "initial");

  std::size_t num_states = 0;
  if (root.contains("grid")) {
    const json& g = r.object(root, "", "grid");
    r.only_keys(g, "/grid", {"rows", "cols", "move_success"});
    r.require(g, "/grid", "rows");
    r.require(g, "/grid", "cols");
    GridShape shape;
    shape.rows = r.integer(g, "/grid", "rows", 0);
    shape.cols = r.integer(g, "/grid", "cols", 0);
    shape.move_success = r.number(g, "/grid", "move_success", shape.move_success);
    if (shape.rows < 1 || shape.cols < 1) r.fail("/grid", "grid dimensions must be positive");
    if (!(shape.move_success > 0.0 && shape.move_success <= 1.0)) {
      r.fail("/grid/move_success", "'move_success' must lie in (0,1]");
    }
    num_states = static_cast<std::size_t>(shape.rows) * static_cast<std::size_t>(shape.cols);
    if (inst.crime_counts.size() != num_states) {
      r.fail("/crime_counts", "rows*cols = " + std::to_string(num_states) + " but " +
                                  std::to_string(inst.crime_counts.size()) + " crime counts given");
    }
    auto sensitive = r.state_ids(root, "", "sensitive", num_states);
    if (!inst.initial.empty() && inst.initial.size() != num_states) {
      r.fail("/initial", "initial distribution must have one entry per state");
    }
    try {
      inst.model = grid_model(shape, inst.crime_counts, std::move(sensitive), inst.initial);
    } catch (const Error& e) {
      r.fail("/grid", e.what());
    }
    inst.grid = shape;
  } else {
    const json& m = r.object(root, "", "mdp");
    num_states = m.contains("states") && m.at("states").is_array() ? m.at("states").size() : 0;
    auto sensitive = r.state_ids(root, "", "sensitive", num_states);
    std::vector<double> initial = inst.initial;
    if (initial.empty() && num_states > 0) {
      initial.assign(num_states, 1.0 / static_cast<double>(num_states));
    }
    if (initial.size() != num_states) r.fail("/initial", "initial distribution must have one entry per state");
    inst.model = read_explicit_mdp(r, m, std::move(sensitive), std::move(initial), root);
    if (inst.crime_counts.size() != num_states) {
      r.fail("/crime_counts", "model has " + std::to_string(num_states) + " states but " +
                                  std::to_string(inst.crime_counts.size()) + " crime counts given");
    }
  }
  check_model(r, inst.model, root.contains("grid") ? "/grid" : "/mdp");

  double gamma = 0.6, alpha = 0.88, exponent = -1.0, cmin = kDefaultMinCoefficient;
  if (root.contains("profile")) {
    const json& p = r.object(root, "", "profile");
    r.only_keys(p, "/profile", {"gamma", "alpha", "reward_exponent", "coefficient_floor"});
    gamma = r.number(p, "/profile", "gamma", gamma);
    alpha = r.number(p, "/profile", "alpha", alpha);
    exponent = r.number(p, "/profile", "reward_exponent", exponent);
    cmin = r.number(p, "/profile", "coefficient_floor", cmin);
  }
  inst.profile = AdversaryProfile::from_counts(inst.crime_counts, gamma, alpha, exponent, cmin);
  try {
    inst.profile.check(num_states);
  } catch (const Error& e) {
    r.fail("/profile", e.what());
  }

  if (root.contains("problem")) {
    const json& p = r.object(root, "", "problem");
    r.only_keys(p, "/problem", {"horizon", "budget", "lambda", "reach_floor"});
    inst.problem.horizon = r.integer(p, "/problem", "horizon", inst.problem.horizon);
    inst.problem.budget = r.number(p, "/problem", "budget", inst.problem.budget);
    inst.problem.lambda = r.number(p, "/problem", "lambda", inst.problem.lambda);
    inst.problem.reach_floor = r.number(p, "/problem", "reach_floor", inst.problem.reach_floor);
    if (inst.problem.horizon < 0) r.fail("/problem/horizon", "'horizon' must be non-negative");
    if (!(inst.problem.budget > 0.0)) r.fail("/problem/budget", "'budget' must be positive");
    if (!(inst.problem.lambda > 0.0 && inst.problem.lambda <= 1.0)) {
      r.fail("/problem/lambda", "'lambda' must lie in (0,1]");
    }
    if (!(inst.problem.reach_floor > 0.0)) r.fail("/problem/reach_floor", "'reach_floor' must be positive");
  }
  inst.scp.reach_floor = inst.problem.reach_floor;

  if (root.contains("scp")) {
    const json& s = r.object(root, "", "scp");
    r.only_keys(s, "/scp", {"epsilon", "delta0", "mu_delta", "delta_max", "eta", "max_outer_iterations"});
    auto& c = inst.scp;
    c.epsilon = r.number(s, "/scp", "epsilon", c.epsilon);
    c.delta0 = r.number(s, "/scp", "delta0", c.delta0);
    c.mu_delta = r.number(s, "/scp", "mu_delta", c.mu_delta);
    c.delta_max = r.number(s, "/scp", "delta_max", c.delta_max);
    c.eta = r.number(s, "/scp", "eta", c.eta);
    c.max_outer_iterations = r.integer(s, "/scp", "max_outer_iterations", c.max_outer_iterations);
    try {
      c.check();
    } catch (const Error& e) {
      r.fail("/scp", e.what());
    }
  }
  if (root.contains("solver")) {
    const json& s = r.object(root, "", "solver");
    r.only_keys(s, "/solver", {"max_newton_per_stage", "max_stages", "initial_t", "barrier_multiplier",
                               "primal_tolerance", "equality_tolerance", "newton_tolerance",
                               "line_search_alpha", "line_search_beta", "phase1_margin"});
    auto& c = inst.scp.solver;
    c.max_newton_per_stage = r.integer(s, "/solver", "max_newton_per_stage", c.max_newton_per_stage);
    c.max_stages = r.integer(s, "/solver", "max_stages", c.max_stages);
    c.initial_t = r.number(s, "/solver", "initial_t", c.initial_t);
    c.barrier_multiplier = r.number(s, "/solver", "barrier_multiplier", c.barrier_multiplier);
    c.primal_tolerance = r.number(s, "/solver", "primal_tolerance", c.primal_tolerance);
    c.equality_tolerance = r.number(s, "/solver", "equality_tolerance", c.equality_tolerance);
    c.newton_tolerance = r.number(s, "/solver", "newton_tolerance", c.newton_tolerance);
    c.line_search_alpha = r.number(s, "/solver", "line_search_alpha", c.line_search_alpha);
    c.line_search_beta = r.number(s, "/solver", "line_search_beta", c.line_search_beta);
    c.phase1_margin = r.number(s, "/solver", "phase1_margin", c.phase1_margin);
    if (c.max_newton_per_stage < 1 || c.max_stages < 1 || !(c.initial_t > 0.0) ||
        !(c.barrier_multiplier > 1.0) || !(c.primal_tolerance > 0.0) ||
        !(c.line_search_alpha > 0.0 && c.line_search_alpha < 0.5) ||
        !(c.line_search_beta > 0.0 && c.line_search_beta < 1.0)) {
      r.fail("/solver", "solver settings out of range");
    }
  }
  return inst;
}

Instance load_instance(const std::filesystem::path& path) {
  return parse_instance(read_text_file(path));
}

std::string instance_to_json(const Instance& inst) {
  json root = json::object();
  root["schema"] = kInstanceSchema;
  if (!inst.name.empty()) root["name"] = inst.name;
  if (!inst.description.empty()) root["description"] = inst.description;
  root["synthetic"] = inst.synthetic;
  const MdpModel& m = inst.model;
  if (inst.grid) {
    root["grid"] = {{"rows", inst.grid->rows},
                    {"cols", inst.grid->cols},
                    {"move_success", inst.grid->move_success}};
  } else {
    json states = json::array();
    for (StateId s = 0; s < m.num_states(); ++s) {
      json st = json::object();
      if (s < m.labels().size()) {
        const auto& l = m.labels()[s];
        st["label"] = l.name;
        if (l.row) st["row"] = *l.row;
        if (l.col) st["col"] = *l.col;
      }
      json acts = json::object();
      for (const auto& row : m.actions_at(s)) {
        json outs = json::array();
        for (const auto& o : row.outcomes) outs.push_back(json::array({o.next, o.prob}));
        acts[m.action_names()[row.action]] = std::move(outs);
      }
      st["actions"] = std::move(acts);
      states.push_back(std::move(st));
    }
    root["mdp"] = {{"actions", m.action_names()}, {"states", std::move(states)}};
  }
  root["crime_counts"] = inst.crime_counts;
  root["sensitive"] = m.sensitive();
  if (!inst.initial.empty()) root["initial"] = inst.initial;
  root["profile"] = {{"gamma", inst.profile.gamma},
                     {"alpha", inst.profile.alpha},
                     {"reward_exponent", inst.profile.reward_exponent},
                     {"coefficient_floor", inst.profile.min_coefficient}};
  root["problem"] = {{"horizon", inst.problem.horizon},
                     {"budget", inst.problem.budget},
                     {"lambda", inst.problem.lambda},
                     {"reach_floor", inst.problem.reach_floor}};
  const auto& c = inst.scp;
  root["scp"] = {{"epsilon", c.epsilon},     {"delta0", c.delta0}, {"mu_delta", c.mu_delta},
                 {"delta_max", c.delta_max}, {"eta", c.eta},
                 {"max_outer_iterations", c.max_outer_iterations}};
  const auto& g = c.solver;
  root["solver"] = {{"max_newton_per_stage", g.max_newton_per_stage},
                    {"max_stages", g.max_stages},
                    {"initial_t", g.initial_t},
                    {"barrier_multiplier", g.barrier_multiplier},
                    {"primal_tolerance", g.primal_tolerance},
                    {"equality_tolerance", g.equality_tolerance},
                    {"newton_tolerance", g.newton_tolerance},
                    {"line_search_alpha", g.line_search_alpha},
                    {"line_search_beta", g.line_search_beta},
                    {"phase1_margin", g.phase1_margin}};
  return root.dump(2) + "\n";
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  write_text_file(path, instance_to_json(instance));
}

bool operator==(const Instance& a, const Instance& b) {
  const auto same_profile = [](const AdversaryProfile& x, const AdversaryProfile& y) {
    return x.gamma == y.gamma && x.alpha == y.alpha && x.reward_exponent == y.reward_exponent &&
           x.coefficients == y.coefficients && x.min_coefficient == y.min_coefficient;
  };
  const auto same_problem = [](const SpParameters& x, const SpParameters& y) {
    return x.horizon == y.horizon && x.budget == y.budget && x.lambda == y.lambda &&
           x.delta == y.delta && x.reach_floor == y.reach_floor;
  };
  const auto same_scp = [](const ScpSettings& x, const ScpSettings& y) {
    const auto& p = x.solver;
    const auto& q = y.solver;
    return x.epsilon == y.epsilon && x.delta0 == y.delta0 && x.mu_delta == y.mu_delta &&
           x.delta_max == y.delta_max && x.eta == y.eta &&
           x.max_outer_iterations == y.max_outer_iterations && x.reach_floor == y.reach_floor &&
           p.max_newton_per_stage == q.max_newton_per_stage && p.max_stages == q.max_stages &&
           p.initial_t == q.initial_t && p.barrier_multiplier == q.barrier_multiplier &&
           p.primal_tolerance == q.primal_tolerance &&
           p.equality_tolerance == q.equality_tolerance &&
           p.newton_tolerance == q.newton_tolerance &&
           p.line_search_alpha == q.line_search_alpha &&
           p.line_search_beta == q.line_search_beta && p.phase1_margin == q.phase1_margin;
  };
  return a.name == b.name && a.description == b.description && a.synthetic == b.synthetic &&
         a.grid == b.grid && a.model == b.model && a.crime_counts == b.crime_counts &&
         a.initial == b.initial && same_profile(a.profile, b.profile) &&
         same_problem(a.problem, b.problem) && same_scp(a.scp, b.scp);
}

std::string allocation_csv(const Instance& instance, std::span<const double> utilities) {
  const MdpModel& m = instance.model;
  if (utilities.size() != m.num_states()) throw DomainError("allocation size does not match the model");
  const auto rewards = defender_rewards(instance.profile, utilities);
  std::string out = "state,row,col,crime,utility,reward\n";
  for (StateId s = 0; s < m.num_states(); ++s) {
    std::string row, col;
    if (s < m.labels().size()) {
      if (m.labels()[s].row) row = std::to_string(*m.labels()[s].row);
      if (m.labels()[s].col) col = std::to_string(*m.labels()[s].col);
    }
    out += std::to_string(s) + "," + row + "," + col + "," +
           format_number(instance.crime_counts.at(s)) + "," + format_number(utilities[s]) + "," +
           format_number(rewards[s]) + "\n";
  }
  return out;
}

std::vector<double> parse_allocation_csv(std::string_view text, std::size_t num_states) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  int utility_col = -1, state_col = -1;
  std::vector<double> out(num_states, 0.0);
  std::vector<bool> seen(num_states, false);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (utility_col < 0) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "utility") utility_col = static_cast<int>(i);
        if (cells[i] == "state") state_col = static_cast<int>(i);
      }
      if (utility_col < 0 || state_col < 0) {
        throw InputError("allocation header must name 'state' and 'utility' columns", line_no);
      }
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max(utility_col, state_col));
    if (cells.size() <= need) throw InputError("too few columns", line_no);
    const std::string& sc = cells[static_cast<std::size_t>(state_col)];
    const std::string& uc = cells[static_cast<std::size_t>(utility_col)];
    std::size_t s = 0;
    double u = 0.0;
    auto r1 = std::from_chars(sc.data(), sc.data() + sc.size(), s);
    if (r1.ec != std::errc() || r1.ptr != sc.data() + sc.size()) {
      throw InputError("bad state id '" + sc + "'", line_no);
    }
    auto r2 = std::from_chars(uc.data(), uc.data() + uc.size(), u);
    if (r2.ec != std::errc() || r2.ptr != uc.data() + uc.size()) {
      throw InputError("bad utility '" + uc + "'", line_no);
    }
    if (s >= num_states) {
      throw InputError("state " + sc + " does not exist (model has " + std::to_string(num_states) +
                           " states)",
                       line_no);
    }
    if (seen[s]) throw InputError("state " + sc + " listed twice", line_no);
    if (!(u > 0.0) || !std::isfinite(u)) throw InputError("utility must be positive", line_no);
    seen[s] = true;
    out[s] = u;
  }
  if (utility_col < 0) throw InputError("allocation file is empty");
  for (std::size_t s = 0; s < num_states; ++s) {
    if (!seen[s]) throw InputError("allocation is missing state " + std::to_string(s));
  }
  return out;
}

std::vector<double> load_allocation(const std::filesystem::path& path, std::size_t num_states) {
  return parse_allocation_csv(read_text_file(path), num_states);
}

const char* to_string(HeatmapTransform transform) {
  return transform == HeatmapTransform::Log10 ? "log10" : "linear";
}

HeatmapData make_heatmap(int rows, int cols, std::span<const double> utilities,
                         HeatmapTransform transform) {
  if (rows < 1 || cols < 1 || utilities.size() != static_cast<std::size_t>(rows * cols)) {
    throw DomainError("heatmap needs one value per grid cell");
  }
  HeatmapData h{rows, cols, transform, {}};
  h.values.reserve(utilities.size());
  for (double u : utilities) {
    if (transform == HeatmapTransform::Log10) {
      if (!(u > 0.0)) throw DomainError("log10 heatmap requires positive values");
      h.values.push_back(std::log10(u));
    } else {
      h.values.push_back(u);
    }
  }
  return h;
}

std::string heatmap_csv(const HeatmapData& h) {
  std::string out = "# decept-heatmap rows=" + std::to_string(h.rows) +
                    " cols=" + std::to_string(h.cols) + " transform=" + to_string(h.transform) + "\n";
  for (int r = h.rows - 1; r >= 0; --r) {
    for (int c = 0; c < h.cols; ++c) {
      if (c > 0) out += ',';
      out += format_number(h.values[static_cast<std::size_t>(r * h.cols + c)]);
    }
    out += '\n';
  }
  return out;
}

std::string heatmap_svg(const HeatmapData& h, std::span<const StateId> sensitive) {
  constexpr int cell = 60;
  const auto [lo_it, hi_it] = std::minmax_element(h.values.begin(), h.values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double span = hi > lo ? hi - lo : 1.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << h.cols * cell << "\" height=\""
      << h.rows * cell << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int r = 0; r < h.rows; ++r) {
    for (int c = 0; c < h.cols; ++c) {
      const auto s = static_cast<std::size_t>(r * h.cols + c);
      const double v = h.values[s];
      const double t = (v - lo) / span;
      const int red = static_cast<int>(std::lround(255 * t));
      const int blue = 255 - red;
      const int x = c * cell, y = (h.rows - 1 - r) * cell;
      const bool hot = std::find(sensitive.begin(), sensitive.end(), s) != sensitive.end();
      svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"rgb(" << red << ",64," << blue << ")\" stroke=\""
          << (hot ? "#ffd700" : "#ffffff") << "\" stroke-width=\"" << (hot ? 4 : 1) << "\"/>\n";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", v);
      svg << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" fill=\"#ffffff\">" << buf << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace decept
