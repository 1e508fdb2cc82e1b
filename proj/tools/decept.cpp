#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "decept/instance.hpp"
#include "decept/report.hpp"
#include "decept/scp.hpp"

namespace fs = std::filesystem;
using namespace decept;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitInput = 2;

struct Overrides {
  std::optional<int> horizon;
  std::optional<double> budget;
  std::optional<double> lambda;
  std::optional<double> epsilon;
  std::optional<double> delta0;
  std::optional<double> eta;
};

Instance load_with_overrides(const std::string& path, const Overrides& o) {
  Instance inst;
  try {
    inst = load_instance(path);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
  if (o.horizon) inst.problem.horizon = *o.horizon;
  if (o.budget) inst.problem.budget = *o.budget;
  if (o.lambda) inst.problem.lambda = *o.lambda;
  if (o.epsilon) inst.scp.epsilon = *o.epsilon;
  if (o.delta0) inst.scp.delta0 = *o.delta0;
  if (o.eta) inst.scp.eta = *o.eta;
  if (inst.problem.horizon < 0) throw InputError("--horizon must be non-negative");
  if (!(inst.problem.budget > 0.0)) throw InputError("--budget must be positive");
  if (!(inst.problem.lambda > 0.0 && inst.problem.lambda <= 1.0)) {
    throw InputError("--lambda must lie in (0,1]");
  }
  try {
    inst.scp.check();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  return inst;
}

std::vector<double> load_utilities(const Instance& inst, const std::string& path) {
  if (path.empty() || path == "uniform") {
    return Allocation::uniform(inst.model.num_states(), inst.problem.budget).utilities;
  }
  try {
    return load_allocation(path, inst.model.num_states());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void emit(const std::string& out_dir, const std::string& file, const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
  } else {
    fs::create_directories(out_dir);
    write_text_file(fs::path(out_dir) / file, text);
  }
}

int cmd_solve(const std::string& instance_path, const Overrides& o, const std::string& out_dir,
              bool svg, bool quiet, bool verbose) {
  const Instance inst = load_with_overrides(instance_path, o);
  SpParameters params = inst.problem;
  ScpSettings settings = inst.scp;
  settings.reach_floor = params.reach_floor;

  IterationCallback progress;
  if (verbose) {
    progress = [](const ScpIteration& it) {
      std::fprintf(stderr, "%3d %s %-13s Q=%.6f reach=%.4f delta=%.3g eta=%.4f step=%.3f newton=%d %.2fs\n",
                   it.index, it.accepted ? "acc" : "rej", to_string(it.gp_status), it.q, it.reach,
                   it.delta, it.eta, it.max_step_ratio, it.newton_steps, it.wall_seconds);
    };
  }
  const SolveReport report = run(inst.model, inst.profile, params, settings, progress);

  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  write_text_file(dir / "report.json", solve_report_json(inst, report));
  write_text_file(dir / "timing.json", solve_timing_json(report));
  write_text_file(dir / "allocation.csv", allocation_csv(inst, report.allocation.utilities));
  if (inst.grid) {
    const auto heat = make_heatmap(inst.grid->rows, inst.grid->cols, report.allocation.utilities);
    write_text_file(dir / "heatmap.csv", heatmap_csv(heat));
    if (svg) write_text_file(dir / "heatmap.svg", heatmap_svg(heat, inst.model.sensitive()));
  }

  const bool ok = report.converged && report.reach_probability <= params.lambda + 1e-6;
  if (!quiet) {
    std::printf("%s after %zu outer iterations (%s)\n", ok ? "converged" : "NOT converged",
                report.iterations.size(), report.message.c_str());
    std::printf("Q         %.6f (uniform %.6f)\n", report.q, report.q_uniform);
    std::printf("reach     %.6f (lambda %.6g, tau %.6f)\n", report.reach_probability,
                params.lambda, report.tau);
    std::printf("time      %.2f s solver, %.2f s total\n", report.solver_seconds,
                report.total_seconds);
    std::printf("artifacts %s\n", dir.string().c_str());
  }
  return ok ? kExitOk : kExitNotConverged;
}

int cmd_evaluate(const std::string& instance_path, const std::string& allocation_path,
                 const Overrides& o, const std::string& out_dir) {
  const Instance inst = load_with_overrides(instance_path, o);
  const auto u = load_utilities(inst, allocation_path);
  const Evaluation e = evaluate_allocation(inst, u);
  emit(out_dir, "evaluate.json", evaluate_report_json(inst, u, e));
  return kExitOk;
}

int cmd_simulate(const std::string& instance_path, const std::string& allocation_path,
                 const Overrides& o, const MonteCarloOptions& mc, const std::string& out_dir) {
  const Instance inst = load_with_overrides(instance_path, o);
  const auto u = load_utilities(inst, allocation_path);
  const Evaluation e = evaluate_allocation(inst, u);
  const MonteCarloResult r = monte_carlo(inst.model, e.policy, e.rewards, inst.problem.horizon, mc);
  emit(out_dir, "simulate.json", simulate_report_json(inst, u, mc, e, r));
  return kExitOk;
}

int cmd_validate(const std::string& instance_path) {
  const Instance inst = load_with_overrides(instance_path, {});
  std::printf("%s: ok (%zu states, %zu actions, %zu sensitive, %zu state-action pairs)\n",
              instance_path.c_str(), inst.model.num_states(), inst.model.num_actions(),
              inst.model.sensitive().size(), inst.model.num_state_actions());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deceptive resource allocation against prospect-theory adversaries"};
  app.require_subcommand(1);

  std::string instance_path, allocation_path, out_dir;
  Overrides o;
  MonteCarloOptions mc;
  bool svg = false, quiet = false, verbose = false;

  const auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--horizon", o.horizon, "Planning horizon H");
    cmd->add_option("--budget", o.budget, "Total utility budget D");
    cmd->add_option("--lambda", o.lambda, "Bound on the sensitive-state reach probability");
  };

  auto* solve = app.add_subcommand("solve", "Compute a deceptive allocation");
  solve->add_option("--instance", instance_path, "Instance file")->required();
  add_overrides(solve);
  solve->add_option("--epsilon", o.epsilon, "Convergence tolerance on Q");
  solve->add_option("--delta0", o.delta0, "Initial penalty weight");
  solve->add_option("--eta", o.eta, "Trust-region factor");
  solve->add_option("--out-dir", out_dir, "Directory for report and artifacts");
  solve->add_flag("--svg", svg, "Also render the heatmap as SVG");
  solve->add_flag("--quiet", quiet, "Do not print a summary");
  solve->add_flag("--verbose", verbose, "Print one line per outer iteration to stderr");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a fixed allocation exactly");
  evaluate->add_option("--instance", instance_path, "Instance file")->required();
  evaluate->add_option("--allocation", allocation_path, "Allocation CSV (default: uniform)");
  add_overrides(evaluate);
  evaluate->add_option("--out-dir", out_dir, "Write evaluate.json here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo rollouts of a fixed allocation");
  simulate->add_option("--instance", instance_path, "Instance file")->required();
  simulate->add_option("--allocation", allocation_path, "Allocation CSV (default: uniform)");
  add_overrides(simulate);
  simulate->add_option("--paths", mc.paths, "Number of rollouts")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", mc.seed, "Random seed");
  simulate->add_option("--workers", mc.workers, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--out-dir", out_dir, "Write simulate.json here instead of stdout");

  auto* validate_cmd = app.add_subcommand("validate", "Check an instance file");
  validate_cmd->add_option("--instance", instance_path, "Instance file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*solve) return cmd_solve(instance_path, o, out_dir, svg, quiet, verbose);
    if (*evaluate) return cmd_evaluate(instance_path, allocation_path, o, out_dir);
    if (*simulate) return cmd_simulate(instance_path, allocation_path, o, mc, out_dir);
    if (*validate_cmd) return cmd_validate(instance_path);
  } catch (const InputError& e) {
    std::fprintf(stderr, "decept: %s\n", e.what());
    return kExitInput;
  } catch (const InvalidModel& e) {
    std::fprintf(stderr, "decept: invalid input: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "decept: %s\n", e.what());
    return kExitNotConverged;
  }
  return kExitInput;
}
