#pragma once

// Structured reports (JSON, schema decept-report/1). Reports hold no wall
// times so identical inputs give byte-identical files; timings are written
// separately.

#include <string>
#include <string_view>

#include "decept/evaluator.hpp"
#include "decept/instance.hpp"
#include "decept/scp.hpp"

namespace decept {

inline constexpr std::string_view kReportSchema = "decept-report/1";

std::string solve_report_json(const Instance& instance, const SolveReport& report);
std::string solve_timing_json(const SolveReport& report);

struct Evaluation {
  Policy policy;
  std::vector<double> rewards;
  CostTable cost;
  ReachTable reach;
};

Evaluation evaluate_allocation(const Instance& instance, std::span<const double> utilities);

std::string evaluate_report_json(const Instance& instance, std::span<const double> utilities,
                                 const Evaluation& evaluation);

std::string simulate_report_json(const Instance& instance, std::span<const double> utilities,
                                 const MonteCarloOptions& options, const Evaluation& exact,
                                 const MonteCarloResult& result);

}  // namespace decept
