#pragma once

// Geometric programs in log space. With y = log x every posynomial
// constraint sum_k c_k prod x^a_k <= 1 becomes the convex log-sum-exp
// constraint log sum_k exp(a_k . y + log c_k) <= 0 and every monomial
// equality becomes affine. The result is solved by a barrier method whose
// centering steps are equality-constrained Newton iterations.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "decept/program.hpp"

namespace decept {

/// log sum_k exp(a_k . y + b_k), with the a_k stored sparsely.
class LogSumExp {
 public:
  struct Term {
    double offset = 0.0;
    std::vector<std::pair<std::uint32_t, double>> exponents;
  };

  LogSumExp() = default;
  explicit LogSumExp(const Posynomial& p);
  explicit LogSumExp(std::span<const Term> terms);

  std::vector<Term> terms() const;
  std::size_t num_terms() const noexcept { return offsets_.size(); }
  /// Variables the function depends on, ascending.
  const std::vector<std::uint32_t>& support() const noexcept { return support_; }

  double value(const Eigen::VectorXd& y) const;
  /// Value, gradient over support() and Hessian over support() x support()
  /// (column-major, size support().size()^2).
  double derivatives(const Eigen::VectorXd& y, std::vector<double>& grad,
                     std::vector<double>& hess) const;

 private:
  std::vector<double> offsets_;
  std::vector<std::uint32_t> term_start_;
  std::vector<std::uint32_t> local_var_;  // index into support_
  std::vector<double> exponent_;
  std::vector<std::uint32_t> support_;
  mutable std::vector<double> scratch_;
};

/// a . y + b = 0
struct AffineRow {
  std::vector<std::pair<std::uint32_t, double>> coeffs;
  double offset = 0.0;
};

struct ConvexLogProblem {
  std::size_t num_vars = 0;
  LogSumExp objective;
  std::vector<LogSumExp> inequalities;
  std::vector<AffineRow> equalities;
  std::vector<std::string> inequality_labels;
  std::vector<std::string> equality_labels;
};

/// Throws DomainError on a structurally invalid GP.
ConvexLogProblem to_log_convex(const GpProblem& gp);

struct SolverSettings {
  int max_newton_per_stage = 200;
  int max_stages = 60;
  double initial_t = 1.0;
  double barrier_multiplier = 20.0;  // mu_b
  double primal_tolerance = 1e-8;    // duality-gap target m/t
  double equality_tolerance = 1e-8;
  double newton_tolerance = 1e-10;   // lambda^2 / 2
  double line_search_alpha = 0.01;
  double line_search_beta = 0.5;
  /// Phase 1 stops once every constraint is below -phase1_margin.
  double phase1_margin = 1e-3;
  bool record_trace = false;
};

enum class GpStatus { Optimal, MaxIterations, Infeasible, Unbounded };
const char* to_string(GpStatus status);

struct GpTrace {
  /// Newton decrements lambda^2/2 per step, grouped by centering stage.
  std::vector<std::vector<double>> decrements;
  /// Log objective at the end of each phase-2 stage.
  std::vector<double> stage_objectives;
};

struct GpSolution {
  GpStatus status = GpStatus::MaxIterations;
  Assignment assignment;
  Eigen::VectorXd log_point;
  double objective = 0.0;
  /// Barrier multiplier estimates, one per inequality, log-domain scaling.
  Eigen::VectorXd inequality_multipliers;
  int newton_steps = 0;
  int stages = 0;
  double duality_gap = 0.0;
  std::string message;
  GpTrace trace;
};

GpSolution solve(const GpProblem& gp, const Assignment& start, const SolverSettings& settings = {});
GpSolution solve(const ConvexLogProblem& problem, const std::shared_ptr<const VarTable>& vars,
                 const Eigen::VectorXd& log_start, const SolverSettings& settings = {});

struct KktReport {
  double primal_inequality = 0.0;     // max(0, g_i(x) - 1)
  double primal_equality = 0.0;       // max |h_j(x) - 1|
  double stationarity = 0.0;          // inf-norm, log domain
  double complementarity = 0.0;       // max lambda_i |log g_i(x)|
  double dual_infeasibility = 0.0;    // max(0, -lambda_i)
  bool optimal = false;
  std::string note;
};

/// Checks the KKT conditions of the log-domain problem at `solution`.
/// Equality multipliers are recovered by least squares.
KktReport kkt_report(const GpProblem& gp, const GpSolution& solution, double tolerance = 1e-6);

}  // namespace decept
