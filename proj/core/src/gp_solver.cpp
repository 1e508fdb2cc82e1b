#include "decept/gp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace decept {

const char* to_string(GpStatus status) {
  switch (status) {
    case GpStatus::Optimal: return "optimal";
    case GpStatus::MaxIterations: return "max_iterations";
    case GpStatus::Infeasible: return "infeasible";
    case GpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

LogSumExp::LogSumExp(const Posynomial& p) {
  std::vector<Term> terms;
  for (const auto& m : p.terms()) {
    Term t{std::log(m.coefficient()), {}};
    for (const auto& [id, a] : m.exponents()) t.exponents.emplace_back(id.index, a);
    terms.push_back(std::move(t));
  }
  *this = LogSumExp(terms);
}

LogSumExp::LogSumExp(std::span<const Term> terms) {
  std::map<std::uint32_t, std::uint32_t> local;
  for (const auto& t : terms) {
    for (const auto& [var, a] : t.exponents) {
      if (a != 0.0) local.emplace(var, 0);
    }
  }
  for (auto& [var, idx] : local) {
    idx = static_cast<std::uint32_t>(support_.size());
    support_.push_back(var);
  }
  term_start_.push_back(0);
  for (const auto& t : terms) {
    offsets_.push_back(t.offset);
    for (const auto& [var, a] : t.exponents) {
      if (a == 0.0) continue;
      local_var_.push_back(local.at(var));
      exponent_.push_back(a);
    }
    term_start_.push_back(static_cast<std::uint32_t>(local_var_.size()));
  }
}

std::vector<LogSumExp::Term> LogSumExp::terms() const {
  std::vector<Term> out(offsets_.size());
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    out[i].offset = offsets_[i];
    for (auto j = term_start_[i]; j < term_start_[i + 1]; ++j) {
      out[i].exponents.emplace_back(support_[local_var_[j]], exponent_[j]);
    }
  }
  return out;
}

double LogSumExp::value(const Eigen::VectorXd& y) const {
  const std::size_t k = offsets_.size();
  scratch_.resize(k);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    double z = offsets_[i];
    for (auto j = term_start_[i]; j < term_start_[i + 1]; ++j) {
      z += exponent_[j] * y[support_[local_var_[j]]];
    }
    scratch_[i] = z;
    shift = std::max(shift, z);
  }
  if (!std::isfinite(shift)) return shift;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::exp(scratch_[i] - shift);
  return shift + std::log(sum);
}

double LogSumExp::derivatives(const Eigen::VectorXd& y, std::vector<double>& grad,
                              std::vector<double>& hess) const {
  const double v = value(y);  // leaves z_k in scratch_
  const std::size_t d = support_.size();
  grad.assign(d, 0.0);
  hess.assign(d * d, 0.0);
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    const double w = std::exp(scratch_[i] - v);
    for (auto a = term_start_[i]; a < term_start_[i + 1]; ++a) {
      const std::size_t ia = local_var_[a];
      grad[ia] += w * exponent_[a];
      for (auto b = term_start_[i]; b < term_start_[i + 1]; ++b) {
        hess[local_var_[b] * d + ia] += w * exponent_[a] * exponent_[b];
      }
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) hess[j * d + i] -= grad[i] * grad[j];
  }
  return v;
}

ConvexLogProblem to_log_convex(const GpProblem& gp) {
  if (auto issues = lint(gp); !issues.empty()) throw DomainError("invalid GP: " + issues.front());
  ConvexLogProblem out;
  out.num_vars = gp.vars->size();
  out.objective = LogSumExp(gp.objective);
  out.inequalities.reserve(gp.inequalities.size());
  for (const auto& c : gp.inequalities) {
    out.inequalities.emplace_back(c.lhs);
    out.inequality_labels.push_back(c.label);
  }
  for (const auto& e : gp.equalities) {
    AffineRow row;
    row.offset = std::log(e.lhs.coefficient());
    for (const auto& [id, a] : e.lhs.exponents()) row.coeffs.emplace_back(id.index, a);
    out.equalities.push_back(std::move(row));
    out.equality_labels.push_back(e.label);
  }
  return out;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kUnboundedLog = 700.0;

// Equality rows that own a variable appearing in no other row are solved for
// that variable and substituted away, so the barrier only sees the remaining
// rows. y = expand(z) recovers the full point.
class Elimination {
 public:
  explicit Elimination(const ConvexLogProblem& p) : full_n_(p.num_vars) {
    std::vector<int> count(full_n_, 0);
    for (const auto& e : p.equalities) {
      for (const auto& [var, a] : e.coeffs) {
        if (a != 0.0) ++count[var];
      }
    }
    pivot_.assign(full_n_, -1);
    std::vector<bool> row_used(p.equalities.size(), false);
    for (std::size_t r = 0; r < p.equalities.size(); ++r) {
      const auto& e = p.equalities[r];
      double biggest = 0.0;
      for (const auto& [var, a] : e.coeffs) biggest = std::max(biggest, std::abs(a));
      int best = -1;
      double best_abs = 0.0;
      for (const auto& [var, a] : e.coeffs) {
        if (count[var] == 1 && std::abs(a) >= 1e-3 * biggest && std::abs(a) > best_abs) {
          best = static_cast<int>(var);
          best_abs = std::abs(a);
        }
      }
      if (best < 0) continue;
      pivot_[static_cast<std::size_t>(best)] = static_cast<int>(r);
      row_used[r] = true;
    }

    index_.assign(full_n_, -1);
    for (std::size_t v = 0; v < full_n_; ++v) {
      if (pivot_[v] < 0) {
        index_[v] = static_cast<int>(kept_.size());
        kept_.push_back(static_cast<std::uint32_t>(v));
      }
    }
    // y_v = constant_[v] + sum coeff * z_u
    constant_.assign(full_n_, 0.0);
    expr_.assign(full_n_, {});
    for (std::size_t v = 0; v < full_n_; ++v) {
      if (pivot_[v] < 0) continue;
      const auto& e = p.equalities[static_cast<std::size_t>(pivot_[v])];
      double av = 0.0;
      for (const auto& [var, a] : e.coeffs) {
        if (var == v) av += a;
      }
      constant_[v] = -e.offset / av;
      for (const auto& [var, a] : e.coeffs) {
        if (var != v) expr_[v].emplace_back(static_cast<std::uint32_t>(index_[var]), -a / av);
      }
    }

    reduced_.num_vars = kept_.size();
    reduced_.objective = substitute(p.objective);
    reduced_.inequalities.reserve(p.inequalities.size());
    for (const auto& c : p.inequalities) reduced_.inequalities.push_back(substitute(c));
    reduced_.inequality_labels = p.inequality_labels;
    for (std::size_t r = 0; r < p.equalities.size(); ++r) {
      if (row_used[r]) continue;
      AffineRow row{{}, p.equalities[r].offset};
      for (const auto& [var, a] : p.equalities[r].coeffs) {
        row.coeffs.emplace_back(static_cast<std::uint32_t>(index_[var]), a);
      }
      reduced_.equalities.push_back(std::move(row));
      reduced_.equality_labels.push_back(p.equality_labels.at(r));
    }
  }

  const ConvexLogProblem& reduced() const noexcept { return reduced_; }

  Eigen::VectorXd restrict(const Eigen::VectorXd& y) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(kept_.size()));
    for (std::size_t k = 0; k < kept_.size(); ++k) z[static_cast<Eigen::Index>(k)] = y[kept_[k]];
    return z;
  }

  Eigen::VectorXd expand(const Eigen::VectorXd& z) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(full_n_));
    for (std::size_t v = 0; v < full_n_; ++v) {
      const auto iv = static_cast<Eigen::Index>(v);
      if (pivot_[v] < 0) {
        y[iv] = z[index_[v]];
        continue;
      }
      double acc = constant_[v];
      for (const auto& [u, c] : expr_[v]) acc += c * z[u];
      y[iv] = acc;
    }
    return y;
  }

 private:
  LogSumExp substitute(const LogSumExp& f) const {
    auto terms = f.terms();
    for (auto& t : terms) {
      std::map<std::uint32_t, double> merged;
      for (const auto& [var, a] : t.exponents) {
        if (pivot_[var] < 0) {
          merged[static_cast<std::uint32_t>(index_[var])] += a;
          continue;
        }
        t.offset += a * constant_[var];
        for (const auto& [u, c] : expr_[var]) merged[u] += a * c;
      }
      t.exponents.assign(merged.begin(), merged.end());
    }
    return LogSumExp(terms);
  }

  std::size_t full_n_;
  std::vector<int> pivot_;
  std::vector<int> index_;
  std::vector<std::uint32_t> kept_;
  std::vector<double> constant_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> expr_;
  ConvexLogProblem reduced_;
};

class BarrierSolver {
 public:
  BarrierSolver(const ConvexLogProblem& problem, const SolverSettings& settings)
      : problem_(problem), settings_(settings), n_(problem.num_vars) {
    for (std::size_t i = 0; i < problem.inequalities.size(); ++i) {
      if (!problem.inequalities[i].support().empty()) active_.push_back(i);
    }
  }

  // Leaves log_point in the problem's own coordinates; the caller maps it
  // back and fills the assignment.
  GpSolution run(Eigen::VectorXd y) {
    GpSolution sol;
    auto finish = [&](GpStatus status, std::string message) {
      sol.status = status;
      sol.message = std::move(message);
      sol.log_point = y;
      sol.newton_steps = newton_steps_;
      sol.trace = std::move(trace_);
      return sol;
    };

    for (std::size_t i = 0; i < problem_.inequalities.size(); ++i) {
      const auto& c = problem_.inequalities[i];
      if (c.support().empty() && c.value(y) > settings_.primal_tolerance) {
        return finish(GpStatus::Infeasible, "constant constraint violated: " +
                                                problem_.inequality_labels[i]);
      }
    }
    if (!prepare_equalities(y)) {
      return finish(GpStatus::Infeasible, "inconsistent equality constraints");
    }

    // Phase 1: minimize s subject to g_i(y) <= s.
    double worst = max_constraint(y);
    if (!active_.empty() && worst >= -1e-9) {
      Eigen::VectorXd z(n_ + 1);
      z.head(n_) = y;
      z[static_cast<Eigen::Index>(n_)] = worst + 1.0;
      double t = settings_.initial_t;
      const double m = static_cast<double>(active_.size());
      bool feasible = false;
      for (int stage = 0; stage < settings_.max_stages; ++stage) {
        ++sol.stages;
        auto status = center(z, t, true);
        const double s = z[static_cast<Eigen::Index>(n_)];
        if (s < 0.0) {
          feasible = true;
          break;
        }
        if (status == Centering::Stalled || status == Centering::IterationCap) break;
        if (s - m / t > 0.0) {
          y = z.head(n_);
          return finish(GpStatus::Infeasible, "phase 1 certified no strictly feasible point");
        }
        if (m / t < settings_.primal_tolerance) break;
        t *= settings_.barrier_multiplier;
      }
      y = z.head(n_);
      if (!feasible) {
        return finish(GpStatus::Infeasible, "phase 1 could not reach the interior");
      }
    }

    // Phase 2: barrier path following.
    const double m = static_cast<double>(active_.size());
    double t = settings_.initial_t;
    for (int stage = 0; stage < settings_.max_stages; ++stage) {
      ++sol.stages;
      const auto status = center(y, t, false);
      if (status == Centering::Unbounded) {
        return finish(GpStatus::Unbounded, "objective decreases without bound");
      }
      if (settings_.record_trace) trace_.stage_objectives.push_back(problem_.objective.value(y));
      if (status == Centering::IterationCap) {
        sol.duality_gap = m / t;
        fill_multipliers(sol, y, t);
        return finish(GpStatus::MaxIterations, "Newton iteration cap reached");
      }
      if (m / t < settings_.primal_tolerance || m == 0.0) {
        sol.duality_gap = m / t;
        fill_multipliers(sol, y, t);
        return finish(GpStatus::Optimal, "");
      }
      t *= settings_.barrier_multiplier;
    }
    sol.duality_gap = m / t;
    fill_multipliers(sol, y, t);
    return finish(GpStatus::MaxIterations, "barrier stage cap reached");
  }

 private:
  enum class Centering { Converged, IterationCap, Stalled, Unbounded };

  double max_constraint(const Eigen::VectorXd& y) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i : active_) worst = std::max(worst, problem_.inequalities[i].value(y));
    return worst;
  }

  // Keeps an independent subset of the equality rows, checks the rest for
  // consistency and projects y onto the affine set.
  bool prepare_equalities(Eigen::VectorXd& y) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < problem_.equalities.size(); ++j) {
      const auto& e = problem_.equalities[j];
      if (e.coeffs.empty()) {
        if (std::abs(e.offset) > settings_.equality_tolerance) return false;
        continue;
      }
      rows.push_back(j);
    }
    if (rows.empty()) return true;

    const auto p = static_cast<Eigen::Index>(rows.size());
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd ft = Eigen::MatrixXd::Zero(n, p);
    Eigen::VectorXd rhs(p);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto& e = problem_.equalities[rows[static_cast<std::size_t>(r)]];
      for (const auto& [var, a] : e.coeffs) ft(var, r) += a;
      rhs[r] = -e.offset;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ft);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < rank; ++k) keep.push_back(qr.colsPermutation().indices()[k]);
    std::sort(keep.begin(), keep.end());

    const auto q = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd kept(n, q);
    Eigen::VectorXd kept_rhs(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      kept.col(k) = ft.col(keep[static_cast<std::size_t>(k)]);
      kept_rhs[k] = rhs[keep[static_cast<std::size_t>(k)]];
    }
    // y <- y - F^T (F F^T)^-1 (F y - g)
    const Eigen::MatrixXd gram = kept.transpose() * kept;
    const Eigen::VectorXd resid = kept.transpose() * y - kept_rhs;
    y -= kept * gram.ldlt().solve(resid);

    const Eigen::VectorXd all = ft.transpose() * y - rhs;
    for (Eigen::Index r = 0; r < p; ++r) {
      if (std::abs(all[r]) > 1e3 * settings_.equality_tolerance * (1.0 + std::abs(rhs[r]))) {
        return false;
      }
    }
    eq_ = SpMat(q, n);
    std::vector<Triplet> trips;
    for (Eigen::Index k = 0; k < q; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (kept(i, k) != 0.0) trips.emplace_back(k, i, kept(i, k));
      }
    }
    eq_.setFromTriplets(trips.begin(), trips.end());
    return true;
  }

  // Barrier objective; +inf outside the domain.
  double barrier_value(const Eigen::VectorXd& x, double t, bool phase1) const {
    const double s = phase1 ? x[static_cast<Eigen::Index>(n_)] : 0.0;
    double acc = phase1 ? t * s : t * problem_.objective.value(x);
    for (std::size_t i : active_) {
      const double d = s - problem_.inequalities[i].value(x);
      if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
      acc -= std::log(d);
    }
    return acc;
  }

  void barrier_derivatives(const Eigen::VectorXd& x, double t, bool phase1,
                           Eigen::VectorXd& grad, std::vector<Triplet>& trips) {
    const auto dim = static_cast<Eigen::Index>(phase1 ? n_ + 1 : n_);
    const auto sidx = static_cast<Eigen::Index>(n_);
    grad = Eigen::VectorXd::Zero(dim);
    trips.clear();
    // Explicit diagonal keeps the sparsity pattern fixed under regularization.
    for (Eigen::Index i = 0; i < dim; ++i) trips.emplace_back(i, i, 0.0);
    const double s = phase1 ? x[sidx] : 0.0;

    if (phase1) {
      grad[sidx] += t;
    } else {
      const auto& sup = problem_.objective.support();
      problem_.objective.derivatives(x, g_, h_);
      const std::size_t d = sup.size();
      for (std::size_t a = 0; a < d; ++a) {
        grad[sup[a]] += t * g_[a];
        for (std::size_t b = 0; b < d; ++b) trips.emplace_back(sup[b], sup[a], t * h_[a * d + b]);
      }
    }
    for (std::size_t i : active_) {
      const auto& c = problem_.inequalities[i];
      const auto& sup = c.support();
      const double v = c.derivatives(x, g_, h_);
      const double dist = s - v;
      const double inv = 1.0 / dist;
      const double inv2 = inv * inv;
      const std::size_t d = sup.size();
      for (std::size_t a = 0; a < d; ++a) {
        grad[sup[a]] += g_[a] * inv;
        for (std::size_t b = 0; b < d; ++b) {
          trips.emplace_back(sup[b], sup[a], h_[a * d + b] * inv + g_[a] * g_[b] * inv2);
        }
      }
      if (phase1) {
        grad[sidx] -= inv;
        for (std::size_t a = 0; a < d; ++a) {
          trips.emplace_back(sup[a], sidx, -g_[a] * inv2);
          trips.emplace_back(sidx, sup[a], -g_[a] * inv2);
        }
        trips.emplace_back(sidx, sidx, inv2);
      }
    }
  }

  // Solves [H F^T; F 0] [dx; w] = [-grad; 0].
  bool newton_direction(const SpMat& hess, const Eigen::VectorXd& grad, bool phase1,
                        Eigen::VectorXd& dx) {
    const auto dim = hess.rows();
    double reg = 0.0;
    const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt) {
      SpMat h = hess;
      if (reg > 0.0) {
        for (Eigen::Index i = 0; i < dim; ++i) h.coeffRef(i, i) += reg;
      }
      if (!pattern_ready_ || pattern_dim_ != dim) {
        ldlt_.analyzePattern(h);
        pattern_ready_ = true;
        pattern_dim_ = dim;
      }
      ldlt_.factorize(h);
      const bool ok = ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() > 0.0).all();
      if (ok) break;
      reg = reg == 0.0 ? 1e-12 * scale : reg * 100.0;
      if (attempt == 7) return false;
    }
    const Eigen::VectorXd u = ldlt_.solve(-grad);
    if (eq_.rows() == 0) {
      dx = u;
      return dx.allFinite();
    }
    SpMat f = eq_;
    if (phase1) f.conservativeResize(eq_.rows(), dim);
    const Eigen::MatrixXd ft = Eigen::MatrixXd(f.transpose());
    const Eigen::MatrixXd x = ldlt_.solve(ft);
    const Eigen::MatrixXd schur = f * x;
    const Eigen::VectorXd w = schur.ldlt().solve(f * u);
    dx = u - x * w;
    return dx.allFinite();
  }

  Centering center(Eigen::VectorXd& x, double t, bool phase1) {
    std::vector<Triplet> trips;
    Eigen::VectorXd grad;
    Eigen::VectorXd dx;
    const auto dim = x.size();
    if (settings_.record_trace) trace_.decrements.emplace_back();
    double value = barrier_value(x, t, phase1);
    for (int it = 0; it < settings_.max_newton_per_stage; ++it) {
      barrier_derivatives(x, t, phase1, grad, trips);
      SpMat hess(dim, dim);
      hess.setFromTriplets(trips.begin(), trips.end());
      if (!newton_direction(hess, grad, phase1, dx)) return Centering::Stalled;
      ++newton_steps_;
      const double slope = grad.dot(dx);
      const double decrement = -slope / 2.0;
      if (settings_.record_trace) trace_.decrements.back().push_back(decrement);
      // A decrement below the resolution of a barrier value of size t * f
      // carries no information.
      if (decrement <= std::max(settings_.newton_tolerance, 1e-14 * std::abs(value))) {
        // The line search cannot see progress at this size, but a full step
        // still sharpens the point (and the multiplier estimates built on it).
        if (decrement > settings_.newton_tolerance) {
          Eigen::VectorXd polished = x + dx;
          const double v = barrier_value(polished, t, phase1);
          if (std::isfinite(v)) x = std::move(polished);
        }
        return Centering::Converged;
      }

      double step = 1.0;
      Eigen::VectorXd trial;
      double trial_value = 0.0;
      while (true) {
        trial = x + step * dx;
        trial_value = barrier_value(trial, t, phase1);
        if (trial_value <= value + settings_.line_search_alpha * step * slope) break;
        step *= settings_.line_search_beta;
        if (step < 1e-20) return Centering::Stalled;
      }
      if (phase1) {
        // Phase 1 objectives are often unbounded below; stop on the segment
        // once the slack is safely negative instead of running off.
        const auto si = static_cast<Eigen::Index>(n_);
        const double target = -2.0 * settings_.phase1_margin;
        if (trial[si] < target && x[si] > target) {
          trial = x + (x[si] - target) / (x[si] - trial[si]) * (trial - x);
          trial[si] = target;
          x = std::move(trial);
          return Centering::Converged;
        }
      }
      x = std::move(trial);
      value = trial_value;
      if (!phase1 && (x.head(n_).cwiseAbs().maxCoeff() > kUnboundedLog ||
                      problem_.objective.value(x) < -kUnboundedLog)) {
        return Centering::Unbounded;
      }
      if (phase1 && x[static_cast<Eigen::Index>(n_)] < -settings_.phase1_margin) {
        return Centering::Converged;
      }
    }
    return Centering::IterationCap;
  }

  void fill_multipliers(GpSolution& sol, const Eigen::VectorXd& y, double t) const {
    sol.inequality_multipliers =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem_.inequalities.size()));
    for (std::size_t i : active_) {
      const double d = -problem_.inequalities[i].value(y);
      sol.inequality_multipliers[static_cast<Eigen::Index>(i)] = 1.0 / (t * d);
    }
  }

  const ConvexLogProblem& problem_;
  const SolverSettings& settings_;
  std::size_t n_;
  std::vector<std::size_t> active_;
  SpMat eq_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool pattern_ready_ = false;
  Eigen::Index pattern_dim_ = 0;
  std::vector<double> g_;
  std::vector<double> h_;
  int newton_steps_ = 0;
  GpTrace trace_;
};

}  // namespace

GpSolution solve(const ConvexLogProblem& problem, const std::shared_ptr<const VarTable>& vars,
                 const Eigen::VectorXd& log_start, const SolverSettings& settings) {
  if (static_cast<std::size_t>(log_start.size()) != problem.num_vars) {
    throw DomainError("start point does not match the problem dimension");
  }
  const Elimination elim(problem);
  BarrierSolver solver(elim.reduced(), settings);
  GpSolution sol = solver.run(elim.restrict(log_start));
  sol.log_point = elim.expand(sol.log_point);
  sol.objective = std::exp(problem.objective.value(sol.log_point));
  sol.assignment = Assignment(vars);
  for (std::size_t i = 0; i < problem.num_vars; ++i) {
    const double x = std::exp(std::clamp(sol.log_point[static_cast<Eigen::Index>(i)],
                                         -kUnboundedLog, kUnboundedLog));
    sol.assignment.set(VarId{static_cast<std::uint32_t>(i)}, x);
  }
  return sol;
}

GpSolution solve(const GpProblem& gp, const Assignment& start, const SolverSettings& settings) {
  const ConvexLogProblem problem = to_log_convex(gp);
  Eigen::VectorXd y(static_cast<Eigen::Index>(problem.num_vars));
  for (std::uint32_t i = 0; i < problem.num_vars; ++i) y[i] = std::log(start.at(VarId{i}));
  return solve(problem, gp.vars, y, settings);
}

KktReport kkt_report(const GpProblem& gp, const GpSolution& solution, double tolerance) {
  const ConvexLogProblem problem = to_log_convex(gp);
  KktReport report;
  const auto n = static_cast<Eigen::Index>(problem.num_vars);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = std::log(solution.assignment.at(VarId{static_cast<std::uint32_t>(i)}));
  }

  std::vector<double> g;
  std::vector<double> h;
  Eigen::VectorXd stationarity = Eigen::VectorXd::Zero(n);
  problem.objective.derivatives(y, g, h);
  for (std::size_t a = 0; a < g.size(); ++a) stationarity[problem.objective.support()[a]] += g[a];

  const bool have_multipliers =
      solution.inequality_multipliers.size() == static_cast<Eigen::Index>(problem.inequalities.size());
  for (std::size_t i = 0; i < problem.inequalities.size(); ++i) {
    const auto& c = problem.inequalities[i];
    const double v = c.value(y);
    report.primal_inequality = std::max(report.primal_inequality, std::exp(v) - 1.0);
    if (!have_multipliers) continue;
    const double lambda = solution.inequality_multipliers[static_cast<Eigen::Index>(i)];
    report.dual_infeasibility = std::max(report.dual_infeasibility, -lambda);
    report.complementarity = std::max(report.complementarity, std::abs(lambda * v));
    if (c.support().empty()) continue;
    c.derivatives(y, g, h);
    for (std::size_t a = 0; a < g.size(); ++a) stationarity[c.support()[a]] += lambda * g[a];
  }

  const auto p = static_cast<Eigen::Index>(problem.equalities.size());
  if (p > 0) {
    Eigen::MatrixXd ft = Eigen::MatrixXd::Zero(n, p);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto& e = problem.equalities[static_cast<std::size_t>(r)];
      double v = e.offset;
      for (const auto& [var, a] : e.coeffs) {
        ft(var, r) += a;
        v += a * y[var];
      }
      report.primal_equality = std::max(report.primal_equality, std::abs(std::exp(v) - 1.0));
    }
    const Eigen::VectorXd nu = ft.colPivHouseholderQr().solve(-stationarity);
    stationarity += ft * nu;
  }
  report.stationarity = n > 0 ? stationarity.cwiseAbs().maxCoeff() : 0.0;
  report.optimal = report.primal_inequality <= tolerance && report.primal_equality <= tolerance &&
                   report.stationarity <= tolerance && report.complementarity <= tolerance &&
                   report.dual_infeasibility <= tolerance;
  if (!report.optimal) {
    if (report.stationarity > tolerance) {
      report.note = "stationarity violated: no optimum certified";
    } else {
      report.note = "primal or complementarity residual above tolerance";
    }
  }
  return report;
}

}  // namespace decept
