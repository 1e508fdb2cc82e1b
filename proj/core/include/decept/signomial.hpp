#pragma once

// Monomials, posynomials and signomials over strictly positive variables.
//
// Variables are interned names owned by a VarTable. Expressions refer to
// them through VarId handles and are immutable once built.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "decept/error.hpp"

namespace decept {

struct VarId {
  std::uint32_t index = 0;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

class VarTable {
 public:
  /// Returns the existing id for `name`, or registers a new one.
  VarId intern(std::string_view name);
  /// Registers `name`; throws InvalidModel if it already exists.
  VarId declare(std::string_view name);
  std::optional<VarId> find(std::string_view name) const;
  const std::string& name(VarId id) const { return names_.at(id.index); }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

/// Strictly positive values for a subset of the variables in a table.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::shared_ptr<const VarTable> vars);

  void set(VarId id, double value);
  bool contains(VarId id) const noexcept {
    return id.index < values_.size() && values_[id.index] > 0.0;
  }
  /// Throws UnboundVariable if `id` has no value.
  double at(VarId id) const;
  std::string name_of(VarId id) const;
  const std::shared_ptr<const VarTable>& vars() const noexcept { return vars_; }
  /// Raw storage indexed by VarId; 0 marks an unbound slot.
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::shared_ptr<const VarTable> vars_;
  std::vector<double> values_;
};

/// Terms with a coefficient below this are rejected so logarithms stay finite.
inline constexpr double kMinCoefficient = 1e-300;

/// c * prod x_i^a_i with c > 0. Exponents are kept sorted by VarId, zero
/// exponents are dropped and repeated variables merged.
class Monomial {
 public:
  using Factor = std::pair<VarId, double>;

  Monomial() = default;
  explicit Monomial(double coefficient, std::vector<Factor> exponents = {});

  static Monomial constant(double c) { return Monomial(c); }
  static Monomial variable(VarId id, double exponent = 1.0) {
    return Monomial(1.0, {{id, exponent}});
  }

  double coefficient() const noexcept { return coefficient_; }
  std::span<const Factor> exponents() const noexcept { return exponents_; }
  double exponent_of(VarId id) const noexcept;
  bool is_constant() const noexcept { return exponents_.empty(); }

  double evaluate(const Assignment& point) const;
  double log_evaluate(const Assignment& point) const;

  Monomial operator*(const Monomial& other) const;
  Monomial operator/(const Monomial& other) const;
  Monomial scaled(double factor) const;
  Monomial pow(double p) const;
  bool same_powers(const Monomial& other) const noexcept;

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  double coefficient_ = 1.0;
  std::vector<Factor> exponents_;
};

struct SignedMonomial {
  int sign = 1;  // +1 or -1
  Monomial magnitude;
  friend bool operator==(const SignedMonomial&, const SignedMonomial&) = default;
};

/// A nonempty sum of monomials.
class Posynomial {
 public:
  Posynomial() = default;
  Posynomial(Monomial m);  // NOLINT(google-explicit-constructor)
  explicit Posynomial(std::vector<Monomial> terms);

  std::span<const Monomial> terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  bool is_monomial() const noexcept { return terms_.size() == 1; }

  void add(Monomial m) { terms_.push_back(std::move(m)); }
  Posynomial operator+(const Posynomial& other) const;
  Posynomial operator*(const Monomial& m) const;
  Posynomial operator/(const Monomial& m) const { return *this * m.pow(-1.0); }

  friend bool operator==(const Posynomial&, const Posynomial&) = default;

 private:
  std::vector<Monomial> terms_;
};

/// A signed sum of monomials; the empty sum is zero.
class SignomialExpr {
 public:
  SignomialExpr() = default;
  explicit SignomialExpr(std::vector<SignedMonomial> terms) : terms_(std::move(terms)) {}
  SignomialExpr(const Posynomial& p);  // NOLINT(google-explicit-constructor)

  std::span<const SignedMonomial> terms() const noexcept { return terms_; }
  bool is_posynomial() const noexcept;
  /// Throws DomainError if any term is negative or the sum is empty.
  Posynomial to_posynomial() const;

  SignomialExpr operator+(const SignomialExpr& other) const;
  SignomialExpr operator-(const SignomialExpr& other) const;

 private:
  std::vector<SignedMonomial> terms_;
};

double evaluate(const SignomialExpr& expr, const Assignment& point);
double evaluate(const Posynomial& expr, const Assignment& point);

/// Exact partial derivatives, keyed by every variable that appears in expr.
std::vector<std::pair<VarId, double>> gradient(const SignomialExpr& expr,
                                               const Assignment& point);

/// Best local monomial fit: matches value and gradient of f at `point`.
Monomial monomial_approximation(const Posynomial& f, const Assignment& point);

/// Merges terms with identical exponent vectors. Signed terms that cancel
/// exactly are removed.
Posynomial simplify(const Posynomial& p);
SignomialExpr simplify(const SignomialExpr& e);

/// Canonical text `+c * a^1 * b^-2 + ...`: factors ordered by name, terms
/// ordered by their factor text, numbers in shortest round-trip form.
std::string to_text(const SignomialExpr& expr, const VarTable& vars);
std::string to_text(const Monomial& m, const VarTable& vars);

std::string format_number(double value);

}  // namespace decept
