#include "decept/signomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace decept {

VarId VarTable::intern(std::string_view name) {
  if (auto id = find(name)) return *id;
  return declare(name);
}

VarId VarTable::declare(std::string_view name) {
  std::string key(name);
  if (lookup_.contains(key)) throw InvalidModel("variable declared twice: " + key);
  const auto index = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  lookup_.emplace(std::move(key), index);
  return VarId{index};
}

std::optional<VarId> VarTable::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return VarId{it->second};
}

Assignment::Assignment(std::shared_ptr<const VarTable> vars) : vars_(std::move(vars)) {
  if (vars_) values_.assign(vars_->size(), 0.0);
}

void Assignment::set(VarId id, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError("assignment value for '" + name_of(id) +
                      "' must be finite and strictly positive, got " + format_number(value));
  }
  if (id.index >= values_.size()) values_.resize(id.index + 1, 0.0);
  values_[id.index] = value;
}

double Assignment::at(VarId id) const {
  if (!contains(id)) throw UnboundVariable(name_of(id));
  return values_[id.index];
}

std::string Assignment::name_of(VarId id) const {
  if (vars_ && id.index < vars_->size()) return vars_->name(id);
  return "#" + std::to_string(id.index);
}

// ---------------------------------------------------------------------------

Monomial::Monomial(double coefficient, std::vector<Factor> exponents)
    : coefficient_(coefficient), exponents_(std::move(exponents)) {
  if (!std::isfinite(coefficient_) || coefficient_ < kMinCoefficient) {
    throw DomainError("monomial coefficient must be finite and >= 1e-300, got " +
                      format_number(coefficient_));
  }
  std::sort(exponents_.begin(), exponents_.end(),
            [](const Factor& a, const Factor& b) { return a.first < b.first; });
  std::vector<Factor> merged;
  merged.reserve(exponents_.size());
  for (const auto& [id, a] : exponents_) {
    if (!std::isfinite(a)) throw DomainError("monomial exponent must be finite");
    if (!merged.empty() && merged.back().first == id) {
      merged.back().second += a;
    } else {
      merged.emplace_back(id, a);
    }
  }
  std::erase_if(merged, [](const Factor& f) { return f.second == 0.0; });
  exponents_ = std::move(merged);
}

double Monomial::exponent_of(VarId id) const noexcept {
  auto it = std::lower_bound(exponents_.begin(), exponents_.end(), id,
                             [](const Factor& f, VarId v) { return f.first < v; });
  return (it != exponents_.end() && it->first == id) ? it->second : 0.0;
}

double Monomial::log_evaluate(const Assignment& point) const {
  double acc = std::log(coefficient_);
  for (const auto& [id, a] : exponents_) acc += a * std::log(point.at(id));
  return acc;
}

double Monomial::evaluate(const Assignment& point) const {
  double acc = coefficient_;
  for (const auto& [id, a] : exponents_) {
    const double x = point.at(id);
    acc *= (a == 1.0) ? x : std::pow(x, a);
  }
  return acc;
}

Monomial Monomial::operator*(const Monomial& other) const {
  std::vector<Factor> f(exponents_);
  f.insert(f.end(), other.exponents_.begin(), other.exponents_.end());
  return Monomial(coefficient_ * other.coefficient_, std::move(f));
}

Monomial Monomial::operator/(const Monomial& other) const { return *this * other.pow(-1.0); }

Monomial Monomial::scaled(double factor) const {
  return Monomial(coefficient_ * factor, exponents_);
}

Monomial Monomial::pow(double p) const {
  std::vector<Factor> f(exponents_);
  for (auto& [id, a] : f) a *= p;
  return Monomial(std::pow(coefficient_, p), std::move(f));
}

bool Monomial::same_powers(const Monomial& other) const noexcept {
  return exponents_ == other.exponents_;
}

// ---------------------------------------------------------------------------

Posynomial::Posynomial(Monomial m) { terms_.push_back(std::move(m)); }

Posynomial::Posynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) {}

Posynomial Posynomial::operator+(const Posynomial& other) const {
  std::vector<Monomial> t(terms_);
  t.insert(t.end(), other.terms_.begin(), other.terms_.end());
  return Posynomial(std::move(t));
}

Posynomial Posynomial::operator*(const Monomial& m) const {
  std::vector<Monomial> t;
  t.reserve(terms_.size());
  for (const auto& term : terms_) t.push_back(term * m);
  return Posynomial(std::move(t));
}

SignomialExpr::SignomialExpr(const Posynomial& p) {
  terms_.reserve(p.size());
  for (const auto& m : p.terms()) terms_.push_back({+1, m});
}

bool SignomialExpr::is_posynomial() const noexcept {
  return !terms_.empty() &&
         std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.sign > 0; });
}

Posynomial SignomialExpr::to_posynomial() const {
  if (!is_posynomial()) throw DomainError("signomial has negative or no terms");
  std::vector<Monomial> t;
  t.reserve(terms_.size());
  for (const auto& s : terms_) t.push_back(s.magnitude);
  return Posynomial(std::move(t));
}

SignomialExpr SignomialExpr::operator+(const SignomialExpr& other) const {
  std::vector<SignedMonomial> t(terms_);
  t.insert(t.end(), other.terms_.begin(), other.terms_.end());
  return SignomialExpr(std::move(t));
}

SignomialExpr SignomialExpr::operator-(const SignomialExpr& other) const {
  std::vector<SignedMonomial> t(terms_);
  for (const auto& s : other.terms_) t.push_back({-s.sign, s.magnitude});
  return SignomialExpr(std::move(t));
}

// ---------------------------------------------------------------------------

double evaluate(const SignomialExpr& expr, const Assignment& point) {
  double acc = 0.0;
  for (const auto& t : expr.terms()) acc += t.sign * t.magnitude.evaluate(point);
  return acc;
}

double evaluate(const Posynomial& expr, const Assignment& point) {
  double acc = 0.0;
  for (const auto& m : expr.terms()) acc += m.evaluate(point);
  return acc;
}

std::vector<std::pair<VarId, double>> gradient(const SignomialExpr& expr,
                                               const Assignment& point) {
  std::map<VarId, double> grad;
  for (const auto& t : expr.terms()) {
    const double value = t.sign * t.magnitude.evaluate(point);
    for (const auto& [id, a] : t.magnitude.exponents()) {
      // d/dx (c x^a ...) = a * term / x
      grad[id] += a * value / point.at(id);
    }
  }
  return {grad.begin(), grad.end()};
}

Monomial monomial_approximation(const Posynomial& f, const Assignment& point) {
  if (f.empty()) throw DomainError("monomial approximation of an empty posynomial");
  if (f.is_monomial()) return f.terms().front();

  // Work with term values relative to the largest so that huge or tiny
  // coefficients do not overflow before normalization.
  std::vector<double> logs;
  logs.reserve(f.size());
  for (const auto& m : f.terms()) logs.push_back(m.log_evaluate(point));
  const double shift = *std::max_element(logs.begin(), logs.end());
  double scaled_sum = 0.0;
  for (double& l : logs) {
    l = std::exp(l - shift);
    scaled_sum += l;
  }
  if (!(scaled_sum > 0.0)) throw InvalidModel("posynomial evaluates to zero");
  const double log_value = shift + std::log(scaled_sum);

  // a_i = sum_k weight_k * a_ik, weights are the term shares of f(point).
  std::map<VarId, double> exps;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double weight = logs[k] / scaled_sum;
    for (const auto& [id, a] : f.terms()[k].exponents()) exps[id] += weight * a;
  }
  double log_coef = log_value;
  std::vector<Monomial::Factor> factors;
  factors.reserve(exps.size());
  for (const auto& [id, a] : exps) {
    log_coef -= a * std::log(point.at(id));
    factors.emplace_back(id, a);
  }
  return Monomial(std::exp(log_coef), std::move(factors));
}

Posynomial simplify(const Posynomial& p) {
  std::vector<Monomial> out;
  for (const auto& m : p.terms()) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Monomial& o) { return o.same_powers(m); });
    if (it == out.end()) {
      out.push_back(m);
    } else {
      *it = Monomial(it->coefficient() + m.coefficient(),
                     {it->exponents().begin(), it->exponents().end()});
    }
  }
  return Posynomial(std::move(out));
}

SignomialExpr simplify(const SignomialExpr& e) {
  struct Acc {
    std::vector<Monomial::Factor> powers;
    double sum;
  };
  std::vector<Acc> acc;
  for (const auto& t : e.terms()) {
    std::vector<Monomial::Factor> powers(t.magnitude.exponents().begin(),
                                         t.magnitude.exponents().end());
    const double c = t.sign * t.magnitude.coefficient();
    auto it = std::find_if(acc.begin(), acc.end(), [&](const Acc& a) { return a.powers == powers; });
    if (it == acc.end()) {
      acc.push_back({std::move(powers), c});
    } else {
      it->sum += c;
    }
  }
  std::vector<SignedMonomial> out;
  for (auto& a : acc) {
    if (std::abs(a.sum) < kMinCoefficient) continue;
    out.push_back({a.sum > 0 ? 1 : -1, Monomial(std::abs(a.sum), std::move(a.powers))});
  }
  return SignomialExpr(std::move(out));
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

namespace {

std::string factor_text(const Monomial& m, const VarTable& vars) {
  std::vector<std::pair<std::string, double>> named;
  named.reserve(m.exponents().size());
  for (const auto& [id, a] : m.exponents()) named.emplace_back(vars.name(id), a);
  std::sort(named.begin(), named.end());
  std::string out;
  for (const auto& [name, a] : named) {
    out += " * ";
    out += name;
    out += '^';
    out += format_number(a);
  }
  return out;
}

}  // namespace

std::string to_text(const Monomial& m, const VarTable& vars) {
  return "+" + format_number(m.coefficient()) + factor_text(m, vars);
}

std::string to_text(const SignomialExpr& expr, const VarTable& vars) {
  if (expr.terms().empty()) return "0";
  struct Row {
    std::string factors;
    std::string text;
  };
  std::vector<Row> rows;
  rows.reserve(expr.terms().size());
  for (const auto& t : expr.terms()) {
    auto f = factor_text(t.magnitude, vars);
    rows.push_back({f, (t.sign > 0 ? "+" : "-") + format_number(t.magnitude.coefficient()) + f});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.factors, a.text) < std::tie(b.factors, b.text);
  });
  std::string out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) out += ' ';
    out += rows[i].text;
  }
  return out;
}

}  // namespace decept
