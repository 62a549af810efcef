#pragma once

// Small expression trees over indexed variables, with point and interval
// evaluation, symbolic differentiation and an HC4-revise contractor.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ddc/interval.hpp"

namespace ddc::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sqrt, Sin, Cos, Exp, Min, Max };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;    // Const
  std::size_t var = 0;   // Var
  int exponent = 0;      // Pow
  Expr a, b;
};

Expr constant(double v);
Expr var(std::size_t index);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
inline Expr operator+(const Expr& a, double b) { return a + constant(b); }
inline Expr operator+(double a, const Expr& b) { return constant(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - constant(b); }
inline Expr operator-(double a, const Expr& b) { return constant(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * constant(b); }
inline Expr operator*(double a, const Expr& b) { return constant(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / constant(b); }

Expr pow(const Expr& a, int n);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr min(const Expr& a, const Expr& b);
Expr max(const Expr& a, const Expr& b);

bool is_constant(const Expr& e, double v);
/// Largest variable index used plus one (0 for constant trees).
std::size_t arity(const Expr& e);

double eval(const Expr& e, std::span<const double> vars);
/// Interval extension. Division by a zero-containing interval and sqrt over a
/// partly negative argument are handled conservatively; returns nullopt only
/// when the argument of sqrt is entirely negative.
std::optional<Interval> eval(const Expr& e, std::span<const Interval> vars);

/// Symbolic partial derivative. Throws DomainError for min/max.
Expr diff(const Expr& e, std::size_t var);

std::string to_string(const Expr& e);

enum class Relation { GreaterEq, Equal, LessEq };

/// expr (relation) 0.
struct Constraint {
  Expr expr;
  Relation relation = Relation::GreaterEq;
};

Interval relation_target(Relation r);

enum class Revise { Unchanged, Contracted, Empty };

/// One forward-backward pass of HC4-revise for e ∈ target. Narrows domains in
/// place; never removes a point satisfying the constraint.
Revise hc4_revise(const Expr& e, const Interval& target, std::vector<Interval>& domains);

/// Round-robin HC4-revise over all constraints until no domain shrinks by more
/// than rel_tol (relative to its width) or max_sweeps is reached.
Revise propagate(const std::vector<Constraint>& cs, std::vector<Interval>& domains,
                 int max_sweeps = 20, double rel_tol = 1e-9);

}  // namespace ddc::expr
