#include "ddc/expr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace ddc::expr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

Expr make(Op op, Expr a, Expr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool is_const(const Expr& e) { return e->op == Op::Const; }

}  // namespace

Expr constant(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

Expr var(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  return n;
}

bool is_constant(const Expr& e, double v) { return is_const(e) && e->value == v; }

Expr operator+(const Expr& a, const Expr& b) {
  if (is_constant(a, 0.0)) return b;
  if (is_constant(b, 0.0)) return a;
  return make(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (is_constant(b, 0.0)) return a;
  if (is_constant(a, 0.0)) return -b;
  return make(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (is_constant(a, 0.0) || is_constant(b, 0.0)) return constant(0.0);
  if (is_constant(a, 1.0)) return b;
  if (is_constant(b, 1.0)) return a;
  return make(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (is_constant(a, 0.0)) return constant(0.0);
  if (is_constant(b, 1.0)) return a;
  return make(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (is_const(a)) return constant(-a->value);
  return make(Op::Neg, a);
}

Expr pow(const Expr& a, int n) {
  if (n == 0) return constant(1.0);
  if (n == 1) return a;
  auto e = std::make_shared<Node>();
  e->op = Op::Pow;
  e->exponent = n;
  e->a = a;
  return e;
}

Expr sqrt(const Expr& a) { return make(Op::Sqrt, a); }
Expr sin(const Expr& a) { return make(Op::Sin, a); }
Expr cos(const Expr& a) { return make(Op::Cos, a); }
Expr exp(const Expr& a) { return make(Op::Exp, a); }
Expr min(const Expr& a, const Expr& b) { return make(Op::Min, a, b); }
Expr max(const Expr& a, const Expr& b) { return make(Op::Max, a, b); }

std::size_t arity(const Expr& e) {
  if (!e) return 0;
  if (e->op == Op::Var) return e->var + 1;
  return std::max(arity(e->a), arity(e->b));
}

double eval(const Expr& e, std::span<const double> v) {
  switch (e->op) {
    case Op::Const: return e->value;
    case Op::Var:
      if (e->var >= v.size()) throw DimensionMismatch("expr: variable index out of range");
      return v[e->var];
    case Op::Add: return eval(e->a, v) + eval(e->b, v);
    case Op::Sub: return eval(e->a, v) - eval(e->b, v);
    case Op::Mul: return eval(e->a, v) * eval(e->b, v);
    case Op::Div: return eval(e->a, v) / eval(e->b, v);
    case Op::Neg: return -eval(e->a, v);
    case Op::Pow: return std::pow(eval(e->a, v), e->exponent);
    case Op::Sqrt: return std::sqrt(eval(e->a, v));
    case Op::Sin: return std::sin(eval(e->a, v));
    case Op::Cos: return std::cos(eval(e->a, v));
    case Op::Exp: return std::exp(eval(e->a, v));
    case Op::Min: return std::min(eval(e->a, v), eval(e->b, v));
    case Op::Max: return std::max(eval(e->a, v), eval(e->b, v));
  }
  return 0.0;
}

namespace {

std::optional<Interval> forward(Op op, const Node& n, const Interval& a, const Interval* b) {
  switch (op) {
    case Op::Add: return a + *b;
    case Op::Sub: return a - *b;
    case Op::Mul: return a * *b;
    case Op::Div:
      if (b->contains_zero()) return Interval::entire();
      return a / *b;
    case Op::Neg: return -a;
    case Op::Pow:
      if (n.exponent < 0 && a.contains_zero()) return Interval::entire();
      return pow(a, n.exponent);
    case Op::Sqrt:
      if (a.hi() < 0) return std::nullopt;
      return sqrt(a);
    case Op::Sin: return sin(a);
    case Op::Cos: return cos(a);
    case Op::Exp: return exp(a);
    case Op::Min: return min(a, *b);
    case Op::Max: return max(a, *b);
    default: break;
  }
  return Interval::entire();
}

}  // namespace

std::optional<Interval> eval(const Expr& e, std::span<const Interval> v) {
  switch (e->op) {
    case Op::Const: return Interval(e->value);
    case Op::Var:
      if (e->var >= v.size()) throw DimensionMismatch("expr: variable index out of range");
      return v[e->var];
    default: break;
  }
  const auto a = eval(e->a, v);
  if (!a) return std::nullopt;
  std::optional<Interval> b;
  if (e->b) {
    b = eval(e->b, v);
    if (!b) return std::nullopt;
  }
  return forward(e->op, *e, *a, b ? &*b : nullptr);
}

Expr diff(const Expr& e, std::size_t x) {
  switch (e->op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(e->var == x ? 1.0 : 0.0);
    case Op::Add: return diff(e->a, x) + diff(e->b, x);
    case Op::Sub: return diff(e->a, x) - diff(e->b, x);
    case Op::Mul: return diff(e->a, x) * e->b + e->a * diff(e->b, x);
    case Op::Div:
      return (diff(e->a, x) * e->b - e->a * diff(e->b, x)) / pow(e->b, 2);
    case Op::Neg: return -diff(e->a, x);
    case Op::Pow:
      return constant(e->exponent) * pow(e->a, e->exponent - 1) * diff(e->a, x);
    case Op::Sqrt: return diff(e->a, x) / (constant(2.0) * e);
    case Op::Sin: return cos(e->a) * diff(e->a, x);
    case Op::Cos: return -(sin(e->a) * diff(e->a, x));
    case Op::Exp: return e * diff(e->a, x);
    case Op::Min:
    case Op::Max: throw DomainError("expr: min/max are not differentiable");
  }
  return constant(0.0);
}

std::string to_string(const Expr& e) {
  std::ostringstream os;
  auto bin = [&](const char* s) {
    os << '(' << to_string(e->a) << ' ' << s << ' ' << to_string(e->b) << ')';
  };
  switch (e->op) {
    case Op::Const: os << e->value; break;
    case Op::Var: os << 'v' << e->var; break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Neg: os << "-" << to_string(e->a); break;
    case Op::Pow: os << to_string(e->a) << '^' << e->exponent; break;
    case Op::Sqrt: os << "sqrt(" << to_string(e->a) << ')'; break;
    case Op::Sin: os << "sin(" << to_string(e->a) << ')'; break;
    case Op::Cos: os << "cos(" << to_string(e->a) << ')'; break;
    case Op::Exp: os << "exp(" << to_string(e->a) << ')'; break;
    case Op::Min: os << "min(" << to_string(e->a) << ", " << to_string(e->b) << ')'; break;
    case Op::Max: os << "max(" << to_string(e->a) << ", " << to_string(e->b) << ')'; break;
  }
  return os.str();
}

Interval relation_target(Relation r) {
  switch (r) {
    case Relation::GreaterEq: return Interval::nonnegative();
    case Relation::Equal: return Interval(0.0);
    case Relation::LessEq: return Interval::nonpositive();
  }
  return Interval::entire();
}

namespace {

using rounding::next_down;
using rounding::next_up;

// Preimage of t under x -> x^n, intersected with a. nullopt means empty.
std::optional<Interval> pow_inverse(const Interval& a, const Interval& t, int n) {
  if (n <= 0) return a;
  if (n % 2 == 1) {
    const double lo = t.lo() == -kInf ? -kInf
                      : t.lo() >= 0  ? rounding::root_down(t.lo(), n)
                                     : -rounding::root_up(-t.lo(), n);
    const double hi = t.hi() == kInf ? kInf
                      : t.hi() >= 0  ? rounding::root_up(t.hi(), n)
                                     : -rounding::root_down(-t.hi(), n);
    return intersect(a, Interval(lo, hi));
  }
  if (t.hi() < 0) return std::nullopt;
  const double rlo = t.lo() <= 0 ? 0.0 : rounding::root_down(t.lo(), n);
  const double rhi = rounding::root_up(t.hi(), n);
  const auto pos = intersect(a, Interval(rlo, rhi));
  const auto neg = intersect(a, Interval(-rhi, -rlo));
  if (pos && neg) return hull(*pos, *neg);
  return pos ? pos : neg;
}

// Preimage under sin restricted to a, when a lies on one monotone branch.
std::optional<Interval> sin_inverse(const Interval& a, Interval t) {
  if (!a.is_bounded() || a.width() >= kPi) return a;
  const double k = std::round(a.mid() / kPi);
  const double c = k * kPi;
  const double margin = 1e-12 * (1.0 + std::fabs(c));
  if (a.lo() < c - 0.5 * kPi + margin || a.hi() > c + 0.5 * kPi - margin) return a;
  const bool odd = std::fmod(std::fabs(k), 2.0) == 1.0;
  const double ylo = std::max(-1.0, odd ? -t.hi() : t.lo());
  const double yhi = std::min(1.0, odd ? -t.lo() : t.hi());
  if (ylo > yhi) return std::nullopt;
  const double slack = 1e-14 * (1.0 + std::fabs(c));
  const double lo = next_down(c + std::asin(ylo), 2) - slack;
  const double hi = next_up(c + std::asin(yhi), 2) + slack;
  return intersect(a, Interval(lo, hi));
}

std::optional<Interval> cos_inverse(const Interval& a, Interval t) {
  if (!a.is_bounded() || a.width() >= kPi) return a;
  const double k = std::floor(a.mid() / kPi);
  const double c = k * kPi;
  const double margin = 1e-12 * (1.0 + std::fabs(c));
  if (a.lo() < c + margin || a.hi() > c + kPi - margin) return a;
  const bool odd = std::fmod(std::fabs(k), 2.0) == 1.0;
  // cos(c + s) = (-1)^k cos(s), s in [0, pi], acos decreasing.
  const double ylo = std::max(-1.0, odd ? -t.hi() : t.lo());
  const double yhi = std::min(1.0, odd ? -t.lo() : t.hi());
  if (ylo > yhi) return std::nullopt;
  const double slack = 1e-14 * (1.0 + std::fabs(c));
  const double lo = next_down(c + std::acos(yhi), 2) - slack;
  const double hi = next_up(c + std::acos(ylo), 2) + slack;
  return intersect(a, Interval(lo, hi));
}

class Hc4 {
 public:
  explicit Hc4(std::vector<Interval>& dom) : dom_(dom) {}

  bool forward_pass(const Expr& e) { return forward_node(e).has_value(); }

  // Returns false when a domain empties.
  bool backward(const Expr& e, const Interval& target) {
    auto& cur = val_[e.get()];
    const auto narrowed = intersect(cur, target);
    if (!narrowed) return false;
    cur = *narrowed;
    const Interval t = cur;
    switch (e->op) {
      case Op::Const: return true;
      case Op::Var: {
        const auto d = intersect(dom_[e->var], t);
        if (!d) return false;
        dom_[e->var] = *d;
        return true;
      }
      default: break;
    }
    const Interval a = val_[e->a.get()];
    const Interval b = e->b ? val_[e->b.get()] : Interval();
    switch (e->op) {
      case Op::Add: return backward(e->a, t - b) && backward(e->b, t - val_[e->a.get()]);
      case Op::Sub: return backward(e->a, t + b) && backward(e->b, val_[e->a.get()] - t);
      case Op::Mul: {
        if (!b.contains_zero() && !backward(e->a, t / b)) return false;
        const Interval na = val_[e->a.get()];
        if (!na.contains_zero()) return backward(e->b, t / na);
        return true;
      }
      case Op::Div: {
        if (b.contains_zero()) return true;
        if (!backward(e->a, t * b)) return false;
        const Interval na = val_[e->a.get()];
        if (!t.contains_zero()) return backward(e->b, na / t);
        return true;
      }
      case Op::Neg: return backward(e->a, -t);
      case Op::Pow: {
        const auto pre = pow_inverse(a, t, e->exponent);
        return pre && backward(e->a, *pre);
      }
      case Op::Sqrt: {
        if (t.hi() < 0) return false;
        const Interval tt(std::max(0.0, t.lo()), t.hi());
        return backward(e->a, pow(tt, 2));
      }
      case Op::Exp: {
        if (t.hi() < 0) return false;
        if (t.hi() == 0) return true;
        const double lo = t.lo() > 0 ? log(Interval(t.lo())).lo() : -kInf;
        const double hi = t.hi() == kInf ? kInf : log(Interval(t.hi())).hi();
        return backward(e->a, Interval(lo, hi));
      }
      case Op::Sin: {
        const auto pre = sin_inverse(a, t);
        return pre && backward(e->a, *pre);
      }
      case Op::Cos: {
        const auto pre = cos_inverse(a, t);
        return pre && backward(e->a, *pre);
      }
      case Op::Min: {
        const Interval floor(t.lo(), kInf);
        if (b.lo() > t.hi()) {
          if (!backward(e->a, t)) return false;
        } else if (!backward(e->a, floor)) {
          return false;
        }
        if (val_[e->a.get()].lo() > t.hi()) return backward(e->b, t);
        return backward(e->b, floor);
      }
      case Op::Max: {
        const Interval ceil(-kInf, t.hi());
        if (b.hi() < t.lo()) {
          if (!backward(e->a, t)) return false;
        } else if (!backward(e->a, ceil)) {
          return false;
        }
        if (val_[e->a.get()].hi() < t.lo()) return backward(e->b, t);
        return backward(e->b, ceil);
      }
      default: return true;
    }
  }

 private:
  std::optional<Interval> forward_node(const Expr& e) {
    std::optional<Interval> r;
    switch (e->op) {
      case Op::Const: r = Interval(e->value); break;
      case Op::Var:
        if (e->var >= dom_.size()) throw DimensionMismatch("expr: variable index out of range");
        r = dom_[e->var];
        break;
      default: {
        const auto a = forward_node(e->a);
        if (!a) return std::nullopt;
        std::optional<Interval> b;
        if (e->b) {
          b = forward_node(e->b);
          if (!b) return std::nullopt;
        }
        r = forward(e->op, *e, *a, b ? &*b : nullptr);
      }
    }
    if (r) val_[e.get()] = *r;
    return r;
  }

  std::vector<Interval>& dom_;
  std::unordered_map<const Node*, Interval> val_;
};

}  // namespace

Revise hc4_revise(const Expr& e, const Interval& target, std::vector<Interval>& domains) {
  const std::vector<Interval> before = domains;
  Hc4 h(domains);
  if (!h.forward_pass(e)) return Revise::Empty;
  if (!h.backward(e, target)) return Revise::Empty;
  return domains == before ? Revise::Unchanged : Revise::Contracted;
}

Revise propagate(const std::vector<Constraint>& cs, std::vector<Interval>& domains, int max_sweeps,
                 double rel_tol) {
  bool any = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const std::vector<Interval> before = domains;
    for (const auto& c : cs) {
      const Revise r = hc4_revise(c.expr, relation_target(c.relation), domains);
      if (r == Revise::Empty) return Revise::Empty;
      any = any || r == Revise::Contracted;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < domains.size(); ++i) {
      const double w0 = before[i].width();
      const double w1 = domains[i].width();
      if (w0 == w1) continue;
      change = std::max(change, std::isinf(w0) ? 1.0 : (w0 - w1) / std::max(w0, 1e-300));
    }
    if (change <= rel_tol) break;
  }
  return any ? Revise::Contracted : Revise::Unchanged;
}

}  // namespace ddc::expr
