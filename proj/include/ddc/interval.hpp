#pragma once

// Closed real intervals with outward-rounded endpoints, and their vector and
// matrix forms. Every operation returns an enclosure of the exact real result:
// primitive ops are computed in round-to-nearest and an endpoint is moved one
// ulp outward only when an error-free transformation shows the rounded value
// is not exact.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ddc/error.hpp"
#include "ddc/linalg.hpp"

namespace ddc {

class Interval {
 public:
  /// The degenerate interval [0,0].
  constexpr Interval() = default;
  /// Degenerate interval [v,v]. Throws std::invalid_argument on NaN.
  explicit Interval(double v);
  /// [lo,hi]. Throws std::invalid_argument on NaN, lo > hi, lo = +inf or hi = -inf.
  Interval(double lo, double hi);

  static Interval symmetric(double radius) { return Interval(-radius, radius); }
  static Interval entire() {
    return Interval(-std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity());
  }
  static Interval nonnegative() { return Interval(0.0, std::numeric_limits<double>::infinity()); }
  static Interval nonpositive() { return Interval(-std::numeric_limits<double>::infinity(), 0.0); }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const;
  double mid() const;
  double radius() const { return 0.5 * width(); }
  /// max |x| over the interval.
  double mag() const;
  /// min |x| over the interval.
  double mig() const;

  bool is_point() const { return lo_ == hi_; }
  bool is_bounded() const;
  bool contains(double v) const { return lo_ <= v && v <= hi_; }
  bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }
  bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

std::ostream& operator<<(std::ostream& os, const Interval& a);

Interval operator-(const Interval& a);
Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
/// Throws DivisionByZeroInterval when 0 is in b.
Interval operator/(const Interval& a, const Interval& b);

inline Interval operator+(const Interval& a, double b) { return a + Interval(b); }
inline Interval operator+(double a, const Interval& b) { return Interval(a) + b; }
inline Interval operator-(const Interval& a, double b) { return a - Interval(b); }
inline Interval operator-(double a, const Interval& b) { return Interval(a) - b; }
inline Interval operator*(const Interval& a, double b) { return a * Interval(b); }
inline Interval operator*(double a, const Interval& b) { return Interval(a) * b; }
inline Interval operator/(const Interval& a, double b) { return a / Interval(b); }
inline Interval operator/(double a, const Interval& b) { return Interval(a) / b; }

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

enum class ArithOp { Add, Sub, Mul, Div };
Interval arith(const Interval& a, const Interval& b, ArithOp op);

/// Square via the dedicated even-power rule: [0, max(lo^2, hi^2)] when 0 is in a.
Interval sq(const Interval& a);
/// Integer power; even exponents use the sq-style rule.
Interval pow(const Interval& a, int n);
/// sqrt over the part of a inside [0, inf). Throws DomainError when a < 0.
Interval sqrt(const Interval& a);
Interval exp(const Interval& a);
/// log over the part of a inside (0, inf). Throws DomainError when a <= 0.
Interval log(const Interval& a);
Interval sin(const Interval& a);
Interval cos(const Interval& a);
Interval abs(const Interval& a);
Interval min(const Interval& a, const Interval& b);
Interval max(const Interval& a, const Interval& b);

/// Overlap of a and b, or nullopt when they are disjoint.
std::optional<Interval> intersect(const Interval& a, const Interval& b);
Interval hull(const Interval& a, const Interval& b);
inline bool subset(const Interval& a, const Interval& b) { return b.contains(a); }

/// Directed-rounding helpers, exposed for code that builds enclosures from
/// point arithmetic (e.g. n-th roots in the contractor backward pass).
namespace rounding {
double add_down(double a, double b);
double add_up(double a, double b);
double mul_down(double a, double b);
double mul_up(double a, double b);
double div_down(double a, double b);
double div_up(double a, double b);
double sqrt_down(double a);
double sqrt_up(double a);
double next_down(double a, int ulps = 1);
double next_up(double a, int ulps = 1);
/// x^n for x >= 0, rounded down / up.
double pow_down(double x, int n);
double pow_up(double x, int n);
/// n-th root of x >= 0, rounded down / up (verified by re-powering).
double root_down(double x, int n);
double root_up(double x, int n);
}  // namespace rounding

class IntervalVector {
 public:
  IntervalVector() = default;
  explicit IntervalVector(std::size_t n, Interval fill = Interval()) : elems_(n, fill) {}
  IntervalVector(std::initializer_list<Interval> init) : elems_(init) {}
  explicit IntervalVector(std::vector<Interval> elems) : elems_(std::move(elems)) {}

  static IntervalVector point(std::span<const double> x);
  static IntervalVector from_bounds(std::span<const double> lo, std::span<const double> hi);

  std::size_t size() const { return elems_.size(); }
  Interval& operator[](std::size_t i) { return elems_[i]; }
  const Interval& operator[](std::size_t i) const { return elems_[i]; }
  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }
  auto begin() { return elems_.begin(); }
  auto end() { return elems_.end(); }

  Vec lo() const;
  Vec hi() const;
  Vec mid() const;
  Vec width() const;
  double max_width() const;

  bool contains(std::span<const double> x) const;
  bool contains(const IntervalVector& o) const;
  bool is_point() const;

  friend bool operator==(const IntervalVector&, const IntervalVector&) = default;

 private:
  std::vector<Interval> elems_;
};

std::ostream& operator<<(std::ostream& os, const IntervalVector& a);

IntervalVector operator+(const IntervalVector& a, const IntervalVector& b);
IntervalVector operator-(const IntervalVector& a, const IntervalVector& b);
IntervalVector operator*(const Interval& s, const IntervalVector& a);
IntervalVector operator-(const IntervalVector& a, std::span<const double> x);

std::optional<IntervalVector> intersect(const IntervalVector& a, const IntervalVector& b);
IntervalVector hull(const IntervalVector& a, const IntervalVector& b);
/// Componentwise width wd(A) = hi - lo.
Vec width(const IntervalVector& a);

/// Enclosure of { ||x||_w : x in a } computed as sqrt(sum sq(w_i a_i)).
Interval weighted_norm_ext(const IntervalVector& a, std::span<const double> w);

using MultiIndex = std::vector<int>;
/// Enclosure of { prod u_i^alpha_i : u in a }.
Interval monomial_ext(const IntervalVector& u, const MultiIndex& alpha);
/// Point value of the monomial.
double monomial(std::span<const double> u, const MultiIndex& alpha);
/// Partial derivative of the monomial with respect to u_l at a point.
double monomial_partial(std::span<const double> u, const MultiIndex& alpha, std::size_t l);

class IntervalMatrix {
 public:
  IntervalMatrix() = default;
  IntervalMatrix(std::size_t rows, std::size_t cols, Interval fill = Interval())
      : rows_(rows), cols_(cols), elems_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Interval& operator()(std::size_t r, std::size_t c) { return elems_[r * cols_ + c]; }
  const Interval& operator()(std::size_t r, std::size_t c) const { return elems_[r * cols_ + c]; }

  IntervalVector row(std::size_t r) const;
  void set_row(std::size_t r, const IntervalVector& v);
  Matrix mid() const;
  Matrix width() const;
  bool contains(const IntervalMatrix& o) const;

  friend bool operator==(const IntervalMatrix&, const IntervalMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Interval> elems_;
};

IntervalMatrix operator+(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix operator*(const Interval& s, const IntervalMatrix& a);
IntervalVector operator*(const IntervalMatrix& a, const IntervalVector& x);
std::optional<IntervalMatrix> intersect(const IntervalMatrix& a, const IntervalMatrix& b);

}  // namespace ddc
