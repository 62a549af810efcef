#include "ddc/interval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace ddc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMax = std::numeric_limits<double>::max();
// Below this magnitude an error-free transformation may itself underflow, so
// the rounded result is nudged unconditionally.
constexpr double kTiny = 1e-280;
// Veltkamp splitting overflows above this magnitude.
constexpr double kHuge = 1e290;

double two_prod_err(double a, double b, double p) {
#ifdef __FMA__
  return std::fma(a, b, -p);
#else
  const auto split = [](double v) {
    const double c = 134217729.0 * v;
    const double h = c - (c - v);
    return std::pair{h, v - h};
  };
  const auto [ah, al] = split(a);
  const auto [bh, bl] = split(b);
  return ((ah * bh - p) + ah * bl + al * bh) + al * bl;
#endif
}

double two_sum_err(double a, double b, double s) {
  const double bp = s - a;
  return (a - (s - bp)) + (b - bp);
}

double overflow_bound(double v, bool up) {
  if (v > 0) return up ? kInf : kMax;
  return up ? -kMax : -kInf;
}

}  // namespace

namespace rounding {

double next_down(double a, int ulps) {
  for (int i = 0; i < ulps; ++i) a = std::nextafter(a, -kInf);
  return a;
}

double next_up(double a, int ulps) {
  for (int i = 0; i < ulps; ++i) a = std::nextafter(a, kInf);
  return a;
}

namespace {

double add_dir(double a, double b, bool up) {
  const double s = a + b;
  if (std::isnan(s)) return up ? kInf : -kInf;
  if (std::isinf(s)) {
    if (std::isinf(a) || std::isinf(b)) return s;
    return overflow_bound(s, up);
  }
  const double err = two_sum_err(a, b, s);
  if (up) return err > 0 ? next_up(s) : s;
  return err < 0 ? next_down(s) : s;
}

double mul_dir(double a, double b, bool up) {
  if (a == 0.0 || b == 0.0) return 0.0;
  const double p = a * b;
  if (std::isinf(p)) {
    if (std::isinf(a) || std::isinf(b)) return p;
    return overflow_bound(p, up);
  }
  if (std::fabs(p) < kTiny || std::fabs(a) > kHuge || std::fabs(b) > kHuge)
    return up ? next_up(p) : next_down(p);
  const double err = two_prod_err(a, b, p);
  if (up) return err > 0 ? next_up(p) : p;
  return err < 0 ? next_down(p) : p;
}

double div_dir(double a, double b, bool up) {
  if (a == 0.0) return 0.0;
  const bool positive = (a > 0) == (b > 0);
  if (std::isinf(a) && std::isinf(b)) {
    if (positive) return up ? kInf : 0.0;
    return up ? 0.0 : -kInf;
  }
  if (std::isinf(b)) return 0.0;
  const double q = a / b;
  if (std::isinf(q)) {
    if (std::isinf(a)) return q;
    return overflow_bound(q, up);
  }
  if (std::fabs(q) < kTiny || std::fabs(a) < kTiny || std::fabs(q) > kHuge ||
      std::fabs(b) > kHuge)
    return up ? next_up(q) : next_down(q);
  const double p = q * b;
  const double e = two_prod_err(q, b, p);
  const double r = (a - p) - e;  // a - q*b, exact sign
  if (r == 0.0) return q;
  const bool true_above = (r > 0) == (b > 0);
  if (up) return true_above ? next_up(q) : q;
  return true_above ? q : next_down(q);
}

double sqrt_dir(double a, bool up) {
  const double s = std::sqrt(a);
  if (a == 0.0 || std::isinf(a)) return s;
  if (a < kTiny) return up ? next_up(s) : next_down(s);
  const double p = s * s;
  const double e = two_prod_err(s, s, p);
  const double r = (a - p) - e;
  if (up) return r > 0 ? next_up(s) : s;
  return r < 0 ? next_down(s) : s;
}

double pow_dir(double x, int n, bool up) {
  double result = 1.0;
  double base = x;
  while (n > 0) {
    if (n & 1) result = mul_dir(result, base, up);
    n >>= 1;
    if (n > 0) base = mul_dir(base, base, up);
  }
  return result;
}

}  // namespace

double add_down(double a, double b) { return add_dir(a, b, false); }
double add_up(double a, double b) { return add_dir(a, b, true); }
double mul_down(double a, double b) { return mul_dir(a, b, false); }
double mul_up(double a, double b) { return mul_dir(a, b, true); }
double div_down(double a, double b) { return div_dir(a, b, false); }
double div_up(double a, double b) { return div_dir(a, b, true); }
double sqrt_down(double a) { return sqrt_dir(a, false); }
double sqrt_up(double a) { return sqrt_dir(a, true); }
double pow_down(double x, int n) { return pow_dir(x, n, false); }
double pow_up(double x, int n) { return pow_dir(x, n, true); }

double root_down(double x, int n) {
  if (x == 0.0 || n == 1 || std::isinf(x)) return x;
  if (n == 2) return sqrt_down(x);
  double r = std::pow(x, 1.0 / n);
  while (r > 0 && pow_up(r, n) > x) r = next_down(r);
  return std::max(r, 0.0);
}

double root_up(double x, int n) {
  if (x == 0.0 || n == 1 || std::isinf(x)) return x;
  if (n == 2) return sqrt_up(x);
  double r = std::pow(x, 1.0 / n);
  while (pow_down(r, n) < x) r = next_up(r);
  return r;
}

}  // namespace rounding

using namespace rounding;

Interval::Interval(double v) : lo_(v), hi_(v) {
  if (std::isnan(v)) throw std::invalid_argument("interval: NaN endpoint");
  if (std::isinf(v)) throw std::invalid_argument("interval: degenerate infinite interval");
}

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (std::isnan(lo) || std::isnan(hi)) throw std::invalid_argument("interval: NaN endpoint");
  if (lo > hi) throw std::invalid_argument("interval: lower endpoint exceeds upper endpoint");
  if (lo == kInf || hi == -kInf)
    throw std::invalid_argument("interval: degenerate infinite interval");
}

double Interval::width() const { return add_up(hi_, -lo_); }

double Interval::mid() const {
  if (lo_ == -kInf && hi_ == kInf) return 0.0;
  if (lo_ == -kInf) return std::numeric_limits<double>::lowest();
  if (hi_ == kInf) return kMax;
  return std::clamp(0.5 * lo_ + 0.5 * hi_, lo_, hi_);
}

double Interval::mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }

double Interval::mig() const {
  if (contains_zero()) return 0.0;
  return std::min(std::fabs(lo_), std::fabs(hi_));
}

bool Interval::is_bounded() const { return std::isfinite(lo_) && std::isfinite(hi_); }

std::ostream& operator<<(std::ostream& os, const Interval& a) {
  return os << '[' << a.lo() << ", " << a.hi() << ']';
}

Interval operator-(const Interval& a) { return Interval(-a.hi(), -a.lo()); }

Interval operator+(const Interval& a, const Interval& b) {
  return Interval(add_down(a.lo(), b.lo()), add_up(a.hi(), b.hi()));
}

Interval operator-(const Interval& a, const Interval& b) {
  return Interval(add_down(a.lo(), -b.hi()), add_up(a.hi(), -b.lo()));
}

Interval operator*(const Interval& a, const Interval& b) {
  const double al = a.lo(), ah = a.hi(), bl = b.lo(), bh = b.hi();
  const double lo =
      std::min({mul_down(al, bl), mul_down(al, bh), mul_down(ah, bl), mul_down(ah, bh)});
  const double hi = std::max({mul_up(al, bl), mul_up(al, bh), mul_up(ah, bl), mul_up(ah, bh)});
  return Interval(lo, hi);
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) throw DivisionByZeroInterval();
  const double al = a.lo(), ah = a.hi(), bl = b.lo(), bh = b.hi();
  const double lo =
      std::min({div_down(al, bl), div_down(al, bh), div_down(ah, bl), div_down(ah, bh)});
  const double hi = std::max({div_up(al, bl), div_up(al, bh), div_up(ah, bl), div_up(ah, bh)});
  return Interval(lo, hi);
}

Interval arith(const Interval& a, const Interval& b, ArithOp op) {
  switch (op) {
    case ArithOp::Add: return a + b;
    case ArithOp::Sub: return a - b;
    case ArithOp::Mul: return a * b;
    case ArithOp::Div: return a / b;
  }
  throw std::invalid_argument("interval: unknown arithmetic op");
}

Interval sq(const Interval& a) { return pow(a, 2); }

Interval pow(const Interval& a, int n) {
  if (n < 0) return Interval(1.0) / pow(a, -n);
  if (n == 0) return Interval(1.0);
  if (n == 1) return a;
  if (n % 2 == 0) return Interval(pow_down(a.mig(), n), pow_up(a.mag(), n));
  const double lo = a.lo() >= 0 ? pow_down(a.lo(), n) : -pow_up(-a.lo(), n);
  const double hi = a.hi() >= 0 ? pow_up(a.hi(), n) : -pow_down(-a.hi(), n);
  return Interval(lo, hi);
}

Interval sqrt(const Interval& a) {
  if (a.hi() < 0) throw DomainError("interval: sqrt of a negative interval");
  return Interval(a.lo() <= 0 ? 0.0 : sqrt_down(a.lo()), sqrt_up(a.hi()));
}

Interval exp(const Interval& a) {
  const double lo = a.lo() == -kInf ? 0.0 : std::max(0.0, next_down(std::exp(a.lo()), 2));
  const double hi = a.hi() == kInf ? kInf : next_up(std::exp(a.hi()), 2);
  return Interval(lo, hi);
}

Interval log(const Interval& a) {
  if (a.hi() <= 0) throw DomainError("interval: log of a non-positive interval");
  const double lo = a.lo() <= 0 ? -kInf : next_down(std::log(a.lo()), 2);
  const double hi = a.hi() == kInf ? kInf : next_up(std::log(a.hi()), 2);
  return Interval(lo, hi);
}

namespace {

// True when some phase + 2k*pi (k integer) may lie in [lo, hi]; errs on the
// side of reporting a hit.
bool hits_phase(double lo, double hi, double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double slack = 1e-12 * (1.0 + std::fabs(lo) + std::fabs(hi));
  const double k = std::ceil((lo - slack - phase) / two_pi);
  return phase + k * two_pi <= hi + slack;
}

Interval periodic(const Interval& a, double (*fn)(double), double max_phase, double min_phase) {
  if (!a.is_bounded() || a.width() >= 2.0 * std::numbers::pi) return Interval(-1.0, 1.0);
  const double vlo = fn(a.lo());
  const double vhi = fn(a.hi());
  double lo = next_down(std::min(vlo, vhi), 2);
  double hi = next_up(std::max(vlo, vhi), 2);
  if (hits_phase(a.lo(), a.hi(), max_phase)) hi = 1.0;
  if (hits_phase(a.lo(), a.hi(), min_phase)) lo = -1.0;
  return Interval(std::max(lo, -1.0), std::min(hi, 1.0));
}

}  // namespace

Interval sin(const Interval& a) {
  return periodic(a, [](double v) { return std::sin(v); }, 0.5 * std::numbers::pi,
                  -0.5 * std::numbers::pi);
}

Interval cos(const Interval& a) {
  return periodic(a, [](double v) { return std::cos(v); }, 0.0, std::numbers::pi);
}

Interval abs(const Interval& a) {
  if (a.lo() >= 0) return a;
  if (a.hi() <= 0) return -a;
  return Interval(0.0, a.mag());
}

Interval min(const Interval& a, const Interval& b) {
  return Interval(std::min(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}

Interval max(const Interval& a, const Interval& b) {
  return Interval(std::max(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

std::optional<Interval> intersect(const Interval& a, const Interval& b) {
  const double lo = std::max(a.lo(), b.lo());
  const double hi = std::min(a.hi(), b.hi());
  if (lo > hi) return std::nullopt;
  return Interval(lo, hi);
}

Interval hull(const Interval& a, const Interval& b) {
  return Interval(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

// ---------------------------------------------------------------------------
// IntervalVector

namespace {
void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string("interval: dimension mismatch in ") + what);
}
}  // namespace

IntervalVector IntervalVector::point(std::span<const double> x) {
  IntervalVector v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = Interval(x[i]);
  return v;
}

IntervalVector IntervalVector::from_bounds(std::span<const double> lo, std::span<const double> hi) {
  require_same(lo.size(), hi.size(), "from_bounds");
  IntervalVector v(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) v[i] = Interval(lo[i], hi[i]);
  return v;
}

Vec IntervalVector::lo() const {
  Vec out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = elems_[i].lo();
  return out;
}

Vec IntervalVector::hi() const {
  Vec out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = elems_[i].hi();
  return out;
}

Vec IntervalVector::mid() const {
  Vec out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = elems_[i].mid();
  return out;
}

Vec IntervalVector::width() const { return ddc::width(*this); }

double IntervalVector::max_width() const {
  double w = 0.0;
  for (const auto& e : elems_) w = std::max(w, e.width());
  return w;
}

bool IntervalVector::contains(std::span<const double> x) const {
  require_same(size(), x.size(), "contains");
  for (std::size_t i = 0; i < size(); ++i)
    if (!elems_[i].contains(x[i])) return false;
  return true;
}

bool IntervalVector::contains(const IntervalVector& o) const {
  require_same(size(), o.size(), "contains");
  for (std::size_t i = 0; i < size(); ++i)
    if (!elems_[i].contains(o[i])) return false;
  return true;
}

bool IntervalVector::is_point() const {
  return std::all_of(elems_.begin(), elems_.end(), [](const Interval& e) { return e.is_point(); });
}

std::ostream& operator<<(std::ostream& os, const IntervalVector& a) {
  os << '(';
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i];
  return os << ')';
}

IntervalVector operator+(const IntervalVector& a, const IntervalVector& b) {
  require_same(a.size(), b.size(), "vector add");
  IntervalVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

IntervalVector operator-(const IntervalVector& a, const IntervalVector& b) {
  require_same(a.size(), b.size(), "vector sub");
  IntervalVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

IntervalVector operator*(const Interval& s, const IntervalVector& a) {
  IntervalVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

IntervalVector operator-(const IntervalVector& a, std::span<const double> x) {
  require_same(a.size(), x.size(), "vector-point sub");
  IntervalVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - Interval(x[i]);
  return r;
}

std::optional<IntervalVector> intersect(const IntervalVector& a, const IntervalVector& b) {
  require_same(a.size(), b.size(), "vector intersect");
  IntervalVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto v = intersect(a[i], b[i]);
    if (!v) return std::nullopt;
    r[i] = *v;
  }
  return r;
}

IntervalVector hull(const IntervalVector& a, const IntervalVector& b) {
  require_same(a.size(), b.size(), "vector hull");
  IntervalVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = hull(a[i], b[i]);
  return r;
}

Vec width(const IntervalVector& a) {
  Vec w(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) w[i] = a[i].width();
  return w;
}

Interval weighted_norm_ext(const IntervalVector& a, std::span<const double> w) {
  require_same(a.size(), w.size(), "weighted_norm_ext");
  Interval sum(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(w[i] > 0)) throw std::invalid_argument("interval: norm weights must be positive");
    sum += sq(Interval(w[i]) * a[i]);
  }
  return sqrt(sum);
}

Interval monomial_ext(const IntervalVector& u, const MultiIndex& alpha) {
  require_same(u.size(), alpha.size(), "monomial_ext");
  Interval r(1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (alpha[i] < 0) throw std::invalid_argument("interval: negative monomial exponent");
    if (alpha[i] > 0) r *= pow(u[i], alpha[i]);
  }
  return r;
}

double monomial(std::span<const double> u, const MultiIndex& alpha) {
  require_same(u.size(), alpha.size(), "monomial");
  double r = 1.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (int e = 0; e < alpha[i]; ++e) r *= u[i];
  return r;
}

double monomial_partial(std::span<const double> u, const MultiIndex& alpha, std::size_t l) {
  require_same(u.size(), alpha.size(), "monomial_partial");
  if (alpha[l] == 0) return 0.0;
  double r = alpha[l];
  for (std::size_t i = 0; i < u.size(); ++i) {
    const int e = i == l ? alpha[i] - 1 : alpha[i];
    for (int k = 0; k < e; ++k) r *= u[i];
  }
  return r;
}

// ---------------------------------------------------------------------------
// IntervalMatrix

IntervalVector IntervalMatrix::row(std::size_t r) const {
  IntervalVector v(cols_);
  for (std::size_t c = 0; c < cols_; ++c) v[c] = (*this)(r, c);
  return v;
}

void IntervalMatrix::set_row(std::size_t r, const IntervalVector& v) {
  require_same(cols_, v.size(), "set_row");
  for (std::size_t c = 0; c < cols_; ++c) (*this)(r, c) = v[c];
}

Matrix IntervalMatrix::mid() const {
  Matrix m(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c).mid();
  return m;
}

Matrix IntervalMatrix::width() const {
  Matrix m(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c).width();
  return m;
}

bool IntervalMatrix::contains(const IntervalMatrix& o) const {
  require_same(rows_, o.rows_, "matrix contains");
  require_same(cols_, o.cols_, "matrix contains");
  for (std::size_t i = 0; i < elems_.size(); ++i)
    if (!elems_[i].contains(o.elems_[i])) return false;
  return true;
}

IntervalMatrix operator+(const IntervalMatrix& a, const IntervalMatrix& b) {
  require_same(a.rows(), b.rows(), "matrix add");
  require_same(a.cols(), b.cols(), "matrix add");
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
  return r;
}

IntervalMatrix operator*(const Interval& s, const IntervalMatrix& a) {
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
  return r;
}

IntervalVector operator*(const IntervalMatrix& a, const IntervalVector& x) {
  require_same(a.cols(), x.size(), "matrix-vector product");
  IntervalVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Interval acc(0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

std::optional<IntervalMatrix> intersect(const IntervalMatrix& a, const IntervalMatrix& b) {
  require_same(a.rows(), b.rows(), "matrix intersect");
  require_same(a.cols(), b.cols(), "matrix intersect");
  IntervalMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      auto v = intersect(a(i, j), b(i, j));
      if (!v) return std::nullopt;
      r(i, j) = *v;
    }
  return r;
}

}  // namespace ddc
