#include <boost/multiprecision/mpfr.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "ddc/battery.hpp"
#include "ddc/interval.hpp"

namespace ddc::battery {

namespace {

namespace mp = boost::multiprecision;
using Big = mp::number<mp::mpfr_float_backend<40, mp::allocate_stack>>;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

  // Values over many magnitudes, with a share of small integers and zeros.
  double value(double log_lo = -6, double log_hi = 6) {
    const int kind = integer(0, 9);
    if (kind == 0) return 0.0;
    if (kind == 1) return integer(-8, 8);
    const double mag = std::pow(10.0, uniform(log_lo, log_hi));
    return (integer(0, 1) ? 1.0 : -1.0) * mag * uniform(0.5, 1.0);
  }

  Interval interval(double log_lo = -6, double log_hi = 6) {
    double a = value(log_lo, log_hi);
    double b = integer(0, 7) == 0 ? a : value(log_lo, log_hi);
    if (a > b) std::swap(a, b);
    return Interval(a, b);
  }

  Interval interval_in(double lo, double hi) {
    double a = uniform(lo, hi), b = uniform(lo, hi);
    if (integer(0, 7) == 0) b = a;
    if (a > b) std::swap(a, b);
    return Interval(a, b);
  }

  double point_in(const Interval& a) {
    if (a.is_point()) return a.lo();
    return std::clamp(uniform(a.lo(), a.hi()), a.lo(), a.hi());
  }

  std::vector<double> probes(const Interval& a) { return {a.lo(), a.hi(), point_in(a)}; }

 private:
  std::mt19937_64 rng_;
};

bool inside(const Big& v, const Interval& r) { return Big(r.lo()) <= v && v <= Big(r.hi()); }

using Unary = std::function<Interval(const Interval&)>;
using UnaryRef = std::function<Big(const Big&)>;
using Binary = std::function<Interval(const Interval&, const Interval&)>;
using BinaryRef = std::function<Big(const Big&, const Big&)>;

std::size_t fuzz_unary(Sampler& s, std::size_t count, const std::function<Interval()>& gen,
                       const Unary& op, const UnaryRef& ref) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Interval a = gen();
    const Interval r = op(a);
    for (double x : s.probes(a))
      if (!inside(ref(Big(x)), r)) {
        ++bad;
        break;
      }
  }
  return bad;
}

std::size_t fuzz_binary(Sampler& s, std::size_t count, const std::function<Interval()>& gen_a,
                        const std::function<Interval()>& gen_b, const Binary& op,
                        const BinaryRef& ref) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const Interval a = gen_a();
    const Interval b = gen_b();
    const Interval r = op(a, b);
    const double pa[] = {a.lo(), a.hi(), a.lo(), a.hi(), s.point_in(a)};
    const double pb[] = {b.lo(), b.hi(), b.hi(), b.lo(), s.point_in(b)};
    for (int k = 0; k < 5; ++k)
      if (!inside(ref(Big(pa[k]), Big(pb[k])), r)) {
        ++bad;
        break;
      }
  }
  return bad;
}

}  // namespace

std::size_t FuzzReport::total_violations() const {
  std::size_t t = 0;
  for (const auto& [name, v] : violations) t += v;
  return t;
}

FuzzReport fuzz_interval_soundness(std::size_t per_op, std::uint64_t seed) {
  Sampler s(seed);
  FuzzReport rep;
  auto any = [&] { return s.interval(); };
  auto nonzero = [&] {
    for (;;) {
      Interval b = s.interval();
      if (!b.contains_zero()) return b;
    }
  };
  auto moderate = [&] { return s.interval_in(-40.0, 40.0); };
  auto trig = [&] { return s.integer(0, 3) == 0 ? s.interval_in(-1e3, 1e3) : s.interval_in(-8.0, 8.0); };
  auto positive = [&] {
    const double a = std::pow(10.0, s.uniform(-6, 6));
    const double b = s.integer(0, 7) == 0 ? a : a * (1.0 + std::pow(10.0, s.uniform(-12, 1)));
    return Interval(a, b);
  };

  rep.violations["add"] = fuzz_binary(s, per_op, any, any, [](auto& a, auto& b) { return a + b; },
                                      [](const Big& x, const Big& y) { return Big(x + y); });
  rep.violations["sub"] = fuzz_binary(s, per_op, any, any, [](auto& a, auto& b) { return a - b; },
                                      [](const Big& x, const Big& y) { return Big(x - y); });
  rep.violations["mul"] = fuzz_binary(s, per_op, any, any, [](auto& a, auto& b) { return a * b; },
                                      [](const Big& x, const Big& y) { return Big(x * y); });
  rep.violations["div"] = fuzz_binary(s, per_op, any, nonzero,
                                      [](auto& a, auto& b) { return a / b; },
                                      [](const Big& x, const Big& y) { return Big(x / y); });
  rep.violations["min"] = fuzz_binary(s, per_op, any, any,
                                      [](auto& a, auto& b) { return ddc::min(a, b); },
                                      [](const Big& x, const Big& y) { return x < y ? x : y; });
  rep.violations["max"] = fuzz_binary(s, per_op, any, any,
                                      [](auto& a, auto& b) { return ddc::max(a, b); },
                                      [](const Big& x, const Big& y) { return x > y ? x : y; });
  rep.violations["sq"] = fuzz_unary(s, per_op, any, [](auto& a) { return sq(a); },
                                    [](const Big& x) { return Big(x * x); });
  rep.violations["pow3"] = fuzz_unary(s, per_op, any, [](auto& a) { return pow(a, 3); },
                                      [](const Big& x) { return Big(x * x * x); });
  rep.violations["pow4"] = fuzz_unary(s, per_op, any, [](auto& a) { return pow(a, 4); },
                                      [](const Big& x) { return Big(x * x * x * x); });
  rep.violations["neg"] = fuzz_unary(s, per_op, any, [](auto& a) { return -a; },
                                     [](const Big& x) { return Big(-x); });
  rep.violations["abs"] = fuzz_unary(s, per_op, any, [](auto& a) { return ddc::abs(a); },
                                     [](const Big& x) { return Big(mp::abs(x)); });
  rep.violations["sqrt"] = fuzz_unary(s, per_op, positive, [](auto& a) { return ddc::sqrt(a); },
                                      [](const Big& x) { return Big(mp::sqrt(x)); });
  rep.violations["exp"] = fuzz_unary(s, per_op, moderate, [](auto& a) { return ddc::exp(a); },
                                     [](const Big& x) { return Big(mp::exp(x)); });
  rep.violations["log"] = fuzz_unary(s, per_op, positive, [](auto& a) { return ddc::log(a); },
                                     [](const Big& x) { return Big(mp::log(x)); });
  rep.violations["sin"] = fuzz_unary(s, per_op, trig, [](auto& a) { return ddc::sin(a); },
                                     [](const Big& x) { return Big(mp::sin(x)); });
  rep.violations["cos"] = fuzz_unary(s, per_op, trig, [](auto& a) { return ddc::cos(a); },
                                     [](const Big& x) { return Big(mp::cos(x)); });

  // Weighted norm and monomial over random 3-vectors.
  std::size_t bad_norm = 0, bad_mono = 0;
  for (std::size_t i = 0; i < per_op; ++i) {
    IntervalVector a{s.interval(-3, 3), s.interval(-3, 3), s.interval(-3, 3)};
    const std::vector<double> w{std::pow(10.0, s.uniform(-2, 2)), std::pow(10.0, s.uniform(-2, 2)),
                                std::pow(10.0, s.uniform(-2, 2))};
    const MultiIndex alpha{s.integer(0, 3), s.integer(0, 3), s.integer(0, 3)};
    const Interval rn = weighted_norm_ext(a, w);
    const Interval rm = monomial_ext(a, alpha);
    for (int k = 0; k < 3; ++k) {
      Big acc_n = 0, acc_m = 1;
      for (std::size_t c = 0; c < 3; ++c) {
        const double x = k == 0 ? a[c].lo() : k == 1 ? a[c].hi() : s.point_in(a[c]);
        const Big wx = Big(w[c]) * Big(x);
        acc_n += wx * wx;
        for (int e = 0; e < alpha[c]; ++e) acc_m *= Big(x);
      }
      if (!inside(Big(mp::sqrt(acc_n)), rn)) ++bad_norm;
      if (!inside(acc_m, rm)) ++bad_mono;
    }
  }
  rep.violations["weighted_norm"] = bad_norm;
  rep.violations["monomial"] = bad_mono;
  rep.instances = per_op;
  return rep;
}

CriterionResult interval_soundness(const Options& opt) {
  CriterionResult r;
  r.id = 1;
  r.name = "interval soundness fuzz";
  r.time_limit = 10.0;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t per_op = static_cast<std::size_t>(std::max(1.0, 1e5 * opt.scale));
  const FuzzReport rep = fuzz_interval_soundness(per_op, opt.seed);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << rep.violations.size() << " primitives x " << per_op
     << " instances, violations=" << rep.total_violations();
  for (const auto& [name, v] : rep.violations)
    if (v) os << ' ' << name << ':' << v;
  r.detail = os.str();
  r.pass = rep.total_violations() == 0 && r.seconds < r.time_limit;
  return r;
}

}  // namespace ddc::battery
