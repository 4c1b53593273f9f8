#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qfunc {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double eps = std::numeric_limits<double>::epsilon();
inline constexpr cplx I{0.0, 1.0};

// Deformation parameter plus the truncation controls every series uses.
class QBase {
 public:
  explicit QBase(double q, double tol = 1e-12, std::size_t max_terms = 100000)
      : q_(q), tol_(tol), max_terms_(max_terms) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("q must lie in (0,1), got " + std::to_string(q));
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    if (max_terms < 1) throw DomainError("max_terms must be at least 1");
  }

  double q() const { return q_; }
  double tol() const { return tol_; }
  std::size_t max_terms() const { return max_terms_; }

  // Same controls, different q (q^2 for the Bessel layer, sqrt(q) for e3).
  QBase with_q(double q) const { return QBase(q, tol_, max_terms_); }

 private:
  double q_;
  double tol_;
  std::size_t max_terms_;
};

struct SeriesValue {
  cplx value{1.0, 0.0};
  double err_estimate = 0.0;
  std::size_t terms_used = 0;
};

struct LatticePoint {
  cplx u;
  int n = 0;
  double lambda = 0.0;
  double theta = 0.0;
};

// Principal argument in (-pi, pi].
inline double principal_arg(cplx u) {
  double th = std::arg(u);
  return th <= -pi ? pi : th;
}

inline cplx principal_log(cplx u) { return {std::log(std::abs(u)), principal_arg(u)}; }

// u^s = exp(s (ln|u| + i theta)); real positive bases go through std::pow.
inline cplx cpow(cplx u, cplx s) {
  if (u == cplx(0.0)) return s == cplx(0.0) ? cplx(1.0) : cplx(0.0);
  if (u.imag() == 0.0 && u.real() > 0.0 && s.imag() == 0.0) return std::pow(u.real(), s.real());
  return std::exp(s * principal_log(u));
}

// True when x = q^{-m} for an integer m >= 0 (within rel); m is returned.
inline bool is_neg_qpower(cplx x, double q, long& m, double rel = 1e-10) {
  if (std::abs(x.imag()) > rel * std::abs(x) || x.real() <= 0.0) return false;
  double e = std::log(x.real()) / std::log(q);
  double r = std::round(e);
  if (r > 0.0 || std::abs(e - r) > rel * std::max(1.0, std::abs(e))) return false;
  m = static_cast<long>(-r);
  return true;
}

// Geometric-tail stopping rule shared by every series.
class TailTracker {
 public:
  explicit TailTracker(double tol) : tol_(tol) {}

  // Adds a term; true once the estimated tail is below tol relative to the sum.
  bool add(cplx t) {
    double a = std::abs(t);
    if (!std::isfinite(a)) throw NonConvergence("series term overflowed");
    sum_ += t;
    ++count_;
    max_abs_ = std::max(max_abs_, a);
    double r = ratio(prev_abs_, a);
    bool done = false;
    if (count_ >= 3) {
      double rho = std::max(r, last_ratio_);
      if (rho < 0.99) {
        tail_ = a * rho / (1.0 - rho);
        done = tail_ <= tol_ * std::abs(sum_) || tail_ <= eps * max_abs_;
      }
    }
    last_ratio_ = r;
    prev_abs_ = a;
    return done;
  }

  cplx sum() const { return sum_; }
  double tail() const { return tail_; }
  double max_abs() const { return max_abs_; }
  std::size_t count() const { return count_; }

 private:
  static double ratio(double prev, double a) {
    if (prev == 0.0) return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return a / prev;
  }

  double tol_;
  cplx sum_{0.0, 0.0};
  std::size_t count_ = 0;
  double max_abs_ = 0.0;
  double prev_abs_ = 0.0;
  double last_ratio_ = std::numeric_limits<double>::infinity();
  double tail_ = std::numeric_limits<double>::infinity();
};

inline cplx qpoch_finite(cplx a, const QBase& base, std::size_t n) {
  cplx p(1.0);
  double qk = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    p *= 1.0 - a * qk;
    qk *= base.q();
  }
  return p;
}

// (q^alpha; q)_n with each factor 1 - q^{alpha+k}; integer exponents give exact zeros.
inline double qpoch_qpow(double alpha, double q, long n) {
  double p = 1.0;
  for (long k = 0; k < n; ++k) p *= 1.0 - std::pow(q, alpha + static_cast<double>(k));
  return p;
}

inline SeriesValue qpoch_infinite(cplx a, const QBase& base) {
  const double q = base.q();
  if (a == cplx(0.0)) return {cplx(1.0), 0.0, 0};
  cplx p(1.0);
  double qk = 1.0;
  for (std::size_t k = 0; k < base.max_terms(); ++k) {
    cplx aq = a * qk;
    cplx f = 1.0 - aq;
    if (std::abs(f) < 64.0 * eps) return {cplx(0.0), 0.0, k + 1};
    p *= f;
    double tb = std::abs(aq) * q / (1.0 - q);
    if (tb <= base.tol() && std::abs(aq) < 0.5) {
      return {p, std::abs(p) * std::expm1(tb), k + 1};
    }
    qk *= q;
  }
  throw NonConvergence("infinite product did not converge within max_terms");
}

inline double qgamma(double alpha, const QBase& base) {
  if (alpha <= 0.0 && std::abs(alpha - std::round(alpha)) < 1e-12) {
    throw PoleError("q-Gamma pole at alpha = " + std::to_string(alpha));
  }
  const double q = base.q();
  cplx num = qpoch_infinite(q, base).value;
  cplx den = qpoch_infinite(std::pow(q, alpha), base).value;
  return (num / den).real() * std::pow(1.0 - q, 1.0 - alpha);
}

// r Phi s with the ((-1)^n q^{n(n-1)/2})^{s-r+1} weight.
inline SeriesValue basic_hyper(const std::vector<cplx>& upper, const std::vector<cplx>& lower,
                               const QBase& base, cplx z) {
  const double q = base.q();
  long m = 0;
  for (const cplx& b : lower) {
    if (is_neg_qpower(b, q, m)) throw ParameterPole("lower parameter equals q^-" + std::to_string(m));
  }
  if (z == cplx(0.0)) return {cplx(1.0), 0.0, 1};

  long last = -1;  // index of the last nonzero term of a terminating series
  for (const cplx& a : upper) {
    if (is_neg_qpower(a, q, m) && (last < 0 || m < last)) last = m;
  }
  const int e = static_cast<int>(lower.size()) - static_cast<int>(upper.size()) + 1;
  if (last < 0) {
    if (e < 0) throw NonConvergence("non-terminating series with s-r+1 < 0 diverges");
    if (e == 0 && std::abs(z) >= 1.0) throw NonConvergence("balanced series needs |z| < 1");
  }

  TailTracker acc(base.tol());
  cplx t(1.0);
  bool done = acc.add(t);
  double qn = 1.0;
  for (std::size_t n = 0; !done; ++n) {
    if (last >= 0 && static_cast<long>(n) >= last) {
      return {acc.sum(), 0.0, acc.count()};
    }
    if (n + 1 >= base.max_terms()) throw NonConvergence("basic_hyper reached max_terms");
    cplx num(1.0), den(1.0 - qn * q);
    for (const cplx& a : upper) {
      cplx f = 1.0 - a * qn;
      num *= std::abs(f) < 64.0 * eps ? cplx(0.0) : f;
    }
    for (const cplx& b : lower) den *= 1.0 - b * qn;
    t *= num / den * std::pow(-qn, e) * z;
    done = acc.add(t);
    qn *= q;
  }
  return {acc.sum(), acc.tail(), acc.count()};
}

// D_z f = (f(z) - f(qz)) / ((1-q^2) z).
template <class F>
cplx qdiff_apply(F&& f, cplx z, const QBase& base) {
  if (z == cplx(0.0)) throw DomainError("D_z is undefined at z = 0");
  const double q = base.q();
  return (f(z) - f(q * z)) / ((1.0 - q * q) * z);
}

inline LatticePoint lattice_decompose(cplx u, const QBase& base) {
  double r = std::abs(u);
  if (r == 0.0) throw DomainError("lattice decomposition needs u != 0");
  double x = std::log(r) / std::log(base.q());
  double xr = std::round(x);
  if (std::abs(x - xr) <= 8.0 * eps * std::max(1.0, std::abs(x))) x = xr;
  double fl = std::floor(x);
  double lam = x - fl;
  if (lam >= 1.0) {
    fl += 1.0;
    lam = 0.0;
  }
  return {u, static_cast<int>(fl), lam, principal_arg(u)};
}

inline LatticePoint lattice_point(int n, double lambda, double theta, const QBase& base) {
  cplx u = std::polar(std::pow(base.q(), n + lambda), theta);
  return {u, n, lambda, theta};
}

inline cplx lattice_reconstruct(const LatticePoint& p, const QBase& base) {
  return std::polar(std::pow(base.q(), p.n + p.lambda), p.theta);
}

}  // namespace qfunc
