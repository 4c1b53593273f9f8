#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "core.hpp"

namespace qfunc {

struct KindTag {
  int j = 1;
  int delta = 2;

  static KindTag of(int j) {
    switch (j) {
      case 1: return {1, 2};
      case 2: return {2, 0};
      case 3: return {3, 1};
      default: throw DomainError("kind must be 1, 2 or 3, got " + std::to_string(j));
    }
  }
};

struct AsymptoticEstimate {
  cplx leading;
  double scale_exponent = 0.0;
  cplx phase{1.0, 0.0};
  cplx constant;
  double N = 0.0;
  cplx prefactor{1.0, 0.0};
};

struct LaurentTable {
  KindTag kind;
  int window = 0;
  double q = 0.0;
  std::vector<double> coeffs;  // coeffs[l + window] = a_l

  double at(int l) const { return coeffs.at(static_cast<std::size_t>(l + window)); }
};

namespace detail {

inline void check_e1_pole(cplx u, double q) {
  double r = std::abs(u);
  if (r == 0.0) return;
  double m = std::round(std::log(r) / -std::log(q));
  if (m < 0.0) return;
  double pole = std::pow(q, -m);
  if (std::abs(u - pole) < 1e-8 * pole) {
    throw PoleError("e1 pole at u = q^-" + std::to_string(static_cast<long>(m)));
  }
}

// sum_n q^{n(n-1)/4} u^n / (q;q)_n
inline SeriesValue e3_series(cplx u, const QBase& base) {
  if (u == cplx(0.0)) return {cplx(1.0), 0.0, 1};
  const double q = base.q();
  const double sq = std::sqrt(q);
  TailTracker acc(base.tol());
  cplx t(1.0);
  bool done = acc.add(t);
  double sqn = 1.0, qn1 = q;
  for (std::size_t n = 0; !done; ++n) {
    if (n + 1 >= base.max_terms()) throw NonConvergence("e3 series reached max_terms");
    t *= sqn * u / (1.0 - qn1);
    done = acc.add(t);
    sqn *= sq;
    qn1 *= q;
  }
  return {acc.sum(), acc.tail(), acc.count()};
}

}  // namespace detail

inline SeriesValue qexp_eval(KindTag kind, cplx u, const QBase& base) {
  switch (kind.j) {
    case 1: {
      detail::check_e1_pole(u, base.q());
      SeriesValue p = qpoch_infinite(u, base);
      if (p.value == cplx(0.0)) throw PoleError("e1 pole (vanishing product)");
      double a = std::abs(p.value);
      return {1.0 / p.value, p.err_estimate / (a * a), p.terms_used};
    }
    case 2: return qpoch_infinite(-u, base);
    default: return detail::e3_series(u, base);
  }
}

inline cplx qexp(KindTag kind, cplx u, const QBase& base) { return qexp_eval(kind, u, base).value; }

// Power series of e1 (|u| < 1) and e2; kind 3 is already a series.
inline SeriesValue qexp_series(KindTag kind, cplx u, const QBase& base) {
  if (kind.j == 3) return detail::e3_series(u, base);
  if (kind.j == 1 && std::abs(u) >= 1.0) throw NonConvergence("e1 power series needs |u| < 1");
  const double q = base.q();
  TailTracker acc(base.tol());
  cplx t(1.0);
  bool done = acc.add(t);
  double qn = 1.0;
  for (std::size_t n = 0; !done; ++n) {
    if (n + 1 >= base.max_terms()) throw NonConvergence("q-exponential series reached max_terms");
    t *= (kind.j == 2 ? qn : 1.0) * u / (1.0 - qn * q);
    done = acc.add(t);
    qn *= q;
  }
  return {acc.sum(), acc.tail(), acc.count()};
}

inline std::vector<double> classical_limit_check(KindTag kind, cplx z, const std::vector<double>& qs) {
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    QBase b(q);
    out.push_back(std::abs(qexp(kind, (1.0 - q * q) * z, b) - std::exp(2.0 * z)));
  }
  return out;
}

// Normalized residual of D_z e(u) against e(u), e(qu), e(sqrt(q) u).
inline double qexp_diff_residual(KindTag kind, cplx z, const QBase& base) {
  const double q = base.q();
  auto f = [&](cplx x) { return qexp(kind, (1.0 - q * q) * x, base); };
  cplx lhs = qdiff_apply(f, z, base);
  double shift = kind.j == 1 ? 1.0 : (kind.j == 2 ? q : std::sqrt(q));
  cplx rhs = qexp(kind, shift * (1.0 - q * q) * z, base);
  double scale = std::max({std::abs(lhs), std::abs(rhs), std::abs(f(z)) / std::abs((1.0 - q * q) * z)});
  return std::abs(lhs - rhs) / scale;
}

inline cplx lambda_product(KindTag kind, cplx u, const QBase& base) {
  if (u == cplx(0.0)) throw DomainError("Lambda product needs u != 0");
  return qexp(kind, u, base) * qexp(kind, base.q() / u, base);
}

namespace detail {

// S_l = sum_k q^{(2-d)k(k+l)/2 + d k/2} / ((q;q)_k (q^{l+1};q)_k), l >= 0
inline double laurent_inner(int d, int l, const QBase& base) {
  const double q = base.q();
  TailTracker acc(base.tol());
  double t = 1.0;
  bool done = acc.add(t);
  for (int k = 0; !done; ++k) {
    if (static_cast<std::size_t>(k) + 1 >= base.max_terms()) throw NonConvergence("Laurent inner sum reached max_terms");
    double ex = (2 - d) * (2.0 * k + 1.0 + l) / 2.0 + d / 2.0;
    t *= std::pow(q, ex) / ((1.0 - std::pow(q, k + 1.0)) * (1.0 - std::pow(q, l + 1.0 + k)));
    done = acc.add(t);
  }
  return acc.sum().real();
}

}  // namespace detail

inline double lambda_laurent_coeff(KindTag kind, int l, const QBase& base) {
  const double q = base.q();
  const int d = kind.delta;
  const int al = l < 0 ? -l : l;
  double pre = std::pow(q, (2 - d) * al * (al - 1.0) / 4.0) / qpoch_qpow(1.0, q, al);
  double a = pre * detail::laurent_inner(d, al, base);
  return l < 0 ? a * std::pow(q, al) : a;
}

inline LaurentTable make_laurent_table(KindTag kind, int window, const QBase& base) {
  if (window < 0) throw DomainError("Laurent window must be nonnegative");
  LaurentTable t{kind, window, base.q(), std::vector<double>(2 * static_cast<std::size_t>(window) + 1)};
  const double q = base.q();
  for (int l = 0; l <= window; ++l) {
    double a = lambda_laurent_coeff(kind, l, base);
    t.coeffs[static_cast<std::size_t>(window + l)] = a;
    t.coeffs[static_cast<std::size_t>(window - l)] = a * std::pow(q, l);
  }
  return t;
}

namespace detail {

inline void check_lambda_annulus(KindTag kind, cplx u, double q) {
  double r = std::abs(u);
  if (r == 0.0) throw DomainError("Laurent evaluation needs u != 0");
  if (kind.j == 1 && !(r > q && r < 1.0)) throw DomainError("kind 1 Laurent series needs q < |u| < 1");
}

// Geometric tail beyond the last two terms of one side of the window.
inline double side_tail(cplx prev, cplx last) {
  double a = std::abs(last), p = std::abs(prev);
  if (a == 0.0) return 0.0;
  double rho = p == 0.0 ? std::numeric_limits<double>::infinity() : a / p;
  if (rho >= 0.99) throw NonConvergence("Laurent coefficient decay is not geometric at the window edge");
  return a * rho / (1.0 - rho);
}

}  // namespace detail

inline SeriesValue lambda_laurent_eval(const LaurentTable& table, cplx u, const QBase& base) {
  detail::check_lambda_annulus(table.kind, u, base.q());
  const int L = table.window;
  cplx sum = table.at(0);
  cplx tp_prev(table.at(0)), tm_prev(table.at(0)), tp = tp_prev, tm = tm_prev;
  const cplx lu = principal_log(u);
  auto term = [&](double a, double l) {
    if (a == 0.0) return cplx(0.0);
    return std::copysign(1.0, a) * std::exp(std::log(std::abs(a)) + l * lu);
  };
  for (int l = 1; l <= L; ++l) {
    tp_prev = tp;
    tm_prev = tm;
    tp = term(table.at(l), l);
    tm = term(table.at(-l), -l);
    sum += tp + tm;
  }
  double err = L == 0 ? std::abs(sum) : detail::side_tail(tp_prev, tp) + detail::side_tail(tm_prev, tm);
  return {sum, err, 2 * static_cast<std::size_t>(L) + 1};
}

inline SeriesValue lambda_laurent_eval(KindTag kind, cplx u, int window, const QBase& base) {
  return lambda_laurent_eval(make_laurent_table(kind, window, base), u, base);
}

struct LaurentAuto {
  SeriesValue value;
  int window = 0;
};

// Starts at window0 and doubles until the tail estimate drops below tol.
inline LaurentAuto lambda_laurent_eval_auto(KindTag kind, cplx u, const QBase& base, int window0 = 40,
                                            int max_window = 1 << 15) {
  detail::check_lambda_annulus(kind, u, base.q());
  for (int L = window0; L <= max_window; L *= 2) {
    try {
      SeriesValue v = lambda_laurent_eval(kind, u, L, base);
      if (v.err_estimate <= base.tol() * std::abs(v.value)) return {v, L};
    } catch (const NonConvergence&) {
    }
    if (L == 0) L = 1;
  }
  throw NonConvergence("Laurent window exceeded " + std::to_string(max_window));
}

inline cplx lambda_closed_form(KindTag kind, cplx u, const QBase& base) {
  LatticePoint p = lattice_decompose(u, base);
  const double q = base.q();
  const double n = p.n, lam = p.lambda, th = p.theta;
  switch (kind.j) {
    case 1: {
      cplx c = lambda_product(kind, std::polar(std::pow(q, lam), th), base);
      return c * std::polar(std::pow(q, n * (n - 1.0) / 2.0 + lam * n), (th + pi) * n);
    }
    case 2: {
      cplx c = lambda_product(kind, std::polar(std::pow(q, lam), th), base);
      return c * std::polar(std::pow(q, -n * (n - 1.0) / 2.0 - lam * n), -th * n);
    }
    default: {
      cplx c = std::pow(q, -1.0 / 24.0) * qexp(kind, std::polar(std::pow(q, lam), th), base) *
               qexp(kind, std::polar(std::pow(q, 1.0 - lam), -th), base);
      double ex = -2.0 / 3.0 * n * (n - 1.0) - 4.0 / 3.0 * n * lam;
      return c * std::polar(std::pow(q, ex), -4.0 * th / 3.0 * n);
    }
  }
}

namespace detail {

template <class F>
double four_term_residual(F&& L, cplx u, double q) {
  const double sq = std::sqrt(q);
  cplx t0 = L(u) * L(q / u);
  cplx t1 = L(q * u) * L(1.0 / u);
  cplx t2 = u * L(sq * u) * L(1.0 / u);
  cplx t3 = L(u) * L(sq / u) / u;
  double scale = std::max({std::abs(t0), std::abs(t1), std::abs(t2), std::abs(t3)});
  return std::abs(t0 - t1 - t2 + t3) / scale;
}

}  // namespace detail

inline double qexp_functional_residual(KindTag kind, cplx u, const QBase& base) {
  if (u == cplx(0.0)) throw DomainError("functional residual needs u != 0");
  const double q = base.q();
  switch (kind.j) {
    case 1: {
      cplx a = lambda_product(kind, q * u, base), b = u * lambda_product(kind, u, base);
      return std::abs(a + b) / std::max(std::abs(a), std::abs(b));
    }
    case 2: {
      cplx a = u * lambda_product(kind, q * u, base), b = lambda_product(kind, u, base);
      return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
    }
    default:
      return detail::four_term_residual([&](cplx x) { return qexp(kind, x, base); }, u, q);
  }
}

// Four-term residual for u^{log_q u - 3/2 + 2 i pi/ln q} (which = 1) or u^{-log_q u/3 + 1/2} (which = 2).
inline double power_solution_residual(int which, cplx u, const QBase& base) {
  if (u == cplx(0.0)) throw DomainError("power solution needs u != 0");
  const double lq = std::log(base.q());
  auto L = [&](cplx x) {
    cplx lg = principal_log(x) / lq;
    cplx s = which == 1 ? lg - 1.5 + 2.0 * pi * I / lq : -lg / 3.0 + 0.5;
    return cpow(x, s);
  };
  if (which != 1 && which != 2) throw DomainError("power solution index must be 1 or 2");
  return detail::four_term_residual(L, u, base.q());
}

inline AsymptoticEstimate qexp_asymptotic(KindTag kind, const LatticePoint& p, const QBase& base) {
  const double q = base.q();
  const double n = p.n, lam = p.lambda, th = p.theta;
  AsymptoticEstimate a;
  a.N = n * (n - 1.0) + 2.0 * lam * n;
  a.constant = qexp(kind, std::polar(std::pow(q, lam), th), base) *
               qexp(kind, std::polar(std::pow(q, 1.0 - lam), -th), base);
  switch (kind.j) {
    case 1:
      a.scale_exponent = a.N / 2.0;
      a.phase = std::polar(1.0, (th + pi) * n);
      break;
    case 2:
      a.scale_exponent = -a.N / 2.0;
      a.phase = std::polar(1.0, -th * n);
      break;
    default:
      a.scale_exponent = -2.0 / 3.0 * a.N - 1.0 / 24.0;
      a.phase = std::polar(1.0, -4.0 * th / 3.0 * n);
      break;
  }
  a.leading = std::pow(q, a.scale_exponent) * a.phase * a.constant;
  return a;
}

}  // namespace qfunc
