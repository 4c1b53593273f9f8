#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "qexp.hpp"

namespace qfunc {

enum class Family { J, Y, I, K };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::J: return "J";
    case Family::Y: return "Y";
    case Family::I: return "I";
    default: return "K";
  }
}

inline Family family_from(const std::string& s) {
  if (s == "J") return Family::J;
  if (s == "Y") return Family::Y;
  if (s == "I") return Family::I;
  if (s == "K") return Family::K;
  throw DomainError("unknown Bessel family '" + s + "'");
}

struct BesselSpec {
  KindTag kind;
  Family family = Family::I;
  double nu = 0.0;
};

enum class CoeffSign { plus, minus };

struct CoeffPair {
  int l = 0;
  CoeffSign sign = CoeffSign::plus;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

struct PhiBracket {
  double phi_min = 0.0;
  double phi_max = 0.0;
  std::vector<std::pair<double, double>> alpha_samples;  // (alpha, phi_1^2(alpha))
  std::vector<std::pair<double, double>> beta_samples;   // (beta, phi_2^2(beta))
};

struct QFactors {
  cplx Qplus, Qminus, Qplus_i, Qminus_i;
};

namespace detail {

inline bool near_integer(double nu, double tol = 1e-8) { return std::abs(nu - std::round(nu)) < tol; }

inline QBase base_sq(const QBase& b) { return b.with_q(b.q() * b.q()); }

// Gamma_{q^2}(nu) Gamma_{q^2}(1-nu)
inline double gamma_pair(double nu, const QBase& base) {
  QBase b2 = base_sq(base);
  return qgamma(nu, b2) * qgamma(1.0 - nu, b2);
}

}  // namespace detail

inline cplx a_nu(double nu, const QBase& base) {
  const double q = base.q();
  double a2;
  if (detail::near_integer(nu, 1e-12)) {
    double n = std::round(nu);
    a2 = std::pow(q, -n * n + 0.5) * std::log(1.0 / (q * q)) / (2.0 * pi);
  } else {
    a2 = std::pow(q, -nu + 0.5) * (1.0 - q * q) / (2.0 * detail::gamma_pair(nu, base) * std::sin(nu * pi));
  }
  return std::sqrt(cplx(a2, 0.0));
}

// 2Phi1(q^{nu+1/2}, q^{-nu+1/2}; -q; q, q/u)
inline SeriesValue phi_nu(double nu, cplx u, const QBase& base) {
  const double q = base.q();
  if (std::abs(u) <= q) throw NonConvergence("Phi_nu needs |u| > q");
  return basic_hyper({std::pow(q, nu + 0.5), std::pow(q, -nu + 0.5)}, {-q}, base, q / u);
}

// J or I of type j at argument 2(1-q^2)z, base q^2.
inline SeriesValue bessel_series(Family family, KindTag kind, double nu, cplx z, const QBase& base) {
  if (family != Family::J && family != Family::I) throw DomainError("bessel_series handles J and I only");
  const double q = base.q(), q2 = q * q;
  if (kind.j == 1 && std::abs(z) >= 1.0 / (1.0 - q2)) {
    throw NonConvergence("kind 1 series needs |z| < 1/(1-q^2)");
  }
  if (nu + 1.0 <= 0.0 && detail::near_integer(nu, 1e-12)) {
    throw ParameterPole("Gamma_{q^2}(nu+1) pole at nu = " + std::to_string(nu));
  }
  if (z == cplx(0.0)) {
    if (nu > 0.0) return {cplx(0.0), 0.0, 1};
    if (nu == 0.0) return {cplx(1.0), 0.0, 1};
    throw DomainError("negative order is singular at z = 0");
  }
  const double d = kind.delta;
  const double w = (1.0 - q2) * (1.0 - q2);
  const double sgn = family == Family::J ? -1.0 : 1.0;
  const cplx wz2 = sgn * w * z * z;
  TailTracker acc(base.tol());
  cplx t(1.0);
  bool done = acc.add(t);
  for (std::size_t n = 0; !done; ++n) {
    if (n + 1 >= base.max_terms()) throw NonConvergence("Bessel series reached max_terms");
    double dn = static_cast<double>(n);
    double den = (1.0 - std::pow(q2, dn + 1.0)) * (1.0 - std::pow(q2, nu + 1.0 + dn));
    t *= std::pow(q, (2.0 - d) * (2.0 * dn + 1.0 + nu)) * wz2 / den;
    done = acc.add(t);
  }
  cplx pre = cpow(z, nu) / qgamma(nu + 1.0, detail::base_sq(base));
  return {pre * acc.sum(), std::abs(pre) * acc.tail(), acc.count()};
}

namespace detail {

inline double yk_prefactor(Family family, double nu, const QBase& base) {
  const double q = base.q();
  double c = std::pow(q, -nu * nu + nu) * gamma_pair(nu, base);
  return family == Family::Y ? c / pi : c / 2.0;
}

inline SeriesValue combination_direct(Family family, KindTag kind, double nu, cplx z, const QBase& base) {
  double c = yk_prefactor(family, nu, base);
  if (family == Family::Y) {
    SeriesValue a = bessel_series(Family::J, kind, nu, z, base);
    SeriesValue b = bessel_series(Family::J, kind, -nu, z, base);
    double cs = std::cos(nu * pi);
    return {c * (cs * a.value - b.value), std::abs(c) * (std::abs(cs) * a.err_estimate + b.err_estimate),
            a.terms_used + b.terms_used};
  }
  SeriesValue a = bessel_series(Family::I, kind, -nu, z, base);
  SeriesValue b = bessel_series(Family::I, kind, nu, z, base);
  return {c * (a.value - b.value), std::abs(c) * (a.err_estimate + b.err_estimate), a.terms_used + b.terms_used};
}

}  // namespace detail

// Y or K; integer orders by symmetric offsets and Richardson extrapolation in eps^2.
inline SeriesValue bessel_combination(Family family, KindTag kind, double nu, cplx z, const QBase& base) {
  if (family != Family::Y && family != Family::K) throw DomainError("bessel_combination handles Y and K only");
  if (!detail::near_integer(nu)) return detail::combination_direct(family, kind, nu, z, base);
  const double m = std::round(nu);
  const double e1 = 1e-4, e2 = 1e-5;
  auto mean = [&](double e) {
    SeriesValue a = detail::combination_direct(family, kind, m + e, z, base);
    SeriesValue b = detail::combination_direct(family, kind, m - e, z, base);
    return SeriesValue{(a.value + b.value) / 2.0, (a.err_estimate + b.err_estimate) / 2.0,
                       a.terms_used + b.terms_used};
  };
  SeriesValue s1 = mean(e1), s2 = mean(e2);
  cplx ext = (e1 * e1 * s2.value - e2 * e2 * s1.value) / (e1 * e1 - e2 * e2);
  double diff = std::abs(ext - s2.value);
  if (diff > std::max(100.0 * base.tol(), 1e-8) * std::abs(ext)) {
    throw LimitUnstable("integer-order limit unstable at nu = " + std::to_string(m));
  }
  return {ext, diff + s2.err_estimate, s1.terms_used + s2.terms_used};
}

inline SeriesValue bessel_eval(const BesselSpec& s, cplx z, const QBase& base) {
  if (s.family == Family::J || s.family == Family::I) return bessel_series(s.family, s.kind, s.nu, z, base);
  return bessel_combination(s.family, s.kind, s.nu, z, base);
}

inline cplx bessel(const BesselSpec& s, cplx z, const QBase& base) { return bessel_eval(s, z, base).value; }

// Phi_nu representations for kinds 1, 2; u = (1-q^2) z.
inline SeriesValue bessel_phi_repr(const BesselSpec& s, cplx u, const QBase& base) {
  if (s.kind.j == 3) throw DomainError("Phi representation covers kinds 1 and 2");
  const double q = base.q(), nu = s.nu;
  if ((s.family == Family::Y || s.family == Family::K) && detail::near_integer(nu)) {
    throw DomainError("Phi representation of Y/K needs non-integer order");
  }
  const cplx a = a_nu(nu, base);
  const cplx s2 = std::sqrt(2.0 * u);
  const double pk = std::pow(q, -nu * nu + 0.5) * (1.0 - q * q);
  auto ephi = [&](cplx v) {
    SeriesValue e = qexp_eval(s.kind, v, base);
    SeriesValue p = phi_nu(nu, v, base);
    return SeriesValue{e.value * p.value, std::abs(e.value) * p.err_estimate + std::abs(p.value) * e.err_estimate,
                       e.terms_used + p.terms_used};
  };
  auto combine = [](cplx ca, const SeriesValue& A, cplx cb, const SeriesValue& B) {
    return SeriesValue{ca * A.value + cb * B.value,
                       std::abs(ca) * A.err_estimate + std::abs(cb) * B.err_estimate, A.terms_used + B.terms_used};
  };
  const cplx ph_m = std::exp(-I * (pi / 4.0 + nu * pi / 2.0));
  const cplx ph_p = std::exp(I * (nu * pi / 2.0 - pi / 4.0));
  switch (s.family) {
    case Family::I: {
      SeriesValue r = combine(1.0, ephi(u), I * std::exp(I * nu * pi), ephi(-u));
      return combine(a / s2, r, 0.0, SeriesValue{0.0, 0.0, 0});
    }
    case Family::K: {
      SeriesValue r = ephi(-u);
      cplx c = pk / (2.0 * a * s2);
      return {c * r.value, std::abs(c) * r.err_estimate, r.terms_used};
    }
    case Family::J: {
      SeriesValue r = combine(ph_m, ephi(I * u), I * ph_p, ephi(-I * u));
      return {a / s2 * r.value, std::abs(a / s2) * r.err_estimate, r.terms_used};
    }
    default: {
      SeriesValue r = combine(I * ph_m, ephi(I * u), ph_p, ephi(-I * u));
      cplx c = -pk / (2.0 * pi * a * s2);
      return {c * r.value, std::abs(c) * r.err_estimate, r.terms_used};
    }
  }
}

namespace detail {

struct InnerSum {
  double value;
  std::size_t terms;
};

// Sums t_0 = 1, t_{k+1} = t_k ratio(k); snaps cancellation noise to 0.
template <class R>
InnerSum inner_sum(R&& ratio, const QBase& base) {
  TailTracker acc(base.tol());
  double t = 1.0;
  bool done = acc.add(t);
  for (long k = 0; !done; ++k) {
    if (static_cast<std::size_t>(k) + 1 >= base.max_terms()) throw NonConvergence("coefficient sum reached max_terms");
    t *= ratio(static_cast<double>(k));
    done = acc.add(t);
  }
  double v = acc.sum().real();
  if (std::abs(v) <= 64.0 * eps * acc.max_abs()) v = 0.0;
  return {v, acc.count()};
}

}  // namespace detail

// c_{l+} or c_{l-} of e_q^{(j)}(u) Phi_nu(u), j in {1,2}.
inline double bessel_laurent_coeff(KindTag kind, int l, CoeffSign sign, double nu, const QBase& base) {
  if (kind.j == 3) throw DomainError("bessel_laurent_coeff covers kinds 1 and 2");
  if (sign == CoeffSign::minus && l < 1) throw DomainError("c_{l-} needs l >= 1");
  if (sign == CoeffSign::plus && l < 0) throw DomainError("c_{l+} needs l >= 0");
  const double q = base.q(), d = kind.delta, A = -nu + 0.5, B = nu + 0.5, dl = l;
  auto qp = [q](double e) { return std::pow(q, e); };
  if (sign == CoeffSign::plus) {
    double outer = qp((2.0 - d) * dl * (dl - 1.0) / 4.0) / qpoch_qpow(1.0, q, l);
    auto ratio = [&](double k) {
      double num = (1.0 - qp(A + k)) * (1.0 - qp(B + k));
      double den = (1.0 - qp(2.0 * k + 2.0)) * (1.0 - qp(dl + 1.0 + k));
      return num / den * qp((2.0 - d) * (2.0 * k + 2.0 * dl) / 4.0 + 1.0);
    };
    return outer * detail::inner_sum(ratio, base).value;
  }
  double outer = qpoch_qpow(A, q, l) * qpoch_qpow(B, q, l) * qp(dl) / qpoch_qpow(1.0, q * q, l);
  auto ratio = [&](double k) {
    double num = (1.0 - qp(A + dl + k)) * (1.0 - qp(B + dl + k));
    double den = (1.0 - qp(2.0 * dl + 2.0 + 2.0 * k)) * (1.0 - qp(k + 1.0));
    return num / den * qp((2.0 - d) * k / 2.0 + 1.0);
  };
  return outer * detail::inner_sum(ratio, base).value;
}

inline CoeffPair type3_coeff(int l, CoeffSign sign, double nu, const QBase& base) {
  CoeffPair c{l, sign, bessel_laurent_coeff(KindTag::of(1), l, sign, nu, base),
              bessel_laurent_coeff(KindTag::of(2), l, sign, nu, base), 0.0};
  double p = c.c1 * c.c2;
  if (p < 0.0) throw NegativeProduct("c1*c2 < 0 at l = " + std::to_string(l));
  c.c3 = std::copysign(std::sqrt(p), c.c1);
  return c;
}

// Laurent coefficient of Lambda via the base-q modified Bessel value I_l(2 q^{d/4}; q).
inline double lambda_laurent_coeff_bessel(KindTag kind, int l, const QBase& base) {
  const double q = base.q(), d = kind.delta;
  const int al = l < 0 ? -l : l;
  QBase bh = base.with_q(std::sqrt(q));
  double iv = bessel_series(Family::I, kind, al, std::pow(q, d / 4.0) / (1.0 - q), bh).value.real();
  return std::pow(q, (2.0 - d) * l * l / 4.0 - l / 2.0) * iv;
}

namespace detail {

// Grows the c3 tables to cover l <= L.
inline void grow_c3(std::vector<double>& plus, std::vector<double>& minus, int L, double nu, const QBase& base) {
  for (int l = static_cast<int>(plus.size()); l <= L; ++l)
    plus.push_back(type3_coeff(l, CoeffSign::plus, nu, base).c3);
  if (minus.empty()) minus.push_back(0.0);
  for (int l = static_cast<int>(minus.size()); l <= L; ++l)
    minus.push_back(type3_coeff(l, CoeffSign::minus, nu, base).c3);
}

// sum over the window of w(l) c3_{l+-} v^{+-l}; band = the terms with L/2 < |l| <= L.
template <class W>
std::pair<cplx, double> type3_sum(const std::vector<double>& plus, const std::vector<double>& minus, int L, cplx v,
                                  W&& wgt) {
  cplx s = wgt(0) * plus[0];
  double band = 0.0;
  const cplx lv = principal_log(v);
  // c v^{+-l} in log form; v^l alone overflows for large v long before c decays.
  auto term = [&](double c, double l) {
    if (c == 0.0) return cplx(0.0);
    return std::copysign(1.0, c) * std::exp(std::log(std::abs(c)) + l * lv);
  };
  for (int l = 1; l <= L; ++l) {
    cplx t = wgt(l) * (term(plus[static_cast<std::size_t>(l)], l) + term(minus[static_cast<std::size_t>(l)], -l));
    s += t;
    if (2 * l > L) band += std::abs(t);
  }
  return {s, band};
}

}  // namespace detail

// Type-3 two-sided series: I and K from the geometric-mean coefficients, J by rotation, Y by combination.
inline SeriesValue bessel_type3_repr(Family family, double nu, cplx u, int window, const QBase& base) {
  const double q = base.q();
  if (std::abs(u) <= q) throw NonConvergence("type-3 series needs |u| > q");
  if (family == Family::Y && detail::near_integer(nu)) throw DomainError("type-3 Y needs non-integer order");
  const cplx a = a_nu(nu, base);
  std::vector<double> plus, minus;
  auto r_i = [&](double order, cplx v, int L) {
    auto w = [&](int l) { return 1.0 + I * std::exp(I * (order + l) * pi); };
    auto [s, band] = detail::type3_sum(plus, minus, L, v, w);
    cplx c = a / std::sqrt(2.0 * v);
    return std::pair<cplx, double>{c * s, std::abs(c) * band};
  };
  auto r_k = [&](cplx v, int L) {
    auto w = [](int l) { return cplx(l % 2 == 0 ? 1.0 : -1.0); };
    auto [s, band] = detail::type3_sum(plus, minus, L, v, w);
    cplx c = std::pow(q, -nu * nu + 0.5) * (1.0 - q * q) / (2.0 * a * std::sqrt(2.0 * v));
    return std::pair<cplx, double>{c * s, std::abs(c) * band};
  };
  auto r_j = [&](double order, int L) {
    auto [v, band] = r_i(order, I * u, L);
    return std::pair<cplx, double>{std::exp(-I * order * pi / 2.0) * v, band};
  };
  const int cap = 1 << 12;
  for (int L = std::max(window, 2); L <= cap; L *= 2) {
    detail::grow_c3(plus, minus, L, nu, base);
    std::pair<cplx, double> r;
    switch (family) {
      case Family::I: r = r_i(nu, u, L); break;
      case Family::K: r = r_k(u, L); break;
      case Family::J: r = r_j(nu, L); break;
      default: {
        auto p = r_j(nu, L);
        auto m = r_j(-nu, L);
        double c = detail::yk_prefactor(Family::Y, nu, base);
        double cs = std::cos(nu * pi);
        r = {c * (cs * p.first - m.first), std::abs(c) * (std::abs(cs) * p.second + m.second)};
        break;
      }
    }
    if (r.second <= base.tol() * std::abs(r.first) || r.second == 0.0) {
      return {r.first, r.second, 2 * static_cast<std::size_t>(L) + 1};
    }
  }
  throw NonConvergence("type-3 series window exceeded " + std::to_string(cap));
}

// Normalized residual of the second-order q-difference equation.
inline double bessel_diffeq_residual(const BesselSpec& s, cplx z, const QBase& base) {
  const double q = base.q(), d = s.kind.delta, nu = s.nu;
  auto f = [&](cplx x) { return bessel(s, x, base); };
  const double sgn = (s.family == Family::J || s.family == Family::Y) ? 1.0 : -1.0;
  cplx t0 = f(z / q);
  cplx t1 = (std::pow(q, -nu) + std::pow(q, nu)) * f(z);
  cplx t2 = f(q * z);
  cplx t3 = std::pow(q, -d) * std::pow(1.0 - q * q, 2) * z * z * f(std::pow(q, 1.0 - d) * z);
  double scale = std::max({std::abs(t0), std::abs(t1), std::abs(t2), std::abs(t3)});
  return std::abs(t0 - t1 + t2 + sgn * t3) / scale;
}

template <class F1, class F2>
cplx wronskian(F1&& f1, F2&& f2, cplx z, const QBase& base) {
  const cplx qz = base.q() * z;
  return f1(z) * f2(qz) - f1(qz) * f2(z);
}

enum class WPair { JY, IK };

inline cplx wronskian_closed(KindTag kind, WPair pair, double nu, cplx z, const QBase& base) {
  const double q = base.q(), q2 = q * q;
  const QBase b2 = detail::base_sq(base);
  const cplx x = (1.0 - q2) * (1.0 - q2) * z * z;
  const double c0 = std::pow(q, -nu * nu) * (1.0 - q2);
  const bool jy = pair == WPair::JY;
  cplx f(1.0);
  if (kind.delta == 2) {
    cplx arg = jy ? -x : x;  // e_{q^2}(arg) = 1 / (arg; q^2)_inf
    long m = 0;
    if (is_neg_qpower(arg, q2, m, 1e-8)) throw PoleError("e_{q^2} pole in the Wronskian factor");
    f = 1.0 / qpoch_infinite(arg, b2).value;
  } else if (kind.delta == 0) {
    f = qpoch_infinite(jy ? -q2 * x : q2 * x, b2).value;  // E_{q^2}(y) = (-y; q^2)_inf
  }
  return jy ? -c0 / pi * f : c0 / 2.0 * f;
}

inline QFactors q_factors(KindTag kind, const LatticePoint& p, const QBase& base) {
  if (kind.j == 3) throw DomainError("Q factors cover kinds 1 and 2");
  const double q = base.q(), lam = p.lambda;
  const double a = std::pow(q, lam), b = std::pow(q, 1.0 - lam), c = std::pow(q, 1.0 - p.n - lam);
  auto e = [&](cplx v) { return qexp(kind, v, base); };
  return {e(a) * e(b) / e(c), e(-a) * e(-b) / e(-c), e(I * a) * e(-I * b) / e(-I * c),
          e(-I * a) * e(I * b) / e(I * c)};
}

namespace detail {

inline AsymptoticEstimate finish_estimate(cplx pref, double scale, cplx bracket, double N, double q) {
  AsymptoticEstimate est;
  est.prefactor = pref;
  est.scale_exponent = scale;
  est.N = N;
  double m = std::abs(bracket);
  est.phase = m == 0.0 ? cplx(1.0) : bracket / m;
  est.constant = m;
  est.leading = pref * std::pow(q, scale) * bracket;
  return est;
}

}  // namespace detail

// Leading term for kinds 1, 2 on the real positive lattice u = q^{n+lambda}.
inline AsymptoticEstimate bessel_asymptotic(const BesselSpec& s, const LatticePoint& p, const QBase& base) {
  if (s.kind.j == 3) throw DomainError("use type3_asymptotic_bracket for kind 3");
  if (p.theta != 0.0) throw DomainError("Bessel asymptotics are taken along real positive u");
  const double q = base.q(), nu = s.nu, n = p.n, lam = p.lambda;
  const double u = std::pow(q, n + lam);
  const double N = n * (n - 1.0) + 2.0 * lam * n;
  const double scale = s.kind.j == 1 ? N / 2.0 : -N / 2.0;
  const cplx a = a_nu(nu, base);
  const double s2 = std::sqrt(2.0 * u);
  const double pk = std::pow(q, -nu * nu + 0.5) * (1.0 - q * q);
  auto C = [&](double th) {
    return qexp(s.kind, std::polar(std::pow(q, lam), th), base) *
           qexp(s.kind, std::polar(std::pow(q, 1.0 - lam), -th), base);
  };
  auto ph = [&](double th) { return s.kind.j == 1 ? std::polar(1.0, (th + pi) * n) : std::polar(1.0, -th * n); };
  const cplx ph_m = std::exp(-I * (pi / 4.0 + nu * pi / 2.0));
  const cplx ph_p = std::exp(I * (nu * pi / 2.0 - pi / 4.0));
  switch (s.family) {
    case Family::I:
      return detail::finish_estimate(a / s2, scale, ph(0.0) * C(0.0) + I * std::exp(I * nu * pi) * ph(pi) * C(pi), N, q);
    case Family::K:
      return detail::finish_estimate(pk / (2.0 * a * s2), scale, ph(pi) * C(pi), N, q);
    case Family::J: {
      cplx A = ph(pi / 2.0) * C(pi / 2.0), B = ph(-pi / 2.0) * C(-pi / 2.0);
      return detail::finish_estimate(a / s2, scale, ph_m * A + I * ph_p * B, N, q);
    }
    default: {
      cplx A = ph(pi / 2.0) * C(pi / 2.0), B = ph(-pi / 2.0) * C(-pi / 2.0);
      return detail::finish_estimate(-pk / (2.0 * pi * a * s2), scale, I * ph_m * A + ph_p * B, N, q);
    }
  }
}

// phi_1^2(alpha) and phi_2^2(beta) sampled on 64-point grids.
inline PhiBracket phi_bracket(double nu, const QBase& base, int samples = 64, double h = 1e-6) {
  const double q = base.q();
  const std::vector<cplx> up{std::pow(q, nu + 0.5), std::pow(q, -nu + 0.5)};
  const double amax = std::min(1.0 / (1.0 - q), 0.99 / q) - h;
  const double amin = 1.0 + h, bmin = h, bmax = 1.0 / (1.0 - q) - h;
  PhiBracket pb;
  for (int i = 0; i < samples; ++i) {
    double t = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    double al = amin + (amax - amin) * t, be = bmin + (bmax - bmin) * t;
    pb.alpha_samples.emplace_back(al, basic_hyper(up, {-q}, base, al * q).value.real());
    pb.beta_samples.emplace_back(be, basic_hyper(up, {-q, 0.0}, base, -be * q).value.real());
  }
  bool first = true;
  for (const auto& [al, p1] : pb.alpha_samples) {
    for (const auto& [be, p2] : pb.beta_samples) {
      double prod = p1 * p2;
      if (prod < 0.0) throw NegativeProduct("phi_1^2 phi_2^2 < 0 on the sampling grid");
      double v = std::sqrt(prod);
      if (first || v < pb.phi_min) pb.phi_min = v;
      if (first || v > pb.phi_max) pb.phi_max = v;
      first = false;
    }
  }
  return pb;
}

// Leading type-3 form (without the phi factor) and the sampled phi bracket.
inline std::pair<AsymptoticEstimate, PhiBracket> type3_asymptotic_bracket(Family family, double nu,
                                                                          const LatticePoint& p,
                                                                          const QBase& base) {
  if (p.theta != 0.0) throw DomainError("type-3 asymptotics are taken along real positive u");
  const KindTag k3 = KindTag::of(3);
  const double q = base.q(), n = p.n, lam = p.lambda;
  const double u = std::pow(q, n + lam);
  const double N = n * (n - 1.0) + 2.0 * lam * n;
  const double scale = -2.0 / 3.0 * N - 1.0 / 24.0;
  const cplx a = a_nu(nu, base);
  const double s2 = std::sqrt(2.0 * u);
  const double pk = std::pow(q, -nu * nu + 0.5) * (1.0 - q * q);
  const double ql = std::pow(q, lam), ql1 = std::pow(q, 1.0 - lam);
  auto e3 = [&](cplx v) { return qexp(k3, v, base); };
  const cplx ph_m = std::exp(-I * (pi / 4.0 + nu * pi / 2.0));
  const cplx ph_p = std::exp(I * (nu * pi / 2.0 - pi / 4.0));
  const cplx A = std::polar(1.0, -2.0 * pi * n / 3.0) * e3(I * ql) * e3(-I * ql1);
  const cplx B = std::polar(1.0, 2.0 * pi * n / 3.0) * e3(-I * ql) * e3(I * ql1);
  AsymptoticEstimate est;
  switch (family) {
    case Family::I:
      est = detail::finish_estimate(a / s2, scale, e3(ql) * e3(ql1) + I * std::exp(I * nu * pi) * e3(-ql) * e3(-ql1), N, q);
      break;
    case Family::K: est = detail::finish_estimate(pk / (2.0 * a * s2), scale, e3(-ql) * e3(-ql1), N, q); break;
    case Family::J: est = detail::finish_estimate(a / s2, scale, ph_m * A + I * ph_p * B, N, q); break;
    default: est = detail::finish_estimate(-pk / (2.0 * pi * a * s2), scale, I * ph_m * A + ph_p * B, N, q); break;
  }
  return {est, phi_bracket(nu, base)};
}

}  // namespace qfunc
