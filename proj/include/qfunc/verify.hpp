#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "qbessel.hpp"
#include "qexp.hpp"

namespace qfunc {

struct SuiteConfig {
  std::vector<double> q_grid{0.25, 0.5, 0.8};
  std::vector<double> nu_grid{0.25, 0.5, 1.5};
  std::vector<std::pair<int, double>> lattice_points = default_lattice();
  double tol_pass = 1e-8;
  std::uint64_t seed = 20240917;
  int samples = 20;
  double eval_tol = 1e-15;
  // Relative perturbation applied to one type-3 coefficient (fault injection).
  double c3_perturbation = 0.0;

  static std::vector<std::pair<int, double>> default_lattice() {
    std::vector<std::pair<int, double>> pts;
    for (double lam : {0.0, 0.3, 0.5})
      for (int n = -1; n >= -8; --n) pts.emplace_back(n, lam);
    return pts;
  }
};

struct CheckResult {
  std::string check_id;
  double worst_residual = 0.0;
  nlohmann::json location = nlohmann::json::object();
  bool pass = true;
};

// Seeded sampler; doubles come from raw 53-bit words for platform-stable draws.
class Sampler {
 public:
  Sampler(std::uint64_t seed, const std::string& stream) : gen_(seed ^ fnv1a(stream)) {}

  double uniform(double a, double b) {
    double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }

  cplx polar(double rmin, double rmax, double thmin, double thmax) {
    double r = uniform(rmin, rmax);
    return std::polar(r, uniform(thmin, thmax));
  }

 private:
  static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  std::mt19937_64 gen_;
};

inline nlohmann::json cjson(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

// Running worst residual of one check.
class Worst {
 public:
  explicit Worst(std::string id) : id_(std::move(id)) {}

  void update(double r, nlohmann::json loc) {
    if (std::isnan(r)) r = std::numeric_limits<double>::infinity();
    if (!seen_ || r > worst_) {
      worst_ = r;
      loc_ = std::move(loc);
      seen_ = true;
    }
  }

  // Runs f; evaluation errors count as an infinite residual at that location.
  template <class F>
  void eval(F&& f, nlohmann::json loc) {
    double r;
    try {
      r = f();
    } catch (const Error& e) {
      r = std::numeric_limits<double>::infinity();
      loc["error"] = std::string(e.kind()) + ": " + e.what();
    }
    update(r, std::move(loc));
  }

  bool seen() const { return seen_; }

  CheckResult result(double tol_pass) const {
    return {id_, worst_, loc_, worst_ <= tol_pass};
  }

 private:
  std::string id_;
  double worst_ = 0.0;
  nlohmann::json loc_ = nlohmann::json::object();
  bool seen_ = false;
};

// 0 when errs[i+1] < errs[i] for all i >= burn_in, else the largest offending ratio (>= 1).
inline std::pair<double, std::size_t> monotone_violation(const std::vector<double>& errs, std::size_t burn_in = 0) {
  double worst = 0.0;
  std::size_t at = 0;
  for (std::size_t i = burn_in; i + 1 < errs.size(); ++i) {
    double a = errs[i], b = errs[i + 1];
    double v = 0.0;
    if (!std::isfinite(a) || !std::isfinite(b)) v = std::numeric_limits<double>::infinity();
    else if (b >= a) v = a == 0.0 ? std::numeric_limits<double>::infinity() : b / a;
    if (v > worst) {
      worst = v;
      at = i + 1;
    }
  }
  return {worst, at};
}

inline double rel_err(cplx approx, cplx exact) {
  double m = std::abs(exact);
  return m == 0.0 ? std::abs(approx) : std::abs(approx - exact) / m;
}

struct DecaySelector {
  bool qexp = true;
  KindTag kind = KindTag::of(1);
  Family family = Family::I;
};

struct DecayRow {
  int n = 0;
  cplx exact;
  cplx asymptotic;
  double rel_error = 0.0;
  // kind-3 Bessel rows only
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double phi_min = std::numeric_limits<double>::quiet_NaN();
  double phi_max = std::numeric_limits<double>::quiet_NaN();
};

// "Exact" reference for large real u: Phi representation (kind 1), series (kind 2), type-3 series (kind 3).
inline cplx bessel_exact_large(const BesselSpec& s, double u, const QBase& base) {
  const double q = base.q();
  if (s.kind.j == 1) return bessel_phi_repr(s, u, base).value;
  if (s.kind.j == 2) return bessel(s, u / (1.0 - q * q), base);
  return bessel_type3_repr(s.family, s.nu, u, 40, base).value;
}

inline std::vector<DecayRow> asymptotic_decay_report(const DecaySelector& sel, double q, double nu, double lambda,
                                                     const std::vector<int>& n_range, const QBase& controls) {
  for (std::size_t i = 1; i < n_range.size(); ++i)
    if (n_range[i] >= n_range[i - 1]) throw DomainError("n_range must be strictly decreasing");
  const QBase base = controls.with_q(q);
  std::vector<DecayRow> rows;
  PhiBracket pb;
  const bool type3 = !sel.qexp && sel.kind.j == 3;
  if (type3 && !n_range.empty()) pb = phi_bracket(nu, base);
  for (int n : n_range) {
    LatticePoint p = lattice_point(n, lambda, 0.0, base);
    DecayRow row;
    row.n = n;
    if (sel.qexp) {
      row.exact = qexp(sel.kind, p.u, base);
      row.asymptotic = qexp_asymptotic(sel.kind, p, base).leading;
      row.rel_error = rel_err(row.asymptotic, row.exact);
    } else if (!type3) {
      BesselSpec s{sel.kind, sel.family, nu};
      row.exact = bessel_exact_large(s, p.u.real(), base);
      row.asymptotic = bessel_asymptotic(s, p, base).leading;
      row.rel_error = rel_err(row.asymptotic, row.exact);
    } else {
      BesselSpec s{sel.kind, sel.family, nu};
      row.exact = bessel_exact_large(s, p.u.real(), base);
      row.asymptotic = type3_asymptotic_bracket(sel.family, nu, p, base).first.leading;
      row.rel_error = rel_err(row.asymptotic, row.exact);
      row.ratio = std::abs(row.exact) / std::abs(row.asymptotic);
      row.phi_min = pb.phi_min;
      row.phi_max = pb.phi_max;
    }
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

constexpr Family kFamilies[] = {Family::J, Family::Y, Family::I, Family::K};

inline std::string kid(const std::string& prefix, int j) { return prefix + ".j" + std::to_string(j); }

// In-domain draw for Bessel arguments z (kind 1 keeps z/q inside the disc).
inline cplx draw_bessel_z(Sampler& s, KindTag kind, double q, bool shift_down) {
  double rmax = kind.j == 1 ? 0.9 * (shift_down ? q : 1.0) / (1.0 - q * q) : 1.5;
  return s.polar(0.05 * rmax, rmax, -pi / 2.0 + 0.01, pi / 2.0 - 0.01);
}

// b_k of (1/sqrt u) e(u)Phi(u) = sum_k b_k u^{k-1/2}; kind 3 uses the geometric mean.
inline double recursion_coeff(int j, int k, double nu, const QBase& base) {
  CoeffSign sg = k >= 0 ? CoeffSign::plus : CoeffSign::minus;
  int l = k >= 0 ? k : -k;
  if (j == 3) return type3_coeff(l, sg, nu, base).c3;
  return bessel_laurent_coeff(KindTag::of(j), l, sg, nu, base);
}

inline void check_diffeq(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  for (Family f : kFamilies) {
    for (int j = 1; j <= 3; ++j) {
      std::string id = kid(std::string("diffeq.") + family_name(f), j);
      Worst w(id);
      Sampler smp(cfg.seed, id);
      KindTag k = KindTag::of(j);
      for (double q : cfg.q_grid)
        for (double nu : cfg.nu_grid) {
          QBase b(q, cfg.eval_tol);
          for (int i = 0; i < cfg.samples; ++i) {
            cplx z = draw_bessel_z(smp, k, q, true);
            w.eval([&] { return bessel_diffeq_residual({k, f, nu}, z, b); },
                   {{"q", q}, {"nu", nu}, {"z", cjson(z)}});
          }
        }
      if (w.seen()) out.push_back(w.result(cfg.tol_pass));
    }
  }
}

inline void check_wronskian(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  for (WPair pr : {WPair::IK, WPair::JY}) {
    const char* pname = pr == WPair::JY ? "JY" : "IK";
    Family f1 = pr == WPair::JY ? Family::J : Family::I;
    Family f2 = pr == WPair::JY ? Family::Y : Family::K;
    for (int j = 1; j <= 3; ++j) {
      std::string id = kid(std::string("wronskian.") + pname, j);
      Worst w(id);
      Sampler smp(cfg.seed, id);
      KindTag k = KindTag::of(j);
      for (double q : cfg.q_grid)
        for (double nu : cfg.nu_grid) {
          QBase b(q, cfg.eval_tol);
          auto g1 = [&](cplx x) { return bessel({k, f1, nu}, x, b); };
          auto g2 = [&](cplx x) { return bessel({k, f2, nu}, x, b); };
          for (int i = 0; i < cfg.samples; ++i) {
            cplx z = draw_bessel_z(smp, k, q, false);
            w.eval(
                [&] {
                  cplx qz = q * z;
                  cplx t1 = g1(z) * g2(qz), t2 = g1(qz) * g2(z);
                  cplx c = wronskian_closed(k, pr, nu, z, b);
                  return std::abs(t1 - t2 - c) / std::max({std::abs(t1), std::abs(t2), std::abs(c)});
                },
                {{"q", q}, {"nu", nu}, {"z", cjson(z)}});
          }
        }
      if (w.seen()) out.push_back(w.result(cfg.tol_pass));
    }
    // z-independence for delta = 1 on a 10-point grid
    std::string id = std::string("wronskian.constancy.") + pname + ".j3";
    Worst w(id);
    KindTag k = KindTag::of(3);
    for (double q : cfg.q_grid)
      for (double nu : cfg.nu_grid) {
        QBase b(q, cfg.eval_tol);
        auto g1 = [&](cplx x) { return bessel({k, f1, nu}, x, b); };
        auto g2 = [&](cplx x) { return bessel({k, f2, nu}, x, b); };
        w.eval(
            [&] {
              cplx w0 = wronskian(g1, g2, cplx(0.1), b);
              double worst = 0.0;
              for (int i = 1; i < 10; ++i) {
                cplx wi = wronskian(g1, g2, cplx(0.1 + 0.15 * i), b);
                worst = std::max(worst, std::abs(wi - w0) / std::abs(w0));
              }
              return worst;
            },
            {{"q", q}, {"nu", nu}});
      }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
}

inline void check_laurent(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  for (int j = 1; j <= 3; ++j) {
    std::string id = kid("laurent", j);
    Worst w(id);
    Sampler smp(cfg.seed, id);
    KindTag k = KindTag::of(j);
    for (double q : cfg.q_grid) {
      QBase b(q, cfg.eval_tol);
      for (int i = 0; i < cfg.samples; ++i) {
        double t = smp.uniform(0.1, 0.9);
        cplx u = std::polar(std::pow(q, t), smp.uniform(-pi, pi));
        nlohmann::json loc{{"q", q}, {"u", cjson(u)}};
        double r;
        try {
          LaurentAuto la = lambda_laurent_eval_auto(k, u, b);
          loc["window"] = la.window;
          r = rel_err(la.value.value, lambda_product(k, u, b));
        } catch (const Error& e) {
          r = std::numeric_limits<double>::infinity();
          loc["error"] = std::string(e.kind()) + ": " + e.what();
        }
        w.update(r, loc);
      }
    }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
  Worst inner("lambda_order.inner"), outer("lambda_order.outer");
  for (double q : cfg.q_grid) {
    QBase b(q, cfg.eval_tol);
    auto L = [&](int j, double u) { return lambda_product(KindTag::of(j), u, b).real(); };
    for (int i = 0; i < 50; ++i) {
      double u = q + (1.0 - q) * (i + 0.5) / 50.0;
      inner.eval(
          [&] {
            double l1 = L(1, u), l2 = L(2, u), l3 = L(3, u);
            return std::max({0.0, l2 - l3, l3 - l1}) / std::abs(l3);
          },
          {{"q", q}, {"u", u}});
      double v = std::pow(q, -4.0 * (i + 0.5) / 50.0);
      outer.eval(
          [&] {
            double l2 = L(2, v), l3 = L(3, v);
            return std::max(0.0, l2 - l3) / std::abs(l3);
          },
          {{"q", q}, {"u", v}});
    }
  }
  if (inner.seen()) out.push_back(inner.result(cfg.tol_pass));
  if (outer.seen()) out.push_back(outer.result(cfg.tol_pass));
}

inline void check_qexp_identities(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  for (int j = 1; j <= 3; ++j) {
    KindTag k = KindTag::of(j);
    std::string id = kid("closed_form", j);
    Worst w(id);
    Sampler smp(cfg.seed, id);
    for (double q : cfg.q_grid) {
      QBase b(q, cfg.eval_tol);
      for (int i = 0; i < 50; ++i) {
        int n = static_cast<int>(std::floor(smp.uniform(-6.0, 7.0)));
        double lam = smp.uniform(0.02, 0.98);
        double th = j == 3 ? 0.0 : smp.uniform(-pi, pi);
        cplx u = std::polar(std::pow(q, n + lam), th);
        w.eval([&] { return std::abs(lambda_closed_form(k, u, b) / lambda_product(k, u, b) - 1.0); },
               {{"q", q}, {"n", n}, {"lambda", lam}, {"theta", th}});
      }
    }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));

    std::string fid = kid("functional", j);
    Worst fw(fid);
    Sampler fs(cfg.seed, fid);
    std::string did = kid("qexp_diff", j);
    Worst dw(did);
    Sampler ds(cfg.seed, did);
    for (double q : cfg.q_grid) {
      QBase b(q, cfg.eval_tol);
      for (int i = 0; i < cfg.samples; ++i) {
        cplx u = std::polar(std::pow(q, fs.uniform(-2.0, 2.0)), fs.uniform(-pi, pi));
        fw.eval([&] { return qexp_functional_residual(k, u, b); }, {{"q", q}, {"u", cjson(u)}});
        cplx z = ds.polar(0.05, 0.9 / (1.0 - q * q), -pi, pi);
        dw.eval([&] { return qexp_diff_residual(k, z, b); }, {{"q", q}, {"z", cjson(z)}});
      }
    }
    if (fw.seen()) out.push_back(fw.result(cfg.tol_pass));
    if (dw.seen()) out.push_back(dw.result(cfg.tol_pass));
  }
  for (int which = 1; which <= 2; ++which) {
    std::string id = "power_solution." + std::to_string(which);
    Worst w(id);
    Sampler smp(cfg.seed, id);
    for (double q : cfg.q_grid) {
      QBase b(q, cfg.eval_tol);
      for (int i = 0; i < cfg.samples; ++i) {
        cplx u = std::polar(std::pow(q, smp.uniform(-2.0, 2.0)), smp.uniform(-pi / 4.0, pi / 4.0));
        w.eval([&] { return power_solution_residual(which, u, b); }, {{"q", q}, {"u", cjson(u)}});
      }
    }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
}

// Lattice points grouped by lambda, each group sorted by decreasing n.
inline std::map<double, std::vector<int>> lattice_groups(const SuiteConfig& cfg) {
  std::map<double, std::vector<int>> g;
  for (auto [n, lam] : cfg.lattice_points) g[lam].push_back(n);
  for (auto& [lam, ns] : g) {
    std::sort(ns.begin(), ns.end(), std::greater<int>());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  }
  return g;
}

inline void decay_check(Worst& w, const DecaySelector& sel, double q, double nu, double lam,
                        const std::vector<int>& ns, const SuiteConfig& cfg) {
  nlohmann::json loc{{"q", q}, {"lambda", lam}};
  if (!sel.qexp) loc["nu"] = nu;
  double r;
  try {
    auto rows = asymptotic_decay_report(sel, q, nu, lam, ns, QBase(q, cfg.eval_tol));
    std::vector<double> errs;
    for (const auto& row : rows) errs.push_back(row.rel_error);
    auto [v, at] = monotone_violation(errs, 2);
    r = v;
    if (v > 0.0) loc["n"] = ns[at];
  } catch (const Error& e) {
    r = std::numeric_limits<double>::infinity();
    loc["error"] = std::string(e.kind()) + ": " + e.what();
  }
  w.update(r, loc);
}

inline void check_asymptotics(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  auto groups = lattice_groups(cfg);
  for (int j = 1; j <= 3; ++j) {
    Worst w(kid("asym.qexp", j));
    for (double q : cfg.q_grid)
      for (const auto& [lam, ns] : groups) decay_check(w, {true, KindTag::of(j), Family::I}, q, 0.0, lam, ns, cfg);
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
  for (Family f : kFamilies) {
    for (int j = 1; j <= 2; ++j) {
      Worst w(kid(std::string("asym.bessel.") + family_name(f), j));
      for (double q : cfg.q_grid)
        for (double nu : cfg.nu_grid)
          for (const auto& [lam, ns] : groups) decay_check(w, {false, KindTag::of(j), f}, q, nu, lam, ns, cfg);
      if (w.seen()) out.push_back(w.result(cfg.tol_pass));
    }
  }
  for (Family f : kFamilies) {
    Worst w(std::string("bracket.type3.") + family_name(f));
    for (double q : cfg.q_grid)
      for (double nu : cfg.nu_grid) {
        if (f == Family::Y && std::abs(nu - std::round(nu)) < 1e-8) continue;
        QBase b(q, cfg.eval_tol);
        PhiBracket pb;
        try {
          pb = phi_bracket(nu, b);
        } catch (const Error& e) {
          w.update(std::numeric_limits<double>::infinity(),
                   {{"q", q}, {"nu", nu}, {"error", std::string(e.kind()) + ": " + e.what()}});
          continue;
        }
        for (const auto& [lam, ns] : groups)
          for (int n : ns) {
            if (n > -4) continue;
            w.eval(
                [&] {
                  LatticePoint p = lattice_point(n, lam, 0.0, b);
                  cplx ex = bessel_type3_repr(f, nu, p.u, 40, b).value;
                  cplx ld = type3_asymptotic_bracket(f, nu, p, b).first.leading;
                  double ratio = std::abs(ex) / std::abs(ld);
                  return std::max({0.0, pb.phi_min - ratio, ratio - pb.phi_max}) / pb.phi_min;
                },
                {{"q", q}, {"nu", nu}, {"lambda", lam}, {"n", n}, {"phi_min", pb.phi_min}, {"phi_max", pb.phi_max}});
          }
      }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
}

inline void check_representations(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  for (Family f : kFamilies) {
    for (int j = 1; j <= 2; ++j) {
      std::string id = kid(std::string("repr.") + family_name(f), j);
      Worst w(id);
      Sampler smp(cfg.seed, id);
      KindTag k = KindTag::of(j);
      for (double q : cfg.q_grid)
        for (double nu : cfg.nu_grid) {
          if ((f == Family::Y || f == Family::K) && std::abs(nu - std::round(nu)) < 1e-8) continue;
          QBase b(q, cfg.eval_tol);
          for (int i = 0; i < cfg.samples; ++i) {
            double u = std::pow(q, j == 1 ? smp.uniform(0.05, 0.95) : smp.uniform(-3.0, 0.95));
            w.eval(
                [&] {
                  BesselSpec s{k, f, nu};
                  return rel_err(bessel_phi_repr(s, u, b).value, bessel(s, u / (1.0 - q * q), b));
                },
                {{"q", q}, {"nu", nu}, {"u", u}});
          }
        }
      if (w.seen()) out.push_back(w.result(cfg.tol_pass));
    }
  }
  Worst w("repr.type3.I");
  for (double q : cfg.q_grid)
    for (double nu : cfg.nu_grid) {
      QBase b(q, cfg.eval_tol);
      for (double u : {2.0, 4.0, 8.0}) {
        w.eval(
            [&] {
              return rel_err(bessel_type3_repr(Family::I, nu, u, 40, b).value,
                             bessel({KindTag::of(3), Family::I, nu}, u / (1.0 - q * q), b));
            },
            {{"q", q}, {"nu", nu}, {"u", u}});
      }
    }
  if (w.seen()) out.push_back(w.result(cfg.tol_pass));
}

// Residual of b_k (1-q^{-nu+k-1/2})(1-q^{nu+k-1/2}) = b_{k-2} q^{2k-3-delta k+3 delta/2}.
inline double recursion_residual(const std::vector<double>& b, int kmin, int k, double nu, int delta, double q) {
  double bk = b[static_cast<std::size_t>(k - kmin)], bk2 = b[static_cast<std::size_t>(k - 2 - kmin)];
  double pa = std::pow(q, -nu + k - 0.5), pb = std::pow(q, nu + k - 0.5);
  double lhs = bk * (1.0 - pa) * (1.0 - pb);
  double rhs = bk2 * std::pow(q, 2.0 * k - 3.0 - delta * k + 1.5 * delta);
  double scale = std::max({std::abs(bk), std::abs(bk * pa), std::abs(bk * pb), std::abs(bk * pa * pb), std::abs(rhs)});
  return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

inline void check_coeff_recursion(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  const int kmin = -40, kmax = 40;
  for (int j = 1; j <= 3; ++j) {
    Worst w(kid("coeff_recursion", j));
    const int delta = KindTag::of(j).delta;
    for (double q : cfg.q_grid)
      for (double nu : cfg.nu_grid) {
        QBase b(q, cfg.eval_tol);
        std::vector<double> coeffs;
        try {
          for (int k = kmin; k <= kmax; ++k) coeffs.push_back(recursion_coeff(j, k, nu, b));
        } catch (const Error& e) {
          w.update(std::numeric_limits<double>::infinity(),
                   {{"q", q}, {"nu", nu}, {"error", std::string(e.kind()) + ": " + e.what()}});
          continue;
        }
        if (j == 3) coeffs[static_cast<std::size_t>(2 - kmin)] *= 1.0 + cfg.c3_perturbation;
        for (int k = kmin + 2; k <= kmax; ++k)
          w.update(recursion_residual(coeffs, kmin, k, nu, delta, q), {{"q", q}, {"nu", nu}, {"k", k}});
      }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
}

inline void check_classical(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  const std::vector<double> qs{0.9, 0.99, 0.999};
  for (int j = 1; j <= 3; ++j) {
    Worst w(kid("classical_limit", j));
    for (double z : {0.1, 0.5}) {
      nlohmann::json loc{{"z", z}};
      double r;
      try {
        auto errs = classical_limit_check(KindTag::of(j), z, qs);
        auto [v, at] = monotone_violation(errs);
        r = v;
        if (v > 0.0) loc["q"] = qs[at];
      } catch (const Error& e) {
        r = std::numeric_limits<double>::infinity();
        loc["error"] = std::string(e.kind()) + ": " + e.what();
      }
      w.update(r, loc);
    }
    out.push_back(w.result(cfg.tol_pass));
  }
}

// sqrt(e_q(q) E_q(q)) (q^{-nu+1/2};q)_l (q^{nu+1/2};q)_l q^l / (q^2;q^2)_l
inline double coeff_bound(int l, double nu, const QBase& b) {
  const double q = b.q();
  double c = std::sqrt((qexp(KindTag::of(1), q, b) * qexp(KindTag::of(2), q, b)).real());
  return c * qpoch_qpow(-nu + 0.5, q, l) * qpoch_qpow(nu + 0.5, q, l) * std::pow(q, l) / qpoch_qpow(1.0, q * q, l);
}

inline void check_coeff_bound(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  Worst w("coeff_bound");
  for (double q : cfg.q_grid)
    for (double nu : cfg.nu_grid) {
      QBase b(q, cfg.eval_tol);
      for (int l = 1; l <= 20; ++l) {
        w.eval(
            [&] {
              double c3 = std::abs(type3_coeff(l, CoeffSign::minus, nu, b).c3);
              double bd = std::abs(coeff_bound(l, nu, b));
              if (bd == 0.0) return c3 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
              return std::max(0.0, c3 - bd) / bd;
            },
            {{"q", q}, {"nu", nu}, {"l", l}});
      }
    }
  if (w.seen()) out.push_back(w.result(cfg.tol_pass));
}

inline void check_rotation(const SuiteConfig& cfg, std::vector<CheckResult>& out) {
  for (int j = 1; j <= 3; ++j) {
    std::string id = kid("rotation", j);
    Worst w(id);
    Sampler smp(cfg.seed, id);
    KindTag k = KindTag::of(j);
    for (double q : cfg.q_grid)
      for (double nu : cfg.nu_grid) {
        QBase b(q, cfg.eval_tol);
        for (int i = 0; i < cfg.samples; ++i) {
          cplx z = draw_bessel_z(smp, k, q, false);
          w.eval(
              [&] {
                cplx jv = bessel({k, Family::J, nu}, z, b);
                cplx im = bessel({k, Family::I, nu}, -I * z, b);
                cplx ip = bessel({k, Family::I, nu}, I * z, b);
                cplx em = std::exp(-I * nu * pi / 2.0) * jv, ep = std::exp(I * nu * pi / 2.0) * jv;
                double s = std::max({std::abs(im), std::abs(ip), std::abs(jv)});
                return std::max(std::abs(im - em), std::abs(ip - ep)) / s;
              },
              {{"q", q}, {"nu", nu}, {"z", cjson(z)}});
        }
      }
    if (w.seen()) out.push_back(w.result(cfg.tol_pass));
  }
}

}  // namespace detail

inline std::vector<CheckResult> run_suite(const SuiteConfig& cfg) {
  std::vector<CheckResult> out;
  if (cfg.q_grid.empty()) return out;
  for (double q : cfg.q_grid)
    if (!(q > 0.0 && q < 1.0)) throw DomainError("q_grid entries must lie in (0,1)");
  if (!(cfg.tol_pass > 0.0)) throw DomainError("tol_pass must be positive");
  detail::check_diffeq(cfg, out);
  detail::check_wronskian(cfg, out);
  detail::check_laurent(cfg, out);
  detail::check_qexp_identities(cfg, out);
  detail::check_representations(cfg, out);
  detail::check_coeff_recursion(cfg, out);
  detail::check_rotation(cfg, out);
  detail::check_asymptotics(cfg, out);
  detail::check_classical(cfg, out);
  detail::check_coeff_bound(cfg, out);
  std::sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.check_id < b.check_id; });
  return out;
}

inline nlohmann::json report_json(const std::vector<CheckResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json o;
    o["check_id"] = r.check_id;
    if (std::isfinite(r.worst_residual)) o["worst_residual"] = r.worst_residual;
    else o["worst_residual"] = nullptr;
    o["location"] = r.location;
    o["pass"] = r.pass;
    arr.push_back(std::move(o));
  }
  return arr;
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (trim(s.substr(pos)) != "") throw DomainError("bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

}  // namespace detail

// Flat key=value config; '#' starts a comment. Keys: q_grid, nu_grid, lattice_points (n:lambda,...),
// tol_pass, seed, samples.
inline SuiteConfig parse_suite_config(std::istream& in) {
  SuiteConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DomainError("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
    try {
      if (key == "q_grid" || key == "nu_grid") {
        std::vector<double> v;
        for (const auto& p : detail::split(val, ',')) v.push_back(detail::parse_double(p));
        (key == "q_grid" ? cfg.q_grid : cfg.nu_grid) = v;
      } else if (key == "lattice_points") {
        cfg.lattice_points.clear();
        for (const auto& p : detail::split(val, ',')) {
          auto c = p.find(':');
          if (c == std::string::npos) throw DomainError("lattice point '" + p + "' must be n:lambda");
          cfg.lattice_points.emplace_back(std::stoi(p.substr(0, c)), detail::parse_double(p.substr(c + 1)));
        }
      } else if (key == "tol_pass") {
        cfg.tol_pass = detail::parse_double(val);
      } else if (key == "seed") {
        cfg.seed = std::stoull(val);
      } else if (key == "samples") {
        cfg.samples = std::stoi(val);
      } else {
        throw DomainError("unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (double q : cfg.q_grid)
    if (!(q > 0.0 && q < 1.0)) throw DomainError("q_grid entries must lie in (0,1)");
  if (!(cfg.tol_pass > 0.0)) throw DomainError("tol_pass must be positive");
  if (cfg.samples < 0) throw DomainError("samples must be nonnegative");
  return cfg;
}

}  // namespace qfunc
