// Acceptance run: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <qfunc/qfunc.hpp>

#ifndef QFUNC_TOOL
#error "QFUNC_TOOL must name the qfunc executable"
#endif

using namespace qfunc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    else detail += "; " + why;
    pass = false;
  }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Every result whose id starts with prefix must have worst_residual <= tol.
void require_all(Verdict& v, const std::vector<CheckResult>& rs, const std::string& prefix, double tol) {
  bool any = false;
  for (const auto& r : rs) {
    if (r.check_id.rfind(prefix, 0) != 0) continue;
    any = true;
    if (!(r.worst_residual <= tol)) v.fail(r.check_id + " worst " + num(r.worst_residual) + " at " + r.location.dump());
  }
  if (!any) v.fail("no results for " + prefix);
}

bool strictly_decreasing(const std::vector<double>& e) {
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] < e[i - 1])) return false;
  return true;
}

std::string seq(const std::vector<double>& e) {
  std::string s = "[";
  for (std::size_t i = 0; i < e.size(); ++i) s += (i ? " " : "") + num(e[i]);
  return s + "]";
}

Verdict c1_diffeq() {
  SuiteConfig cfg;
  std::vector<CheckResult> rs;
  auto t0 = Clock::now();
  detail::check_diffeq(cfg, rs);
  double dt = seconds_since(t0);
  Verdict v;
  require_all(v, rs, "diffeq.", 1e-9);
  if (dt >= 30.0) v.fail("runtime " + num(dt) + " s");
  if (v.pass) v.detail = num(dt) + " s";
  return v;
}

Verdict c2_wronskian() {
  SuiteConfig cfg;
  std::vector<CheckResult> rs;
  detail::check_wronskian(cfg, rs);
  Verdict v;
  require_all(v, rs, "wronskian.IK.", 1e-9);
  require_all(v, rs, "wronskian.JY.", 1e-9);
  require_all(v, rs, "wronskian.constancy.", 1e-10);
  return v;
}

Verdict c3_laurent() {
  SuiteConfig cfg;
  Verdict v;
  for (int j = 1; j <= 3; ++j) {
    KindTag k = KindTag::of(j);
    Sampler smp(cfg.seed, "acceptance.laurent." + std::to_string(j));
    double worst = 0.0;
    std::string where;
    for (double q : cfg.q_grid) {
      QBase b(q, cfg.eval_tol);
      LaurentTable tab = make_laurent_table(k, 40, b);
      for (int i = 0; i < 20; ++i) {
        cplx u = std::polar(std::pow(q, smp.uniform(0.1, 0.9)), smp.uniform(-pi, pi));
        double r;
        try {
          r = rel_err(lambda_laurent_eval(tab, u, b).value, lambda_product(k, u, b));
        } catch (const Error&) {
          r = std::numeric_limits<double>::infinity();
        }
        if (!(r <= worst)) {
          worst = r;
          where = "q=" + num(q) + " u=" + num(u.real()) + (u.imag() < 0 ? "" : "+") + num(u.imag()) + "i";
        }
      }
    }
    if (!(worst <= 1e-8)) v.fail("j=" + std::to_string(j) + " worst " + num(worst) + " at " + where);
  }
  std::vector<CheckResult> rs;
  detail::check_laurent(cfg, rs);
  require_all(v, rs, "lambda_order.", 0.0);
  return v;
}

Verdict c4_closed_form() {
  SuiteConfig cfg;
  std::vector<CheckResult> rs;
  detail::check_qexp_identities(cfg, rs);
  Verdict v;
  require_all(v, rs, "closed_form.", 1e-8);
  return v;
}

Verdict c5_qexp_asym() {
  Verdict v;
  QBase ctl(0.5, 1e-15);
  std::vector<int> ns{-2, -3, -4, -5, -6, -7, -8};
  for (int j = 1; j <= 3; ++j)
    for (double lam : {0.0, 0.3}) {
      std::string tag = "j=" + std::to_string(j) + " lambda=" + num(lam);
      try {
        auto rows = asymptotic_decay_report({true, KindTag::of(j), Family::I}, 0.5, 0.0, lam, ns, ctl);
        std::vector<double> e;
        for (const auto& r : rows) e.push_back(r.rel_error);
        if (!strictly_decreasing(e)) v.fail(tag + " not decreasing " + seq(e));
        else if (!(e.back() < 1e-3)) v.fail(tag + " error at n=-8 is " + num(e.back()));
      } catch (const Error& e) {
        v.fail(tag + " " + e.kind() + ": " + e.what());
      }
    }
  return v;
}

Verdict c6_representations() {
  SuiteConfig cfg;
  std::vector<CheckResult> rs;
  detail::check_representations(cfg, rs);
  Verdict v;
  for (const char* f : {"I", "J", "K", "Y"})
    for (int j = 1; j <= 2; ++j) require_all(v, rs, std::string("repr.") + f + ".j" + std::to_string(j), 1e-8);
  QBase b(0.5, cfg.eval_tol);
  for (double u : {2.0, 4.0, 8.0}) {
    double r = rel_err(bessel_type3_repr(Family::I, 0.25, u, 40, b).value,
                       bessel({KindTag::of(3), Family::I, 0.25}, u / 0.75, b));
    if (!(r <= 1e-7)) v.fail("type-3 two-sided vs series at u=" + num(u) + ": " + num(r));
  }
  return v;
}

Verdict c7_recursion() {
  SuiteConfig cfg;
  std::vector<CheckResult> rs;
  detail::check_coeff_recursion(cfg, rs);
  Verdict v;
  require_all(v, rs, "coeff_recursion.j3", 1e-10);
  return v;
}

Verdict c8_bessel_asym() {
  Verdict v;
  const double nu = 0.25;
  std::vector<int> ns{-2, -3, -4, -5, -6, -7, -8};
  for (double q : {0.25, 0.5}) {
    QBase ctl(q, 1e-15);
    for (double lam : {0.0, 0.5}) {
      for (Family f : {Family::I, Family::J, Family::K, Family::Y}) {
        for (int j = 1; j <= 2; ++j) {
          std::string tag = std::string(family_name(f)) + " j=" + std::to_string(j) + " q=" + num(q) +
                            " lambda=" + num(lam);
          try {
            auto rows = asymptotic_decay_report({false, KindTag::of(j), f}, q, nu, lam, ns, ctl);
            std::vector<double> e;
            for (const auto& r : rows) e.push_back(r.rel_error);
            if (!strictly_decreasing(e)) v.fail(tag + " " + seq(e));
          } catch (const Error& e) {
            v.fail(tag + " " + e.kind() + ": " + e.what());
          }
        }
        std::string tag = std::string("type-3 ") + family_name(f) + " q=" + num(q) + " lambda=" + num(lam);
        try {
          auto rows = asymptotic_decay_report({false, KindTag::of(3), f}, q, nu, lam, {-4, -5, -6, -7, -8}, ctl);
          for (const auto& r : rows)
            if (!(r.ratio >= r.phi_min && r.ratio <= r.phi_max)) {
              v.fail(tag + " n=" + std::to_string(r.n) + " ratio " + num(r.ratio) + " outside [" + num(r.phi_min) +
                     ", " + num(r.phi_max) + "]");
              break;
            }
        } catch (const Error& e) {
          v.fail(tag + " " + e.kind() + ": " + e.what());
        }
      }
    }
  }
  return v;
}

Verdict c9_classical() {
  SuiteConfig cfg;
  std::vector<CheckResult> rs;
  detail::check_classical(cfg, rs);
  Verdict v;
  require_all(v, rs, "classical_limit.", 0.0);
  return v;
}

Verdict c10_bound() {
  SuiteConfig cfg;
  cfg.q_grid = {0.25, 0.5};
  cfg.nu_grid = {0.25, 0.75};
  std::vector<CheckResult> rs;
  detail::check_coeff_bound(cfg, rs);
  Verdict v;
  require_all(v, rs, "coeff_bound", 0.0);
  return v;
}

struct ToolRun {
  int status = -1;
  std::string out;
};

ToolRun run_verify() {
  ToolRun r;
  FILE* p = popen((std::string(QFUNC_TOOL) + " verify").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

Verdict c11_cli() {
  Verdict v;
  auto t0 = Clock::now();
  ToolRun a = run_verify();
  double dt = seconds_since(t0);
  ToolRun b = run_verify();
  if (a.out != b.out) v.fail("reports differ between runs");
  if (a.status != 0 || b.status != 0) {
    std::string failing;
    auto j = nlohmann::json::parse(a.out, nullptr, false);
    if (j.is_array())
      for (const auto& o : j)
        if (!o["pass"].get<bool>()) failing += (failing.empty() ? "" : ",") + o["check_id"].get<std::string>();
    v.fail("exit status " + std::to_string(a.status) + "/" + std::to_string(b.status) + " failing " + failing);
  }
  if (dt >= 300.0) v.fail("runtime " + num(dt) + " s");
  if (v.pass) v.detail = num(dt) + " s per run";
  return v;
}

}  // namespace

int main() {
  using Fn = Verdict (*)();
  const Fn criteria[] = {c1_diffeq,          c2_wronskian, c3_laurent,     c4_closed_form, c5_qexp_asym, c6_representations,
                         c7_recursion,       c8_bessel_asym, c9_classical, c10_bound,      c11_cli};
  int failed = 0;
  for (int i = 0; i < 11; ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    if (!v.pass) ++failed;
    std::cout << "criterion " << i + 1 << ": " << (v.pass ? "PASS" : "FAIL");
    if (!v.detail.empty()) std::cout << "  " << v.detail;
    std::cout << std::endl;
  }
  std::cout << (11 - failed) << "/11 criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
