// qfunc: evaluation, decay tables, Laurent tables and the verification suite.

#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <qfunc/qfunc.hpp>

namespace {

using qfunc::cplx;
using Field = std::variant<std::string, double, long>;

constexpr int kExitUsage = 2;
constexpr int kExitRowError = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string format = "csv";
  double tol = 1e-12;
  std::size_t max_terms = 100000;
  std::uint64_t seed = qfunc::SuiteConfig{}.seed;
  bool seed_set = false;
  bool tol_set = false;
};

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Streams rows as CSV (header first) or JSON lines.
class Emitter {
 public:
  Emitter(std::ostream& os, std::string format, std::vector<std::string> columns)
      : os_(os), json_(format == "json"), cols_(std::move(columns)) {
    if (json_) return;
    for (std::size_t i = 0; i < cols_.size(); ++i) os_ << (i ? "," : "") << csv_quote(cols_[i]);
    os_ << "\n";
  }

  void row(const std::vector<Field>& fields) {
    if (json_) {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = 0; i < cols_.size(); ++i) {
        const Field& f = fields.at(i);
        if (auto* d = std::get_if<double>(&f)) {
          if (std::isfinite(*d)) o[cols_[i]] = *d;
          else o[cols_[i]] = nullptr;
        } else if (auto* l = std::get_if<long>(&f)) {
          o[cols_[i]] = *l;
        } else {
          o[cols_[i]] = std::get<std::string>(f);
        }
      }
      os_ << o.dump() << "\n";
      return;
    }
    for (std::size_t i = 0; i < cols_.size(); ++i) {
      const Field& f = fields.at(i);
      std::string s;
      if (auto* d = std::get_if<double>(&f)) s = shortest(*d);
      else if (auto* l = std::get_if<long>(&f)) s = std::to_string(*l);
      else s = std::get<std::string>(f);
      os_ << (i ? "," : "") << csv_quote(s);
    }
    os_ << "\n";
  }

 private:
  std::ostream& os_;
  bool json_;
  std::vector<std::string> cols_;
};

double parse_real(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  if (b < e && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) throw UsageError("bad number '" + s + "' for " + what);
  return v;
}

// "re,im" or a bare real.
cplx parse_complex(const std::string& s, const std::string& what) {
  auto c = s.find(',');
  if (c == std::string::npos) return {parse_real(s, what), 0.0};
  return {parse_real(s.substr(0, c), what), parse_real(s.substr(c + 1), what)};
}

std::string error_text(const qfunc::Error& e) { return std::string(e.kind()) + ": " + e.what(); }

struct EvalArgs {
  std::string fn;
  int kind = 1;
  double nu = 0.0;
  double q = 0.5;
  std::string method;
  std::string point;
  std::string from, to;
  int count = 0;
  std::string lattice;
  double lambda = 0.0;
  double theta = 0.0;
};

std::vector<cplx> eval_grid(const EvalArgs& a, const qfunc::QBase& base) {
  int modes = !a.point.empty() + !a.from.empty() + !a.lattice.empty();
  if (modes != 1) throw UsageError("give exactly one of --u/--z, --from/--to/--count, --lattice");
  std::vector<cplx> pts;
  if (!a.point.empty()) {
    pts.push_back(parse_complex(a.point, "--u/--z"));
  } else if (!a.from.empty()) {
    if (a.to.empty() || a.count < 1) throw UsageError("--from needs --to and --count >= 1");
    cplx f = parse_complex(a.from, "--from"), t = parse_complex(a.to, "--to");
    for (int i = 0; i < a.count; ++i) pts.push_back(a.count == 1 ? f : f + (t - f) * (double(i) / (a.count - 1)));
  } else {
    auto c = a.lattice.find(':');
    if (c == std::string::npos) throw UsageError("--lattice expects n0:n1");
    int n0 = static_cast<int>(parse_real(a.lattice.substr(0, c), "--lattice"));
    int n1 = static_cast<int>(parse_real(a.lattice.substr(c + 1), "--lattice"));
    int step = n1 >= n0 ? 1 : -1;
    for (int n = n0;; n += step) {
      pts.push_back(qfunc::lattice_point(n, a.lambda, a.theta, base).u);
      if (n == n1) break;
    }
  }
  return pts;
}

bool is_bessel(const std::string& fn) { return fn.rfind("bessel", 0) == 0; }

int cmd_eval(const EvalArgs& a, const Globals& g) {
  const qfunc::QBase base(a.q, g.tol, g.max_terms);
  const qfunc::KindTag kind = qfunc::KindTag::of(a.kind);
  std::string method = a.method;
  std::string family;
  if (is_bessel(a.fn)) {
    family = a.fn.substr(6);
    qfunc::family_from(family);
    if (method.empty()) method = "series";
    if (method != "series" && method != "phi" && method != "type3")
      throw UsageError("Bessel --method is series, phi or type3");
    if (method == "phi" && a.kind == 3) throw UsageError("--method phi covers kinds 1 and 2");
    if (method == "type3" && a.kind != 3) throw UsageError("--method type3 needs --kind 3");
  } else if (a.fn == "qexp") {
    if (method.empty()) method = "product";
    if (method != "product" && method != "series") throw UsageError("qexp --method is product or series");
  } else if (a.fn == "lambda") {
    if (method.empty()) method = "product";
    if (method != "product" && method != "laurent" && method != "closed")
      throw UsageError("lambda --method is product, laurent or closed");
  } else {
    throw UsageError("unknown --fn '" + a.fn + "'");
  }
  auto pts = eval_grid(a, base);

  Emitter out(std::cout, g.format,
              {"function", "kind", "family", "nu", "q", "arg_re", "arg_im", "value_re", "value_im", "err_estimate",
               "error"});
  bool failed = false;
  for (cplx x : pts) {
    qfunc::SeriesValue v;
    std::string err;
    try {
      if (is_bessel(a.fn)) {
        qfunc::BesselSpec s{kind, qfunc::family_from(family), a.nu};
        cplx u = (1.0 - a.q * a.q) * x;
        if (method == "series") v = qfunc::bessel_eval(s, x, base);
        else if (method == "phi") v = qfunc::bessel_phi_repr(s, u, base);
        else v = qfunc::bessel_type3_repr(s.family, a.nu, u, 40, base);
      } else if (a.fn == "qexp") {
        v = method == "series" ? qfunc::qexp_series(kind, x, base) : qfunc::qexp_eval(kind, x, base);
      } else if (method == "laurent") {
        v = qfunc::lambda_laurent_eval_auto(kind, x, base).value;
      } else {
        v.value = method == "closed" ? qfunc::lambda_closed_form(kind, x, base) : qfunc::lambda_product(kind, x, base);
      }
    } catch (const qfunc::Error& e) {
      err = error_text(e);
      failed = true;
    }
    double nan = std::numeric_limits<double>::quiet_NaN();
    bool ok = err.empty();
    out.row({a.fn, long(a.kind), family, a.nu, a.q, x.real(), x.imag(), ok ? v.value.real() : nan,
             ok ? v.value.imag() : nan, ok ? v.err_estimate : nan, err});
  }
  return failed ? kExitRowError : 0;
}

struct AsymArgs {
  std::string fn;
  int kind = 1;
  double nu = 0.0;
  double q = 0.5;
  double lambda = 0.0;
  int n_from = -1;
  int n_to = -8;
};

int cmd_asym(const AsymArgs& a, const Globals& g) {
  const qfunc::QBase base(a.q, g.tol, g.max_terms);
  qfunc::DecaySelector sel;
  sel.kind = qfunc::KindTag::of(a.kind);
  if (a.fn == "qexp") {
    sel.qexp = true;
  } else if (is_bessel(a.fn)) {
    sel.qexp = false;
    sel.family = qfunc::family_from(a.fn.substr(6));
  } else {
    throw UsageError("unknown --fn '" + a.fn + "'");
  }
  if (a.lambda < 0.0 || a.lambda >= 1.0) throw UsageError("--lambda must lie in [0,1)");
  const bool type3 = !sel.qexp && a.kind == 3;
  std::vector<std::string> cols{"n", "exact_re", "exact_im", "asym_re", "asym_im", "rel_error"};
  if (type3) cols.insert(cols.end(), {"ratio", "phi_min", "phi_max"});
  cols.push_back("error");
  Emitter out(std::cout, g.format, cols);
  bool failed = false;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int n = a.n_from; n >= a.n_to; --n) {
    std::vector<Field> f{long(n)};
    try {
      auto rows = qfunc::asymptotic_decay_report(sel, a.q, a.nu, a.lambda, {n}, base);
      const auto& r = rows.front();
      f.insert(f.end(), {r.exact.real(), r.exact.imag(), r.asymptotic.real(), r.asymptotic.imag(), r.rel_error});
      if (type3) f.insert(f.end(), {r.ratio, r.phi_min, r.phi_max});
      f.push_back(std::string());
    } catch (const qfunc::Error& e) {
      failed = true;
      for (std::size_t i = 1; i + 1 < cols.size(); ++i) f.push_back(nan);
      f.push_back(error_text(e));
    }
    out.row(f);
  }
  return failed ? kExitRowError : 0;
}

struct LaurentArgs {
  std::string table = "lambda";
  int kind = 1;
  double q = 0.5;
  double nu = 0.0;
  int window = 40;
};

int cmd_laurent(const LaurentArgs& a, const Globals& g) {
  const qfunc::QBase base(a.q, g.tol, g.max_terms);
  if (a.window < 0) throw UsageError("--window must be nonnegative");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  if (a.table == "lambda") {
    const qfunc::KindTag kind = qfunc::KindTag::of(a.kind);
    Emitter out(std::cout, g.format, {"kind", "q", "l", "coeff", "error"});
    std::optional<qfunc::LaurentTable> t;
    std::string err;
    try {
      t = qfunc::make_laurent_table(kind, a.window, base);
    } catch (const qfunc::Error& e) {
      err = error_text(e);
      failed = true;
    }
    for (int l = -a.window; l <= a.window; ++l) out.row({long(a.kind), a.q, long(l), t ? t->at(l) : nan, err});
  } else if (a.table == "bessel") {
    Emitter out(std::cout, g.format, {"nu", "q", "l", "sign", "c1", "c2", "c3", "error"});
    auto emit = [&](int l, qfunc::CoeffSign sg) {
      const char* sname = sg == qfunc::CoeffSign::plus ? "+" : "-";
      try {
        auto c = qfunc::type3_coeff(l, sg, a.nu, base);
        out.row({a.nu, a.q, long(l), std::string(sname), c.c1, c.c2, c.c3, std::string()});
      } catch (const qfunc::Error& e) {
        failed = true;
        out.row({a.nu, a.q, long(l), std::string(sname), nan, nan, nan, error_text(e)});
      }
    };
    for (int l = 0; l <= a.window; ++l) emit(l, qfunc::CoeffSign::plus);
    for (int l = 1; l <= a.window; ++l) emit(l, qfunc::CoeffSign::minus);
  } else {
    throw UsageError("--table is lambda or bessel");
  }
  return failed ? kExitRowError : 0;
}

std::string utc_stamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_verify(const std::string& config_path, bool stamp, const Globals& g) {
  qfunc::SuiteConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "qfunc: cannot read config '" << config_path << "'\n";
      return kExitUsage;
    }
    try {
      cfg = qfunc::parse_suite_config(in);
    } catch (const qfunc::Error& e) {
      std::cerr << "qfunc: " << config_path << ": " << e.what() << "\n";
      return kExitUsage;
    }
  }
  if (g.seed_set) cfg.seed = g.seed;
  if (g.tol_set) cfg.eval_tol = g.tol;
  auto results = qfunc::run_suite(cfg);
  nlohmann::json report = qfunc::report_json(results);
  if (stamp) report = nlohmann::json{{"stamp", utc_stamp()}, {"report", report}};
  std::cout << report.dump(2) << "\n";
  for (const auto& r : results)
    if (!r.pass) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-exponentials and q^2-Bessel functions"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option_function<double>("--tol", [&](double t) { g.tol = t; g.tol_set = true; }, "series truncation tolerance");
  app.add_option("--max-terms", g.max_terms, "term cap per series")->check(CLI::PositiveNumber);
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s; g.seed_set = true; },
                                         "sampling seed for verify");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "evaluate a function over a grid");
  ev->add_option("--fn", ea.fn, "qexp, lambda, besselJ, besselY, besselI or besselK")->required();
  ev->add_option("--kind", ea.kind, "type j")->check(CLI::Range(1, 3));
  ev->add_option("--nu", ea.nu, "Bessel order");
  ev->add_option("--q", ea.q, "deformation parameter")->required();
  ev->add_option("--method", ea.method, "series/phi/type3 (Bessel), product/series (qexp), product/laurent/closed (lambda)");
  ev->add_option("--u,--z", ea.point, "single argument, re,im or re");
  ev->add_option("--from", ea.from, "linear grid start");
  ev->add_option("--to", ea.to, "linear grid end");
  ev->add_option("--count", ea.count, "linear grid size");
  ev->add_option("--lattice", ea.lattice, "q-lattice n0:n1, u = q^{n+lambda} e^{i theta}");
  ev->add_option("--lambda", ea.lambda, "lattice offset");
  ev->add_option("--theta", ea.theta, "lattice angle");

  AsymArgs aa;
  auto* as = app.add_subcommand("asym", "asymptotic decay table");
  as->add_option("--fn", aa.fn, "qexp or besselJ/Y/I/K")->required();
  as->add_option("--kind", aa.kind, "type j")->check(CLI::Range(1, 3));
  as->add_option("--nu", aa.nu, "Bessel order");
  as->add_option("--q", aa.q, "deformation parameter")->required();
  as->add_option("--lambda", aa.lambda, "lattice offset in [0,1)");
  as->add_option("--n-from", aa.n_from, "first n");
  as->add_option("--n-to", aa.n_to, "last n (rows run downward)");

  LaurentArgs la;
  auto* lt = app.add_subcommand("laurent", "Laurent coefficient tables");
  lt->add_option("--table", la.table, "lambda or bessel")->check(CLI::IsMember({"lambda", "bessel"}));
  lt->add_option("--kind", la.kind, "type j (lambda table)")->check(CLI::Range(1, 3));
  lt->add_option("--q", la.q, "deformation parameter")->required();
  lt->add_option("--nu", la.nu, "Bessel order (bessel table)");
  lt->add_option("--window", la.window, "largest |l|");

  std::string config_path;
  bool stamp = false;
  auto* vf = app.add_subcommand("verify", "run the property suite");
  vf->add_option("config", config_path, "key=value config file");
  vf->add_flag("--stamp", stamp, "wrap the report with a UTC timestamp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ev) return cmd_eval(ea, g);
    if (*as) return cmd_asym(aa, g);
    if (*lt) return cmd_laurent(la, g);
    return cmd_verify(config_path, stamp, g);
  } catch (const UsageError& e) {
    std::cerr << "qfunc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qfunc::Error& e) {
    std::cerr << "qfunc: " << error_text(e) << "\n";
    return kExitUsage;
  }
}
