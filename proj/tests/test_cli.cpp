#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#ifndef QFUNC_TOOL
#error "QFUNC_TOOL must name the qfunc executable"
#endif

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(QFUNC_TOOL) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) v.push_back(l);
  return v;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> v;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      v.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  v.push_back(cur);
  return v;
}

std::string small_config() {
  auto path = std::filesystem::temp_directory_path() / "qfunc_cli_test.cfg";
  std::ofstream(path) << "q_grid = 0.5\nnu_grid = 0.5\nlattice_points = -2:0.3, -3:0.3, -4:0.3\nsamples = 2\n";
  return path.string();
}

}  // namespace

TEST_CASE("eval writes a CSV header and rows") {
  Run r = run("eval --fn qexp --kind 2 --q 0.5 --u 0");
  CHECK(r.status == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == "function,kind,family,nu,q,arg_re,arg_im,value_re,value_im,err_estimate,error");
  auto f = fields(ls[1]);
  REQUIRE(f.size() == 11);
  CHECK(f[7] == "1");
  CHECK(f[8] == "0");
}

TEST_CASE("eval Bessel K matches the high-precision value") {
  Run r = run("eval --fn besselK --kind 2 --nu 0.25 --q 0.5 --z 1");
  CHECK(r.status == 0);
  auto f = fields(lines(r.out).at(1));
  CHECK_THAT(std::stod(f[7]), Catch::Matchers::WithinRel(0.055914114962729564, 1e-10));
}

TEST_CASE("eval reports pole rows and exits 64") {
  Run r = run("eval --fn qexp --kind 1 --q 0.5 --lattice 0:-2");
  CHECK(r.status == 64);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 4);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto f = fields(ls[i]);
    CHECK(f[7] == "nan");
    CHECK(f[10].rfind("PoleError", 0) == 0);
  }
}

TEST_CASE("CSV values round-trip bit-exactly") {
  Run r = run("eval --fn lambda --kind 2 --q 0.5 --from 0.6 --to 0.9 --count 4");
  CHECK(r.status == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 5);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto f = fields(ls[i]);
    double v = std::stod(f[7]);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    CHECK(std::stod(buf) == v);
    Run one = run("eval --fn lambda --kind 2 --q 0.5 --u " + f[5]);
    CHECK(fields(lines(one.out).at(1))[7] == f[7]);
  }
}

TEST_CASE("JSON lines output") {
  Run r = run("--format json eval --fn qexp --kind 3 --q 0.5 --u 1");
  CHECK(r.status == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 1);
  auto j = nlohmann::json::parse(ls[0]);
  CHECK(j["function"] == "qexp");
  CHECK(j["kind"] == 3);
  CHECK_THAT(j["value_re"].get<double>(), Catch::Matchers::WithinRel(6.4957562839514029, 1e-12));
  CHECK(j["error"] == "");
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("").status == 2);
  CHECK(run("eval --q 0.5 --u 1").status == 2);
  CHECK(run("eval --fn qexp --q 0.5").status == 2);
  CHECK(run("eval --fn qexp --q 0.5 --u 1 --from 0 --to 1 --count 2").status == 2);
  CHECK(run("eval --fn qexp --kind 4 --q 0.5 --u 1").status == 2);
  CHECK(run("eval --fn qexp --q 1.5 --u 1").status == 2);
  CHECK(run("--format xml eval --fn qexp --q 0.5 --u 1").status == 2);
  CHECK(run("eval --fn besselI --kind 1 --method type3 --q 0.5 --u 1").status == 2);
  CHECK(run("eval --fn qexp --q 0.5 --u abc").status == 2);
}

TEST_CASE("asym table") {
  Run r = run("asym --fn qexp --kind 2 --q 0.5 --lambda 0 --n-from -1 --n-to -8");
  CHECK(r.status == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 9);
  CHECK(ls[0] == "n,exact_re,exact_im,asym_re,asym_im,rel_error,error");
  CHECK(fields(ls[1])[0] == "-1");
  CHECK_THAT(std::stod(fields(ls[8])[5]), Catch::Matchers::WithinRel(0.0039113391020764893, 1e-8));

  Run e = run("asym --fn qexp --kind 2 --q 0.5 --n-from -1 --n-to 0");
  CHECK(e.status == 0);
  CHECK(lines(e.out).size() == 1);

  Run t = run("--tol 1e-15 asym --fn besselK --kind 3 --nu 0.25 --q 0.5 --n-from -4 --n-to -4");
  CHECK(t.status == 0);
  auto tl = lines(t.out);
  REQUIRE(tl.size() == 2);
  CHECK(tl[0] == "n,exact_re,exact_im,asym_re,asym_im,rel_error,ratio,phi_min,phi_max,error");
  CHECK_THAT(std::stod(fields(tl[1])[6]), Catch::Matchers::WithinRel(2.5303817689136728e-7, 1e-4));

  CHECK(run("asym --fn qexp --q 0.5 --lambda 1").status == 2);
}

TEST_CASE("laurent tables") {
  Run r = run("--tol 1e-15 laurent --table lambda --kind 1 --q 0.5 --window 3");
  CHECK(r.status == 0);
  auto ls = lines(r.out);
  REQUIRE(ls.size() == 8);
  CHECK(ls[0] == "kind,q,l,coeff,error");
  auto f = fields(ls[4]);
  CHECK(f[2] == "0");
  CHECK_THAT(std::stod(f[3]), Catch::Matchers::WithinRel(7.3181298306931572, 1e-14));

  Run b = run("--tol 1e-15 laurent --table bessel --nu 0.25 --q 0.5 --window 2");
  CHECK(b.status == 0);
  auto bl = lines(b.out);
  REQUIRE(bl.size() == 6);
  CHECK(bl[0] == "nu,q,l,sign,c1,c2,c3,error");
  CHECK_THAT(std::stod(fields(bl[1])[6]), Catch::Matchers::WithinRel(1.1142352514979422, 1e-13));
  CHECK_THAT(std::stod(fields(bl[3])[4]), Catch::Matchers::WithinRel(2.847350361136526, 1e-13));
}

TEST_CASE("verify is byte-identical across runs") {
  std::string cfg = small_config();
  Run a = run("verify " + cfg), b = run("verify " + cfg);
  CHECK((a.status == 0 || a.status == 1));
  CHECK(a.status == b.status);
  CHECK(a.out == b.out);
  auto j = nlohmann::json::parse(a.out);
  REQUIRE(j.is_array());
  CHECK(!j.empty());

  Run s = run("verify --stamp " + cfg);
  auto js = nlohmann::json::parse(s.out);
  CHECK(js["stamp"].get<std::string>().size() == 20);
  CHECK(js["report"] == j);
}

TEST_CASE("verify exit codes") {
  auto path = std::filesystem::temp_directory_path() / "qfunc_cli_tight.cfg";
  std::ofstream(path) << "q_grid = 0.5\nnu_grid = 0.5\nlattice_points = -2:0.3, -3:0.3\nsamples = 2\ntol_pass = 1e-16\n";
  CHECK(run("verify " + path.string()).status == 1);
  CHECK(run("verify /nonexistent/qfunc.cfg").status == 2);
  auto bad = std::filesystem::temp_directory_path() / "qfunc_cli_bad.cfg";
  std::ofstream(bad) << "q_grid = 2\n";
  CHECK(run("verify " + bad.string()).status == 2);
}
