#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
  nlohmann::json error() const { return nlohmann::json::parse(err); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("bk_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string data(const std::string& name) { return std::string(BK_DATA_DIR) + "/" + name; }

Run bk(const std::string& args) {
  const fs::path out = scratch() / "stdout", err = scratch() / "stderr";
  const std::string cmd =
      std::string("\"") + BK_EXECUTABLE + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  Run r;
  const int status = std::system(cmd.c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& text) {
  fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("stationary report on the upper-triangular example") {
  auto r = bk("stationary " + data("stat32.json") + " --depth 30");
  REQUIRE(r.code == 0);
  auto j = r.json();
  CHECK(j["command"] == "stationary");
  CHECK(j["tool"] == "bk");
  CHECK(j["stationary"]["finite_measures"] == 1);
  CHECK(j["stationary"]["distinction"]["distinguished"] == nlohmann::json::array({0}));
}

TEST_CASE("min_sum proves unique ergodicity from the command line") {
  auto r = bk("ue " + data("two_vertex_n.json") + " --criterion min_sum --depth 64");
  REQUIRE(r.code == 0);
  auto j = r.json();
  REQUIRE(j["verdicts"].size() == 1);
  CHECK(j["verdicts"][0]["status"] == "Proved");
  CHECK(j["warnings"].empty());
}

TEST_CASE("depth-limited verdicts carry a warning") {
  auto r = bk("ue " + data("stat32.json") + " --criterion row_diff --depth 6");
  REQUIRE(r.code == 0);
  auto j = r.json();
  CHECK(j["verdicts"][0]["status"] == "Evidence");
  REQUIRE(j["warnings"].size() == 1);
  CHECK(j["warnings"][0].get<std::string>().find("depth-limited") != std::string::npos);
}

TEST_CASE("determinant count with and without the singular-level opt-in") {
  auto ok = bk("count " + data("two_vertex_n2.json") + " --depth 30 --skip-singular");
  REQUIRE(ok.code == 0);
  CHECK(ok.json()["determinant"]["status"] == "Proved");
  auto singular = bk("count " + data("two_vertex_n2.json") + " --depth 30");
  CHECK(singular.code == 1);
  CHECK(singular.error()["error"] == "SingularError");
  CHECK(singular.out.empty());
}

TEST_CASE("fibonacci complexity as csv") {
  auto r = bk("word --substitution \"a:ab,b:a\" --complexity 50 --format csv");
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "n,p,dp,entropy");
  for (int n = 1; n <= 50; ++n) {
    REQUIRE(std::getline(lines, line));
    CHECK(line.rfind(std::to_string(n) + "," + std::to_string(n + 1) + ",", 0) == 0);
  }
}

TEST_CASE("fibonacci bounds give unique-ergodicity evidence") {
  auto r = bk("word --substitution \"a:ab,b:a\" --complexity 50 --bounds");
  REQUIRE(r.code == 0);
  auto j = r.json();
  CHECK(j["bounds"]["uniquely_ergodic_evidence"] == true);
  CHECK(j["bounds"]["ergodic_count_bound"] == 1);
}

TEST_CASE("word input from a file") {
  auto r = bk("word --word " + data("fibonacci.txt") + " --returns a");
  REQUIRE(r.code == 0);
  CHECK(r.json()["return_words"][0]["return_words"] == nlohmann::json::array({"a", "ab"}));
}

TEST_CASE("orbit on the base-3 odometer") {
  auto r = bk("orbit " + data("odometer3.json") + " --depth 8 --steps 6561");
  REQUIRE(r.code == 0);
  auto f = r.json()["orbit"]["frequencies"];
  REQUIRE(f.size() == 3);
  for (const auto& x : f) CHECK(x == "1/3");
}

TEST_CASE("input errors exit with 1 and a json message") {
  auto missing = bk("stationary " + (scratch() / "absent.json").string());
  CHECK(missing.code == 1);
  CHECK(missing.error()["exit_code"] == 1);

  auto bad = write_file("bad.json", "{ not json");
  auto parse = bk("analyze " + bad.string());
  CHECK(parse.code == 1);
  CHECK(parse.error().contains("message"));

  CHECK(bk("").code == 1);
  CHECK(bk("ue " + data("two_vertex_n.json") + " --criterion nonsense").code == 1);
  CHECK(bk("stationary " + data("stat32.json") + " --format xml").code == 1);
  CHECK(bk("count " + data("two_vertex_n2.json") + " --skip-singular --format csv").code == 1);
}

TEST_CASE("numeric failures exit with 2") {
  auto equal_radii = write_file(
      "golden.json",
      R"({"name": "equal golden blocks", "rule": {"shape": "constant", "entries": [[1,1,0,0],[1,0,0,0],[1,0,1,1],[0,0,1,0]]}})");
  auto r = bk("stationary " + equal_radii.string());
  CHECK(r.code == 2);
  CHECK(r.error()["exit_code"] == 2);
}

TEST_CASE("reports are byte-identical across runs") {
  for (const std::string args :
       {"analyze " + data("pascal.json") + " --depth 8", "measures " + data("two_vertex_n2.json") + " --depth 30 --eps 0.1",
        "count " + data("countable_n3.json") + " --partition singletons --depth 10",
        "sub " + data("two_vertex_n2.json") + " --spec " + data("sub_vertex0.json") + " --depth 12 --extend",
        "orbit " + data("two_vertex_n.json") + " --depth 10 --steps 5000 --window 1000"}) {
    auto a = bk(args), b = bk(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());
  }
}

TEST_CASE("output file option") {
  const fs::path target = scratch() / "report.json";
  auto r = bk("stationary " + data("stat32.json") + " --out " + target.string());
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(slurp(target))["command"] == "stationary");
}

TEST_CASE("catalog families from flags") {
  auto r = bk("ue --family two_vertex --params '{\"a\": \"n\"}' --criterion min_sum --depth 20");
  REQUIRE(r.code == 0);
  CHECK(r.json()["verdicts"][0]["status"] == "Proved");
}
