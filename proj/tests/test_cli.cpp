#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run piac(const std::string& args) {
  const std::string cmd = std::string(PIAC_BIN) + " " + args + " 2>/dev/null";
  Run r{0, {}};
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

const std::string kData = PIAC_DATA_DIR;
const std::string kTest = PIAC_TEST_DATA_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "piac_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("validate exit codes") {
  CHECK(piac("validate --case " + kData + "/homogeneous10.case").code == 0);
  CHECK(piac("validate --case " + kData + "/ieee39-like.case").code == 0);
  CHECK(piac("validate --case " + kTest + "/disconnected.case").code == 3);
  CHECK(piac("validate --case " + kTest + "/badgains.case").code == 4);
  CHECK(piac("validate --case " + kTest + "/malformed.case").code == 2);
  CHECK(piac("validate").code == 2);
  CHECK(piac("frobnicate").code == 2);
}

TEST_CASE("analyze: worked point and refusal") {
  auto r = piac("analyze --case " + kData + "/homogeneous2.case --law dpiac --selector omega --format json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["numeric"].get<double>() == doctest::Approx(0.633333333333).epsilon(1e-11));
  CHECK(j["relative_gap"].get<double>() <= 1e-8);

  r = piac("analyze --case " + kData + "/homogeneous10.case --law gbpiac --selector u --k1 0.5");
  REQUIRE(r.code == 0);
  const auto rows = csv(r.out);
  CHECK(rows[0][6] == "numeric");
  CHECK(rows[1][6] == "0.25");

  CHECK(piac("analyze --case " + kData + "/ieee39-like.case --analytic").code == 6);
  CHECK(piac("analyze --case " + kData + "/ieee39-like.case").code == 5);  // no linear model
  CHECK(piac("analyze --case " + kData + "/homogeneous2.case --selector bogus").code == 2);
}

TEST_CASE("sweeps") {
  auto r = piac("sweep --case " + kData + "/homogeneous10.case --axis k3 --grid 1,10,100,1000");
  REQUIRE(r.code == 0);
  auto rows = csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"k3", "omega_norm", "u_norm", "spread_norm"});
  for (int i = 2; i < 5; ++i) CHECK(std::stod(rows[i][3]) < std::stod(rows[i - 1][3]));

  r = piac("sweep --case " + kData + "/homogeneous10.case --axis k1 --grid 0.4,0.8,1.6 --simulate");
  REQUIRE(r.code == 0);
  rows = csv(r.out);
  CHECK(rows[0].back() == "C");
  for (int i = 2; i < 4; ++i) CHECK(std::stod(rows[i][2]) > std::stod(rows[i - 1][2]));

  CHECK(piac("sweep --case " + kData + "/homogeneous10.case --grid \"\"").code == 2);
  CHECK(piac("sweep --case " + kData + "/homogeneous10.case --grid 2,1").code == 2);
}

TEST_CASE("simulate: trace file, summary, determinism, atomic failure") {
  const auto a = scratch("a.csv"), b = scratch("b.csv");
  auto r = piac("simulate --case " + kData + "/homogeneous10.case --out " + a.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("S=") != std::string::npos);
  REQUIRE(piac("simulate --case " + kData + "/homogeneous10.case --out " + b.string()).code == 0);
  const std::string text = slurp(a);
  CHECK(text == slurp(b));
  CHECK(text.rfind("t,node,theta,omega,eta,xi,u,mc\n", 0) == 0);

  // Σu converges to -ΣΔP = 0.3
  const auto rows = csv(text);
  double sum_u = 0.0;
  for (std::size_t i = rows.size() - 10; i < rows.size(); ++i) sum_u += std::stod(rows[i][6]);
  CHECK(sum_u == doctest::Approx(0.3).epsilon(1e-4));

  r = piac("simulate --case " + kData + "/homogeneous10.case --no-disturbance --out " + a.string());
  CHECK(r.out.find("S=0 ") != std::string::npos);

  const auto never = scratch("never.csv");
  fs::remove(never);
  CHECK(piac("simulate --case " + kTest + "/noise5.case --out " + never.string()).code == 2);
  CHECK_FALSE(fs::exists(never));
  for (const auto& e : fs::directory_iterator(never.parent_path()))
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("stochastic ensemble output has a path column and is seed-reproducible") {
  const auto a = scratch("n1.csv"), b = scratch("n2.csv"), svg = scratch("n.svg");
  const std::string base = "simulate --case " + kTest + "/noise5.case --paths 2 --seed 11 --out ";
  REQUIRE(piac(base + a.string() + " --svg " + svg.string()).code == 0);
  REQUIRE(piac("simulate --case " + kTest + "/noise5.case --paths 2 --seed 11 --out " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("path,t,node,theta,omega,eta,xi,u,mc\n", 0) == 0);
  CHECK(slurp(svg).find("<svg") == 0);
}

TEST_CASE("PIAC_WORKERS does not change results") {
  const auto a = scratch("w1.csv"), b = scratch("w2.csv");
  const std::string args = "sweep --case " + kData + "/homogeneous10.case --axis k3 --grid 1,2,4,8 --out ";
  REQUIRE(std::system(("PIAC_WORKERS=1 " + std::string(PIAC_BIN) + " " + args + a.string()).c_str()) == 0);
  REQUIRE(std::system(("PIAC_WORKERS=3 " + std::string(PIAC_BIN) + " " + args + b.string()).c_str()) == 0);
  CHECK(slurp(a) == slurp(b));
}
