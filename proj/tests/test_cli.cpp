#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "msorte/scenario_io.hpp"

namespace {

namespace fs = std::filesystem;

std::string bin() {
  const char* b = std::getenv("MSORTE_BIN");
  return b ? b : "";
}

int run(const std::string& args) {
  int rc = std::system((bin() + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  fs::path config;
  Workspace(const char* name, const std::string& utility_json, double budget = 0.5) {
    dir = fs::temp_directory_path() / name;
    fs::create_directories(dir);
    std::mt19937_64 rng(81);
    auto space = test_helpers::random_space(rng, 5);
    msorte::Allocation X(test_helpers::random_endowments(rng, 2, 5));
    msorte::save_scenarios((dir / "scenarios.csv").string(), space, X);
    config = dir / "config.json";
    std::ofstream out(config);
    out << "{\"scenarios\":\"" << (dir / "scenarios.csv").string() << "\","
        << "\"budget\":" << budget << ",\"utility\":" << utility_json << ","
        << "\"output_dir\":\"" << dir.string() << "\"}";
  }
};

const char* kPairwise = R"({"family":"EXP_PAIRWISE","alpha":[1.1,0.8]})";

}  // namespace

TEST_CASE("solve emits a passing, reproducible certificate") {
  REQUIRE_FALSE(bin().empty());
  Workspace ws("msorte_cli_solve", kPairwise);
  CHECK(run("solve -c " + ws.config.string()) == 0);
  auto cert_path = ws.dir / "certificate.json";
  REQUIRE(fs::exists(cert_path));
  std::string first = slurp(cert_path);
  CHECK(run("--quiet solve -c " + ws.config.string()) == 0);
  CHECK(slurp(cert_path) == first);  // byte-identical rerun
  // a different worker count must not change a byte either
  CHECK(run("--threads 4 solve -c " + ws.config.string()) == 0);
  CHECK(slurp(cert_path) == first);

  CHECK(run("check " + cert_path.string() + " -c " + ws.config.string()) == 0);
  CHECK(run("det -c " + ws.config.string()) == 0);
  CHECK(run("oracle -c " + ws.config.string()) == 0);
  CHECK(fs::exists(ws.dir / "oracle_certificate.json"));
}

TEST_CASE("tampered certificate fails verification with exit 3") {
  REQUIRE_FALSE(bin().empty());
  Workspace ws("msorte_cli_tamper", kPairwise);
  REQUIRE(run("solve -c " + ws.config.string()) == 0);
  auto cert_path = ws.dir / "certificate.json";
  std::string cert = slurp(cert_path);
  auto pos = cert.find("\"lambda\":");
  REQUIRE(pos != std::string::npos);
  auto value_begin = pos + 9;
  auto value_end = cert.find(',', value_begin);
  cert.replace(value_begin, value_end - value_begin, "2e3");
  std::ofstream(cert_path, std::ios::binary) << cert;
  CHECK(run("check " + cert_path.string() + " -c " + ws.config.string()) == 3);
}

TEST_CASE("invalid inputs exit with code 1") {
  REQUIRE_FALSE(bin().empty());
  Workspace bad("msorte_cli_badalpha", R"({"family":"EXP_PAIRWISE","alpha":[1.1,-0.8]})");
  CHECK(run("solve -c " + bad.config.string()) == 1);
  Workspace wrong("msorte_cli_badfam", R"({"family":"NOPE","alpha":[1.0,1.0]})");
  CHECK(run("solve -c " + wrong.config.string()) == 1);
  CHECK(run("solve -c /nonexistent/config.json") == 1);
  // oracle requires the exponential pairwise family
  Workspace se("msorte_cli_sumexp", R"({"family":"SUM_EXP","alpha":[1.0,1.0]})");
  CHECK(run("oracle -c " + se.config.string()) == 1);
}

TEST_CASE("conjugate subcommand reports both routes") {
  REQUIRE_FALSE(bin().empty());
  auto out_path = fs::temp_directory_path() / "msorte_conj_out.txt";
  int rc = std::system((bin() + " conjugate --family EXP_PAIRWISE --alpha 1 1 --w 1 1 > " +
                        out_path.string() + " 2>&1")
                           .c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  std::string out = slurp(out_path);
  CHECK(out.find("analytic") != std::string::npos);
  CHECK(out.find("difference") != std::string::npos);
}

TEST_CASE("plot emission writes the data tables") {
  REQUIRE_FALSE(bin().empty());
  Workspace ws("msorte_cli_plots", kPairwise);
  // rewrite config with emit_plots
  {
    std::ofstream out(ws.config);
    out << "{\"scenarios\":\"" << (ws.dir / "scenarios.csv").string() << "\","
        << "\"budget\":0.5,\"utility\":" << kPairwise << ","
        << "\"output_dir\":\"" << ws.dir.string() << "\",\"emit_plots\":true}";
  }
  CHECK(run("solve -c " + ws.config.string()) == 0);
  CHECK(fs::exists(ws.dir / "per_scenario.csv"));
  CHECK(fs::exists(ws.dir / "per_agent.csv"));
  std::string head = slurp(ws.dir / "per_scenario.csv");
  CHECK(head.rfind("scenario,prob,xbar,q1,q2,X1,X2,Yhat1,Yhat2,Ytilde1,Ytilde2", 0) == 0);
}
