// End-to-end checks of the qebm binary. The test runner passes its location
// in QEBM_CLI; when run by hand from the build directory "./qebm" works too.
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cli_path() {
  const char* env = std::getenv("QEBM_CLI");
  return env ? env : "./qebm";
}

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::path log = scratch / "cli_output.log";
  std::string cmd = cli_path() + " " + args + " >" + log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

// fresh scratch directory per test case, removed on destruction
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::path("cli_scratch") / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kBondSpec =
    R"({"state":"thermal","beta":1.0,"hamiltonian":{"kind":"tim","n":2,"chain":-1.0,"g":0.0}})";

constexpr double kTanh1 = 0.7615941559557649;

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version and state inspection") {
  Scratch sc("state");

  CliResult ver = run_cli("--version", sc.dir);
  CHECK(ver.exit_code == 0);
  CHECK(!ver.output.empty());

  CliResult st = run_cli("state --spec '" + kBondSpec + "' --pauli ZZ --pauli ZI", sc.dir);
  CHECK(st.exit_code == 0);
  CHECK(st.output.find("sites: 2") != std::string::npos);
  CHECK(st.output.find("<ZZ> = 0.761594156") != std::string::npos);
  CHECK(st.output.find("<ZI> =") != std::string::npos);
}

TEST_CASE("subcommand chain: sample, learn, gibbs, estimate, tvd, orders") {
  Scratch sc("chain");
  fs::path samples = sc / "samples.txt";
  fs::path model = sc / "model.json";
  fs::path report = sc / "report.jsonl";
  fs::path gibbs = sc / "gibbs.txt";

  CliResult smp = run_cli("sample --spec '" + kBondSpec +
                              "' --povm computational -m 40000 --seed 5 -o " + samples.string(),
                          sc.dir);
  CHECK(smp.exit_code == 0);
  REQUIRE(fs::exists(samples));
  CHECK(slurp(samples).rfind("#qebm-samples v1", 0) == 0);

  CliResult est = run_cli(
      "estimate --samples " + samples.string() + " --povm computational --pauli ZZ", sc.dir);
  CHECK(est.exit_code == 0);
  double mean = 0, se = 0;
  unsigned long long n = 0;
  REQUIRE(std::sscanf(est.output.c_str(), "<ZZ> mean=%lf stderr=%lf n=%llu", &mean, &se, &n) == 3);
  CHECK(n == 40000);
  CHECK(se > 0);
  CHECK(std::abs(mean - kTanh1) < 5 * se);

  CliResult fit = run_cli("learn --samples " + samples.string() +
                              " --config '{\"family\":\"poly\",\"L\":2}' -o " + model.string() +
                              " --report " + report.string(),
                          sc.dir);
  CHECK(fit.exit_code == 0);
  REQUIRE(fs::exists(model));
  CHECK(slurp(model).find("qebm-model") != std::string::npos);
  CHECK(slurp(report).find("loss") != std::string::npos);

  CliResult gb = run_cli("gibbs --model " + model.string() +
                             " --chains 2 --total 30000 --seed 3 -o " + gibbs.string(),
                         sc.dir);
  CHECK(gb.exit_code == 0);
  REQUIRE(fs::exists(gibbs));

  CliResult gest = run_cli(
      "estimate --samples " + gibbs.string() + " --povm computational --pauli ZZ", sc.dir);
  CHECK(gest.exit_code == 0);
  double gmean = 0, gse = 0;
  unsigned long long gn = 0;
  REQUIRE(std::sscanf(gest.output.c_str(), "<ZZ> mean=%lf stderr=%lf n=%llu", &gmean, &gse, &gn) ==
          3);
  CHECK(std::abs(gmean - kTanh1) < 0.05);

  CliResult tvd = run_cli("tvd --samples " + gibbs.string() + " --spec '" + kBondSpec +
                              "' --povm computational",
                          sc.dir);
  CHECK(tvd.exit_code == 0);
  double tv = 0, floor = 0;
  REQUIRE(std::sscanf(tvd.output.c_str(), "tvd=%lf sampling_floor=%lf", &tv, &floor) == 2);
  CHECK(tv < 0.05);
  CHECK(floor > 0);

  CliResult ord = run_cli("orders --model " + model.string(), sc.dir);
  CHECK(ord.exit_code == 0);
  CHECK(ord.output.rfind("1 ", 0) == 0);
  CHECK(ord.output.find("\n2 ") != std::string::npos);
}

TEST_CASE("run pipeline writes the full artifact set") {
  Scratch sc("run");
  fs::path out = sc / "out";

  json cfg;
  cfg["out"] = out.string();
  cfg["state"] = json::parse(kBondSpec);
  cfg["povm"] = {{"kind", "computational"}};
  cfg["samples"] = {{"m", 30000}, {"seed", 11}};
  cfg["fit"] = {{"family", "poly"}, {"L", 2}};
  cfg["gibbs"] = {{"total", 30000}, {"seed", 4}, {"chains", 2}};
  cfg["estimate"] = {{"observables", json::array({"ZZ", "ZI"})},
                     {"tvd", {{"floor_seed", 9}}},
                     {"orders", true}};
  fs::path cfg_path = sc / "run.json";
  std::ofstream(cfg_path) << cfg.dump();

  CliResult run = run_cli("run --config " + cfg_path.string(), sc.dir);
  CHECK(run.exit_code == 0);
  CHECK(run.output.find("run complete") != std::string::npos);

  for (const char* name : {"samples.txt", "fit_report.jsonl", "model.json", "model_samples.txt",
                           "estimates.jsonl", "tvd.json", "orders.txt", "run.json"})
    CHECK_MESSAGE(fs::exists(out / name), name);

  std::string est = slurp(out / "estimates.jsonl");
  CHECK(est.find("\"source\":\"data\"") != std::string::npos);
  CHECK(est.find("\"source\":\"model\"") != std::string::npos);
  int lines = 0;
  for (char c : est)
    if (c == '\n') ++lines;
  CHECK(lines == 4);

  json tvdj = json::parse(slurp(out / "tvd.json"));
  CHECK(tvdj.at("tvd").get<double>() < 0.05);
  CHECK(tvdj.at("sampling_floor").get<double>() > 0);
  CHECK(tvdj.at("m").get<std::uint64_t>() == 30000);

  json runj = json::parse(slurp(out / "run.json"));
  CHECK(!runj.at("version").get<std::string>().empty());
  CHECK(runj.at("config_hash").get<std::string>().size() == 16);
  CHECK(runj.at("config") == cfg);
  CHECK(runj.at("seeds").at("samples").get<std::uint64_t>() == 11);
  CHECK(runj.at("seeds").at("gibbs").get<std::uint64_t>() == 4);
  CHECK(runj.at("artifacts").size() == 7);

  // rerunning the identical config reproduces the artifacts byte for byte
  std::vector<std::pair<std::string, std::string>> before;
  for (const char* name : {"samples.txt", "model.json", "estimates.jsonl", "tvd.json"})
    before.emplace_back(name, slurp(out / name));
  CliResult rerun = run_cli("run --config " + cfg_path.string(), sc.dir);
  CHECK(rerun.exit_code == 0);
  for (const auto& [name, content] : before) CHECK_MESSAGE(slurp(out / name) == content, name);
}

TEST_CASE("run pipeline with fidelity against ghz-plus") {
  Scratch sc("fid");
  fs::path out = sc / "out";

  json cfg;
  cfg["out"] = out.string();
  cfg["state"] = {{"state", "ghz-plus"}, {"n", 2}};
  cfg["povm"] = {{"kind", "tetrahedral"}};
  cfg["samples"] = {{"m", 20000}, {"seed", 1}};
  cfg["estimate"] = {{"fidelity", "ghz-plus"}};
  fs::path cfg_path = sc / "fid.json";
  std::ofstream(cfg_path) << cfg.dump();

  CliResult run = run_cli("run --config " + cfg_path.string(), sc.dir);
  CHECK(run.exit_code == 0);
  json fid = json::parse(slurp(out / "fidelity.json"));
  CHECK(fid.at("data").at("mean").get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fid.at("target").get<std::string>() == "ghz-plus");
  CHECK(!fs::exists(out / "model.json"));
}

TEST_CASE("failure exit codes and artifact cleanup") {
  Scratch sc("fail");

  CliResult bad_state = run_cli("state --spec '{\"state\":\"bell\"}'", sc.dir);
  CHECK(bad_state.exit_code == 2);
  CHECK(bad_state.output.find("error:") != std::string::npos);

  fs::path samples = sc / "samples.txt";
  CliResult smp = run_cli("sample --spec '" + kBondSpec +
                              "' --povm computational -m 1000 --seed 1 -o " + samples.string(),
                          sc.dir);
  REQUIRE(smp.exit_code == 0);

  // X is outside the span of the computational POVM
  CliResult span = run_cli(
      "estimate --samples " + samples.string() + " --povm computational --pauli XI", sc.dir);
  CHECK(span.exit_code == 4);

  CliResult missing = run_cli("estimate --samples " + (sc / "nope.txt").string() +
                                  " --povm computational --pauli ZZ",
                              sc.dir);
  CHECK(missing.exit_code == 5);

  // tvd without gibbs is a config error, and the partial artifacts are removed
  fs::path out = sc / "out";
  json cfg;
  cfg["out"] = out.string();
  cfg["state"] = json::parse(kBondSpec);
  cfg["povm"] = {{"kind", "computational"}};
  cfg["samples"] = {{"m", 2000}, {"seed", 2}};
  cfg["fit"] = {{"family", "poly"}, {"L", 2}};
  cfg["estimate"] = {{"tvd", {{"floor_seed", 1}}}};
  fs::path cfg_path = sc / "bad_run.json";
  std::ofstream(cfg_path) << cfg.dump();

  CliResult bad_run = run_cli("run --config " + cfg_path.string(), sc.dir);
  CHECK(bad_run.exit_code == 2);
  CHECK(!fs::exists(out / "samples.txt"));
  CHECK(!fs::exists(out / "model.json"));
  CHECK(!fs::exists(out / "run.json"));

  json unknown = cfg;
  unknown.erase("estimate");
  unknown["surprise"] = 1;
  std::ofstream(cfg_path) << unknown.dump();
  CliResult bad_key = run_cli("run --config " + cfg_path.string(), sc.dir);
  CHECK(bad_key.exit_code == 2);
  CHECK(bad_key.output.find("surprise") != std::string::npos);
}

}  // TEST_SUITE
