#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RESONATOR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("resonator_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli exit codes") {
  const auto dir = scratch("codes");
  CHECK(run("--help") == 0);
  CHECK(run("") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("factor --gen N=100 --out " + dir.string()) == 1);
  CHECK(run("factor --gen N=100 F=2 D=4 --alg nope --out " + dir.string()) == 1);
  CHECK(run("factor --problem " + (dir / "missing.bin").string() + " --out " + dir.string()) == 1);

  CHECK(run("factor --gen N=400 F=3 D=8 --seed 3 --brute-force --out " + dir.string()) == 0);
  const auto side = nlohmann::json::parse(slurp(dir / "factor.json"));
  CHECK(side["command"] == "factor");
  CHECK(side["seed"] == 3);
  CHECK(side["result"]["accuracy"] == 1.0);

  // far past capacity with a single sweep: the answer is wrong
  CHECK(run("factor --gen N=64 F=3 D=60 --seed 1 --max-iterations 1 --out " + dir.string()) == 2);
}

TEST_CASE("cli problem files round trip") {
  const auto dir = scratch("files");
  const auto problem = (dir / "p.json").string();
  CHECK(run("factor --gen N=300 F=2 D=10,12 --seed 5 --write-problem " + problem + " --out " + dir.string()) == 0);
  const auto first = nlohmann::json::parse(slurp(dir / "factor.json"))["result"];
  CHECK(run("factor --problem " + problem + " --alg resonator-ols --out " + dir.string()) == 0);
  const auto second = nlohmann::json::parse(slurp(dir / "factor.json"))["result"];
  CHECK(first["indices"] == second["indices"]);
}

TEST_CASE("a sidecar reruns the experiment byte for byte") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  CHECK(run("accuracy --N 200 --F 3 --D 4,6 --trials 10 --seed 7 --out " + a.string()) == 0);
  CHECK(run("accuracy --config " + (a / "accuracy.json").string() + " --out " + b.string()) == 0);
  const auto csv = slurp(a / "accuracy.csv");
  CHECK(csv.rfind("N,F,D,M,solver,trials,accuracy,stderr,aborted,mean_iterations\n", 0) == 0);
  CHECK(csv == slurp(b / "accuracy.csv"));

  // explicit options win over the config file
  const auto c = scratch("rerun_c");
  CHECK(run("accuracy --config " + (a / "accuracy.json").string() + " --trials 5 --out " + c.string()) == 0);
  CHECK(nlohmann::json::parse(slurp(c / "accuracy.json"))["config"]["trials"] == 5);

  // a sidecar from another command is rejected
  CHECK(run("noise --config " + (a / "accuracy.json").string() + " --out " + c.string()) == 1);
}

TEST_CASE("bitflip and noise outputs") {
  const auto dir = scratch("outputs");
  CHECK(run("bitflip --N 200 --F 3 --D 10,20 --trials 5 --out " + dir.string()) == 0);
  std::istringstream lines(slurp(dir / "bitflip.csv"));
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 1 + 2 * 3);
  CHECK(run("noise --N 200 --D 5 --zeta 0,0.2 --trials 5 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "noise.json"));
}
