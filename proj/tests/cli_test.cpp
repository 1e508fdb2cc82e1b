#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "decept/instance.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kExe = DECEPT_EXE;
const std::string kBundled = DECEPT_DATA_DIR "/sf_grid_synthetic.json";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "decept_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = kExe + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = decept::read_text_file(out);
  r.err = decept::read_text_file(err);
  return r;
}

json read_json(const fs::path& p) { return json::parse(decept::read_text_file(p)); }

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  decept::write_text_file(dir / name, text);
  return dir / name;
}

const char* kTinyGrid = R"({
  "schema": "decept-instance/1",
  "name": "tiny",
  "grid": {"rows": 2, "cols": 2},
  "crime_counts": [3, 1, 2, 4],
  "sensitive": [3],
  "profile": {"gamma": 0.6, "alpha": 0.88, "reward_exponent": -1},
  "problem": {"horizon": 3, "budget": 8, "lambda": 0.5}
})";

const char* kOneState = R"({
  "schema": "decept-instance/1",
  "name": "one",
  "mdp": {"actions": ["stay"], "states": [{"label": "s", "actions": {"stay": [[0, 1.0]]}}]},
  "crime_counts": [6],
  "sensitive": [],
  "profile": {"gamma": 0.6, "alpha": 0.88, "reward_exponent": -1},
  "problem": {"horizon": 4, "budget": 3, "lambda": 0.3}
})";

}  // namespace

TEST_CASE("validate") {
  const auto dir = scratch("validate");
  const Run r = cli("validate --instance " + kBundled, dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("35 states") != std::string::npos);
}

TEST_CASE("input errors exit with 2") {
  const auto dir = scratch("errors");
  SUBCASE("rows*cols does not match the counts") {
    std::string text = kTinyGrid;
    text.replace(text.find("[3, 1, 2, 4]"), 12, "[3, 1, 2]");
    const Run r = cli("solve --instance " + write(dir, "bad.json", text).string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("line 5") != std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK(cli("validate --instance " + (dir / "nope.json").string(), dir).code == 2);
  }
  SUBCASE("unknown flag") {
    CHECK(cli("solve --instance " + kBundled + " --frobnicate 3", dir).code == 2);
  }
  SUBCASE("allocation does not match the states") {
    const auto inst = write(dir, "tiny.json", kTinyGrid);
    const auto alloc = write(dir, "alloc.csv", "state,utility\n0,1\n1,1\n2,1\n");
    const Run r = cli("evaluate --instance " + inst.string() + " --allocation " + alloc.string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("missing state 3") != std::string::npos);
  }
  SUBCASE("lambda out of range") {
    CHECK(cli("solve --instance " + kBundled + " --lambda 0", dir).code == 2);
  }
}

TEST_CASE("infeasibly tight bound exits with 1 and still writes artifacts") {
  const auto dir = scratch("tight");
  const auto inst = write(dir, "tiny.json", kTinyGrid);
  const Run r = cli("solve --quiet --instance " + inst.string() + " --lambda 1e-9 --out-dir " +
                           (dir / "out").string(),
                       dir);
  CHECK(r.code == 1);
  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["result"]["converged"] == false);
  CHECK(rep["result"]["tau"].get<double>() > 1.0);
  CHECK(fs::exists(dir / "out" / "allocation.csv"));
  CHECK(fs::exists(dir / "out" / "heatmap.csv"));
}

TEST_CASE("evaluate a single-state instance") {
  const auto dir = scratch("one");
  const auto inst = write(dir, "one.json", kOneState);
  const Run r = cli("evaluate --instance " + inst.string(), dir);
  REQUIRE(r.code == 0);
  const json rep = json::parse(r.out);
  // U = D = 3, R = 6 / 3
  CHECK(rep["result"]["Q"].get<double>() == doctest::Approx(5 * 2.0).epsilon(1e-14));
}

TEST_CASE("simulate") {
  const auto dir = scratch("simulate");
  const auto inst = write(dir, "tiny.json", kTinyGrid);
  const std::string base = "simulate --instance " + inst.string();
  const Run a = cli(base + " --paths 20000 --seed 9", dir);
  const Run b = cli(base + " --paths 20000 --seed 9 --workers 3", dir);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const json rep = json::parse(a.out);
  const double exact = rep["cost"]["exact"].get<double>();
  CHECK(std::abs(rep["cost"]["estimate"].get<double>() - exact) <=
        3 * rep["cost"]["std_error"].get<double>());

  const Run one = cli(base + " --paths 1 --seed 4", dir);
  REQUIRE(one.code == 0);
  const json path = json::parse(one.out)["trajectory"];
  CHECK(path["states"].size() == path["actions"].size() + 1);
  CHECK(cli(base + " --paths 0", dir).code == 2);
}

TEST_CASE("bundled instance end to end") {
  const auto dir = scratch("bundled");
  const Run first = cli("solve --svg --instance " + kBundled + " --out-dir " + (dir / "a").string(), dir);
  REQUIRE(first.code == 0);
  for (const char* f : {"report.json", "timing.json", "allocation.csv", "heatmap.csv", "heatmap.svg"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  const json rep = read_json(dir / "a" / "report.json");
  CHECK(rep["schema"] == "decept-report/1");
  CHECK(rep["result"]["converged"] == true);
  CHECK(rep["result"]["reach"].get<double>() <= 0.3);
  const double q = rep["result"]["Q"].get<double>();

  const auto inst = decept::load_instance(kBundled);
  const auto u = decept::load_allocation(dir / "a" / "allocation.csv", inst.model.num_states());
  double total = 0.0;
  for (double v : u) total += v;
  CHECK(std::abs(total - 400.0) <= 1e-6);

  const Run eval = cli("evaluate --instance " + kBundled + " --allocation " +
                              (dir / "a" / "allocation.csv").string(),
                          dir);
  REQUIRE(eval.code == 0);
  const json ev = json::parse(eval.out);
  CHECK(std::abs(ev["result"]["Q"].get<double>() - q) <= 1e-6 * q);
  CHECK(std::abs(ev["result"]["reach"].get<double>() - rep["result"]["reach"].get<double>()) <= 1e-6);

  const Run uniform = cli("evaluate --instance " + kBundled, dir);
  REQUIRE(uniform.code == 0);
  CHECK(json::parse(uniform.out)["result"]["Q"].get<double>() > q);

  const Run sim = cli("simulate --paths 100000 --instance " + kBundled + " --allocation " +
                             (dir / "a" / "allocation.csv").string(),
                         dir);
  REQUIRE(sim.code == 0);
  const json mc = json::parse(sim.out);
  CHECK(std::abs(mc["cost"]["estimate"].get<double>() - q) <= 3 * mc["cost"]["std_error"].get<double>());

  const std::string heat = decept::read_text_file(dir / "a" / "heatmap.csv");
  CHECK(heat.rfind("# decept-heatmap rows=7 cols=5 transform=log10\n", 0) == 0);

  const Run second = cli("solve --quiet --instance " + kBundled + " --out-dir " + (dir / "b").string(), dir);
  REQUIRE(second.code == 0);
  CHECK(decept::read_text_file(dir / "a" / "report.json") ==
        decept::read_text_file(dir / "b" / "report.json"));
  CHECK(decept::read_text_file(dir / "a" / "allocation.csv") ==
        decept::read_text_file(dir / "b" / "allocation.csv"));
}
