#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "irsa/app.hpp"
#include "irsa/error.hpp"

using namespace irsa;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    validate(config_from_json(j));
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "irsa_test_app" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing defaults and round trip") {
  const auto c = config_from_json({{"model", "toy2d"}, {"algorithm", "dm"}, {"criterion", "tsi_diff"}});
  CHECK(c.n == 1000);
  CHECK(c.k_y == 10);
  CHECK(c.pre_clustering() == PreClustering::KMeans);
  validate(c);
  const auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  auto sp = config_from_json({{"model", "toy2d"}, {"algorithm", "smprime"}, {"k_y", 100}});
  CHECK(sp.pre_clustering() == PreClustering::Ward);
  const auto an = config_from_json({{"model", "toy2d"}, {"analyze", {2, 4}}});
  CHECK(an.analyze == std::vector<std::size_t>{1, 3});
}

TEST_CASE("config errors name the field path") {
  CHECK(config_error({{"model", "toy2d"}, {"n", "many"}}).starts_with("n:"));
  CHECK(config_error({{"model", "toy2d"}, {"colour", 1}}).starts_with("colour:"));
  CHECK(config_error({{"outputs_csv", "x.csv"}, {"inputs", {{{"name", "a"}, {"upper", 1}}}}})
            .starts_with("inputs[0].lower:"));
  CHECK(config_error({{"model", "toy2d"}, {"criterion", "foo"}}).starts_with("criterion:"));
  CHECK(config_error({{"model", "toy2d"}, {"algorithm", "smprime"}, {"criterion", "tsi"}})
            .starts_with("criterion:"));
  CHECK(config_error({{"model", "toy2d"}, {"algorithm", "dm"}}).starts_with("criterion:"));
  CHECK(config_error({{"model", "toy2d"}, {"gamma", 0.7}}).starts_with("gamma:"));
  CHECK(config_error({{"model", "toy2d"}, {"analyze", {5}}}).starts_with("analyze[0]:"));
  CHECK(config_error({{"schema", "other/2"}, {"model", "toy2d"}}).starts_with("schema:"));
  CHECK(config_error({{"n", 10}}).starts_with("model:"));
  CHECK(config_error({{"model", "toy2d"}, {"outputs_csv", "y.csv"}}).starts_with("model:"));
  CHECK(config_error({{"model", "toy2d"}, {"k_y", 2}, {"k_h", 3}, {"algorithm", "smprime"}})
            .starts_with("k_h:"));
  CHECK(config_error(json::array()).starts_with("<root>:"));
}

TEST_CASE("enumeration guards are capacity errors unless lifted") {
  auto c = config_from_json({{"model", "toy2d"}, {"algorithm", "dm"}, {"criterion", "si_diff"}, {"k_y", 15}});
  CHECK_THROWS_AS(validate(c), CapacityError);
  c.allow_large_k = true;
  CHECK_NOTHROW(validate(c));
  c = config_from_json({{"model", "toy2d"}, {"k_y", 23}});
  CHECK_THROWS_AS(validate(c), CapacityError);
}

TEST_CASE("output directory resolution") {
  ExperimentConfig c;
  c.output_dir = "explicit";
  CHECK(resolve_output_dir(c) == "explicit");
  c.output_dir.clear();
  ::setenv(kOutputDirEnv, "from_env", 1);
  CHECK(resolve_output_dir(c) == "from_env");
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_output_dir(c) == "irsa_out");
}

TEST_CASE("seed chain is deterministic and distinct") {
  CHECK(seed_chain(7) == seed_chain(7));
  CHECK(seed_chain(7)[0] == 7);
  CHECK(seed_chain(7)[1] != seed_chain(8)[1]);
  CHECK(seed_chain(7)[1] != 7);
}

TEST_CASE("oracle grid: nine single cuts and ten double cuts") {
  const auto grid = oracle_grid();
  std::size_t one = 0, two = 0;
  for (const auto& g : grid) {
    CHECK_NOTHROW(g.validate());
    (g.kind == CutSpec::Kind::OneCut ? one : two)++;
  }
  CHECK(one == 9);
  CHECK(two == 10);
}

TEST_CASE("verify fails when the estimator is perturbed") {
  VerifyOptions opt;
  opt.n = 1024;
  opt.seeds = {1};
  opt.trials = 5;
  opt.estimator_scale = 1.3;
  std::ostringstream log;
  const auto bad = verify_command(opt, log);
  CHECK_FALSE(bad.passed());
  CHECK(bad.max_deviation > opt.tolerance);
  CHECK(log.str().find("FAIL") != std::string::npos);
  CHECK(bad.rows.size() == oracle_grid().size() * 2);
}

TEST_CASE("run writes every artifact and offline outputs reproduce it") {
  const auto dir = scratch("run");
  ExperimentConfig c;
  c.model = "toy2d";
  c.n = 200;
  c.seed = 3;
  c.k_y = 6;
  c.threads = 1;
  c.map_resolution = 20;
  c.output_dir = (dir / "model").string();
  std::ostringstream log;
  const auto run = run_command(c, log);
  for (const char* f : {"design.csv", "outputs.csv", "assignment.csv", "results.json",
                        "results.csv", "figure.svg", "manifest.json"}) {
    CHECK(fs::exists(dir / "model" / f));
  }
  REQUIRE(run.results.size() == 4);
  const auto manifest = json::parse(slurp(dir / "model" / "manifest.json"));
  CHECK(manifest["rows"] == 2000);
  CHECK(manifest["seeds"]["design"] == 3);

  ExperimentConfig off = c;
  off.model.clear();
  off.outputs_csv = (dir / "model" / "outputs.csv").string();
  off.inputs = builtin_model("toy2d").inputs;
  off.output_dir = (dir / "offline").string();
  const auto again = run_command(off, log);
  REQUIRE(again.results.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(again.results[i].score == run.results[i].score);
    CHECK(again.results[i].parts == run.results[i].parts);
  }

  off.n = 150;
  CHECK_THROWS_AS(run_command(off, log), AlignmentError);

  std::ostringstream rep;
  fs::remove(dir / "model" / "figure.svg");
  report_command(dir / "model", rep);
  CHECK(fs::exists(dir / "model" / "figure.svg"));
  CHECK_THROWS_AS(report_command(dir / "missing", rep), IoError);
}

TEST_CASE("design command writes N rows") {
  const auto dir = scratch("design");
  ExperimentConfig c;
  c.model = "signabs";
  c.n = 5;
  c.output_dir = dir.string();
  std::ostringstream log;
  const auto s = design_command(c, log);
  CHECK(s.rows == 30);
  std::ifstream in(s.path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 31);
}
