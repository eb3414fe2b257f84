#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <optional>

#include "irsa/app.hpp"
#include "irsa/error.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string manifest;
  std::optional<std::string> model, outputs_csv, algorithm, criterion, clustering, out;
  std::optional<std::size_t> n, steps;
  std::optional<std::uint64_t> seed;
  std::optional<int> k_y, k_h, n_x;
  std::optional<double> gamma;
  std::optional<unsigned> threads;
  bool allow_large_k = false;

  void add_to(CLI::App* cmd, bool full) {
    cmd->add_option("-c,--config", config, "experiment config (JSON)");
    cmd->add_option("--model", model, "built-in model: signabs, toy2d, tsgen");
    cmd->add_option("--n", n, "base sample size");
    cmd->add_option("--seed", seed, "design seed");
    cmd->add_option("--steps", steps, "time steps of tsgen");
    cmd->add_option("-o,--out", out, "output directory");
    if (!full) return;
    cmd->add_option("--manifest", manifest, "re-run the config stored in a run manifest");
    cmd->add_option("--outputs", outputs_csv, "offline outputs CSV aligned with the design");
    cmd->add_option("--algorithm", algorithm, "sm, dm or smprime");
    cmd->add_option("--criterion", criterion, "si, tsi, si_diff or tsi_diff");
    cmd->add_option("--clustering", clustering, "kmeans or ward");
    cmd->add_option("--ky", k_y, "elementary clusters K_Y");
    cmd->add_option("--kh", k_h, "meta-clusters K_H (smprime)");
    cmd->add_option("--nx", n_x, "histogram bins (smprime)");
    cmd->add_option("--gamma", gamma, "minimum part size as a fraction of N");
    cmd->add_option("--threads", threads, "worker threads (default: all cores)");
    cmd->add_flag("--allow-large-k", allow_large_k, "lift the enumeration guards");
  }

  irsa::ExperimentConfig resolve() const {
    if (!config.empty() && !manifest.empty()) {
      throw irsa::ConfigError("--config and --manifest are mutually exclusive");
    }
    irsa::ExperimentConfig c;
    if (!config.empty()) c = irsa::load_config(config);
    if (!manifest.empty()) c = irsa::config_from_manifest(manifest);
    if (model) {
      c.model = *model;
      c.outputs_csv.clear();
    }
    if (outputs_csv) {
      c.outputs_csv = *outputs_csv;
      c.model.clear();
    }
    if (n) c.n = *n;
    if (seed) c.seed = *seed;
    if (steps) c.steps = *steps;
    if (algorithm) c.algorithm = irsa::parse_algorithm(*algorithm);
    if (criterion) c.criterion = irsa::parse_criterion(*criterion);
    if (clustering) {
      if (*clustering == "kmeans") {
        c.clustering = irsa::PreClustering::KMeans;
      } else if (*clustering == "ward") {
        c.clustering = irsa::PreClustering::Ward;
      } else {
        throw irsa::ConfigError(fmt::format("clustering: unknown value '{}' (kmeans|ward)", *clustering));
      }
    }
    if (k_y) c.k_y = *k_y;
    if (k_h) c.k_h = *k_h;
    if (n_x) c.n_x = *n_x;
    if (gamma) c.gamma = *gamma;
    if (threads) c.threads = *threads;
    if (allow_large_k) c.allow_large_k = true;
    if (out) c.output_dir = *out;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse regional sensitivity analysis"};
  app.require_subcommand(1);

  Overrides design_opts;
  auto* design = app.add_subcommand("design", "write the pick-and-freeze design");
  design_opts.add_to(design, false);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "evaluate, cluster, search and report");
  run_opts.add_to(run, true);

  irsa::VerifyOptions verify_opts;
  std::size_t seed_count = verify_opts.seeds.size();
  auto* verify = app.add_subcommand("verify", "check estimators against closed forms");
  verify->add_option("--n", verify_opts.n, "base sample size");
  verify->add_option("--seeds", seed_count, "number of seeds (1..k)");
  verify->add_option("--trials", verify_opts.trials, "aggregation property trials");
  verify->add_option("--tolerance", verify_opts.tolerance, "max allowed deviation");
  verify->add_option("--estimator-scale", verify_opts.estimator_scale)->group("");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "re-render the figures of a run directory");
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(irsa::ExitCode::Validation);
  }

  try {
    if (*design) {
      irsa::design_command(design_opts.resolve(), std::cout);
    } else if (*run) {
      irsa::run_command(run_opts.resolve(), std::cout);
    } else if (*verify) {
      verify_opts.seeds.clear();
      for (std::size_t s = 1; s <= seed_count; ++s) verify_opts.seeds.push_back(s);
      const auto result = irsa::verify_command(verify_opts, std::cout);
      return result.passed() ? 0 : static_cast<int>(irsa::ExitCode::Numerical);
    } else if (*report) {
      irsa::report_command(report_dir, std::cout);
    }
  } catch (const irsa::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
