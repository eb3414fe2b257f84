#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsa/models.hpp"
#include "irsa/optimizer.hpp"
#include "irsa/sampling.hpp"

namespace irsa {

inline constexpr const char* kConfigSchema = "irsa.config/1";
inline constexpr const char* kManifestSchema = "irsa.manifest/1";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "IRSA_OUTPUT_DIR";

enum class PreClustering { KMeans, Ward };

/// One experiment. Either `model` names a built-in model, or `outputs_csv`
/// points to outputs evaluated offline on the design this config generates
/// (then `inputs` is required).
struct ExperimentConfig {
  std::string model;
  std::string outputs_csv;
  std::vector<InputSpec> inputs;  // empty: the built-in model's inputs
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::size_t steps = 50;         // tsgen only
  Algorithm algorithm = Algorithm::SM;
  Criterion criterion = Criterion::SI;
  std::optional<PreClustering> clustering;  // default: kmeans for sm/dm, ward for smprime
  int k_y = 10;
  int k_h = 10;
  int n_x = 20;
  double gamma = 0.0;
  std::vector<std::size_t> analyze;  // 0-based inputs; empty means all
  bool allow_large_k = false;
  int map_resolution = 100;
  std::string output_dir;
  unsigned threads = 0;  // 0: hardware concurrency

  bool offline() const { return !outputs_csv.empty(); }
  PreClustering pre_clustering() const;
  unsigned thread_count() const;
};

/// Parses a config document; every error names the offending field path.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks: algorithm/criterion compatibility, enumeration
/// guards, ranges. Throws ConfigError or CapacityError.
void validate(const ExperimentConfig& c);

/// Inputs of the design: explicit specs, else the built-in model's.
std::vector<InputSpec> resolve_inputs(const ExperimentConfig& c);

/// Output directory: config value, else $IRSA_OUTPUT_DIR, else "irsa_out".
std::filesystem::path resolve_output_dir(const ExperimentConfig& c);

/// Seeds derived from the config seed: {design, clustering}.
std::vector<std::uint64_t> seed_chain(std::uint64_t seed);

struct DesignSummary {
  std::filesystem::path path;
  std::size_t rows = 0;
};

/// Writes design.csv into the output directory.
DesignSummary design_command(const ExperimentConfig& config, std::ostream& log);

struct RunSummary {
  std::filesystem::path dir;
  std::vector<IrsaResult> results;
  std::vector<std::string> input_names;
};

/// Design, evaluation (or offline load), pre-clustering, search and report.
/// Writes design.csv, outputs.csv, assignment.csv, results.json,
/// results.csv, figure.svg and manifest.json.
RunSummary run_command(const ExperimentConfig& config, std::ostream& log);

/// Reads the config stored in a run manifest.
ExperimentConfig config_from_manifest(const std::filesystem::path& manifest);

struct VerifyOptions {
  std::size_t n = 4096;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double tolerance = 0.05;
  int trials = 200;
  std::uint64_t aggregation_seed = 7;
  double estimator_scale = 1.0;  // test hook: multiplies every estimate
};

struct OracleRow {
  std::uint64_t seed = 0;
  CutSpec cut;
  std::size_t input = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double deviation() const;
};

struct VerifyReport {
  std::vector<OracleRow> rows;
  double max_deviation = 0.0;
  AggregationReport aggregation;
  bool oracle_passed = false;
  bool passed() const { return oracle_passed && aggregation.passed(); }
};

/// Cut grids of the analytic oracle suite.
std::vector<CutSpec> oracle_grid();

/// Monte Carlo region indices of the sign-abs model against closed forms,
/// plus the histogram aggregation property check.
VerifyReport verify_command(const VerifyOptions& options, std::ostream& log);

/// Re-renders results.csv and figure.svg of a run directory from its files.
void report_command(const std::filesystem::path& run_dir, std::ostream& log);

}  // namespace irsa
