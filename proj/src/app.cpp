#include "irsa/app.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include "irsa/clustering.hpp"
#include "irsa/error.hpp"
#include "irsa/report.hpp"

namespace irsa {

namespace fs = std::filesystem;
using nlohmann::json;

PreClustering ExperimentConfig::pre_clustering() const {
  if (clustering) return *clustering;
  return algorithm == Algorithm::SMPrime ? PreClustering::Ward : PreClustering::KMeans;
}

unsigned ExperimentConfig::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

const char* to_string(PreClustering p) { return p == PreClustering::Ward ? "ward" : "kmeans"; }

std::string type_name(const json& v) { return v.type_name(); }

// Typed field access with error messages that carry the field path.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(fmt::format("{}: expected an object, got {}", where(), type_name(j_)));
    }
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string str(const std::string& key, std::string fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw wrong(key, "a string", *v);
    return v->get<std::string>();
  }

  double real(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw wrong(key, "a number", *v);
    return v->get<double>();
  }

  double required_real(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(fmt::format("{}: required field is missing", where(key)));
    if (!v->is_number()) throw wrong(key, "a number", *v);
    return v->get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw wrong(key, "an integer", *v);
    const auto x = v->get<std::int64_t>();
    if (x < lo) throw ConfigError(fmt::format("{}: must be >= {}, got {}", where(key), lo, x));
    return x;
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw wrong(key, "a boolean", *v);
    return v->get<bool>();
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        throw ConfigError(fmt::format("{}: unknown field", where(it.key())));
      }
    }
  }

 private:
  ConfigError wrong(const std::string& key, const char* expected, const json& v) const {
    return ConfigError(
        fmt::format("{}: expected {}, got {}", where(key), expected, type_name(v)));
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.starts_with("criterion:") || what.starts_with("algorithm:")) {
      throw ConfigError(path + what.substr(what.find(':')));
    }
    throw;
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  Fields f(j, "");
  ExperimentConfig c;
  const auto schema = f.str("schema", kConfigSchema);
  if (schema != kConfigSchema) {
    throw ConfigError(fmt::format("schema: unsupported '{}' (expected '{}')", schema, kConfigSchema));
  }
  c.model = f.str("model", "");
  c.outputs_csv = f.str("outputs_csv", "");
  if (const json* inputs = f.find("inputs")) {
    if (!inputs->is_array()) {
      throw ConfigError(fmt::format("inputs: expected an array, got {}", type_name(*inputs)));
    }
    for (std::size_t i = 0; i < inputs->size(); ++i) {
      Fields in((*inputs)[i], fmt::format("inputs[{}]", i));
      InputSpec spec;
      spec.name = in.str("name", fmt::format("X{}", i + 1));
      spec.lower = in.required_real("lower");
      spec.upper = in.required_real("upper");
      in.reject_unknown();
      c.inputs.push_back(std::move(spec));
    }
  }
  c.n = static_cast<std::size_t>(f.integer("n", static_cast<std::int64_t>(c.n), 2));
  if (const json* seed = f.find("seed")) {
    if (!seed->is_number_unsigned()) {
      throw ConfigError(fmt::format("seed: expected a non-negative integer, got {}", seed->dump()));
    }
    c.seed = seed->get<std::uint64_t>();
  }
  c.steps = static_cast<std::size_t>(f.integer("steps", static_cast<std::int64_t>(c.steps), 8));
  c.algorithm = with_path("algorithm", [&] {
    return parse_algorithm(f.str("algorithm", to_string(c.algorithm)));
  });
  c.criterion = with_path("criterion", [&] {
    return parse_criterion(f.str("criterion", to_string(c.criterion)));
  });
  if (const json* cl = f.find("clustering")) {
    if (!cl->is_string()) throw ConfigError("clustering: expected a string");
    const auto s = cl->get<std::string>();
    if (s == "kmeans") {
      c.clustering = PreClustering::KMeans;
    } else if (s == "ward") {
      c.clustering = PreClustering::Ward;
    } else {
      throw ConfigError(fmt::format("clustering: unknown value '{}' (kmeans|ward)", s));
    }
  }
  c.k_y = static_cast<int>(f.integer("k_y", c.k_y, 2));
  c.k_h = static_cast<int>(f.integer("k_h", c.k_h, 2));
  c.n_x = static_cast<int>(f.integer("n_x", c.n_x, 2));
  c.gamma = f.real("gamma", c.gamma);
  if (const json* analyze = f.find("analyze")) {
    if (!analyze->is_array()) throw ConfigError("analyze: expected an array of 1-based input ids");
    for (std::size_t k = 0; k < analyze->size(); ++k) {
      const auto& v = (*analyze)[k];
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        throw ConfigError(fmt::format("analyze[{}]: expected a 1-based input id, got {}", k, v.dump()));
      }
      c.analyze.push_back(v.get<std::size_t>() - 1);
    }
  }
  c.allow_large_k = f.boolean("allow_large_k", c.allow_large_k);
  c.map_resolution = static_cast<int>(f.integer("map_resolution", c.map_resolution, 1));
  c.output_dir = f.str("output_dir", "");
  c.threads = static_cast<unsigned>(f.integer("threads", c.threads, 0));
  f.reject_unknown();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json inputs = json::array();
  for (const auto& in : c.inputs) {
    inputs.push_back({{"name", in.name}, {"lower", in.lower}, {"upper", in.upper}});
  }
  json analyze = json::array();
  for (auto i : c.analyze) analyze.push_back(i + 1);
  json j = {{"schema", kConfigSchema},
            {"model", c.model},
            {"outputs_csv", c.outputs_csv},
            {"inputs", std::move(inputs)},
            {"n", c.n},
            {"seed", c.seed},
            {"steps", c.steps},
            {"algorithm", to_string(c.algorithm)},
            {"criterion", to_string(c.criterion)},
            {"clustering", to_string(c.pre_clustering())},
            {"k_y", c.k_y},
            {"k_h", c.k_h},
            {"n_x", c.n_x},
            {"gamma", c.gamma},
            {"analyze", std::move(analyze)},
            {"allow_large_k", c.allow_large_k},
            {"map_resolution", c.map_resolution},
            {"output_dir", c.output_dir},
            {"threads", c.threads}};
  return j;
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON ({})", path.string(), e.what()));
  }
}

}  // namespace

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_json_file(path));
}

ExperimentConfig config_from_manifest(const fs::path& manifest) {
  const json j = read_json_file(manifest);
  if (!j.is_object() || j.value("schema", "") != kManifestSchema) {
    throw ConfigError(fmt::format("{}: not a run manifest ({})", manifest.string(), kManifestSchema));
  }
  if (!j.contains("config")) throw ConfigError("manifest: missing 'config'");
  return config_from_json(j.at("config"));
}

void validate(const ExperimentConfig& c) {
  if (c.model.empty() == c.outputs_csv.empty()) {
    throw ConfigError("model: set exactly one of 'model' (built-in) or 'outputs_csv' (offline)");
  }
  if (c.offline() && c.inputs.empty()) {
    throw ConfigError("inputs: offline evaluation needs explicit input specs");
  }
  if (!c.model.empty()) {
    const auto names = builtin_model_names();
    if (std::ranges::find(names, c.model) == names.end()) {
      throw ConfigError(fmt::format("model: unknown model '{}' (signabs|toy2d|tsgen)", c.model));
    }
  }
  if (!c.inputs.empty()) validate_inputs(c.inputs);
  if (c.n < 2) throw ConfigError(fmt::format("n: base size must be >= 2, got {}", c.n));
  if (!std::isfinite(c.gamma) || c.gamma < 0.0 || c.gamma > 0.5) {
    throw ConfigError(fmt::format("gamma: must lie in [0, 0.5], got {}", c.gamma));
  }
  if (c.k_y < 2) throw ConfigError(fmt::format("k_y: must be >= 2, got {}", c.k_y));
  if (c.n_x < 2) throw ConfigError(fmt::format("n_x: must be >= 2, got {}", c.n_x));
  if (c.map_resolution < 1) throw ConfigError("map_resolution: must be >= 1");

  switch (c.algorithm) {
    case Algorithm::SM:
      if (c.criterion != Criterion::SI && c.criterion != Criterion::TSI) {
        throw ConfigError(fmt::format("criterion: algorithm sm needs si or tsi, got {}",
                                      to_string(c.criterion)));
      }
      if (c.k_y > kMaxClustersSM && !c.allow_large_k) {
        throw CapacityError(fmt::format("k_y: {} exceeds the sm guard {} (set allow_large_k)",
                                        c.k_y, kMaxClustersSM));
      }
      break;
    case Algorithm::DM:
      if (c.criterion != Criterion::SIDiff && c.criterion != Criterion::TSIDiff) {
        throw ConfigError(fmt::format("criterion: algorithm dm needs si_diff or tsi_diff, got {}",
                                      to_string(c.criterion)));
      }
      if (c.k_y > kMaxClustersDM && !c.allow_large_k) {
        throw CapacityError(fmt::format("k_y: {} exceeds the dm guard {} (set allow_large_k)",
                                        c.k_y, kMaxClustersDM));
      }
      break;
    case Algorithm::SMPrime:
      if (c.criterion != Criterion::SI) {
        throw ConfigError(fmt::format("criterion: algorithm smprime needs si, got {}",
                                      to_string(c.criterion)));
      }
      if (c.k_h < 2 || c.k_h > c.k_y) {
        throw ConfigError(fmt::format("k_h: must lie in [2, k_y = {}], got {}", c.k_y, c.k_h));
      }
      if (c.k_h > kMaxClustersSM && !c.allow_large_k) {
        throw CapacityError(fmt::format("k_h: {} exceeds the guard {} (set allow_large_k)",
                                        c.k_h, kMaxClustersSM));
      }
      break;
  }
  const std::size_t d = resolve_inputs(c).size();
  for (std::size_t k = 0; k < c.analyze.size(); ++k) {
    if (c.analyze[k] >= d) {
      throw ConfigError(fmt::format("analyze[{}]: input {} outside [1, {}]", k, c.analyze[k] + 1, d));
    }
  }
}

std::vector<InputSpec> resolve_inputs(const ExperimentConfig& c) {
  if (c.offline()) return c.inputs;
  auto builtin = builtin_model(c.model, c.steps);
  if (c.inputs.empty()) return builtin.inputs;
  if (c.inputs.size() != builtin.inputs.size()) {
    throw ConfigError(fmt::format("inputs: model {} takes {} inputs, config lists {}", c.model,
                                  builtin.inputs.size(), c.inputs.size()));
  }
  return c.inputs;
}

fs::path resolve_output_dir(const ExperimentConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "irsa_out";
}

std::vector<std::uint64_t> seed_chain(std::uint64_t seed) {
  // splitmix64 step for the clustering seed
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return {seed, z ^ (z >> 31)};
}

namespace {

fs::path prepare_dir(const ExperimentConfig& config) {
  const fs::path dir = resolve_output_dir(config);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  return dir;
}

ClusterAssignment searched_assignment(const ClusterAssignment& elementary, const IrsaResult& r) {
  return r.meta ? compose(elementary, *r.meta) : elementary;
}

ReportBundle build_bundle(const ExperimentConfig& config, const std::vector<InputSpec>& inputs,
                          const OutputEnsemble& outputs, const ClusterAssignment& elementary,
                          const std::vector<IrsaResult>& results) {
  ReportBundle bundle;
  bundle.title = fmt::format("{} {} {} K_Y={}{} gamma={} n={} seed={}",
                             config.offline() ? "offline" : config.model,
                             to_string(config.algorithm), to_string(config.criterion), config.k_y,
                             config.algorithm == Algorithm::SMPrime
                                 ? fmt::format(" K_H={} n_x={}", config.k_h, config.n_x)
                                 : std::string{},
                             config.gamma, config.n, config.seed);
  for (const auto& r : results) {
    ResultPanel panel;
    panel.result = r;
    panel.input_name = inputs.at(r.input).name;
    const auto member = result_membership(r, searched_assignment(elementary, r));
    if (outputs.dim() == 2) {
      panel.map = mean_membership_map(outputs.values, member, config.map_resolution);
    } else if (outputs.dim() >= 3) {
      panel.bands = quantile_bands(outputs.values, member);
      panel.ks = ks_profile(outputs.values, member);
    }
    bundle.panels.push_back(std::move(panel));
  }
  return bundle;
}

void write_reports(const fs::path& dir, const ReportBundle& bundle) {
  render(bundle, ReportFormat::Json, dir / "results.json");
  render(bundle, ReportFormat::Csv, dir / "results.csv");
  render(bundle, ReportFormat::Svg, dir / "figure.svg");
}

std::vector<std::size_t> analyzed_inputs(const ExperimentConfig& c, std::size_t d) {
  if (!c.analyze.empty()) return c.analyze;
  std::vector<std::size_t> ids(d);
  for (std::size_t i = 0; i < d; ++i) ids[i] = i;
  return ids;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

DesignSummary design_command(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  const auto seeds = seed_chain(config.seed);
  const auto design = build_design(resolve_inputs(config), config.n, seeds[0]);
  const fs::path dir = prepare_dir(config);
  DesignSummary summary{dir / "design.csv", design.rows()};
  write_design_csv(summary.path, design);
  fmt::print(log, "N = {} rows ({} inputs, n = {}) -> {}\n", design.rows(), design.dim(),
             config.n, summary.path.string());
  return summary;
}

RunSummary run_command(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();
  const auto seeds = seed_chain(config.seed);
  const auto inputs = resolve_inputs(config);
  const auto design = build_design(inputs, config.n, seeds[0]);
  const unsigned threads = config.thread_count();

  auto t = std::chrono::steady_clock::now();
  OutputEnsemble outputs;
  if (config.offline()) {
    outputs = read_outputs_csv(config.outputs_csv, design);
  } else {
    const auto builtin = builtin_model(config.model, config.steps);
    outputs = evaluate_model(builtin.model, design, builtin.output_names, threads);
  }
  const double evaluate_ms = elapsed_ms(t);
  fmt::print(log, "design: N = {} rows, {} inputs, {} outputs\n", design.rows(), design.dim(),
             outputs.dim());

  t = std::chrono::steady_clock::now();
  ClusterAssignment elementary;
  if (config.pre_clustering() == PreClustering::Ward) {
    WardOptions wo;
    wo.seed = seeds[1];
    elementary = hierarchical_ward(outputs.values, config.k_y, wo);
  } else {
    elementary = kmeans(outputs.values, config.k_y, seeds[1]);
  }
  const double cluster_ms = elapsed_ms(t);
  fmt::print(log, "pre-clustering: {} into K_Y = {}\n", to_string(config.pre_clustering()),
             config.k_y);

  t = std::chrono::steady_clock::now();
  SearchOptions search;
  search.gamma = config.gamma;
  search.allow_large_k = config.allow_large_k;
  search.threads = threads;
  const auto wanted = analyzed_inputs(config, design.dim());
  std::vector<IrsaResult> results;
  if (config.algorithm == Algorithm::SMPrime) {
    SmPrimeOptions opt;
    opt.n_x = config.n_x;
    opt.k_h = config.k_h;
    opt.search = search;
    for (std::size_t i : wanted) results.push_back(irsa_sm_prime(design, elementary, i, opt));
  } else {
    auto all = config.algorithm == Algorithm::SM
                   ? irsa_sm_all(elementary, design.layout, config.criterion, search)
                   : irsa_dm_all(elementary, design.layout, config.criterion, search);
    for (std::size_t i : wanted) results.push_back(std::move(all[i]));
  }
  for (auto& r : results) r.seed_chain = seeds;
  const double search_ms = elapsed_ms(t);

  for (const auto& r : results) {
    fmt::print(log, "  {:<12} {} = {:.4f}  (first order {:.4f}, total {:.4f})\n",
               inputs[r.input].name, to_string(r.criterion), r.score, r.first_order, r.total);
  }

  const fs::path dir = prepare_dir(config);
  write_design_csv(dir / "design.csv", design);
  write_outputs_csv(dir / "outputs.csv", outputs);
  write_assignment_csv(dir / "assignment.csv", elementary);
  write_reports(dir, build_bundle(config, inputs, outputs, elementary, results));

  auto stored = config;
  if (stored.offline()) stored.outputs_csv = fs::absolute(stored.outputs_csv).string();
  stored.inputs = inputs;
  stored.clustering = config.pre_clustering();
  json manifest = {
      {"schema", kManifestSchema},
      {"version", kVersion},
      {"config", to_json(stored)},
      {"seeds", {{"design", seeds[0]}, {"clustering", seeds[1]}}},
      {"rows", design.rows()},
      {"files", {"design.csv", "outputs.csv", "assignment.csv", "results.json", "results.csv",
                 "figure.svg"}},
      {"timings_ms",
       {{"evaluate", evaluate_ms}, {"cluster", cluster_ms}, {"search", search_ms},
        {"total", elapsed_ms(t0)}}},
  };
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  fmt::print(log, "wrote {}\n", dir.string());
  return {dir, std::move(results), [&] {
            std::vector<std::string> names;
            for (const auto& in : inputs) names.push_back(in.name);
            return names;
          }()};
}

void report_command(const fs::path& run_dir, std::ostream& log) {
  const auto config = config_from_manifest(run_dir / "manifest.json");
  const auto inputs = resolve_inputs(config);
  const auto design = build_design(inputs, config.n, seed_chain(config.seed)[0]);
  const auto outputs = read_outputs_csv(run_dir / "outputs.csv", design);
  const auto elementary = read_assignment_csv(run_dir / "assignment.csv");
  const json doc = read_json_file(run_dir / "results.json");
  std::vector<IrsaResult> results;
  for (const auto& r : doc.at("results")) results.push_back(result_from_json(r));
  write_reports(run_dir, build_bundle(config, inputs, outputs, elementary, results));
  fmt::print(log, "re-rendered {} results in {}\n", results.size(), run_dir.string());
}

double OracleRow::deviation() const {
  return std::isfinite(estimate) ? std::abs(estimate - exact)
                                 : std::numeric_limits<double>::infinity();
}

std::vector<CutSpec> oracle_grid() {
  std::vector<CutSpec> grid;
  for (int k = -4; k <= 4; ++k) grid.push_back(CutSpec::one(0.2 * k));
  const double cuts[] = {-0.8, -0.4, 0.0, 0.4, 0.8};
  for (std::size_t a = 0; a < std::size(cuts); ++a) {
    for (std::size_t b = a + 1; b < std::size(cuts); ++b) grid.push_back(CutSpec::two(cuts[a], cuts[b]));
  }
  return grid;
}

VerifyReport verify_command(const VerifyOptions& options, std::ostream& log) {
  VerifyReport report;
  const auto grid = oracle_grid();
  const auto model = builtin_model("signabs");
  fmt::print(log, "{:>6} {:>14} {:>5} {:>10} {:>10} {:>10}\n", "seed", "cut", "input",
             "estimate", "exact", "|dev|");
  for (std::uint64_t seed : options.seeds) {
    const auto design = build_design(model.inputs, options.n, seed);
    const auto outputs = evaluate_model(model.model, design, model.output_names);
    for (const auto& cut : grid) {
      MembershipVector member;
      member.values.resize(outputs.rows());
      for (std::size_t r = 0; r < outputs.rows(); ++r) {
        member.values[r] = cut.contains(outputs.values(r, 0)) ? 1 : 0;
      }
      for (std::size_t input = 0; input < 2; ++input) {
        OracleRow row;
        row.seed = seed;
        row.cut = cut;
        row.input = input;
        row.exact = analytic_si(cut, input);
        const auto estimate =
            try_first_order_index(pick_freeze_sums(member, design.layout, input));
        row.estimate = estimate ? *estimate * options.estimator_scale
                                : std::numeric_limits<double>::quiet_NaN();
        report.max_deviation = std::max(report.max_deviation, row.deviation());
        const std::string label = cut.kind == CutSpec::Kind::OneCut
                                      ? fmt::format("{:.1f}", cut.y1)
                                      : fmt::format("[{:.1f},{:.1f}]", cut.y1, cut.y2);
        fmt::print(log, "{:>6} {:>14} {:>5} {:>10.4f} {:>10.4f} {:>10.4f}{}\n", seed, label,
                   fmt::format("X{}", input + 1), row.estimate, row.exact, row.deviation(),
                   row.deviation() < options.tolerance ? "" : "  FAIL");
        report.rows.push_back(row);
      }
    }
  }
  report.oracle_passed = report.max_deviation < options.tolerance;
  fmt::print(log, "oracle: max |estimate - closed form| = {:.4f} (tolerance {}) {}\n",
             report.max_deviation, options.tolerance, report.oracle_passed ? "PASS" : "FAIL");

  report.aggregation = aggregation_property_check(options.trials, options.aggregation_seed);
  const auto& p = report.aggregation;
  fmt::print(log,
             "aggregation property: {} trials, {} separation failures, {} step failures "
             "({} of {} step premises held), min margin {:.3g} {}\n",
             p.trials, p.separation_failures, p.step_failures, p.step_premise_held,
             p.step_checks, p.min_margin, p.passed() ? "PASS" : "FAIL");
  for (const auto& ce : p.counterexamples) fmt::print(log, "  counterexample: {}\n", ce.dump());
  return report;
}

}  // namespace irsa
