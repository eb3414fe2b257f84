// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "irsa/app.hpp"
#include "irsa/error.hpp"
#include "irsa/partition.hpp"
#include "oracles.hpp"

using namespace irsa;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kWork = fs::temp_directory_path() / "irsa_acceptance";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunSummary run(ExperimentConfig c, const std::string& tag) {
  c.output_dir = (kWork / tag).string();
  fs::remove_all(c.output_dir);
  std::ostringstream quiet;
  return run_command(c, quiet);
}

ExperimentConfig toy(Algorithm a, Criterion crit, std::uint64_t seed) {
  ExperimentConfig c;
  c.model = "toy2d";
  c.n = 1000;
  c.seed = seed;
  c.algorithm = a;
  c.criterion = crit;
  c.k_y = 10;
  return c;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::ostringstream log;
  const auto report = verify_command(VerifyOptions{}, log);
  const double secs = seconds_since(t0);
  return {report.oracle_passed && secs < 10.0,
          fmt::format("max |estimate - closed form| = {:.4f} over {} checks (tolerance 0.05), {:.1f} s",
                      report.max_deviation, report.rows.size(), secs)};
}

Outcome criterion2() {
  ExperimentConfig c;
  c.model = "signabs";
  c.n = 1000;
  c.seed = 1;
  c.k_y = 10;
  c.clustering = PreClustering::Ward;
  const auto r = run(c, "c2");
  const auto elementary = read_assignment_csv(kWork / "c2" / "assignment.csv");
  const auto outputs = read_matrix_csv(kWork / "c2" / "outputs.csv").values;
  const auto& x1 = r.results.at(0);
  const auto member = result_membership(x1, elementary);
  std::size_t agree = 0;
  for (std::size_t row = 0; row < member.size(); ++row) {
    agree += (member.values[row] == 1) == (outputs(row, 0) < 0) ? 1 : 0;
  }
  const double n = static_cast<double>(member.size());
  const double purity = std::max(static_cast<double>(agree), n - static_cast<double>(agree)) / n;
  // Elementary clusters holding outputs of both signs.
  std::string straddle;
  for (int c = 0; c < elementary.k; ++c) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t row = 0; row < elementary.size(); ++row) {
      if (elementary.labels[row] != c) continue;
      lo = std::min(lo, outputs(row, 0));
      hi = std::max(hi, outputs(row, 0));
    }
    if (lo < 0 && hi >= 0) straddle += fmt::format(" [{:.3f}, {:.3f}]", lo, hi);
  }
  return {x1.score >= 0.95 && purity >= 0.98,
          fmt::format("X1 score {:.4f} (>= 0.95), sign purity {:.2f}% (>= 98%); clusters spanning Y = 0:{}",
                      x1.score, 100 * purity, straddle.empty() ? " none" : straddle)};
}

Outcome criterion3() {
  double sm[4] = {}, smp[4] = {}, dm_first = 0, dm_total = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = run(toy(Algorithm::SM, Criterion::SI, seed), "c3_sm");
    const auto b = run(toy(Algorithm::DM, Criterion::SIDiff, seed), "c3_dm");
    const auto d = run(toy(Algorithm::DM, Criterion::TSIDiff, seed), "c3_dmt");
    auto p = toy(Algorithm::SMPrime, Criterion::SI, seed);
    p.k_y = 1000;
    p.k_h = 10;
    p.gamma = 0.1;
    const auto e = run(p, "c3_smp");
    for (std::size_t i = 0; i < 4; ++i) {
      sm[i] += a.results[i].score / 5;
      smp[i] += e.results[i].score / 5;
    }
    dm_first += b.results[1].score / 5;
    dm_total += d.results[1].score / 5;
  }
  const bool ok = std::abs(sm[0] - 0.86) <= 0.08 && std::abs(sm[3] - 0.80) <= 0.08 && sm[2] <= 0.25 &&
                  dm_first >= 0.33 && dm_total >= 0.90 && smp[2] >= 0.45 && smp[3] >= sm[3];
  return {ok, fmt::format("5-seed means: SM X1 {:.3f} X2 {:.3f} X3 {:.3f} X4 {:.3f}; DM X2 first {:.3f} "
                          "total {:.3f}; SM' X1 {:.3f} X2 {:.3f} X3 {:.3f} X4 {:.3f}",
                          sm[0], sm[1], sm[2], sm[3], dm_first, dm_total, smp[0], smp[1], smp[2],
                          smp[3])};
}

Outcome criterion4() {
  const auto model = builtin_model("toy2d");
  const auto design = build_design(model.inputs, 1000, seed_chain(1)[0]);
  const auto out = evaluate_model(model.model, design, model.output_names);
  const auto a = kmeans(out.values, 10, seed_chain(1)[1]);
  const auto sm = irsa_sm_all(a, design.layout, Criterion::SI);
  const auto dm = irsa_dm_all(a, design.layout, Criterion::SIDiff);
  const auto smt = irsa_sm_all(a, design.layout, Criterion::TSI);
  const auto dmt = irsa_dm_all(a, design.layout, Criterion::TSIDiff);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 4; ++i) {
    ok = ok && dm[i].score >= sm[i].score && dmt[i].score >= smt[i].score;
    detail += fmt::format("X{} SI {:.3f}<={:.3f} TSI {:.3f}<={:.3f}; ", i + 1, sm[i].score, dm[i].score,
                          smt[i].score, dmt[i].score);
  }
  return {ok, detail};
}

Outcome criterion5() {
  std::mt19937_64 rng(5);
  int mismatches = 0, comparisons = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int k = 2 + static_cast<int>(rng() % 7);
    const std::size_t n = 10 + rng() % 40, d = 1 + rng() % 3;
    const DesignLayout layout{n, d};
    std::vector<int> labels(layout.total_rows());
    for (std::size_t r = 0; r < labels.size(); ++r) {
      labels[r] = r < static_cast<std::size_t>(k) ? static_cast<int>(r) : static_cast<int>(rng() % k);
    }
    std::ranges::shuffle(labels, rng);
    const auto assignment = make_assignment(labels, k);
    SearchOptions opt;
    opt.gamma = inst % 2 ? 0.1 : 0.0;
    const oracle::Blocks bl{n, d};
    for (std::size_t i = 0; i < d; ++i) {
      const std::pair<Criterion, oracle::Crit> sm_c[] = {{Criterion::SI, oracle::Crit::First},
                                                          {Criterion::TSI, oracle::Crit::Total}};
      for (const auto& [crit, oc] : sm_c) {
        const auto o = oracle::brute_force_sm(labels, k, bl, i, oc, opt.gamma);
        ++comparisons;
        try {
          mismatches += !o.found || irsa_sm(assignment, layout, i, crit, opt).score != o.score;
        } catch (const NoFeasiblePartition&) {
          mismatches += o.found;
        }
      }
      const std::pair<Criterion, oracle::Crit> dm_c[] = {{Criterion::SIDiff, oracle::Crit::First},
                                                          {Criterion::TSIDiff, oracle::Crit::Total}};
      for (const auto& [crit, oc] : dm_c) {
        const auto o = oracle::brute_force_dm(labels, k, bl, i, oc, opt.gamma);
        ++comparisons;
        try {
          mismatches += !o.found || irsa_dm(assignment, layout, i, crit, opt).score != o.score;
        } catch (const NoFeasiblePartition&) {
          mismatches += o.found;
        }
      }
    }
  }
  return {mismatches == 0,
          fmt::format("{} exact comparisons over 50 instances (K <= 8), {} mismatches", comparisons, mismatches)};
}

Outcome criterion6() {
  const auto r = aggregation_property_check(200, 7);
  return {r.passed() && r.trials == 200,
          fmt::format("{} trials, {} separation checks, {} step checks ({} with premise), {} counterexamples",
                      r.trials, r.separation_checks, r.step_checks, r.step_premise_held,
                      r.counterexamples.size())};
}

Outcome criterion7() {
  bool ok = true;
  for (int k = 2; k <= 12; ++k) {
    std::uint64_t two = 0, three = 0;
    for ([[maybe_unused]] const auto& p : TwoPartitions(k)) ++two;
    if (k >= 3) {
      for ([[maybe_unused]] const auto& p : ThreePartitions(k)) ++three;
    }
    const std::uint64_t two_formula = (std::uint64_t{1} << (k - 1)) - 1;
    std::uint64_t pow3 = 1;
    for (int j = 0; j < k; ++j) pow3 *= 3;
    const std::uint64_t three_formula = (pow3 - 3 * (std::uint64_t{1} << k) + 3) / 6;
    ok = ok && two == two_formula && two == oracle::brute_force_partition_count(k, 2);
    if (k >= 3) ok = ok && three == three_formula && three == oracle::brute_force_partition_count(k, 3);
  }
  return {ok, "K = 2..12 iterator counts vs closed forms vs brute-force set partitions"};
}

Outcome criterion8() {
  ExperimentConfig c;
  c.model = "tsgen";
  c.n = 2500;
  c.seed = 1;
  c.algorithm = Algorithm::SMPrime;
  c.criterion = Criterion::SI;
  c.k_y = 500;
  c.k_h = 10;
  c.gamma = 0.1;
  const auto t0 = Clock::now();
  const auto r = run(c, "c8");
  const double secs = seconds_since(t0);
  const auto doc = json::parse(slurp(kWork / "c8" / "results.json"));
  double nuisance = 0;
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    if (i != kRiseInput && i != kLevelInput) nuisance = std::max(nuisance, r.results[i].score);
  }
  const double rise = r.results.at(kRiseInput).score, level = r.results.at(kLevelInput).score;

  auto ks_of = [&](std::size_t input) {
    return doc.at("results").at(input).at("ks_profile").get<std::vector<double>>();
  };
  const auto ks_rise = ks_of(kRiseInput), ks_level = ks_of(kLevelInput);
  const std::size_t steps = ks_rise.size(), late = steps - steps / 4;
  const auto peak = std::ranges::max_element(ks_rise) - ks_rise.begin();
  double rise_late = 0, level_late_min = 1;
  for (std::size_t t = late; t < steps; ++t) {
    rise_late += ks_rise[t] / static_cast<double>(steps - late);
    level_late_min = std::min(level_late_min, ks_level[t]);
  }
  const bool early_peak = static_cast<double>(peak) < 0.3 * static_cast<double>(steps) &&
                          rise_late <= 0.5 * ks_rise[static_cast<std::size_t>(peak)];
  const bool level_high = level_late_min >= 0.5;
  const bool ok = rise >= 0.8 && level >= 0.8 && nuisance <= 0.15 && early_peak && level_high && secs < 300;
  return {ok, fmt::format("X8 {:.3f}, X9 {:.3f} (>= 0.8); max nuisance {:.3f} (<= 0.15); X8 KS peak {:.2f} at "
                          "t{} of {}, late mean {:.2f}; X9 late KS min {:.2f}; {:.0f} s",
                          rise, level, nuisance, ks_rise[static_cast<std::size_t>(peak)], peak, steps,
                          rise_late, level_late_min, secs)};
}

Outcome criterion9() {
  auto c = toy(Algorithm::DM, Criterion::TSIDiff, 4);
  c.k_y = 8;
  run(c, "c9_origin");
  auto replay = config_from_manifest(kWork / "c9_origin" / "manifest.json");
  run(replay, "c9_a");
  replay = config_from_manifest(kWork / "c9_origin" / "manifest.json");
  run(replay, "c9_b");
  bool ok = true;
  for (const char* f : {"results.json", "figure.svg", "results.csv"}) {
    const auto a = slurp(kWork / "c9_a" / f), b = slurp(kWork / "c9_b" / f);
    ok = ok && !a.empty() && a == b && a == slurp(kWork / "c9_origin" / f);
  }
  return {ok, "results.json, figure.svg and results.csv of two manifest re-runs compared byte for byte"};
}

}  // namespace

int main() {
  fs::create_directories(kWork);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"analytic oracle agreement", criterion1}, {"1D optimum recovery", criterion2},
      {"2D scores", criterion3},                 {"DM >= SM monotonicity", criterion4},
      {"brute-force equivalence", criterion5},   {"histogram aggregation property", criterion6},
      {"enumeration counts", criterion7},        {"time-series surrogate", criterion8},
      {"determinism", criterion9},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failed += o.pass ? 0 : 1;
    fmt::print("{} criterion {} ({}): {}\n", o.pass ? "PASS" : "FAIL", index, name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
