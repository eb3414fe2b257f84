#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsa/assignment.hpp"
#include "irsa/clustering.hpp"
#include "irsa/indices.hpp"
#include "irsa/partition.hpp"
#include "irsa/sampling.hpp"

namespace irsa {

enum class Criterion { SI, TSI, SIDiff, TSIDiff };
enum class Algorithm { SM, DM, SMPrime };

const char* to_string(Criterion c);
const char* to_string(Algorithm a);
Criterion parse_criterion(const std::string& s);  // "si", "tsi", "si_diff", "tsi_diff"
Algorithm parse_algorithm(const std::string& s);  // "sm", "dm", "smprime"

/// Enumeration guards. The search cost grows as 2^K (SM) and 3^K (DM).
inline constexpr int kMaxClustersSM = 22;
inline constexpr int kMaxClustersDM = 14;

struct SearchOptions {
  double gamma = 0.0;           // minimum part size as a fraction of N, in [0, 0.5]
  bool keep_all_scores = false;
  bool allow_large_k = false;   // lift the kMaxClusters* guards
  unsigned threads = 1;
  FirstOrderEstimator estimator = FirstOrderEstimator::Janon;
};

/// Best partition found for one input.
///
/// `parts` lists cluster ids of the searched assignment:
///   SM / SM': {P, complement of P}
///   DM      : {C, C', rest}; C' is empty when the reduced single-membership
///             candidate won (`reduced`).
/// `score` is the optimized criterion; `first_order` and `total` are both
/// indices of the same membership, reported for diagnostics.
struct IrsaResult {
  std::size_t input = 0;
  Algorithm algorithm = Algorithm::SM;
  Criterion criterion = Criterion::SI;
  double score = 0.0;
  double first_order = 0.0;
  double total = 0.0;
  std::vector<std::vector<int>> parts;
  bool reduced = false;
  double gamma = 0.0;
  double gamma_observed = 0.0;
  int cluster_count = 0;
  std::uint64_t candidates = 0;          // candidates enumerated
  std::uint64_t skipped_gamma = 0;
  std::uint64_t skipped_degenerate = 0;
  std::uint64_t ties = 0;                // candidates equal to the winning score
  std::uint64_t best_index = 0;          // canonical index of the winner
  std::vector<double> all_scores;        // canonical order; NaN where skipped
  std::optional<MetaAssignment> meta;    // SM' only: elementary -> meta clusters
  std::vector<std::uint64_t> seed_chain; // filled by the caller (design, clustering...)
};

/// Membership of the winning region over the searched assignment
/// (single for SM / SM', difference for DM).
MembershipVector result_membership(const IrsaResult& result,
                                   const ClusterAssignment& searched);

/// Single-membership search (criterion SI or TSI) over every canonical
/// 2-partition of the assignment's clusters. Partitions with a part smaller
/// than gamma * N, or with degenerate membership variance, are skipped.
/// Ties keep the first candidate in canonical order.
/// Throws NoFeasiblePartition when nothing survives.
IrsaResult irsa_sm(const ClusterAssignment& assignment, const DesignLayout& layout,
                   std::size_t input, Criterion criterion,
                   const SearchOptions& options = {});

/// One enumeration pass scoring every input at once.
std::vector<IrsaResult> irsa_sm_all(const ClusterAssignment& assignment,
                                    const DesignLayout& layout, Criterion criterion,
                                    const SearchOptions& options = {});

/// Difference-of-membership search (criterion SIDiff or TSIDiff).
///
/// Candidates, in canonical order: every 3-partition with the pairs
/// (1,2), (1,3), (2,3), then every 2-partition as the reduced candidate
/// (C, empty). The reduced candidates make DM >= SM hold exactly.
IrsaResult irsa_dm(const ClusterAssignment& assignment, const DesignLayout& layout,
                   std::size_t input, Criterion criterion,
                   const SearchOptions& options = {});

std::vector<IrsaResult> irsa_dm_all(const ClusterAssignment& assignment,
                                    const DesignLayout& layout, Criterion criterion,
                                    const SearchOptions& options = {});

struct SmPrimeOptions {
  int n_x = 20;
  int k_h = 10;
  Linkage linkage = Linkage::Average;
  HistogramSource source = HistogramSource::AllRows;
  SearchOptions search;
};

/// Histogram-merging search for the first-order single-membership index.
///
/// Builds the X_i histogram of every elementary cluster, groups clusters
/// into k_h meta-clusters by histogram correlation, then runs the exhaustive
/// 2-partition search over meta-clusters. `elementary` can be shared across
/// inputs; everything after it is per input. The final search evaluates the
/// pick-and-freeze estimator, not the histogram approximation used to
/// justify the merging.
IrsaResult irsa_sm_prime(const SobolDesign& design, const ClusterAssignment& elementary,
                         std::size_t input, const SmPrimeOptions& options = {});

/// Randomized check of the histogram aggregation property.
struct AggregationReport {
  int trials = 0;
  int separation_checks = 0;        // brute-force optimum never splits the correlated pair
  int separation_failures = 0;
  int step_checks = 0;              // SI~(C0) <= SI~(C1)  =>  SI~(C1) < SI~(C2)
  int step_premise_held = 0;
  int step_failures = 0;
  double min_margin = 0.0;          // smallest (best joint - best split) seen
  std::vector<nlohmann::json> counterexamples;

  bool passed() const { return separation_failures == 0 && step_failures == 0; }
};

AggregationReport aggregation_property_check(int trials, std::uint64_t seed);

nlohmann::json to_json(const IrsaResult& result);
IrsaResult result_from_json(const nlohmann::json& j);

}  // namespace irsa
