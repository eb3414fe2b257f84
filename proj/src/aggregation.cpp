#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "irsa/optimizer.hpp"

namespace irsa {

namespace {

struct Instance {
  int k = 0;     // clusters; cluster k-1 is theta * cluster 0
  int n_x = 0;
  double theta = 1.0;
  double total_points = 0.0;
  std::vector<std::vector<double>> h;
};

Instance draw_instance(std::mt19937_64& rng) {
  Instance in;
  in.k = std::uniform_int_distribution<int>(3, 8)(rng);
  in.n_x = std::uniform_int_distribution<int>(2, 20)(rng);
  in.theta = std::uniform_int_distribution<int>(1, 100)(rng) / 10.0;
  std::uniform_int_distribution<int> count(0, 30);
  const auto nx = static_cast<std::size_t>(in.n_x);
  for (int c = 0; c + 1 < in.k; ++c) {
    std::vector<double> bins(nx);
    do {
      for (auto& b : bins) b = count(rng);
      // cluster 0 must carry information about X_i (non-uniform bins)
    } while (std::ranges::all_of(bins, [&](double b) { return b == bins[0]; }) ||
             (c > 0 && std::ranges::all_of(bins, [](double b) { return b == 0.0; })));
    in.h.push_back(std::move(bins));
  }
  std::vector<double> scaled(in.h[0]);
  for (auto& b : scaled) b *= in.theta;
  in.h.push_back(std::move(scaled));

  double mass = 0.0;
  for (const auto& bins : in.h) {
    for (double b : bins) mass += b;
  }
  in.total_points =
      std::ceil(mass) + std::uniform_int_distribution<int>(1, 200)(rng);
  return in;
}

// Discretized index of the union of the clusters in `mask`; 0 for the empty set.
double union_si(const Instance& in, std::uint32_t mask) {
  if (mask == 0) return 0.0;
  std::vector<double> bins(static_cast<std::size_t>(in.n_x), 0.0);
  for (int c = 0; c < in.k; ++c) {
    if (!(mask >> c & 1u)) continue;
    const auto& h = in.h[static_cast<std::size_t>(c)];
    for (std::size_t b = 0; b < bins.size(); ++b) bins[b] += h[b];
  }
  return discretized_si(bins, in.total_points);
}

nlohmann::json describe(const Instance& in, const char* claim, std::uint32_t mask) {
  return {{"claim", claim},
          {"k", in.k},
          {"n_x", in.n_x},
          {"theta", in.theta},
          {"total_points", in.total_points},
          {"histograms", in.h},
          {"subset_mask", mask}};
}

}  // namespace

AggregationReport aggregation_property_check(int trials, std::uint64_t seed) {
  AggregationReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);

  for (int t = 0; t < trials; ++t) {
    const Instance in = draw_instance(rng);
    ++report.trials;
    const std::uint32_t first = 1u;
    const std::uint32_t second = 1u << (in.k - 1);
    const std::uint32_t pair = first | second;
    const std::uint32_t subsets = 1u << in.k;

    std::vector<double> si(subsets, 0.0);
    for (std::uint32_t mask = 1; mask < subsets; ++mask) si[mask] = union_si(in, mask);

    double best_joint = -std::numeric_limits<double>::infinity();
    double best_split = -std::numeric_limits<double>::infinity();
    std::uint32_t split_arg = 0;
    for (std::uint32_t mask = 1; mask < subsets; ++mask) {
      const std::uint32_t hit = mask & pair;
      if (hit == 0 || hit == pair) {
        best_joint = std::max(best_joint, si[mask]);
      } else if (si[mask] > best_split) {
        best_split = si[mask];
        split_arg = mask;
      }
    }
    ++report.separation_checks;
    report.min_margin = std::min(report.min_margin, best_joint - best_split);
    if (!(best_split < best_joint)) {
      ++report.separation_failures;
      report.counterexamples.push_back(describe(in, "separated", split_arg));
    }

    // C0 avoids the pair; C1 adds one member, C2 adds both.
    for (std::uint32_t c0 = 0; c0 < subsets; ++c0) {
      if (c0 & pair) continue;
      for (std::uint32_t added : {first, second}) {
        const double s0 = si[c0];
        const double s1 = si[c0 | added];
        const double s2 = si[c0 | pair];
        ++report.step_checks;
        if (s0 > s1) continue;
        ++report.step_premise_held;
        if (!(s1 < s2)) {
          ++report.step_failures;
          report.counterexamples.push_back(describe(in, "step", c0 | added));
        }
      }
    }
  }
  if (report.trials == 0) report.min_margin = 0.0;
  return report;
}

}  // namespace irsa
