#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "irsa/assignment.hpp"
#include "irsa/sampling.hpp"

namespace irsa {

/// Variances below this are treated as zero.
inline constexpr double kDegenerateVarianceThreshold = 1e-12;

enum class MembershipKind { Single, Difference };

/// Per-row membership values: {0,1} for a single region, {-1,0,1} for a
/// difference of two disjoint regions.
struct MembershipVector {
  std::vector<std::int8_t> values;
  MembershipKind kind = MembershipKind::Single;

  std::size_t size() const noexcept { return values.size(); }
};

/// Indicator of rows whose cluster belongs to `part` (0-based cluster ids).
MembershipVector membership(const ClusterAssignment& assignment,
                            std::span<const int> part);

/// membership(part_c) - membership(part_cprime); parts must be non-empty and disjoint.
MembershipVector membership_difference(const ClusterAssignment& assignment,
                                       std::span<const int> part_c,
                                       std::span<const int> part_cprime);

/// Integer sufficient statistics of a membership vector over the
/// pick-and-freeze blocks for one input i. Every estimator below is a
/// closed-form function of these sums, so two routes that agree on the
/// sums agree bit-for-bit on the indices.
struct PickFreezeSums {
  std::int64_t n = 0;
  std::int64_t a_sum = 0, a_sq = 0;    // sum v_A, sum v_A^2
  std::int64_t b_sum = 0, b_sq = 0;    // sum v_B, sum v_B^2
  std::int64_t ab_sum = 0, ab_sq = 0;  // sum v_ABi, sum v_ABi^2
  std::int64_t ba_sum = 0, ba_sq = 0;  // sum v_BAi, sum v_BAi^2
  std::int64_t b_ab = 0;               // sum v_B * v_ABi   (share X_i)
  std::int64_t a_ba = 0;               // sum v_A * v_BAi   (share X_i)
  std::int64_t a_ab = 0;               // sum v_A * v_ABi   (share X_~i)
  std::int64_t b_ba = 0;               // sum v_B * v_BAi   (share X_~i)

  friend bool operator==(const PickFreezeSums&, const PickFreezeSums&) = default;
};

PickFreezeSums pick_freeze_sums(const MembershipVector& member,
                                const DesignLayout& layout, std::size_t input);

/// First-order estimators. Both use the 2n pairs sharing X_i,
/// (B, AB_i) and (A, BA_i); write P for the sum over those pairs (u, w).
enum class FirstOrderEstimator {
  // Janon et al. (2014), mean and variance pooled over both members of
  // every pair:
  //   m  = P(u + w) / 4n
  //   SI = (P(u w) / 2n - m^2) / (P(u^2 + w^2) / 4n - m^2)
  Janon,
  // Jansen (1999): SI = (V - P(u - w)^2 / 4n) / V, V pooled over A and B.
  Jansen,
};

/// Variance of the membership pooled over the A and B blocks.
double pooled_variance(const PickFreezeSums& s);

/// Same formulas as below, returning nullopt instead of throwing on a
/// degenerate variance.
std::optional<double> try_first_order_index(
    const PickFreezeSums& s, FirstOrderEstimator est = FirstOrderEstimator::Janon);
std::optional<double> try_total_order_index(const PickFreezeSums& s);

/// First-order index. Throws DegenerateVariance when the membership is
/// (numerically) constant.
double first_order_index(const PickFreezeSums& s,
                         FirstOrderEstimator est = FirstOrderEstimator::Janon);

/// Jansen total index over the 2n pairs sharing X_~i, (A, AB_i) and (B, BA_i):
/// TSI = (sum (v_A - v_ABi)^2 + sum (v_B - v_BAi)^2) / 4n / V, V pooled over A and B.
double total_order_index(const PickFreezeSums& s);

double first_order_index(const MembershipVector& member,
                         const DesignLayout& layout, std::size_t input,
                         FirstOrderEstimator est = FirstOrderEstimator::Janon);
double total_order_index(const MembershipVector& member,
                         const DesignLayout& layout, std::size_t input);

struct RegionIndices {
  double first_order = 0.0;
  double total = 0.0;
  std::size_t input = 0;
};

RegionIndices region_indices(const MembershipVector& member,
                             const DesignLayout& layout, std::size_t input,
                             FirstOrderEstimator est = FirstOrderEstimator::Janon);

/// Conditional histogram of one input over one cluster.
struct Histogram {
  std::vector<double> bins;
  std::size_t input = 0;
  int cluster = 0;
  bool empty = false;  // no conditioning rows fell in the cluster

  double total() const;
};

/// Histogram-based discrete approximation of the first-order region index:
///
///   SI~ = n_x / (S (N - S)) * sum_i (h_i - S / n_x)^2,   S = sum_j h_j
///
/// Requires n_x >= 2 and 0 < S < total_points (else DegenerateVariance).
double discretized_si(std::span<const double> bins, double total_points);

}  // namespace irsa
