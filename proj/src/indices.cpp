#include "irsa/indices.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "irsa/error.hpp"

namespace irsa {

namespace {

std::vector<std::int8_t> part_mask(const ClusterAssignment& assignment,
                                   std::span<const int> part, const char* what) {
  if (part.empty()) throw DomainError(fmt::format("{}: part must not be empty", what));
  std::vector<std::int8_t> in_part(static_cast<std::size_t>(assignment.k), 0);
  for (int id : part) {
    if (id < 0 || id >= assignment.k) {
      throw DomainError(fmt::format("{}: cluster id {} outside [0, {})", what, id,
                                    assignment.k));
    }
    in_part[static_cast<std::size_t>(id)] = 1;
  }
  return in_part;
}

}  // namespace

MembershipVector membership(const ClusterAssignment& assignment,
                            std::span<const int> part) {
  const auto in_part = part_mask(assignment, part, "membership");
  MembershipVector m;
  m.kind = MembershipKind::Single;
  m.values.resize(assignment.size());
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    m.values[r] = in_part[static_cast<std::size_t>(assignment.labels[r])];
  }
  return m;
}

MembershipVector membership_difference(const ClusterAssignment& assignment,
                                       std::span<const int> part_c,
                                       std::span<const int> part_cprime) {
  const auto in_c = part_mask(assignment, part_c, "membership_difference");
  const auto in_cp = part_mask(assignment, part_cprime, "membership_difference");
  for (std::size_t k = 0; k < in_c.size(); ++k) {
    if (in_c[k] && in_cp[k]) {
      throw DomainError(fmt::format(
          "membership_difference: cluster {} appears in both parts", k));
    }
  }
  MembershipVector m;
  m.kind = MembershipKind::Difference;
  m.values.resize(assignment.size());
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    const auto k = static_cast<std::size_t>(assignment.labels[r]);
    m.values[r] = static_cast<std::int8_t>(in_c[k] - in_cp[k]);
  }
  return m;
}

PickFreezeSums pick_freeze_sums(const MembershipVector& member,
                                const DesignLayout& layout, std::size_t input) {
  if (member.size() != layout.total_rows()) {
    throw DomainError(fmt::format(
        "membership has {} rows, design layout expects {}", member.size(),
        layout.total_rows()));
  }
  if (input >= layout.d) {
    throw DomainError(fmt::format("input index {} outside [0, {})", input, layout.d));
  }
  PickFreezeSums s;
  s.n = static_cast<std::int64_t>(layout.n);
  for (std::size_t j = 0; j < layout.n; ++j) {
    const std::int64_t a = member.values[layout.a_row(j)];
    const std::int64_t b = member.values[layout.b_row(j)];
    const std::int64_t ab = member.values[layout.ab_row(input, j)];
    const std::int64_t ba = member.values[layout.ba_row(input, j)];
    s.a_sum += a;
    s.a_sq += a * a;
    s.b_sum += b;
    s.b_sq += b * b;
    s.ab_sum += ab;
    s.ab_sq += ab * ab;
    s.ba_sum += ba;
    s.ba_sq += ba * ba;
    s.b_ab += b * ab;
    s.a_ba += a * ba;
    s.a_ab += a * ab;
    s.b_ba += b * ba;
  }
  return s;
}

namespace {

// Each estimator is a ratio of integer polynomials in the sums, scaled so
// that numerator and denominator are exact. Replacing v by 1 - v (0/1
// memberships) or by -v leaves both polynomials unchanged, so complementary
// and negated memberships give bit-identical indices.

// (2n)^2 times the variance pooled over A and B.
std::int64_t scaled_pooled_variance(const PickFreezeSums& s) {
  const std::int64_t two_n = 2 * s.n;
  const std::int64_t sum = s.a_sum + s.b_sum;
  return two_n * (s.a_sq + s.b_sq) - sum * sum;
}

bool degenerate(const PickFreezeSums& s) {
  return !(pooled_variance(s) >= kDegenerateVarianceThreshold);
}

}  // namespace

double pooled_variance(const PickFreezeSums& s) {
  const double two_n = 2.0 * static_cast<double>(s.n);
  return static_cast<double>(scaled_pooled_variance(s)) / (two_n * two_n);
}

std::optional<double> try_first_order_index(const PickFreezeSums& s,
                                            FirstOrderEstimator est) {
  if (degenerate(s)) return std::nullopt;
  const std::int64_t four_n = 4 * s.n;
  const std::int64_t squares = s.b_sq + s.ab_sq + s.a_sq + s.ba_sq;
  const std::int64_t cross = s.b_ab + s.a_ba;
  if (est == FirstOrderEstimator::Jansen) {
    // (V - P(u - w)^2 / 4n) / V, times (2n)^2 / (2n)^2
    const std::int64_t v = scaled_pooled_variance(s);
    const std::int64_t half_sq = s.n * (squares - 2 * cross);
    return static_cast<double>(v - half_sq) / static_cast<double>(v);
  }
  // (P(uw)/2n - m^2) / (P(u^2 + w^2)/4n - m^2), times (4n)^2 / (4n)^2
  const std::int64_t sum = s.b_sum + s.ab_sum + s.a_sum + s.ba_sum;
  const std::int64_t num = 2 * four_n * cross - sum * sum;
  const std::int64_t den = four_n * squares - sum * sum;
  if (!(static_cast<double>(den) / static_cast<double>(four_n * four_n) >=
        kDegenerateVarianceThreshold)) {
    return std::nullopt;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> try_total_order_index(const PickFreezeSums& s) {
  if (degenerate(s)) return std::nullopt;
  // P(u - w)^2 / 4n / V, times (2n)^2 / (2n)^2
  const std::int64_t sq = s.a_sq + s.ab_sq - 2 * s.a_ab + s.b_sq + s.ba_sq - 2 * s.b_ba;
  return static_cast<double>(s.n * sq) / static_cast<double>(scaled_pooled_variance(s));
}

double first_order_index(const PickFreezeSums& s, FirstOrderEstimator est) {
  if (auto v = try_first_order_index(s, est)) return *v;
  throw DegenerateVariance(fmt::format(
      "membership variance is degenerate (pooled A/B variance {:.3g})",
      pooled_variance(s)));
}

double total_order_index(const PickFreezeSums& s) {
  if (auto v = try_total_order_index(s)) return *v;
  throw DegenerateVariance(fmt::format(
      "membership variance is degenerate (pooled A/B variance {:.3g})",
      pooled_variance(s)));
}

double first_order_index(const MembershipVector& member,
                         const DesignLayout& layout, std::size_t input,
                         FirstOrderEstimator est) {
  return first_order_index(pick_freeze_sums(member, layout, input), est);
}

double total_order_index(const MembershipVector& member,
                         const DesignLayout& layout, std::size_t input) {
  return total_order_index(pick_freeze_sums(member, layout, input));
}

RegionIndices region_indices(const MembershipVector& member,
                             const DesignLayout& layout, std::size_t input,
                             FirstOrderEstimator est) {
  const auto sums = pick_freeze_sums(member, layout, input);
  return {first_order_index(sums, est), total_order_index(sums), input};
}

double Histogram::total() const {
  return std::accumulate(bins.begin(), bins.end(), 0.0);
}

double discretized_si(std::span<const double> bins, double total_points) {
  const auto n_x = bins.size();
  if (n_x < 2) throw DomainError("discretized_si: need at least 2 bins");
  if (std::ranges::any_of(bins, [](double h) { return h < 0.0; })) {
    throw DomainError("discretized_si: bins must be non-negative");
  }
  const double sum = std::accumulate(bins.begin(), bins.end(), 0.0);
  if (!(sum > 0.0) || !(sum < total_points)) {
    throw DegenerateVariance(fmt::format(
        "discretized_si: histogram mass {} must lie strictly inside (0, {})", sum,
        total_points));
  }
  const double nx = static_cast<double>(n_x);
  const double mean = sum / nx;
  double ss = 0.0;
  for (double h : bins) ss += (h - mean) * (h - mean);
  return nx / (sum * (total_points - sum)) * ss;
}

}  // namespace irsa
