#include "irsa/partition.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "irsa/error.hpp"

namespace irsa {

namespace {

std::vector<int> bits_of(std::uint32_t mask, int k) {
  std::vector<int> ids;
  for (int c = 0; c < k; ++c) {
    if (mask >> c & 1u) ids.push_back(c);
  }
  return ids;
}

void check_k(int k, int minimum, const char* what) {
  if (k < minimum) {
    throw DomainError(fmt::format("{}: need K >= {}, got {}", what, minimum, k));
  }
  if (k > kMaxPartitionClusters) {
    throw CapacityError(fmt::format("{}: K = {} exceeds the bitmask limit {}", what, k,
                                    kMaxPartitionClusters));
  }
}

}  // namespace

std::uint64_t two_partition_count(int k) {
  check_k(k, 2, "two_partition_count");
  return (std::uint64_t{1} << (k - 1)) - 1;
}

std::uint64_t three_partition_count(int k) {
  check_k(k, 3, "three_partition_count");
  std::uint64_t p3 = 1;
  for (int i = 0; i < k; ++i) p3 *= 3;
  return (p3 - 3 * (std::uint64_t{1} << k) + 3) / 6;
}

std::vector<int> Partition2::part() const { return bits_of(mask, k); }
std::vector<int> Partition2::rest() const { return bits_of(complement(), k); }

std::vector<int> Partition3::block(int b) const {
  return bits_of(blocks.at(static_cast<std::size_t>(b)), k);
}

TwoPartitions::TwoPartitions(int k) : k_(k) { check_k(k, 2, "enumerate_2partitions"); }

ThreePartitions::ThreePartitions(int k) : k_(k) {
  check_k(k, 3, "enumerate_3partitions");
}

ThreePartitions::iterator::iterator(int k)
    : rgs_(static_cast<std::size_t>(k), 0), k_(k), done_(false) {
  // Smallest string using all three blocks: 0...012.
  rgs_[static_cast<std::size_t>(k - 2)] = 1;
  rgs_[static_cast<std::size_t>(k - 1)] = 2;
}

Partition3 ThreePartitions::iterator::operator*() const {
  Partition3 p;
  p.k = k_;
  for (int c = 0; c < k_; ++c) {
    p.blocks[rgs_[static_cast<std::size_t>(c)]] |= std::uint32_t{1} << c;
  }
  return p;
}

bool ThreePartitions::iterator::advance() {
  // Prefix maxima bound each position: rgs[c] <= max(rgs[0..c-1]) + 1, and <= 2.
  const auto n = static_cast<std::size_t>(k_);
  std::vector<std::uint8_t> prefix_max(n, 0);
  for (std::size_t c = 1; c < n; ++c) {
    prefix_max[c] = std::max(prefix_max[c - 1], rgs_[c - 1]);
  }
  for (std::size_t c = n; c-- > 1;) {
    const auto limit = std::min<int>(2, prefix_max[c] + 1);
    if (rgs_[c] < limit) {
      ++rgs_[c];
      std::fill(rgs_.begin() + static_cast<std::ptrdiff_t>(c) + 1, rgs_.end(), 0);
      return true;
    }
  }
  return false;
}

ThreePartitions::iterator& ThreePartitions::iterator::operator++() {
  while (true) {
    if (!advance()) {
      done_ = true;
      rgs_.clear();
      return *this;
    }
    if (std::ranges::find(rgs_, std::uint8_t{2}) != rgs_.end()) return *this;
  }
}

std::vector<Partition2> enumerate_2partitions(int k) {
  TwoPartitions range(k);
  return {range.begin(), range.end()};
}

std::vector<Partition3> enumerate_3partitions(int k) {
  ThreePartitions range(k);
  std::vector<Partition3> out;
  out.reserve(range.size());
  for (auto p : range) out.push_back(p);
  return out;
}

}  // namespace irsa
