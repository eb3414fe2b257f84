#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <vector>

namespace irsa {

/// Largest cluster count the bitmask representation supports.
inline constexpr int kMaxPartitionClusters = 31;

/// Number of partitions of k labelled clusters into two non-empty blocks: 2^(k-1) - 1.
std::uint64_t two_partition_count(int k);
/// Number of partitions of k labelled clusters into three non-empty blocks:
/// (3^k - 3 * 2^k + 3) / 6.
std::uint64_t three_partition_count(int k);

/// A split of clusters {0..k-1} into `mask` and its complement.
/// Canonical form keeps cluster k-1 in the complement, so each unordered
/// split appears exactly once with mask in [1, 2^(k-1) - 1].
struct Partition2 {
  std::uint32_t mask = 0;
  int k = 0;

  std::uint32_t complement() const noexcept {
    return ~mask & ((std::uint32_t{1} << k) - 1);
  }
  std::vector<int> part() const;
  std::vector<int> rest() const;

  friend bool operator==(const Partition2&, const Partition2&) = default;
};

/// Three disjoint non-empty blocks covering {0..k-1}, ordered by their
/// smallest member (block 0 always holds cluster 0).
struct Partition3 {
  std::array<std::uint32_t, 3> blocks{};
  int k = 0;

  std::vector<int> block(int b) const;

  friend bool operator==(const Partition3&, const Partition3&) = default;
};

/// Range over all canonical 2-partitions in increasing mask order.
class TwoPartitions {
 public:
  explicit TwoPartitions(int k);

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Partition2;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(std::uint32_t mask, int k) : mask_(mask), k_(k) {}
    Partition2 operator*() const { return {mask_, k_}; }
    iterator& operator++() {
      ++mask_;
      return *this;
    }
    iterator operator++(int) {
      auto tmp = *this;
      ++mask_;
      return tmp;
    }
    friend bool operator==(const iterator&, const iterator&) = default;

   private:
    std::uint32_t mask_ = 0;
    int k_ = 0;
  };

  iterator begin() const { return {1, k_}; }
  iterator end() const { return {std::uint32_t{1} << (k_ - 1), k_}; }
  std::uint64_t size() const { return two_partition_count(k_); }

 private:
  int k_;
};

/// Range over all canonical 3-partitions, in lexicographic order of their
/// restricted growth strings (cluster c goes to block rgs[c]).
class ThreePartitions {
 public:
  explicit ThreePartitions(int k);

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Partition3;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    explicit iterator(int k);  // first partition
    Partition3 operator*() const;
    iterator& operator++();
    iterator operator++(int) {
      auto tmp = *this;
      ++*this;
      return tmp;
    }
    bool operator==(const iterator& other) const { return done_ == other.done_ && (done_ || rgs_ == other.rgs_); }

   private:
    bool advance();  // next restricted growth string with values <= 2
    std::vector<std::uint8_t> rgs_;
    int k_ = 0;
    bool done_ = true;
  };

  iterator begin() const { return iterator(k_); }
  iterator end() const { return {}; }
  std::uint64_t size() const { return three_partition_count(k_); }

 private:
  int k_;
};

std::vector<Partition2> enumerate_2partitions(int k);
std::vector<Partition3> enumerate_3partitions(int k);

}  // namespace irsa
