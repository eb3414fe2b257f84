#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace irsa {

enum class ClusteringMethod { KMeans, Ward, Meta, Manual };

/// Hard assignment of N rows to K clusters.
///
/// Labels are 0-based in memory (0..K-1); files and JSON use 1-based ids.
/// Assignments returned by the clustering routines are canonical: cluster
/// ids are numbered in order of first appearance along the rows.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  ClusteringMethod method = ClusteringMethod::Manual;

  std::size_t size() const noexcept { return labels.size(); }
  /// Row count per cluster.
  std::vector<std::size_t> counts() const;
};

/// Throws DomainError unless every label lies in [0, k) and no cluster is empty.
void validate(const ClusterAssignment& a);

/// Builds and validates an assignment from raw 0-based labels.
ClusterAssignment make_assignment(std::vector<int> labels, int k,
                                  ClusteringMethod method = ClusteringMethod::Manual);

/// Renumbers clusters by first appearance.
void canonicalize(ClusterAssignment& a);

/// Grouping of K_Y elementary clusters into K_H meta-clusters.
struct MetaAssignment {
  std::vector<int> meta_labels;  // one entry per elementary cluster, 0-based
  int k = 0;
};

/// Point-level labels induced by elementary labels followed by meta labels.
ClusterAssignment compose(const ClusterAssignment& elementary,
                          const MetaAssignment& meta);

/// CSV with header "row,label"; rows and labels are written 1-based.
void write_assignment_csv(const std::filesystem::path& path,
                          const ClusterAssignment& a);
ClusterAssignment read_assignment_csv(const std::filesystem::path& path);

}  // namespace irsa
