#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "irsa/assignment.hpp"
#include "irsa/indices.hpp"
#include "irsa/matrix.hpp"
#include "irsa/sampling.hpp"

namespace irsa {

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-8;  // stop once no centroid moves farther than this
};

struct KMeansFit {
  ClusterAssignment assignment;
  Matrix centroids;  // k x m, row c is the centroid of cluster c
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding (mt19937_64 seeded with `seed`).
/// Ties in assignment go to the lowest centroid index. A cluster that empties
/// is reseeded with the point farthest from its current centroid.
/// Throws DomainError if k exceeds the number of distinct rows.
KMeansFit kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                     const KMeansOptions& options = {});

ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed,
                         const KMeansOptions& options = {});

struct WardOptions {
  // Above this many rows, points are first quantized by k-means to
  // `quantize_to` centroids and Ward runs on the size-weighted centroids.
  std::size_t direct_limit = 20000;
  std::size_t quantize_to = 5000;
  int quantize_iterations = 20;
  bool allow_quantize = true;
  std::uint64_t seed = 0;  // used by the quantization pass only
};

/// Agglomerative Ward clustering (Euclidean) cut at k clusters.
/// Throws CapacityError when N > direct_limit and quantization is disabled.
ClusterAssignment hierarchical_ward(const Matrix& points, int k,
                                    const WardOptions& options = {});

/// Ward on weighted points: row r of `points` carries weight `weights[r]`.
/// Returns one 0-based label per row, canonical order.
std::vector<int> weighted_ward_labels(const Matrix& points,
                                      std::span<const double> weights, int k);

enum class HistogramSource {
  AllRows,  // every design row (default for the histogram merging step)
  ABlock,   // the A block only, an i.i.d. sample of the inputs
};

/// One histogram of X_i per cluster, with n_x uniform bins over
/// [lower_i, upper_i]. Clusters with no conditioning rows get an all-zero
/// histogram flagged `empty`.
std::vector<Histogram> elementary_histograms(
    const SobolDesign& design, const ClusterAssignment& assignment,
    std::size_t input, int n_x, HistogramSource source = HistogramSource::AllRows);

/// 1 - Pearson correlation of two bin vectors, in [0, 2]. Returns 1 when
/// either histogram is constant.
double histogram_correlation_distance(std::span<const double> h,
                                      std::span<const double> g);

enum class Linkage { Average, Complete, Single };

/// Agglomerative clustering of histograms under the correlation distance,
/// cut at k_h groups.
MetaAssignment meta_cluster(const std::vector<Histogram>& histograms, int k_h,
                            Linkage linkage = Linkage::Average);

/// Generic agglomeration over a full symmetric distance matrix
/// (row-major, count x count). Returns canonical 0-based labels.
std::vector<int> agglomerate(std::vector<double> distances, std::size_t count,
                             int k, Linkage linkage);

}  // namespace irsa
