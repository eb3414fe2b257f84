#include "irsa/clustering.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "irsa/error.hpp"

namespace irsa {

// ---------------------------------------------------------------------------
// Assignments

std::vector<std::size_t> ClusterAssignment::counts() const {
  std::vector<std::size_t> c(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (int label : labels) {
    if (label >= 0 && label < k) ++c[static_cast<std::size_t>(label)];
  }
  return c;
}

void validate(const ClusterAssignment& a) {
  if (a.k <= 0) throw DomainError("assignment: K must be positive");
  std::vector<std::size_t> counts(static_cast<std::size_t>(a.k), 0);
  for (std::size_t r = 0; r < a.labels.size(); ++r) {
    const int label = a.labels[r];
    if (label < 0 || label >= a.k) {
      throw DomainError(
          fmt::format("assignment: row {} has label {} outside [0, {})", r, label, a.k));
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw DomainError(fmt::format("assignment: cluster {} is empty", c));
  }
}

ClusterAssignment make_assignment(std::vector<int> labels, int k,
                                  ClusteringMethod method) {
  ClusterAssignment a{std::move(labels), k, method};
  validate(a);
  return a;
}

namespace {

std::vector<int> first_appearance_order(std::span<const int> labels, int k) {
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int label : labels) {
    auto& slot = remap[static_cast<std::size_t>(label)];
    if (slot < 0) slot = next++;
  }
  for (auto& slot : remap) {
    if (slot < 0) slot = next++;
  }
  return remap;
}

}  // namespace

void canonicalize(ClusterAssignment& a) {
  const auto remap = first_appearance_order(a.labels, a.k);
  for (int& label : a.labels) label = remap[static_cast<std::size_t>(label)];
}

ClusterAssignment compose(const ClusterAssignment& elementary,
                          const MetaAssignment& meta) {
  if (meta.meta_labels.size() != static_cast<std::size_t>(elementary.k)) {
    throw DomainError(fmt::format("compose: meta assignment covers {} clusters, expected {}",
                                  meta.meta_labels.size(), elementary.k));
  }
  ClusterAssignment out;
  out.k = meta.k;
  out.method = ClusteringMethod::Meta;
  out.labels.resize(elementary.size());
  for (std::size_t r = 0; r < elementary.size(); ++r) {
    out.labels[r] = meta.meta_labels[static_cast<std::size_t>(elementary.labels[r])];
  }
  validate(out);
  return out;
}

void write_assignment_csv(const std::filesystem::path& path,
                          const ClusterAssignment& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  os << "row,label\n";
  fmt::memory_buffer buf;
  for (std::size_t r = 0; r < a.labels.size(); ++r) {
    fmt::format_to(std::back_inserter(buf), "{},{}\n", r + 1, a.labels[r] + 1);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

ClusterAssignment read_assignment_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::string line;
  std::getline(is, line);
  std::vector<int> labels;
  int k = 0;
  std::size_t expected_row = 1;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream in(line);
    std::size_t row = 0;
    char comma = 0;
    int label = 0;
    if (!(in >> row >> comma >> label) || comma != ',' || row != expected_row ||
        label < 1) {
      throw IoError(fmt::format("{}: malformed record '{}'", path.string(), line));
    }
    labels.push_back(label - 1);
    k = std::max(k, label);
    ++expected_row;
  }
  return make_assignment(std::move(labels), k);
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double diff = x[c] - y[c];
    s += diff * diff;
  }
  return s;
}

std::size_t count_distinct_rows(const Matrix& points, std::size_t stop_at) {
  std::vector<std::size_t> order(points.rows());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
    return std::ranges::lexicographical_compare(points.row(a), points.row(b));
  });
  std::size_t distinct = order.empty() ? 0 : 1;
  for (std::size_t i = 1; i < order.size() && distinct < stop_at; ++i) {
    if (!std::ranges::equal(points.row(order[i - 1]), points.row(order[i]))) ++distinct;
  }
  return distinct;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Assigns every point to its nearest centroid; fills `labels` and the squared
// distance to the chosen centroid. Lowest index wins ties.
void assign_points(const Matrix& points, const Matrix& centroids,
                   std::vector<int>& labels, std::vector<double>& dist2) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  const std::size_t m = points.cols();
  labels.resize(n);
  dist2.resize(n);

  if (k * m < 64) {
    for (std::size_t r = 0; r < n; ++r) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points.row(r), centroids.row(c));
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      labels[r] = best_c;
      dist2[r] = best;
    }
    return;
  }

  // ||x||^2 - 2 x.c + ||c||^2 through a chunked matrix product.
  Eigen::Map<const RowMatrix> C(centroids.values().data(),
                                static_cast<Eigen::Index>(k),
                                static_cast<Eigen::Index>(m));
  const Eigen::VectorXd c_norm = C.rowwise().squaredNorm();
  constexpr std::size_t kChunk = 512;
  RowMatrix cross;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t rows = std::min(kChunk, n - begin);
    Eigen::Map<const RowMatrix> X(points.values().data() + begin * m,
                                  static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(m));
    cross.noalias() = X * C.transpose();
    for (std::size_t r = 0; r < rows; ++r) {
      const double x_norm = X.row(static_cast<Eigen::Index>(r)).squaredNorm();
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = x_norm - 2.0 * cross(static_cast<Eigen::Index>(r),
                                              static_cast<Eigen::Index>(c)) +
                         c_norm[static_cast<Eigen::Index>(c)];
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      labels[begin + r] = best_c;
      dist2[begin + r] = std::max(0.0, best);
    }
  }
}

Matrix kmeanspp_seed(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  auto first = static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  std::ranges::copy(points.row(first), centroids.row(0).begin());

  std::vector<double> min_d2(n);
  for (std::size_t r = 0; r < n; ++r) {
    min_d2[r] = squared_distance(points.row(r), centroids.row(0));
  }
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(min_d2.begin(), min_d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit_draw(rng) * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += min_d2[r];
        if (acc > target && min_d2[r] > 0.0) {
          pick = r;
          break;
        }
      }
      if (pick == n) {
        // Rounding pushed the target past the last positive weight.
        for (std::size_t r = n; r-- > 0;) {
          if (min_d2[r] > 0.0) {
            pick = r;
            break;
          }
        }
      }
    }
    if (pick == n) throw DomainError("kmeans: not enough distinct points to seed");
    std::ranges::copy(points.row(pick), centroids.row(c).begin());
    for (std::size_t r = 0; r < n; ++r) {
      min_d2[r] = std::min(min_d2[r], squared_distance(points.row(r), centroids.row(c)));
    }
  }
  return centroids;
}

}  // namespace

KMeansFit kmeans_fit(const Matrix& points, int k, std::uint64_t seed,
                     const KMeansOptions& options) {
  if (k < 1) throw DomainError("kmeans: K must be >= 1");
  const std::size_t n = points.rows();
  const auto kk = static_cast<std::size_t>(k);
  if (n == 0) throw DomainError("kmeans: no points");
  if (count_distinct_rows(points, kk) < kk) {
    throw DomainError(
        fmt::format("kmeans: K = {} exceeds the number of distinct rows", k));
  }

  std::mt19937_64 rng(seed);
  KMeansFit fit;
  fit.centroids = kmeanspp_seed(points, kk, rng);

  std::vector<int> labels;
  std::vector<double> dist2;
  const std::size_t m = points.cols();
  for (int iter = 1; iter <= std::max(1, options.max_iterations); ++iter) {
    fit.iterations = iter;
    assign_points(points, fit.centroids, labels, dist2);

    std::vector<std::size_t> counts(kk, 0);
    for (int label : labels) ++counts[static_cast<std::size_t>(label)];
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) continue;
      // Repair: move the point farthest from its centroid into the empty cluster.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t r = 0; r < n; ++r) {
        if (counts[static_cast<std::size_t>(labels[r])] > 1 && dist2[r] > far_d) {
          far_d = dist2[r];
          far = r;
        }
      }
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      dist2[far] = 0.0;
      counts[c] = 1;
    }

    Matrix next(kk, m);
    for (std::size_t r = 0; r < n; ++r) {
      auto dst = next.row(static_cast<std::size_t>(labels[r]));
      const auto src = points.row(r);
      for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
    }
    double max_shift2 = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      auto row = next.row(c);
      for (double& v : row) v /= static_cast<double>(counts[c]);
      max_shift2 = std::max(max_shift2, squared_distance(row, fit.centroids.row(c)));
    }
    fit.centroids = std::move(next);
    if (std::sqrt(max_shift2) <= options.tolerance) break;
  }

  fit.assignment = ClusterAssignment{std::move(labels), k, ClusteringMethod::KMeans};
  const auto remap = first_appearance_order(fit.assignment.labels, k);
  for (int& label : fit.assignment.labels) label = remap[static_cast<std::size_t>(label)];
  Matrix reordered(kk, m);
  for (std::size_t c = 0; c < kk; ++c) {
    std::ranges::copy(fit.centroids.row(c),
                      reordered.row(static_cast<std::size_t>(remap[c])).begin());
  }
  fit.centroids = std::move(reordered);
  validate(fit.assignment);
  return fit;
}

ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed,
                         const KMeansOptions& options) {
  return kmeans_fit(points, k, seed, options).assignment;
}

// ---------------------------------------------------------------------------
// Agglomerative clustering

namespace {

struct Merge {
  std::size_t a;
  std::size_t b;
  double height;
};

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Applies the count - k lowest merges (stable on ties) and labels components
// by first appearance.
std::vector<int> cut_dendrogram(std::vector<Merge> merges, std::size_t count,
                                std::size_t k) {
  std::ranges::stable_sort(merges, {}, &Merge::height);
  UnionFind uf(count);
  const std::size_t apply = count > k ? count - k : 0;
  for (std::size_t i = 0; i < apply && i < merges.size(); ++i) {
    uf.unite(merges[i].a, merges[i].b);
  }
  std::vector<int> root_label(count, -1);
  std::vector<int> labels(count);
  int next = 0;
  for (std::size_t r = 0; r < count; ++r) {
    auto& slot = root_label[uf.find(r)];
    if (slot < 0) slot = next++;
    labels[r] = slot;
  }
  return labels;
}

// Nearest-neighbour chain over an abstract dissimilarity. `dist(a, b)` must
// define a reducible linkage; `merge(a, b)` folds b into slot a.
template <class Dist, class MergeFn>
std::vector<Merge> nn_chain(std::size_t count, Dist&& dist, MergeFn&& merge) {
  std::vector<std::size_t> active(count);
  std::iota(active.begin(), active.end(), 0);
  std::vector<Merge> merges;
  merges.reserve(count > 0 ? count - 1 : 0);
  std::vector<std::size_t> chain;

  while (active.size() > 1) {
    if (chain.empty()) chain.push_back(active.front());
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() > 1 ? chain[chain.size() - 2] : count;

    std::size_t best = count;
    double best_d = std::numeric_limits<double>::infinity();
    if (prev != count) {
      best = prev;
      best_d = dist(a, prev);
    }
    for (std::size_t b : active) {
      if (b == a) continue;
      const double d = dist(a, b);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }

    if (best == prev) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t keep = std::min(a, best);
      const std::size_t drop = std::max(a, best);
      merges.push_back({keep, drop, best_d});
      merge(keep, drop);
      active.erase(std::ranges::find(active, drop));
    } else {
      chain.push_back(best);
    }
  }
  return merges;
}

}  // namespace

std::vector<int> weighted_ward_labels(const Matrix& points,
                                      std::span<const double> weights, int k) {
  const std::size_t count = points.rows();
  if (weights.size() != count) throw DomainError("ward: one weight per point required");
  if (k < 1 || static_cast<std::size_t>(k) > count) {
    throw DomainError(fmt::format("ward: K = {} must lie in [1, {}]", k, count));
  }
  const std::size_t m = points.cols();
  Matrix centroid = points;
  std::vector<double> weight(weights.begin(), weights.end());

  auto dist = [&](std::size_t a, std::size_t b) {
    const double wa = weight[a];
    const double wb = weight[b];
    return wa * wb / (wa + wb) * squared_distance(centroid.row(a), centroid.row(b));
  };
  auto merge = [&](std::size_t keep, std::size_t drop) {
    const double wk = weight[keep];
    const double wd = weight[drop];
    auto ck = centroid.row(keep);
    const auto cd = centroid.row(drop);
    for (std::size_t j = 0; j < m; ++j) ck[j] = (wk * ck[j] + wd * cd[j]) / (wk + wd);
    weight[keep] = wk + wd;
  };
  auto merges = nn_chain(count, dist, merge);
  return cut_dendrogram(std::move(merges), count, static_cast<std::size_t>(k));
}

ClusterAssignment hierarchical_ward(const Matrix& points, int k,
                                    const WardOptions& options) {
  const std::size_t n = points.rows();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw DomainError(fmt::format("ward: K = {} must lie in [1, N = {}]", k, n));
  }
  ClusterAssignment out;
  out.k = k;
  out.method = ClusteringMethod::Ward;

  if (n <= options.direct_limit) {
    const std::vector<double> ones(n, 1.0);
    out.labels = weighted_ward_labels(points, ones, k);
  } else {
    if (!options.allow_quantize) {
      throw CapacityError(fmt::format(
          "ward: N = {} exceeds the direct limit {} and quantization is disabled", n,
          options.direct_limit));
    }
    const auto target = std::max<std::size_t>(options.quantize_to,
                                              static_cast<std::size_t>(k));
    const auto distinct = count_distinct_rows(points, target);
    if (distinct < static_cast<std::size_t>(k)) {
      throw DomainError(fmt::format("ward: K = {} exceeds the number of distinct rows", k));
    }
    auto fit = kmeans_fit(points, static_cast<int>(std::min(target, distinct)),
                          options.seed,
                          {options.quantize_iterations, 1e-8});
    const auto sizes = fit.assignment.counts();
    std::vector<double> w(sizes.begin(), sizes.end());
    const auto centroid_labels = weighted_ward_labels(fit.centroids, w, k);
    out.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      out.labels[r] =
          centroid_labels[static_cast<std::size_t>(fit.assignment.labels[r])];
    }
    canonicalize(out);
  }
  validate(out);
  return out;
}

std::vector<int> agglomerate(std::vector<double> distances, std::size_t count,
                             int k, Linkage linkage) {
  if (distances.size() != count * count) {
    throw DomainError("agglomerate: distance matrix must be count x count");
  }
  if (k < 1 || static_cast<std::size_t>(k) > count) {
    throw DomainError(fmt::format("agglomerate: K = {} must lie in [1, {}]", k, count));
  }
  std::vector<double> size(count, 1.0);
  auto at = [&](std::size_t a, std::size_t b) -> double& {
    return distances[a * count + b];
  };
  auto dist = [&](std::size_t a, std::size_t b) { return at(a, b); };
  auto merge = [&](std::size_t keep, std::size_t drop) {
    for (std::size_t j = 0; j < count; ++j) {
      if (j == keep || j == drop) continue;
      const double dk = at(keep, j);
      const double dd = at(drop, j);
      double merged = 0.0;
      switch (linkage) {
        case Linkage::Average:
          merged = (size[keep] * dk + size[drop] * dd) / (size[keep] + size[drop]);
          break;
        case Linkage::Complete:
          merged = std::max(dk, dd);
          break;
        case Linkage::Single:
          merged = std::min(dk, dd);
          break;
      }
      at(keep, j) = merged;
      at(j, keep) = merged;
    }
    size[keep] += size[drop];
  };
  auto merges = nn_chain(count, dist, merge);
  return cut_dendrogram(std::move(merges), count, static_cast<std::size_t>(k));
}

// ---------------------------------------------------------------------------
// Histograms

std::vector<Histogram> elementary_histograms(const SobolDesign& design,
                                             const ClusterAssignment& assignment,
                                             std::size_t input, int n_x,
                                             HistogramSource source) {
  if (n_x < 2) throw DomainError("elementary_histograms: n_x must be >= 2");
  if (input >= design.dim()) {
    throw DomainError(fmt::format("elementary_histograms: input {} outside [0, {})",
                                  input, design.dim()));
  }
  if (assignment.size() != design.rows()) {
    throw DomainError(fmt::format(
        "elementary_histograms: assignment has {} rows, design has {}",
        assignment.size(), design.rows()));
  }
  const auto nx = static_cast<std::size_t>(n_x);
  std::vector<Histogram> hists(static_cast<std::size_t>(assignment.k));
  for (std::size_t c = 0; c < hists.size(); ++c) {
    hists[c].bins.assign(nx, 0.0);
    hists[c].input = input;
    hists[c].cluster = static_cast<int>(c);
  }
  const double lo = design.inputs[input].lower;
  const double width = design.inputs[input].upper - lo;
  const std::size_t rows =
      source == HistogramSource::ABlock ? design.layout.n : design.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    const double u = (design.points(r, input) - lo) / width;
    const auto bin = static_cast<std::size_t>(
        std::clamp(std::floor(u * static_cast<double>(nx)), 0.0,
                   static_cast<double>(nx - 1)));
    hists[static_cast<std::size_t>(assignment.labels[r])].bins[bin] += 1.0;
  }
  for (auto& h : hists) h.empty = h.total() == 0.0;
  return hists;
}

double histogram_correlation_distance(std::span<const double> h,
                                      std::span<const double> g) {
  if (h.size() != g.size()) {
    throw DomainError("histogram_correlation_distance: bin counts differ");
  }
  const double n = static_cast<double>(h.size());
  const double mh = std::accumulate(h.begin(), h.end(), 0.0) / n;
  const double mg = std::accumulate(g.begin(), g.end(), 0.0) / n;
  double shh = 0.0, sgg = 0.0, shg = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double dh = h[i] - mh;
    const double dg = g[i] - mg;
    shh += dh * dh;
    sgg += dg * dg;
    shg += dh * dg;
  }
  if (shh <= 0.0 || sgg <= 0.0) return 1.0;
  const double corr = shg / std::sqrt(shh * sgg);
  return std::clamp(1.0 - corr, 0.0, 2.0);
}

MetaAssignment meta_cluster(const std::vector<Histogram>& histograms, int k_h,
                            Linkage linkage) {
  const std::size_t count = histograms.size();
  if (k_h < 1 || static_cast<std::size_t>(k_h) > count) {
    throw DomainError(
        fmt::format("meta_cluster: K_H = {} must lie in [1, {}]", k_h, count));
  }
  std::vector<double> d(count * count, 0.0);
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b) {
      const double v = histogram_correlation_distance(histograms[a].bins, histograms[b].bins);
      d[a * count + b] = v;
      d[b * count + a] = v;
    }
  }
  return {agglomerate(std::move(d), count, k_h, linkage), k_h};
}

}  // namespace irsa
