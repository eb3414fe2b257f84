#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irsa/indices.hpp"
#include "irsa/matrix.hpp"
#include "irsa/optimizer.hpp"

namespace irsa {

/// Mean membership value per cell of a uniform grid over the bounding box of
/// 2D outputs. Cells are indexed (row, col) with row along Y2 and col along Y1.
struct MeanMembershipMap {
  int resolution = 0;
  double y1_min = 0.0, y1_max = 0.0;
  double y2_min = 0.0, y2_max = 0.0;
  MembershipKind kind = MembershipKind::Single;
  std::vector<double> mmv;           // resolution^2, NaN where the cell is empty
  std::vector<std::size_t> counts;   // resolution^2

  double value(int row, int col) const;
  std::size_t count(int row, int col) const;
};

/// mmv = mean of the membership values of the points in each cell, i.e. the
/// fraction of points in C for a single membership.
MeanMembershipMap mean_membership_map(const Matrix& outputs, const MembershipVector& member,
                                      int resolution = 100);

/// Per-group empirical quantiles of curves at each time step. Group 0 holds
/// rows with positive membership (the region C), group 1 the others.
struct QuantileBands {
  std::vector<double> probs;
  std::vector<Matrix> groups;  // 2 matrices, T x probs.size()
  std::vector<std::size_t> group_sizes;
};

inline const std::vector<double> kDefaultProbs = {0.05, 0.25, 0.5, 0.75, 0.95};

/// Quantile of sorted data with linear interpolation between order
/// statistics at position (n - 1) p.
double sorted_quantile(std::span<const double> sorted, double p);

QuantileBands quantile_bands(const Matrix& curves, const MembershipVector& member,
                             std::span<const double> probs = kDefaultProbs);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// KS statistic between groups 0 and 1 (as in quantile_bands) at every step.
std::vector<double> ks_profile(const Matrix& curves, const MembershipVector& member);

struct ResultPanel {
  IrsaResult result;
  std::string input_name;
  std::optional<MeanMembershipMap> map;
  std::optional<QuantileBands> bands;
  std::vector<double> ks;
};

struct ReportBundle {
  std::string title;
  std::vector<ResultPanel> panels;
};

enum class ReportFormat { Csv, Json, Svg };

std::string render_csv(const ReportBundle& bundle);
std::string render_json(const ReportBundle& bundle);
/// Score bar panel over all inputs followed by one map or band panel per
/// result. Numbers are printed with fixed precision so output is byte-stable.
std::string render_svg(const ReportBundle& bundle);

/// Writes the rendering to `path`; throws IoError when it cannot be written.
void render(const ReportBundle& bundle, ReportFormat format,
            const std::filesystem::path& path);

/// Writes `text` to `path` in binary mode; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace irsa
