#include "irsa/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "irsa/error.hpp"

namespace irsa {

double MeanMembershipMap::value(int row, int col) const {
  return mmv.at(static_cast<std::size_t>(row) * static_cast<std::size_t>(resolution) +
                static_cast<std::size_t>(col));
}

std::size_t MeanMembershipMap::count(int row, int col) const {
  return counts.at(static_cast<std::size_t>(row) * static_cast<std::size_t>(resolution) +
                   static_cast<std::size_t>(col));
}

namespace {

int cell_of(double v, double lo, double hi, int resolution) {
  if (!(hi > lo)) return 0;
  const auto c = static_cast<int>(std::floor((v - lo) / (hi - lo) * resolution));
  return std::clamp(c, 0, resolution - 1);
}

void check_member(const Matrix& m, const MembershipVector& member, const char* what) {
  if (member.size() != m.rows()) {
    throw DomainError(fmt::format("{}: membership has {} rows, outputs have {}", what,
                                  member.size(), m.rows()));
  }
}

// Row ids of group 0 (positive membership) and group 1 (the rest).
std::array<std::vector<std::size_t>, 2> split_rows(const MembershipVector& member,
                                                   const char* what) {
  std::array<std::vector<std::size_t>, 2> rows;
  for (std::size_t r = 0; r < member.size(); ++r) {
    rows[member.values[r] > 0 ? 0 : 1].push_back(r);
  }
  if (rows[0].empty() || rows[1].empty()) {
    throw DomainError(fmt::format("{}: both groups must be non-empty ({} vs {} rows)", what,
                                  rows[0].size(), rows[1].size()));
  }
  return rows;
}

std::vector<double> column_values(const Matrix& m, std::size_t col,
                                  const std::vector<std::size_t>& rows) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.push_back(m(r, col));
  return v;
}

}  // namespace

MeanMembershipMap mean_membership_map(const Matrix& outputs, const MembershipVector& member,
                                      int resolution) {
  if (outputs.cols() != 2) {
    throw DomainError(fmt::format("mean_membership_map: needs 2D outputs, got {} columns",
                                  outputs.cols()));
  }
  if (resolution < 1) throw DomainError("mean_membership_map: resolution must be >= 1");
  check_member(outputs, member, "mean_membership_map");
  MeanMembershipMap map;
  map.resolution = resolution;
  map.kind = member.kind;
  const auto cells = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  map.counts.assign(cells, 0);
  map.mmv.assign(cells, std::numeric_limits<double>::quiet_NaN());
  if (outputs.rows() == 0) return map;

  map.y1_min = map.y1_max = outputs(0, 0);
  map.y2_min = map.y2_max = outputs(0, 1);
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    map.y1_min = std::min(map.y1_min, outputs(r, 0));
    map.y1_max = std::max(map.y1_max, outputs(r, 0));
    map.y2_min = std::min(map.y2_min, outputs(r, 1));
    map.y2_max = std::max(map.y2_max, outputs(r, 1));
  }
  std::vector<double> sums(cells, 0.0);
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    const int col = cell_of(outputs(r, 0), map.y1_min, map.y1_max, resolution);
    const int row = cell_of(outputs(r, 1), map.y2_min, map.y2_max, resolution);
    const auto idx = static_cast<std::size_t>(row) * static_cast<std::size_t>(resolution) +
                     static_cast<std::size_t>(col);
    ++map.counts[idx];
    sums[idx] += member.values[r];
  }
  for (std::size_t i = 0; i < cells; ++i) {
    if (map.counts[i] > 0) map.mmv[i] = sums[i] / static_cast<double>(map.counts[i]);
  }
  return map;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError(fmt::format("quantile prob {} outside [0, 1]", p));
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

QuantileBands quantile_bands(const Matrix& curves, const MembershipVector& member,
                             std::span<const double> probs) {
  if (curves.cols() < 2) {
    throw DomainError(fmt::format("quantile_bands: need T >= 2 steps, got {}", curves.cols()));
  }
  if (probs.empty()) throw DomainError("quantile_bands: probs must not be empty");
  check_member(curves, member, "quantile_bands");
  const auto rows = split_rows(member, "quantile_bands");
  QuantileBands bands;
  bands.probs.assign(probs.begin(), probs.end());
  for (const auto& group : rows) {
    Matrix q(curves.cols(), probs.size());
    for (std::size_t t = 0; t < curves.cols(); ++t) {
      auto v = column_values(curves, t, group);
      std::ranges::sort(v);
      for (std::size_t p = 0; p < probs.size(); ++p) q(t, p) = sorted_quantile(v, probs[p]);
    }
    bands.groups.push_back(std::move(q));
    bands.group_sizes.push_back(group.size());
  }
  return bands;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_statistic: samples must be non-empty");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::ranges::sort(x);
  std::ranges::sort(y);
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return best;
}

std::vector<double> ks_profile(const Matrix& curves, const MembershipVector& member) {
  check_member(curves, member, "ks_profile");
  const auto rows = split_rows(member, "ks_profile");
  std::vector<double> stat(curves.cols());
  for (std::size_t t = 0; t < curves.cols(); ++t) {
    stat[t] = ks_statistic(column_values(curves, t, rows[0]), column_values(curves, t, rows[1]));
  }
  return stat;
}

namespace {

std::string ids_text(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (k) s += ' ';
    s += fmt::format("{}", ids[k] + 1);
  }
  return s;
}

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : "NA"; }

}  // namespace

std::string render_csv(const ReportBundle& bundle) {
  std::string out =
      "input,name,algorithm,criterion,score,first_order,total,gamma_observed,"
      "part_1,part_2,part_3\n";
  for (const auto& p : bundle.panels) {
    const auto& r = p.result;
    out += fmt::format("{},{},{},{},{},{},{},{}", r.input + 1, p.input_name,
                       to_string(r.algorithm), to_string(r.criterion), num(r.score),
                       num(r.first_order), num(r.total), num(r.gamma_observed));
    for (std::size_t k = 0; k < 3; ++k) {
      out += ',';
      if (k < r.parts.size()) out += ids_text(r.parts[k]);
    }
    out += '\n';
  }
  return out;
}

std::string render_json(const ReportBundle& bundle) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& p : bundle.panels) {
    auto j = to_json(p.result);
    j["name"] = p.input_name;
    if (!p.ks.empty()) j["ks_profile"] = p.ks;
    results.push_back(std::move(j));
  }
  nlohmann::json doc = {{"schema", "irsa.results/1"},
                        {"title", bundle.title},
                        {"results", std::move(results)}};
  return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

void render(const ReportBundle& bundle, ReportFormat format,
            const std::filesystem::path& path) {
  switch (format) {
    case ReportFormat::Csv: write_text_file(path, render_csv(bundle)); break;
    case ReportFormat::Json: write_text_file(path, render_json(bundle)); break;
    case ReportFormat::Svg: write_text_file(path, render_svg(bundle)); break;
  }
}

}  // namespace irsa
