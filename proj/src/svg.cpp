#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "irsa/report.hpp"

namespace irsa {

namespace {

constexpr int kWidth = 960;
constexpr int kMargin = 40;
constexpr int kScoreTop = 50;
constexpr int kScoreHeight = 160;
constexpr int kPanelSize = 200;
constexpr int kPanelGap = 30;
constexpr int kPanelsPerRow = 4;
constexpr int kColorLevels = 64;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Blue (0) through white to red (1).
std::string diverging(double t) {
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double s = t / 0.5;
    r = static_cast<int>(std::lround(49 + s * (247 - 49)));
    g = static_cast<int>(std::lround(54 + s * (247 - 54)));
    b = static_cast<int>(std::lround(149 + s * (247 - 149)));
  } else {
    const double s = (t - 0.5) / 0.5;
    r = static_cast<int>(std::lround(247 + s * (165 - 247)));
    g = static_cast<int>(std::lround(247 + s * (0 - 247)));
    b = static_cast<int>(std::lround(247 + s * (38 - 247)));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

// Black (0) to yellow (1).
std::string heat(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 * std::min(1.0, 1.6 * t)));
  const int g = static_cast<int>(std::lround(230 * t));
  const int b = static_cast<int>(std::lround(60 * t * (1 - t)));
  return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

std::string f2(double v) { return fmt::format("{:.2f}", v); }

void score_panel(std::string& out, const ReportBundle& bundle) {
  const int left = kMargin;
  const int right = kWidth - kMargin;
  const int base = kScoreTop + kScoreHeight;
  out += fmt::format("<g id=\"scores\">\n");
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000\"/>\n", left,
                     base, right, base);
  out += fmt::format(
      "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
      left, kScoreTop, right, kScoreTop);
  out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">1</text>\n",
                     left - 4, kScoreTop + 4);
  out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">0</text>\n",
                     left - 4, base + 4);
  const auto count = bundle.panels.size();
  if (count == 0) {
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">no results</text>\n",
                       kWidth / 2, kScoreTop + kScoreHeight / 2);
    out += "</g>\n";
    return;
  }
  const double slot = static_cast<double>(right - left) / static_cast<double>(count);
  const double bar = std::min(60.0, slot * 0.6);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& p = bundle.panels[k];
    const double score = std::isfinite(p.result.score) ? p.result.score : 0.0;
    const double h = std::clamp(score, 0.0, 1.0) * kScoreHeight;
    const double cx = left + slot * (static_cast<double>(k) + 0.5);
    out += fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#4a6fa5\"/>\n", f2(cx - bar / 2),
        f2(base - h), f2(bar), f2(h));
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n", f2(cx),
        f2(base - h - 4), fmt::format("{:.3f}", p.result.score));
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n", f2(cx),
        base + 16, escape(p.input_name));
  }
  out += "</g>\n";
}

void map_panel(std::string& out, const MeanMembershipMap& map, int x0, int y0) {
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#e6e6e6\"/>\n", x0,
                     y0, kPanelSize, kPanelSize);
  const int res = map.resolution;
  if (res == 0) return;
  const double cell = static_cast<double>(kPanelSize) / res;
  const bool diff = map.kind == MembershipKind::Difference;
  for (int row = 0; row < res; ++row) {
    // Y2 grows upward on screen.
    const double y = y0 + kPanelSize - (row + 1) * cell;
    int col = 0;
    while (col < res) {
      const double v = map.value(row, col);
      if (std::isnan(v)) {
        ++col;
        continue;
      }
      const double t = diff ? (v + 1.0) / 2.0 : v;
      const auto level = static_cast<int>(std::lround(std::clamp(t, 0.0, 1.0) * kColorLevels));
      int end = col + 1;
      while (end < res) {
        const double w = map.value(row, end);
        if (std::isnan(w)) break;
        const double tw = diff ? (w + 1.0) / 2.0 : w;
        if (std::lround(std::clamp(tw, 0.0, 1.0) * kColorLevels) != level) break;
        ++end;
      }
      out += fmt::format(
          "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", f2(x0 + col * cell),
          f2(y), f2((end - col) * cell), f2(cell),
          diverging(static_cast<double>(level) / kColorLevels));
      col = end;
    }
  }
}

void band_panel(std::string& out, const QuantileBands& bands, const std::vector<double>& ks,
                int x0, int y0) {
  out += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#fff\" stroke=\"#000\"/>\n", x0,
      y0, kPanelSize, kPanelSize);
  if (bands.groups.empty()) return;
  const std::size_t steps = bands.groups[0].rows();
  const std::size_t np = bands.probs.size();
  double lo = bands.groups[0](0, 0), hi = lo;
  for (const auto& g : bands.groups) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t p = 0; p < np; ++p) {
        lo = std::min(lo, g(t, p));
        hi = std::max(hi, g(t, p));
      }
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;
  auto px = [&](std::size_t t) {
    return x0 + static_cast<double>(t) / static_cast<double>(std::max<std::size_t>(steps - 1, 1)) *
                    kPanelSize;
  };
  auto py = [&](double v) { return y0 + kPanelSize - (v - lo) / (hi - lo) * kPanelSize; };
  static const char* kColors[2] = {"#b2182b", "#2166ac"};
  for (std::size_t g = 0; g < bands.groups.size() && g < 2; ++g) {
    const auto& q = bands.groups[g];
    for (std::size_t layer = 0; layer < np / 2; ++layer) {
      const std::size_t low = layer, high = np - 1 - layer;
      std::string pts;
      for (std::size_t t = 0; t < steps; ++t) pts += fmt::format("{},{} ", f2(px(t)), f2(py(q(t, high))));
      for (std::size_t t = steps; t-- > 0;) pts += fmt::format("{},{} ", f2(px(t)), f2(py(q(t, low))));
      pts.pop_back();
      out += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"{}\" stroke=\"none\"/>\n",
                         pts, kColors[g], f2(0.2 + 0.15 * static_cast<double>(layer)));
    }
    if (np % 2 == 1) {
      std::string pts;
      for (std::size_t t = 0; t < steps; ++t) pts += fmt::format("{},{} ", f2(px(t)), f2(py(q(t, np / 2))));
      pts.pop_back();
      out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                         pts, kColors[g]);
    }
  }
  if (ks.empty()) return;
  const double w = static_cast<double>(kPanelSize) / static_cast<double>(ks.size());
  for (std::size_t t = 0; t < ks.size(); ++t) {
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"12\" fill=\"{}\"/>\n",
                       f2(x0 + static_cast<double>(t) * w), y0 + kPanelSize + 6, f2(w), heat(ks[t]));
  }
}

}  // namespace

std::string render_svg(const ReportBundle& bundle) {
  std::vector<const ResultPanel*> detail;
  for (const auto& p : bundle.panels) {
    if (p.map || p.bands) detail.push_back(&p);
  }
  const auto rows = static_cast<int>((detail.size() + kPanelsPerRow - 1) / kPanelsPerRow);
  const int detail_top = kScoreTop + kScoreHeight + 50;
  const int row_height = kPanelSize + 60;
  const int height = detail_top + rows * row_height + 10;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\">\n",
      kWidth, height, kWidth, height);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#fff\"/>\n", kWidth, height);
  out += fmt::format("<text x=\"{}\" y=\"28\" font-size=\"16\">{}</text>\n", kMargin,
                     escape(bundle.title));
  score_panel(out, bundle);

  const int span = kPanelsPerRow * kPanelSize + (kPanelsPerRow - 1) * kPanelGap;
  const int left = (kWidth - span) / 2;
  for (std::size_t k = 0; k < detail.size(); ++k) {
    const auto& p = *detail[k];
    const int col = static_cast<int>(k) % kPanelsPerRow;
    const int row = static_cast<int>(k) / kPanelsPerRow;
    const int x0 = left + col * (kPanelSize + kPanelGap);
    const int y0 = detail_top + row * row_height;
    out += fmt::format("<g id=\"panel-{}\">\n", k + 1);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\">{} ({} {:.3f})</text>\n", x0,
                       y0 - 6, escape(p.input_name), to_string(p.result.criterion),
                       p.result.score);
    if (p.map) {
      map_panel(out, *p.map, x0, y0);
    } else {
      band_panel(out, *p.bands, p.ks, x0, y0);
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace irsa
