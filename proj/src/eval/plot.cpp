#include "doccat/eval/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "doccat/common/error.hpp"

namespace doccat::eval {

namespace {

constexpr double kWidth = 720;
constexpr double kPanelHeight = 300;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 40;

struct Series {
  const char* name;
  const char* color;
  double EpochStats::*field;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void panel(std::string& svg, std::span<const EpochStats> stats, std::span<const Series> series, double y0,
           const char* label, bool unit_range) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kPanelHeight - kTop - kBottom;
  double lo = unit_range ? 0.0 : HUGE_VAL, hi = unit_range ? 1.0 : -HUGE_VAL;
  if (!unit_range) {
    for (const auto& s : stats) {
      for (const auto& ser : series) {
        lo = std::min(lo, s.*ser.field);
        hi = std::max(hi, s.*ser.field);
      }
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  const double first = stats.empty() ? 0.0 : static_cast<double>(stats.front().epoch);
  const double last = stats.empty() ? 1.0 : std::max(first + 1.0, static_cast<double>(stats.back().epoch));
  auto px = [&](double e) { return kLeft + (e - first) / (last - first) * plot_w; };
  auto py = [&](double v) { return y0 + kTop + (hi - v) / (hi - lo) * plot_h; };

  svg += fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>)" "\n", kLeft,
                     y0 + kTop, plot_w, plot_h);
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg += fmt::format(R"(<text x="{}" y="{:.1f}" font-size="11" text-anchor="end">{:.3g}</text>)" "\n",
                       kLeft - 6, py(v) + 4, v);
  }
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="12" text-anchor="middle">epoch</text>)" "\n",
                     kLeft + plot_w / 2, y0 + kPanelHeight - 8);
  svg += fmt::format(R"(<text x="{}" y="{}" font-size="13">{}</text>)" "\n", kLeft, y0 + kTop - 10, label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& ser = series[i];
    std::string points;
    for (const auto& s : stats) points += fmt::format("{:.1f},{:.1f} ", px(static_cast<double>(s.epoch)), py(s.*ser.field));
    svg += fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>)" "\n", ser.color,
                       points);
    const double ly = y0 + kTop + 16 + 18.0 * static_cast<double>(i);
    svg += fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>)" "\n",
                       kWidth - kRight + 12, ly - 4, kWidth - kRight + 32, ly - 4, ser.color);
    svg += fmt::format(R"(<text x="{}" y="{}" font-size="12">{}</text>)" "\n", kWidth - kRight + 38, ly, ser.name);
  }
}

}  // namespace

std::string render_stats_svg(std::span<const EpochStats> stats, const std::string& title) {
  const double height = 2 * kPanelHeight + (title.empty() ? 0 : 30);
  const double offset = title.empty() ? 0 : 30;
  std::string svg = fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">)" "\n", kWidth,
      height);
  svg += fmt::format(R"(<rect width="100%" height="100%" fill="white"/>)" "\n");
  if (!title.empty()) {
    svg += fmt::format(R"(<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>)" "\n", kWidth / 2,
                       escape(title));
  }
  const Series losses[] = {{"loss", "#1f77b4", &EpochStats::loss}, {"val_loss", "#ff7f0e", &EpochStats::val_loss}};
  const Series scores[] = {{"f1_macro", "#2ca02c", &EpochStats::f1_macro},
                           {"f1_micro", "#d62728", &EpochStats::f1_micro}};
  panel(svg, stats, losses, offset, "loss", false);
  panel(svg, stats, scores, offset + kPanelHeight, "validation F1", true);
  svg += "</svg>\n";
  return svg;
}

void plot_stats(const std::filesystem::path& stats_csv, const std::filesystem::path& out_svg) {
  const auto stats = read_stats_csv(stats_csv);
  std::ofstream out(out_svg);
  if (!out) throw StorageError("cannot write " + out_svg.string());
  out << render_stats_svg(stats, stats_csv.filename().string());
}

}  // namespace doccat::eval
