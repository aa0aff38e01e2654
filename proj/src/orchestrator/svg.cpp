#include "rulewise/orchestrator/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rulewise::orchestrator::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

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

struct Frame {
  double lo = 0, hi = 1;
  std::size_t slots = 1;

  [[nodiscard]] double plot_w() const { return kWidth - kLeft - kRight; }
  [[nodiscard]] double plot_h() const { return kHeight - kTop - kBottom; }
  [[nodiscard]] double x(double slot) const { return kLeft + (slot + 0.5) * plot_w() / static_cast<double>(slots); }
  [[nodiscard]] double y(double v) const { return kTop + (hi - v) / (hi - lo) * plot_h(); }
};

Frame frame_for(std::vector<double> values, std::size_t slots, bool include_zero) {
  Frame f;
  f.slots = std::max<std::size_t>(slots, 1);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (include_zero) lo = std::min(lo, 0.0), hi = std::max(hi, 0.0);
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  f.lo = lo - pad;
  f.hi = hi + pad;
  return f;
}

std::string open(const std::string& title, const std::string& y_label) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n"
      "<text transform=\"translate(16,{4}) rotate(-90)\" text-anchor=\"middle\">{5}</text>\n",
      kWidth, kHeight, (kLeft + kWidth - kRight) / 2, escape(title), kTop + (kHeight - kTop - kBottom) / 2,
      escape(y_label));
}

std::string axes(const Frame& f, const std::vector<std::string>& categories, const std::string& x_label) {
  std::string out;
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kTop, y1 = kHeight - kBottom;
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", x0, y0,
                     x1 - x0, y1 - y0);
  for (int k = 0; k <= 5; ++k) {
    const double v = f.lo + (f.hi - f.lo) * k / 5.0;
    const double y = f.y(v);
    out += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", x0, y, x1, y);
    out += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", x0 - 4, y + 4, v);
  }
  if (f.lo < 0 && f.hi > 0)
    out += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#888\"/>\n", x0, f.y(0), x1,
                       f.y(0));
  for (std::size_t k = 0; k < categories.size(); ++k)
    out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", f.x(static_cast<double>(k)),
                       y1 + 16, escape(categories[k]));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2, kHeight - 16,
                     escape(x_label));
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<std::string>& categories, const std::vector<Series>& series) {
  std::vector<double> all;
  for (const auto& s : series) all.insert(all.end(), s.y.begin(), s.y.end());
  const auto f = frame_for(all, categories.size(), false);
  std::string out = open(title, y_label) + axes(f, categories, x_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string path;
    for (std::size_t i = 0; i < series[k].y.size(); ++i) {
      const double v = series[k].y[i];
      if (!std::isfinite(v)) {
        path += ' ';
        continue;
      }
      const bool start = path.empty() || path.back() == ' ';
      path += fmt::format("{}{:.2f},{:.2f} ", start ? "M" : "L", f.x(static_cast<double>(i)), f.y(v));
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", f.x(static_cast<double>(i)),
                         f.y(v), color);
    }
    out += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", path, color);
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                       kWidth - kRight + 10, ly, kWidth - kRight + 30, color);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kWidth - kRight + 36, ly + 4, escape(series[k].name));
  }
  return out + "</svg>\n";
}

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::vector<double>& errors) {
  std::vector<double> ext = values;
  for (std::size_t i = 0; i < errors.size() && i < values.size(); ++i)
    if (std::isfinite(errors[i])) ext.push_back(values[i] + errors[i]), ext.push_back(values[i] - errors[i]);
  const auto f = frame_for(ext, labels.size(), true);
  std::string out = open(title, y_label) + axes(f, labels, "rule");
  const double bw = 0.6 * f.plot_w() / static_cast<double>(f.slots);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    const double x = f.x(static_cast<double>(i));
    const double top = f.y(std::max(values[i], 0.0)), bottom = f.y(std::min(values[i], 0.0));
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                       x - bw / 2, top, bw, bottom - top, values[i] >= 0 ? kPalette[0] : kPalette[1]);
    if (i < errors.size() && std::isfinite(errors[i]) && errors[i] > 0)
      out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", x,
                         f.y(values[i] + errors[i]), f.y(values[i] - errors[i]));
  }
  return out + "</svg>\n";
}

std::string box_chart(const std::string& title, const std::string& y_label, const std::vector<BoxGroup>& groups) {
  std::vector<double> all;
  std::vector<std::string> labels;
  for (const auto& g : groups) {
    all.insert(all.end(), g.values.begin(), g.values.end());
    labels.push_back(g.label);
  }
  const auto f = frame_for(all, groups.size(), true);
  std::string out = open(title, y_label) + axes(f, labels, "other rules present (r)");
  const double bw = 0.5 * f.plot_w() / static_cast<double>(f.slots);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    std::vector<double> v;
    for (double x : groups[k].values)
      if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
    const double iqr = q3 - q1;
    double wlo = q1, whi = q3;
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) wlo = std::min(wlo, x);
      if (x <= q3 + 1.5 * iqr) whi = std::max(whi, x);
    }
    const double cx = f.x(static_cast<double>(k));
    out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                       f.y(whi), f.y(wlo));
    out += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#9ecae1\" stroke=\"black\"/>\n",
        cx - bw / 2, f.y(q3), bw, std::max(f.y(q1) - f.y(q3), 0.5));
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"black\" "
                       "stroke-width=\"2\"/>\n",
                       cx - bw / 2, f.y(med), cx + bw / 2, f.y(med));
    for (double x : v)
      if (x < wlo || x > whi)
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n", cx,
                           f.y(x));
  }
  return out + "</svg>\n";
}

}  // namespace rulewise::orchestrator::svg
