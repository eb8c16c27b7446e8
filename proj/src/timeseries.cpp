#include "eventbench/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eventbench/error.hpp"

namespace eventbench {
namespace {

Date next_bucket(const Date& d, Bucketing bucketing) {
  if (bucketing == Bucketing::Day) {
    return Date::from_sys_days(d.sys_days() + std::chrono::days(1));
  }
  return d.month == 12 ? Date::ymd(d.year + 1, 1, 1) : Date::ymd(d.year, d.month + 1, 1);
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

DateWindow year_window(int first_year, int last_year) {
  return {Date::ymd(first_year, 1, 1), Date::ymd(last_year, 12, 31)};
}

Date bucket_of(const Date& d, Bucketing bucketing) {
  return bucketing == Bucketing::Day ? Date::ymd(d.year, d.month, d.day)
                                     : Date::ymd(d.year, d.month, 1);
}

CumulativeSeries cumulative_series(std::span<const DatedLabels> items, AttackType type,
                                   Bucketing bucketing, const DateWindow& window,
                                   std::string source) {
  if (window.end < window.start) {
    throw Error(ErrorCode::EmptyWindow, "window ends before it starts");
  }
  CumulativeSeries s;
  s.type = type;
  s.source = std::move(source);
  const Date last = bucket_of(window.end, bucketing);
  for (Date b = bucket_of(window.start, bucketing); b <= last; b = next_bucket(b, bucketing)) {
    s.dates.push_back(b);
  }
  std::vector<std::int64_t> per_bucket(s.dates.size(), 0);
  std::size_t inside = 0;
  for (const auto& item : items) {
    if (item.date < window.start || window.end < item.date) continue;
    ++inside;
    if (!item.labels.test(ordinal(type))) continue;
    const auto it = std::lower_bound(s.dates.begin(), s.dates.end(), bucket_of(item.date, bucketing));
    ++per_bucket[static_cast<std::size_t>(it - s.dates.begin())];
  }
  if (inside == 0) {
    throw Error(ErrorCode::EmptyWindow, "no dated document falls inside " + window.start.iso() +
                                            ".." + window.end.iso());
  }
  s.counts.resize(per_bucket.size());
  std::int64_t running = 0;
  for (std::size_t i = 0; i < per_bucket.size(); ++i) {
    running += per_bucket[i];
    s.counts[i] = running;
  }
  return s;
}

std::string_view to_string(BiasDirection d) {
  switch (d) {
    case BiasDirection::Exact: return "exact";
    case BiasDirection::Over: return "over";
    case BiasDirection::Under: return "under";
    case BiasDirection::Mixed: return "mixed";
  }
  return "?";
}

BiasSummary bias_summary(const CumulativeSeries& gold, const CumulativeSeries& pred) {
  if (gold.dates != pred.dates) {
    throw Error(ErrorCode::MismatchedBuckets, "series " + gold.source + " and " + pred.source +
                                                  " use different buckets");
  }
  BiasSummary b;
  b.type = gold.type;
  b.backend = pred.source;
  if (gold.final_count() > 0) {
    b.final_ratio = static_cast<double>(pred.final_count()) / static_cast<double>(gold.final_count());
  }
  bool above = false;
  bool below = false;
  for (std::size_t i = 0; i < gold.counts.size(); ++i) {
    const auto gap = pred.counts[i] - gold.counts[i];
    b.max_abs_gap = std::max(b.max_abs_gap, gap < 0 ? -gap : gap);
    above |= gap > 0;
    below |= gap < 0;
  }
  b.direction = above && below ? BiasDirection::Mixed
                : above        ? BiasDirection::Over
                : below        ? BiasDirection::Under
                               : BiasDirection::Exact;
  return b;
}

std::string timeline_svg(const CumulativeSeries& gold, std::span<const CumulativeSeries> predicted) {
  constexpr double width = 640, height = 400, left = 60, right = 160, top = 30, bottom = 40;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  std::int64_t ymax = gold.final_count();
  for (const auto& s : predicted) ymax = std::max(ymax, s.final_count());
  ymax = std::max<std::int64_t>(ymax, 1);
  const std::size_t n = gold.dates.size();

  auto px = [&](std::size_t i) { return left + (n <= 1 ? 0.0 : plot_w * double(i) / double(n - 1)); };
  auto py = [&](std::int64_t v) { return top + plot_h * (1.0 - double(v) / double(ymax)); };
  auto polyline = [&](const CumulativeSeries& s, const char* color, bool dashed) {
    std::string pts;
    char buf[64];
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(i), py(s.counts[i]));
      pts += buf;
    }
    return std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"1.5\"" +
           (dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
  };

  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(int(left)) + "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape_xml(display(gold.type)) + "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n"
                "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n",
                left, top + plot_h, left + plot_w, top + plot_h, left, top, left, top + plot_h);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"10\" "
                "text-anchor=\"end\">%lld</text>\n",
                left - 4, top + 4, static_cast<long long>(ymax));
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"10\" "
                "text-anchor=\"end\">0</text>\n",
                left - 4, top + plot_h);
  svg += buf;
  if (n > 0) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"10\">%s</text>\n"
                  "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"10\" "
                  "text-anchor=\"end\">%s</text>\n",
                  left, top + plot_h + 16, gold.dates.front().iso().c_str(), left + plot_w,
                  top + plot_h + 16, gold.dates.back().iso().c_str());
    svg += buf;
  }

  svg += polyline(gold, "black", true);
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    svg += polyline(predicted[k], kPalette[k % std::size(kPalette)], false);
  }

  auto legend = [&](std::size_t row, const std::string& label, const char* color, bool dashed) {
    const double y = top + 10 + 16.0 * double(row);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"%s\" "
                  "stroke-width=\"1.5\"%s/>\n",
                  left + plot_w + 10, y, left + plot_w + 34, y, color,
                  dashed ? " stroke-dasharray=\"6 4\"" : "");
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"11\">",
                  left + plot_w + 40, y + 4);
    svg += buf;
    svg += escape_xml(label) + "</text>\n";
  };
  legend(0, gold.source, "black", true);
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    legend(k + 1, predicted[k].source, kPalette[k % std::size(kPalette)], false);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace eventbench
