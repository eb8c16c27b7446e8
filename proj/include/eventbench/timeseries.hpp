#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eventbench/date.hpp"
#include "eventbench/taxonomy.hpp"

namespace eventbench {

enum class Bucketing { Day, Month };

struct DateWindow {
  Date start;
  Date end;  // inclusive
};

/// Window covering whole calendar years first_year..last_year.
DateWindow year_window(int first_year, int last_year);

/// A dated label set from one source (gold or a thresholded prediction).
struct DatedLabels {
  Date date;
  AttackSet labels;
};

struct CumulativeSeries {
  AttackType type = AttackType::Unknown;
  std::string source;
  std::vector<Date> dates;  // bucket start dates, strictly increasing
  std::vector<std::int64_t> counts;

  std::int64_t final_count() const { return counts.empty() ? 0 : counts.back(); }
};

/// Bucket start for a date: itself (Day) or the first of its month (Month).
Date bucket_of(const Date& d, Bucketing bucketing);

/// Running count of items whose label set contains `type`, with one point per
/// bucket in the window. Items outside the window are skipped. Throws
/// EmptyWindow when the window is inverted or no item falls inside it.
CumulativeSeries cumulative_series(std::span<const DatedLabels> items, AttackType type,
                                   Bucketing bucketing, const DateWindow& window,
                                   std::string source);

enum class BiasDirection { Exact, Over, Under, Mixed };
std::string_view to_string(BiasDirection d);

struct BiasSummary {
  AttackType type = AttackType::Unknown;
  std::string backend;
  /// Predicted final count / gold final count; empty when gold is 0.
  std::optional<double> final_ratio;
  std::int64_t max_abs_gap = 0;
  BiasDirection direction = BiasDirection::Exact;
};

/// Throws MismatchedBuckets unless both series share the same bucket dates.
BiasSummary bias_summary(const CumulativeSeries& gold, const CumulativeSeries& pred);

/// Minimal line chart: gold dashed, one polyline per predicted series.
std::string timeline_svg(const CumulativeSeries& gold, std::span<const CumulativeSeries> predicted);

}  // namespace eventbench
