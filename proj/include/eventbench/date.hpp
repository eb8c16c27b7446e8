#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace eventbench {

/// Calendar date. Year-only and year-month inputs are stored with the missing
/// fields set to 1 and remember their precision.
struct Date {
  enum class Precision : std::uint8_t { Year, Month, Day };

  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  Precision precision = Precision::Day;

  static Date ymd(int y, unsigned m, unsigned d) { return {y, m, d, Precision::Day}; }

  std::chrono::sys_days sys_days() const {
    return std::chrono::sys_days(std::chrono::year_month_day(
        std::chrono::year(year), std::chrono::month(month), std::chrono::day(day)));
  }
  static Date from_sys_days(std::chrono::sys_days d);

  /// ISO 8601 "YYYY-MM-DD" (always full precision).
  std::string iso() const;

  friend bool operator==(const Date& a, const Date& b) {
    return a.year == b.year && a.month == b.month && a.day == b.day;
  }
  friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
    if (auto c = a.year <=> b.year; c != 0) return c;
    if (auto c = a.month <=> b.month; c != 0) return c;
    return a.day <=> b.day;
  }
};

/// Accepts "YYYY-MM-DD", "YYYY-MM", "YYYY", and ISO date-times (the time part
/// is ignored). Returns nullopt for anything else or an invalid calendar date.
std::optional<Date> parse_date(std::string_view text);

}  // namespace eventbench
