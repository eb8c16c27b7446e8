#include "eventbench/date.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace eventbench {
namespace {

std::optional<int> parse_digits(std::string_view s, std::size_t width) {
  if (s.size() != width) return std::nullopt;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  }
  int value = 0;
  std::from_chars(s.data(), s.data() + s.size(), value);
  return value;
}

}  // namespace

Date Date::from_sys_days(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd(d);
  return Date::ymd(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                   static_cast<unsigned>(ymd.day()));
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

std::optional<Date> parse_date(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (auto t = text.find('T'); t != std::string_view::npos) text = text.substr(0, t);

  Date out;
  const auto year = parse_digits(text.substr(0, 4), 4);
  if (!year) return std::nullopt;
  out.year = *year;
  if (text.size() == 4) {
    out.precision = Date::Precision::Year;
    return out;
  }
  if (text.size() < 7 || text[4] != '-') return std::nullopt;
  const auto month = parse_digits(text.substr(5, 2), 2);
  if (!month || *month < 1 || *month > 12) return std::nullopt;
  out.month = static_cast<unsigned>(*month);
  if (text.size() == 7) {
    out.precision = Date::Precision::Month;
    return out;
  }
  if (text.size() != 10 || text[7] != '-') return std::nullopt;
  const auto day = parse_digits(text.substr(8, 2), 2);
  if (!day) return std::nullopt;
  out.day = static_cast<unsigned>(*day);
  out.precision = Date::Precision::Day;
  const std::chrono::year_month_day ymd(std::chrono::year(out.year), std::chrono::month(out.month),
                                        std::chrono::day(out.day));
  if (!ymd.ok()) return std::nullopt;
  return out;
}

}  // namespace eventbench
