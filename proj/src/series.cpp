#include "loadfc/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "loadfc/errors.hpp"

namespace loadfc {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError("malformed date '" + std::string(whole) + "', expected YYYY-MM-DD");
  }
  return value;
}

}  // namespace

Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    throw DataError(std::string("invalid calendar date ") + buf);
  }
  return std::chrono::sys_days{ymd};
}

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const int y = parse_int(text.substr(0, 4), text);
  const int m = parse_int(text.substr(5, 2), text);
  const int d = parse_int(text.substr(8, 2), text);
  if (m < 1 || d < 1) throw DataError("invalid calendar date " + std::string(text));
  return make_date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date date) { return static_cast<int>(std::chrono::year_month_day{date}.year()); }

unsigned month_of(Date date) {
  return static_cast<unsigned>(std::chrono::year_month_day{date}.month());
}

unsigned iso_weekday_of(Date date) { return std::chrono::weekday{date}.iso_encoding(); }

// ---------------------------------------------------------------------------

DailySeries::DailySeries(Date start, std::vector<double> values)
    : start_(start), values_(std::move(values)) {
  if (values_.empty()) throw DataError("a daily series needs at least one observation");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DataError("non-finite consumption on " + format_date(date_at(i)));
    }
    if (values_[i] < 0.0) {
      throw DataError("negative consumption on " + format_date(date_at(i)));
    }
  }
}

double DailySeries::at(Date d) const { return values_[static_cast<std::size_t>(day_index(*this, d))]; }

long day_index(const DailySeries& series, Date date) {
  if (!series.contains(date)) {
    throw OutOfRangeError("date " + format_date(date) + " outside series span " +
                          format_date(series.start()) + ".." + format_date(series.end()));
  }
  return days_between(series.start(), date);
}

std::pair<DailySeries, DailySeries> split(const DailySeries& series, Date boundary) {
  if (boundary <= series.start() || boundary > series.end()) {
    throw InvalidSplitError("split boundary " + format_date(boundary) +
                            " must lie strictly inside " + format_date(series.start()) + ".." +
                            format_date(series.end()));
  }
  const auto cut = static_cast<std::ptrdiff_t>(days_between(series.start(), boundary));
  const auto vals = series.values();
  return {DailySeries(series.start(), {vals.begin(), vals.begin() + cut}),
          DailySeries(boundary, {vals.begin() + cut, vals.end()})};
}

DailySeries concatenate(const DailySeries& first, const DailySeries& second) {
  if (second.start() != add_days(first.end(), 1)) {
    throw DataError("series are not adjacent: " + format_date(first.end()) + " then " +
                    format_date(second.start()));
  }
  std::vector<double> values(first.values().begin(), first.values().end());
  values.insert(values.end(), second.values().begin(), second.values().end());
  return DailySeries(first.start(), std::move(values));
}

// ---------------------------------------------------------------------------

ExclusionMask::ExclusionMask(std::vector<DateRange> ranges) : ranges_(std::move(ranges)) {
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (ranges_[i].last < ranges_[i].first) {
      throw ConfigError("exclusion range " + format_date(ranges_[i].first) + ".." +
                        format_date(ranges_[i].last) + " ends before it starts");
    }
    if (i > 0 && ranges_[i].first <= ranges_[i - 1].last) {
      throw ConfigError("exclusion ranges must be sorted and non-overlapping (at " +
                        format_date(ranges_[i].first) + ")");
    }
  }
}

bool ExclusionMask::excludes(Date d) const {
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), d,
                             [](Date v, const DateRange& r) { return v < r.first; });
  return it != ranges_.begin() && std::prev(it)->contains(d);
}

void ExclusionMask::validate_for(const DailySeries& series) const {
  for (const auto& r : ranges_) {
    if (!r.overlaps(series.span())) {
      throw ConfigError("exclusion range " + format_date(r.first) + ".." + format_date(r.last) +
                        " does not intersect the series span");
    }
  }
}

std::vector<Observation> apply_mask(const DailySeries& series, const ExclusionMask& mask) {
  mask.validate_for(series);
  std::vector<Observation> kept;
  kept.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!mask.excludes(series.date_at(i))) {
      kept.push_back({static_cast<long>(i), series.value(i)});
    }
  }
  return kept;
}

// ---------------------------------------------------------------------------

ResidualSeries::ResidualSeries(Date origin, std::vector<Observation> points)
    : origin_(origin), points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].value)) throw DataError("non-finite residual value");
    if (i > 0 && points_[i].index <= points_[i - 1].index) {
      throw DataError("residual indices must be strictly increasing");
    }
  }
}

ResidualSeries ResidualSeries::contiguous(Date origin, std::vector<double> values, long first_index) {
  std::vector<Observation> pts;
  pts.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    pts.push_back({first_index + static_cast<long>(i), values[i]});
  }
  return ResidualSeries(origin, std::move(pts));
}

std::vector<double> ResidualSeries::values() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.value);
  return out;
}

}  // namespace loadfc
