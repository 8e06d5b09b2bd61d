#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace loadfc {

/// Calendar day in the proleptic Gregorian calendar.
using Date = std::chrono::sys_days;

Date make_date(int year, unsigned month, unsigned day);

/// Parses `YYYY-MM-DD`. Throws DataError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(Date date);

inline Date add_days(Date date, long days) { return date + std::chrono::days{days}; }
inline long days_between(Date from, Date to) { return (to - from).count(); }

int year_of(Date date);
unsigned month_of(Date date);
/// ISO weekday: Monday = 1 ... Sunday = 7.
unsigned iso_weekday_of(Date date);

/// Inclusive date range.
struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return first <= d && d <= last; }
  bool overlaps(const DateRange& other) const { return first <= other.last && other.first <= last; }
  long length() const { return days_between(first, last) + 1; }
};

/// Consecutive daily consumption observations starting at `start()`.
///
/// Immutable after construction. Gaps cannot be represented here; callers
/// express them through an ExclusionMask.
class DailySeries {
 public:
  DailySeries(Date start, std::vector<double> values);

  Date start() const { return start_; }
  Date end() const { return add_days(start_, static_cast<long>(values_.size()) - 1); }
  DateRange span() const { return {start(), end()}; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double value(std::size_t i) const { return values_.at(i); }
  Date date_at(std::size_t i) const { return add_days(start_, static_cast<long>(i)); }
  bool contains(Date d) const { return span().contains(d); }

  /// Value on a given calendar date; throws OutOfRangeError outside the span.
  double at(Date d) const;

 private:
  Date start_;
  std::vector<double> values_;
};

/// Days elapsed since the series start (start maps to 0).
long day_index(const DailySeries& series, Date date);

/// Splits into [start, boundary) and [boundary, end].
std::pair<DailySeries, DailySeries> split(const DailySeries& series, Date boundary);

/// Joins two series when `second` starts the day after `first` ends.
DailySeries concatenate(const DailySeries& first, const DailySeries& second);

/// Sorted, non-overlapping inclusive date ranges dropped from fitting.
class ExclusionMask {
 public:
  ExclusionMask() = default;
  explicit ExclusionMask(std::vector<DateRange> ranges);

  std::span<const DateRange> ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }
  bool excludes(Date d) const;

  /// Throws ConfigError when some range lies completely outside the series span.
  void validate_for(const DailySeries& series) const;

 private:
  std::vector<DateRange> ranges_;
};

/// A retained observation keyed by its calendar-true day index.
struct Observation {
  long index;
  double value;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Retained rows with their original day indices (no renumbering).
std::vector<Observation> apply_mask(const DailySeries& series, const ExclusionMask& mask);

/// Residual values aligned with the retained days of a DailySeries.
///
/// Indices are days since `origin()` and strictly increasing; missing
/// indices are excluded days. Values may be negative.
class ResidualSeries {
 public:
  ResidualSeries(Date origin, std::vector<Observation> points);
  static ResidualSeries contiguous(Date origin, std::vector<double> values, long first_index = 0);

  Date origin() const { return origin_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::span<const Observation> points() const { return points_; }
  std::vector<double> values() const;
  Date date_of(const Observation& obs) const { return add_days(origin_, obs.index); }

 private:
  Date origin_;
  std::vector<Observation> points_;
};

}  // namespace loadfc
