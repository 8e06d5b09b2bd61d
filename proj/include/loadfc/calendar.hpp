#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "loadfc/series.hpp"

namespace loadfc {

struct Holiday {
  std::string name;
  DateRange range;
};

/// Holiday windows, adjustment days and Spring Festival dates.
///
/// The Spring Festival is never part of `holidays()`; it enters the model
/// through the distance variable instead. Validated on construction.
class CalendarSpec {
 public:
  struct Options {
    std::vector<Holiday> holidays;
    std::map<int, Date> spring_festival_starts;
    std::vector<Date> adjustment_days;
    int spring_half_width = 21;
    int spring_center_offset = 3;
    bool spring_window_indicator = false;
  };

  CalendarSpec() : CalendarSpec(Options{}) {}
  explicit CalendarSpec(Options options);

  const std::vector<Holiday>& holidays() const { return opts_.holidays; }
  const std::map<int, Date>& spring_festival_starts() const { return opts_.spring_festival_starts; }
  const std::vector<Date>& adjustment_days() const { return opts_.adjustment_days; }
  int spring_half_width() const { return opts_.spring_half_width; }
  int spring_center_offset() const { return opts_.spring_center_offset; }
  bool spring_window_indicator() const { return opts_.spring_window_indicator; }
  const Options& options() const { return opts_; }

  /// Distinct holiday names in order of first appearance; one dummy each.
  const std::vector<std::string>& holiday_names() const { return names_; }

  /// Festival center for a year (start + center offset). Throws MissingCalendarError.
  Date spring_center(int year) const;

 private:
  Options opts_;
  std::vector<std::string> names_;
};

CalendarSpec calendar_from_json(const nlohmann::json& j);
nlohmann::json calendar_to_json(const CalendarSpec& spec);
CalendarSpec load_calendar(const std::filesystem::path& path);

// One-hot encoders. Baselines (all zeros): January, Monday, non-holiday.
std::array<double, 11> encode_month(Date date);
std::array<double, 6> encode_weekday(Date date);
std::vector<double> encode_holiday(Date date, const CalendarSpec& spec);
int encode_adjustment(Date date, const CalendarSpec& spec);

/// |date - S_c| when within the half width of the nearest festival center, else 0.
long spring_distance(Date date, const CalendarSpec& spec);
/// 1 when the date lies within the half width of the nearest festival center.
int spring_window(Date date, const CalendarSpec& spec);

enum class ColumnGroup {
  Intercept,
  Trend,
  Hinge,
  Month,
  Weekday,
  Holiday,
  Adjustment,
  SpringCubic,
  SpringSquare,
  SpringLinear,
  SpringWindow,
};

const char* group_name(ColumnGroup group);
ColumnGroup group_from_name(const std::string& name);

struct Column {
  ColumnGroup group;
  std::string name;

  friend bool operator==(const Column&, const Column&) = default;
};

/// Ordered description of the regression design columns.
///
/// Order: intercept, t, hinges, 11 month dummies, 6 weekday dummies, one per
/// named holiday, adjustment day, S^3, S^2, S, and optionally the window
/// indicator.
class FeatureLayout {
 public:
  FeatureLayout() = default;
  explicit FeatureLayout(std::vector<Column> columns) : columns_(std::move(columns)) {}

  static FeatureLayout build(const std::vector<std::string>& hinge_labels, const CalendarSpec& spec);

  std::size_t size() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& operator[](std::size_t i) const { return columns_.at(i); }
  std::size_t count(ColumnGroup group) const;
  /// First column of a group; throws ConfigError if absent.
  std::size_t first_of(ColumnGroup group) const;

  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;

 private:
  std::vector<Column> columns_;
};

nlohmann::json layout_to_json(const FeatureLayout& layout);
FeatureLayout layout_from_json(const nlohmann::json& j);

}  // namespace loadfc
