#include "loadfc/calendar.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "json_util.hpp"
#include "loadfc/csv.hpp"
#include "loadfc/errors.hpp"

namespace loadfc {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool names_spring_festival(const std::string& name) {
  const auto n = lower(name);
  return n == "spring festival" || n == "chinese new year" || n == "lunar new year";
}

}  // namespace

CalendarSpec::CalendarSpec(Options options) : opts_(std::move(options)) {
  if (opts_.spring_half_width < 0) throw ConfigError("spring_half_width must be >= 0");
  if (opts_.spring_center_offset < 0) throw ConfigError("spring_center_offset must be >= 0");

  for (const auto& [year, start] : opts_.spring_festival_starts) {
    if (year_of(start) != year) {
      throw ConfigError("Spring Festival start " + format_date(start) + " registered under year " +
                        std::to_string(year));
    }
  }

  for (std::size_t i = 0; i < opts_.holidays.size(); ++i) {
    const auto& h = opts_.holidays[i];
    if (h.name.empty()) throw ConfigError("holiday with empty name");
    if (names_spring_festival(h.name)) {
      throw ConfigError("the Spring Festival must not appear in the generic holiday list");
    }
    if (h.range.last < h.range.first) {
      throw ConfigError("holiday '" + h.name + "' ends before it starts");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (opts_.holidays[k].range.overlaps(h.range)) {
        throw ConfigError("holiday '" + h.name + "' starting " + format_date(h.range.first) +
                          " overlaps '" + opts_.holidays[k].name + "'");
      }
    }
    if (std::find(names_.begin(), names_.end(), h.name) == names_.end()) names_.push_back(h.name);
  }

  std::sort(opts_.adjustment_days.begin(), opts_.adjustment_days.end());
  opts_.adjustment_days.erase(std::unique(opts_.adjustment_days.begin(), opts_.adjustment_days.end()),
                              opts_.adjustment_days.end());
  for (Date d : opts_.adjustment_days) {
    for (const auto& h : opts_.holidays) {
      if (h.range.contains(d)) {
        throw ConfigError("adjustment day " + format_date(d) + " lies inside holiday '" + h.name +
                          "'");
      }
    }
  }
}

Date CalendarSpec::spring_center(int year) const {
  auto it = opts_.spring_festival_starts.find(year);
  if (it == opts_.spring_festival_starts.end()) {
    throw MissingCalendarError("no Spring Festival start registered for year " + std::to_string(year));
  }
  return add_days(it->second, opts_.spring_center_offset);
}

CalendarSpec calendar_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("calendar must be a JSON object");
  CalendarSpec::Options o;
  if (j.contains("holidays")) {
    for (const auto& h : j.at("holidays")) {
      const auto name = detail::config_required<std::string>(h, "name");
      o.holidays.push_back({name, {detail::config_date(h.at("first"), "holiday " + name),
                                   detail::config_date(h.at("last"), "holiday " + name)}});
    }
  }
  if (j.contains("spring_festival_starts")) {
    const auto& sf = j.at("spring_festival_starts");
    if (!sf.is_object()) throw ConfigError("spring_festival_starts must map year -> date");
    for (const auto& [key, value] : sf.items()) {
      char* end = nullptr;
      const long year = std::strtol(key.c_str(), &end, 10);
      if (key.empty() || *end != '\0') throw ConfigError("bad Spring Festival year '" + key + "'");
      o.spring_festival_starts[static_cast<int>(year)] =
          detail::config_date(value, "spring_festival_starts." + key);
    }
  }
  if (j.contains("adjustment_days")) {
    for (const auto& d : j.at("adjustment_days")) {
      o.adjustment_days.push_back(detail::config_date(d, "adjustment_days"));
    }
  }
  o.spring_half_width = detail::config_value<int>(j, "spring_half_width", 21);
  o.spring_center_offset = detail::config_value<int>(j, "spring_center_offset", 3);
  o.spring_window_indicator = detail::config_value<bool>(j, "spring_window_indicator", false);
  return CalendarSpec(std::move(o));
}

nlohmann::json calendar_to_json(const CalendarSpec& spec) {
  nlohmann::json j;
  j["holidays"] = nlohmann::json::array();
  for (const auto& h : spec.holidays()) {
    j["holidays"].push_back(
        {{"name", h.name}, {"first", format_date(h.range.first)}, {"last", format_date(h.range.last)}});
  }
  j["spring_festival_starts"] = nlohmann::json::object();
  for (const auto& [year, start] : spec.spring_festival_starts()) {
    j["spring_festival_starts"][std::to_string(year)] = format_date(start);
  }
  j["adjustment_days"] = nlohmann::json::array();
  for (Date d : spec.adjustment_days()) j["adjustment_days"].push_back(format_date(d));
  j["spring_half_width"] = spec.spring_half_width();
  j["spring_center_offset"] = spec.spring_center_offset();
  j["spring_window_indicator"] = spec.spring_window_indicator();
  return j;
}

CalendarSpec load_calendar(const std::filesystem::path& path) {
  return calendar_from_json(detail::parse_json(read_text_file(path), path.string()));
}

// ---------------------------------------------------------------------------

std::array<double, 11> encode_month(Date date) {
  std::array<double, 11> v{};
  const unsigned m = month_of(date);
  if (m > 1) v[m - 2] = 1.0;
  return v;
}

std::array<double, 6> encode_weekday(Date date) {
  std::array<double, 6> v{};
  const unsigned wd = iso_weekday_of(date);
  if (wd > 1) v[wd - 2] = 1.0;
  return v;
}

std::vector<double> encode_holiday(Date date, const CalendarSpec& spec) {
  const auto& names = spec.holiday_names();
  std::vector<double> v(names.size(), 0.0);
  for (const auto& h : spec.holidays()) {
    if (h.range.contains(date)) {
      const auto pos = std::find(names.begin(), names.end(), h.name) - names.begin();
      v[static_cast<std::size_t>(pos)] = 1.0;
      break;  // ranges never overlap
    }
  }
  return v;
}

int encode_adjustment(Date date, const CalendarSpec& spec) {
  return std::binary_search(spec.adjustment_days().begin(), spec.adjustment_days().end(), date) ? 1
                                                                                                : 0;
}

namespace {

// Signed-magnitude distance to the closest registered center.
long nearest_center_distance(Date date, const CalendarSpec& spec) {
  const int year = year_of(date);
  long best = std::labs(days_between(spec.spring_center(year), date));
  for (int adjacent : {year - 1, year + 1}) {
    if (spec.spring_festival_starts().count(adjacent)) {
      best = std::min(best, std::labs(days_between(spec.spring_center(adjacent), date)));
    }
  }
  return best;
}

}  // namespace

long spring_distance(Date date, const CalendarSpec& spec) {
  const long d = nearest_center_distance(date, spec);
  return d <= spec.spring_half_width() ? d : 0;
}

int spring_window(Date date, const CalendarSpec& spec) {
  return nearest_center_distance(date, spec) <= spec.spring_half_width() ? 1 : 0;
}

// ---------------------------------------------------------------------------

const char* group_name(ColumnGroup group) {
  switch (group) {
    case ColumnGroup::Intercept: return "intercept";
    case ColumnGroup::Trend: return "trend";
    case ColumnGroup::Hinge: return "hinge";
    case ColumnGroup::Month: return "month";
    case ColumnGroup::Weekday: return "weekday";
    case ColumnGroup::Holiday: return "holiday";
    case ColumnGroup::Adjustment: return "adjustment";
    case ColumnGroup::SpringCubic: return "spring_cubic";
    case ColumnGroup::SpringSquare: return "spring_square";
    case ColumnGroup::SpringLinear: return "spring_linear";
    case ColumnGroup::SpringWindow: return "spring_window";
  }
  return "unknown";
}

ColumnGroup group_from_name(const std::string& name) {
  for (int g = 0; g <= static_cast<int>(ColumnGroup::SpringWindow); ++g) {
    if (name == group_name(static_cast<ColumnGroup>(g))) return static_cast<ColumnGroup>(g);
  }
  throw ConfigError("unknown column group '" + name + "'");
}

FeatureLayout FeatureLayout::build(const std::vector<std::string>& hinge_labels,
                                   const CalendarSpec& spec) {
  static constexpr const char* kMonths[] = {"Feb", "Mar", "Apr", "May", "Jun", "Jul",
                                            "Aug", "Sep", "Oct", "Nov", "Dec"};
  static constexpr const char* kDays[] = {"Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};

  std::vector<Column> cols;
  cols.push_back({ColumnGroup::Intercept, "intercept"});
  cols.push_back({ColumnGroup::Trend, "t"});
  for (const auto& label : hinge_labels) cols.push_back({ColumnGroup::Hinge, "hinge@" + label});
  for (const char* m : kMonths) cols.push_back({ColumnGroup::Month, std::string("month:") + m});
  for (const char* d : kDays) cols.push_back({ColumnGroup::Weekday, std::string("weekday:") + d});
  for (const auto& name : spec.holiday_names()) cols.push_back({ColumnGroup::Holiday, "holiday:" + name});
  cols.push_back({ColumnGroup::Adjustment, "adjustment"});
  cols.push_back({ColumnGroup::SpringCubic, "S^3"});
  cols.push_back({ColumnGroup::SpringSquare, "S^2"});
  cols.push_back({ColumnGroup::SpringLinear, "S"});
  if (spec.spring_window_indicator()) cols.push_back({ColumnGroup::SpringWindow, "spring_window"});
  return FeatureLayout(std::move(cols));
}

std::size_t FeatureLayout::count(ColumnGroup group) const {
  return static_cast<std::size_t>(
      std::count_if(columns_.begin(), columns_.end(), [group](const Column& c) { return c.group == group; }));
}

std::size_t FeatureLayout::first_of(ColumnGroup group) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].group == group) return i;
  }
  throw ConfigError(std::string("layout has no '") + group_name(group) + "' column");
}

nlohmann::json layout_to_json(const FeatureLayout& layout) {
  auto arr = nlohmann::json::array();
  for (const auto& c : layout.columns()) arr.push_back({{"group", group_name(c.group)}, {"name", c.name}});
  return arr;
}

FeatureLayout layout_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("layout must be an array");
  std::vector<Column> cols;
  for (const auto& c : j) {
    cols.push_back({group_from_name(detail::config_required<std::string>(c, "group")),
                    detail::config_required<std::string>(c, "name")});
  }
  return FeatureLayout(std::move(cols));
}

}  // namespace loadfc
