#include "loadfc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "json_util.hpp"
#include "loadfc/errors.hpp"
#include "loadfc/filter.hpp"

namespace loadfc {

namespace {

struct Boundary {
  Date date;
  double slope;
};

std::vector<Boundary> boundaries(const SynthParams& p) {
  std::vector<Boundary> out;
  const int first_year = year_of(p.start);
  for (int y = first_year - 1; y <= year_of(p.end); ++y) {
    const auto row = static_cast<std::size_t>(std::clamp(y - first_year, 0, static_cast<int>(p.segment_slopes.size()) - 1));
    for (std::size_t s = 0; s < p.segment_starts.size(); ++s) {
      const auto [m, d] = p.segment_starts[s];
      out.push_back({make_date(y, m, d), p.segment_slopes[row][s]});
    }
  }
  return out;
}

double spring_dip(Date date, const SynthParams& p) {
  const int y = year_of(date);
  long best = std::labs(days_between(p.calendar.spring_center(y), date));
  for (int adj : {y - 1, y + 1}) {
    if (p.calendar.spring_festival_starts().count(adj)) {
      best = std::min(best, std::labs(days_between(p.calendar.spring_center(adj), date)));
    }
  }
  if (best > p.spring_half_width) return 0.0;
  const double r = p.spring_half_width > 0 ? static_cast<double>(best) / p.spring_half_width : 0.0;
  return -p.spring_depth * (1.0 - r * r);
}

std::pair<unsigned, unsigned> parse_month_day(const std::string& s) {
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (s.size() != 5 || std::sscanf(s.c_str(), "%2u-%2u%c", &m, &d, &tail) != 2) {
    throw ConfigError("segment start '" + s + "' must look like MM-DD");
  }
  const std::chrono::month_day md{std::chrono::month{m}, std::chrono::day{d}};
  if (!md.ok()) throw ConfigError("segment start '" + s + "' is not a calendar day");
  return {m, d};
}

std::string format_month_day(std::pair<unsigned, unsigned> md) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u-%02u", md.first, md.second);
  return buf;
}

}  // namespace

void SynthParams::validate() const {
  if (end < start) throw ConfigError("synthetic end date precedes start date");
  if (!std::isfinite(base_level)) throw ConfigError("base_level must be finite");
  if (segment_starts.empty()) throw ConfigError("at least one trend segment is required");
  for (std::size_t i = 1; i < segment_starts.size(); ++i) {
    if (segment_starts[i] <= segment_starts[i - 1]) {
      throw ConfigError("segment boundaries must be strictly increasing within the year");
    }
  }
  if (segment_slopes.empty()) throw ConfigError("segment slopes are required");
  for (const auto& row : segment_slopes) {
    if (row.size() != segment_starts.size()) {
      throw ConfigError("each year needs one slope per segment (" + std::to_string(segment_starts.size()) + ")");
    }
  }
  if (!(residual.sigma > 0.0)) throw ConfigError("residual sigma must be > 0");
  if (residual.kind == ResidualProcess::Kind::Ar1 && !(std::abs(residual.phi) < 1.0)) {
    throw ConfigError("AR(1) coefficient must satisfy |phi| < 1");
  }
  if (spring_half_width < 0) throw ConfigError("spring half width must be >= 0");
  for (const auto& [name, v] : holiday_offsets) {
    const auto& names = calendar.holiday_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ConfigError("holiday offset for unknown holiday '" + name + "'");
    }
  }
}

SynthOutput generate(const SynthParams& p) {
  p.validate();
  const auto n = static_cast<std::size_t>(days_between(p.start, p.end) + 1);

  // Slope in force at the first day, then every change strictly inside the span.
  const auto bounds = boundaries(p);
  GroundTruth gt;
  double slope = bounds.front().slope;
  for (const auto& b : bounds) {
    if (b.date <= p.start) slope = b.slope;
  }
  gt.segment_slopes.push_back(slope);
  std::vector<long> hinge_at;
  std::vector<double> hinge_delta;
  for (const auto& b : bounds) {
    if (b.date > p.start && b.date < p.end) {
      gt.breakpoints.push_back(b.date);
      hinge_at.push_back(days_between(p.start, b.date));
      hinge_delta.push_back(b.slope - gt.segment_slopes.back());
      gt.segment_slopes.push_back(b.slope);
    }
  }

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> noise(0.0, p.residual.sigma);
  const bool ar = p.residual.kind == ResidualProcess::Kind::Ar1;

  for (auto* v : {&gt.trend, &gt.weekday, &gt.holiday, &gt.adjustment, &gt.spring, &gt.residual}) v->reserve(n);
  std::vector<double> values;
  values.reserve(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const long t = static_cast<long>(i);
    const Date d = add_days(p.start, t);

    double trend = p.base_level + gt.segment_slopes.front() * static_cast<double>(t);
    for (std::size_t h = 0; h < hinge_at.size(); ++h) trend += hinge_delta[h] * static_cast<double>(hinge(t, hinge_at[h]));

    const double wd = p.weekday_offsets[iso_weekday_of(d) - 1];
    double hol = 0.0;
    for (const auto& h : p.calendar.holidays()) {
      if (h.range.contains(d)) {
        auto it = p.holiday_offsets.find(h.name);
        if (it != p.holiday_offsets.end()) hol = it->second;
        break;
      }
    }
    const double adj = encode_adjustment(d, p.calendar) ? p.adjustment_offset : 0.0;
    const double sf = p.spring_depth != 0.0 ? spring_dip(d, p) : 0.0;

    double e = 0.0;
    if (ar) {
      e = i == 0 ? noise(rng) / std::sqrt(1.0 - p.residual.phi * p.residual.phi) : p.residual.phi * prev + noise(rng);
    } else {
      e = noise(rng);
    }
    prev = e;

    gt.trend.push_back(trend);
    gt.weekday.push_back(wd);
    gt.holiday.push_back(hol);
    gt.adjustment.push_back(adj);
    gt.spring.push_back(sf);
    gt.residual.push_back(e);
    values.push_back(trend + wd + hol + adj + sf + e);
  }
  return {DailySeries(p.start, std::move(values)), std::move(gt)};
}

// ---------------------------------------------------------------------------

SynthParams synth_params_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::config_required;
  using detail::config_value;
  if (!j.is_object()) throw ConfigError("synthetic parameters must be a JSON object");
  SynthParams p;
  p.start = detail::config_date(j.at("start_date"), "start_date");
  p.end = detail::config_date(j.at("end_date"), "end_date");
  p.base_level = config_required<double>(j, "base_level");

  const auto& seg = j.at("segments");
  for (const auto& s : config_required<std::vector<std::string>>(seg, "starts")) p.segment_starts.push_back(parse_month_day(s));
  p.segment_slopes = config_required<std::vector<std::vector<double>>>(seg, "slopes");

  if (j.contains("weekday_offsets")) {
    const auto wd = config_required<std::vector<double>>(j, "weekday_offsets");
    if (wd.size() != 7) throw ConfigError("weekday_offsets needs 7 values (Monday first)");
    std::copy(wd.begin(), wd.end(), p.weekday_offsets.begin());
  }
  p.holiday_offsets = config_value<std::map<std::string, double>>(j, "holiday_offsets", {});
  p.adjustment_offset = config_value<double>(j, "adjustment_offset", 0.0);

  if (j.contains("calendar")) {
    const auto& cal = j.at("calendar");
    if (cal.is_string()) {
      std::filesystem::path cp = cal.get<std::string>();
      if (cp.is_relative()) cp = base_dir / cp;
      p.calendar = load_calendar(cp);
    } else {
      p.calendar = calendar_from_json(cal);
    }
  }
  p.spring_half_width = p.calendar.spring_half_width();
  if (j.contains("spring")) {
    const auto& s = j.at("spring");
    p.spring_depth = config_value<double>(s, "depth", 0.0);
    p.spring_half_width = config_value<int>(s, "half_width", p.spring_half_width);
  }

  if (j.contains("residual")) {
    const auto& r = j.at("residual");
    const auto kind = config_value<std::string>(r, "kind", "white");
    if (kind == "white") {
      p.residual.kind = ResidualProcess::Kind::White;
    } else if (kind == "ar1") {
      p.residual.kind = ResidualProcess::Kind::Ar1;
    } else {
      throw ConfigError("residual kind must be 'white' or 'ar1'");
    }
    p.residual.sigma = config_required<double>(r, "sigma");
    p.residual.phi = config_value<double>(r, "phi", 0.0);
  }
  p.seed = config_value<std::uint64_t>(j, "seed", p.seed);
  p.validate();
  return p;
}

nlohmann::json synth_params_to_json(const SynthParams& p) {
  nlohmann::json j;
  j["start_date"] = format_date(p.start);
  j["end_date"] = format_date(p.end);
  j["base_level"] = p.base_level;
  std::vector<std::string> starts;
  for (const auto& md : p.segment_starts) starts.push_back(format_month_day(md));
  j["segments"] = {{"starts", starts}, {"slopes", p.segment_slopes}};
  j["weekday_offsets"] = p.weekday_offsets;
  j["holiday_offsets"] = p.holiday_offsets;
  j["adjustment_offset"] = p.adjustment_offset;
  j["spring"] = {{"depth", p.spring_depth}, {"half_width", p.spring_half_width}};
  j["residual"] = {{"kind", p.residual.kind == ResidualProcess::Kind::Ar1 ? "ar1" : "white"},
                   {"sigma", p.residual.sigma},
                   {"phi", p.residual.phi}};
  j["calendar"] = calendar_to_json(p.calendar);
  j["seed"] = p.seed;
  return j;
}

SynthParams load_synth_params(const std::filesystem::path& path) {
  return synth_params_from_json(detail::parse_json(read_text_file(path), path.string()), path.parent_path());
}

CsvTable ground_truth_to_csv(const SynthOutput& out) {
  CsvTable t;
  t.header = {"date", "trend", "weekday", "holiday", "adjustment", "spring", "residual", "total"};
  const auto& g = out.truth;
  for (std::size_t i = 0; i < out.series.size(); ++i) {
    t.rows.push_back({format_date(out.series.date_at(i)), format_number(g.trend[i]), format_number(g.weekday[i]),
                      format_number(g.holiday[i]), format_number(g.adjustment[i]), format_number(g.spring[i]),
                      format_number(g.residual[i]), format_number(out.series.value(i))});
  }
  return t;
}

}  // namespace loadfc
