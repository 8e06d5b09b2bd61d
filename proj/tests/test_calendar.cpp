#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "loadfc/calendar.hpp"
#include "loadfc/errors.hpp"

using namespace loadfc;

namespace {

CalendarSpec sample_spec(bool window = false) {
  CalendarSpec::Options o;
  o.holidays = {
      {"National Day", {make_date(2021, 10, 1), make_date(2021, 10, 7)}},
      {"Labour Day", {make_date(2021, 5, 1), make_date(2021, 5, 5)}},
      {"National Day", {make_date(2020, 10, 1), make_date(2020, 10, 8)}},
  };
  o.spring_festival_starts = {{2020, make_date(2020, 1, 24)},
                              {2021, make_date(2021, 2, 11)},
                              {2022, make_date(2022, 1, 31)}};
  o.adjustment_days = {make_date(2021, 9, 26), make_date(2021, 10, 9)};
  o.spring_window_indicator = window;
  return CalendarSpec(o);
}

template <typename V>
int ones(const V& v) {
  return static_cast<int>(std::count(v.begin(), v.end(), 1.0));
}

template <typename V>
bool binary(const V& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

}  // namespace

TEST_CASE("month dummies") {
  const auto jan = encode_month(make_date(2020, 1, 15));
  CHECK(ones(jan) == 0);
  const auto feb = encode_month(make_date(2020, 2, 1));
  CHECK(feb[0] == 1.0);
  CHECK(ones(feb) == 1);
  const auto dec = encode_month(make_date(2020, 12, 31));
  CHECK(dec[10] == 1.0);
  CHECK(ones(dec) == 1);
  // Leap day is an ordinary February day.
  CHECK(encode_month(make_date(2020, 2, 29)) == feb);
}

TEST_CASE("weekday dummies") {
  CHECK(ones(encode_weekday(make_date(2018, 1, 1))) == 0);
  const auto tue = encode_weekday(make_date(2018, 1, 2));
  CHECK(tue[0] == 1.0);
  CHECK(ones(tue) == 1);
  const auto sun = encode_weekday(make_date(2018, 1, 7));
  CHECK(sun[5] == 1.0);
  CHECK(ones(sun) == 1);
  // Weekday by Zeller-free counting: 7 days later is the same weekday.
  for (int k = 0; k < 60; ++k) {
    const Date d = add_days(make_date(2018, 1, 1), k);
    CHECK(encode_weekday(d) == encode_weekday(add_days(d, 7 * (k + 1))));
    CHECK(iso_weekday_of(d) == static_cast<unsigned>(k % 7) + 1);
  }
}

TEST_CASE("dummy vectors are binary with at most one hot entry") {
  const auto spec = sample_spec();
  for (Date d = make_date(2020, 1, 1); d <= make_date(2022, 3, 31); d = add_days(d, 1)) {
    const auto m = encode_month(d);
    const auto w = encode_weekday(d);
    const auto h = encode_holiday(d, spec);
    CHECK(binary(m));
    CHECK(binary(w));
    CHECK(binary(h));
    CHECK(ones(m) <= 1);
    CHECK(ones(w) <= 1);
    CHECK(ones(h) <= 1);
    CHECK(encode_month(d) == m);
  }
}

TEST_CASE("holiday dummies") {
  const auto spec = sample_spec();
  REQUIRE(spec.holiday_names() == std::vector<std::string>{"National Day", "Labour Day"});
  CHECK(ones(encode_holiday(make_date(2021, 6, 15), spec)) == 0);
  const auto nd = encode_holiday(make_date(2021, 10, 3), spec);
  CHECK(nd == std::vector<double>{1.0, 0.0});
  CHECK(encode_holiday(make_date(2020, 10, 8), spec) == std::vector<double>{1.0, 0.0});
  CHECK(encode_holiday(make_date(2021, 10, 8), spec) == std::vector<double>{0.0, 0.0});
  // Inside the Spring Festival window: handled by S, not the holiday dummies.
  CHECK(ones(encode_holiday(make_date(2021, 2, 13), spec)) == 0);
  CHECK(spring_distance(make_date(2021, 2, 13), spec) == 1);
}

TEST_CASE("adjustment days") {
  const auto spec = sample_spec();
  CHECK(encode_adjustment(make_date(2021, 9, 25), spec) == 0);
  CHECK(encode_adjustment(make_date(2021, 9, 26), spec) == 1);

  auto o = sample_spec().options();
  o.adjustment_days.push_back(make_date(2021, 10, 2));
  CHECK_THROWS_AS(CalendarSpec{o}, ConfigError);
}

TEST_CASE("calendar validation") {
  auto o = sample_spec().options();
  o.holidays.push_back({"Spring Festival", {make_date(2021, 2, 11), make_date(2021, 2, 17)}});
  CHECK_THROWS_AS(CalendarSpec{o}, ConfigError);

  o = sample_spec().options();
  o.holidays.push_back({"Golden Week", {make_date(2021, 10, 6), make_date(2021, 10, 10)}});
  CHECK_THROWS_AS(CalendarSpec{o}, ConfigError);

  o = sample_spec().options();
  o.spring_half_width = -1;
  CHECK_THROWS_AS(CalendarSpec{o}, ConfigError);

  o = sample_spec().options();
  o.spring_center_offset = -2;
  CHECK_THROWS_AS(CalendarSpec{o}, ConfigError);

  o = sample_spec().options();
  o.holidays.push_back({"Backwards", {make_date(2021, 12, 5), make_date(2021, 12, 1)}});
  CHECK_THROWS_AS(CalendarSpec{o}, ConfigError);
}

TEST_CASE("spring festival distance") {
  const auto spec = sample_spec();
  const Date center = spec.spring_center(2021);
  CHECK(center == make_date(2021, 2, 14));  // 4th holiday day
  CHECK(spring_distance(center, spec) == 0);
  CHECK(spring_distance(add_days(center, 10), spec) == 10);
  CHECK(spring_distance(add_days(center, 21), spec) == 21);
  CHECK(spring_distance(add_days(center, 22), spec) == 0);
  for (long k = 0; k < 60; ++k) {
    CHECK(spring_distance(add_days(center, k), spec) == spring_distance(add_days(center, -k), spec));
  }
  // Late December reaches into an early next-year festival only when in range.
  const Date c22 = spec.spring_center(2022);
  CHECK(spring_distance(make_date(2021, 12, 31), spec) == 0);
  CHECK(spring_distance(add_days(c22, -20), spec) == 20);
  CHECK(year_of(add_days(c22, -20)) == 2022);

  CHECK(spring_window(center, spec) == 1);
  CHECK(spring_window(add_days(center, 21), spec) == 1);
  CHECK(spring_window(add_days(center, 22), spec) == 0);

  CHECK_THROWS_AS(spring_distance(make_date(2019, 6, 1), spec), MissingCalendarError);
  CHECK_THROWS_AS(spec.spring_center(2030), MissingCalendarError);
}

TEST_CASE("feature layout") {
  const CalendarSpec empty;
  const auto base = FeatureLayout::build({}, empty);
  CHECK(base.size() == 2 + 11 + 6 + 0 + 1 + 3);
  CHECK(base.size() == 23);

  const auto spec = sample_spec(true);
  const auto full = FeatureLayout::build({"a", "b", "c", "d", "e", "f"}, spec);
  CHECK(full.count(ColumnGroup::Hinge) == 6);
  CHECK(full.count(ColumnGroup::Holiday) == 2);
  CHECK(full.count(ColumnGroup::SpringWindow) == 1);
  CHECK(full.size() == 23 + 6 + 2 + 1);
  CHECK(full[0].group == ColumnGroup::Intercept);
  CHECK(full[1].group == ColumnGroup::Trend);
  CHECK(full.first_of(ColumnGroup::Month) == 8);
  CHECK(layout_from_json(layout_to_json(full)) == full);
  CHECK_THROWS_AS(base.first_of(ColumnGroup::SpringWindow), ConfigError);
  for (auto g : {ColumnGroup::Intercept, ColumnGroup::Hinge, ColumnGroup::SpringWindow}) {
    CHECK(group_from_name(group_name(g)) == g);
  }
}

TEST_CASE("calendar json round trip") {
  const auto spec = sample_spec(true);
  const auto back = calendar_from_json(calendar_to_json(spec));
  CHECK(back.holiday_names() == spec.holiday_names());
  CHECK(back.spring_festival_starts() == spec.spring_festival_starts());
  CHECK(back.adjustment_days() == spec.adjustment_days());
  CHECK(back.spring_window_indicator());
  CHECK(calendar_to_json(back) == calendar_to_json(spec));
}
