#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "loadfc/errors.hpp"
#include "loadfc/filter.hpp"
#include "loadfc/synth.hpp"

using namespace loadfc;

namespace {

CalendarSpec spec_2018_2022(bool window = false) {
  CalendarSpec::Options o;
  o.holidays = {{"National Day", {make_date(2018, 10, 1), make_date(2018, 10, 7)}},
                {"National Day", {make_date(2019, 10, 1), make_date(2019, 10, 7)}},
                {"National Day", {make_date(2020, 10, 1), make_date(2020, 10, 8)}},
                {"National Day", {make_date(2021, 10, 1), make_date(2021, 10, 7)}},
                {"Labour Day", {make_date(2019, 5, 1), make_date(2019, 5, 4)}},
                {"Labour Day", {make_date(2021, 5, 1), make_date(2021, 5, 5)}}};
  o.spring_festival_starts = {{2017, make_date(2017, 1, 27)}, {2018, make_date(2018, 2, 15)},
                              {2019, make_date(2019, 2, 4)},  {2020, make_date(2020, 1, 24)},
                              {2021, make_date(2021, 2, 11)}, {2022, make_date(2022, 1, 31)},
                              {2023, make_date(2023, 1, 21)}};
  o.adjustment_days = {make_date(2019, 9, 29), make_date(2021, 9, 26)};
  o.spring_window_indicator = window;
  return CalendarSpec(o);
}

SynthParams params(std::uint64_t seed, double sigma) {
  SynthParams p;
  p.start = make_date(2018, 1, 1);
  p.end = make_date(2021, 12, 31);
  p.base_level = 100000.0;
  p.segment_starts = {{1, 1}, {6, 1}, {10, 1}};
  p.segment_slopes = {{40.0, -60.0, 30.0}};
  p.weekday_offsets = {0, 500, 700, 600, 300, -4000, -6000};
  p.holiday_offsets = {{"National Day", -9000.0}, {"Labour Day", -5000.0}};
  p.adjustment_offset = 3000.0;
  p.spring_depth = 20000.0;
  p.spring_half_width = 21;
  p.residual.sigma = sigma;
  p.calendar = spec_2018_2022(true);
  p.seed = seed;
  return p;
}

std::vector<Date> dates_between(Date a, Date b) {
  std::vector<Date> out;
  for (Date d = a; d <= b; d = add_days(d, 1)) out.push_back(d);
  return out;
}

double autocorr(std::span<const double> x, std::size_t lag) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    if (i >= lag) num += (x[i] - mean) * (x[i - lag] - mean);
  }
  return num / den;
}

}  // namespace

TEST_CASE("hinge") {
  static_assert(hinge(5, 3) == 2);
  CHECK(hinge(3, 3) == 0);
  CHECK(hinge(2, 3) == 0);
}

TEST_CASE("design matrix shape and baseline rows") {
  const CalendarSpec empty_holidays([] {
    CalendarSpec::Options o;
    o.spring_festival_starts = {{2018, make_date(2018, 2, 15)}, {2019, make_date(2019, 2, 4)}};
    return o;
  }());
  std::vector<long> idx(30);
  std::iota(idx.begin(), idx.end(), 0);
  const Date origin = make_date(2018, 1, 1);  // a Monday in January
  const auto dm = build_design_matrix(origin, idx, BreakpointPlan{}, empty_holidays);
  CHECK(dm.X.cols() == 23);
  CHECK(dm.layout.size() == 23);
  CHECK(dm.X.rows() == 30);
  // Monday 2018-01-08, index 7: only intercept and t are nonzero.
  for (Eigen::Index c = 0; c < dm.X.cols(); ++c) {
    const double expected = c == 0 ? 1.0 : c == 1 ? 7.0 : 0.0;
    CHECK(dm.X(7, c) == expected);
  }

  std::vector<Date> bps;
  for (int k = 1; k <= 6; ++k) bps.push_back(add_days(origin, 3 * k));
  const auto six = build_design_matrix(origin, idx, BreakpointPlan(bps, {}), empty_holidays);
  CHECK(six.X.cols() == 29);
  CHECK(six.X(10, 2) == static_cast<double>(hinge(10, 3)));

  CHECK_THROWS_AS(build_design_matrix(make_date(2025, 1, 1), idx, BreakpointPlan{}, empty_holidays),
                  MissingCalendarError);
}

TEST_CASE("fit recovers an exact line") {
  const auto spec = spec_2018_2022();
  const Date origin = make_date(2018, 1, 1);
  std::vector<long> idx(120);
  std::iota(idx.begin(), idx.end(), 0);
  const auto dm = build_design_matrix(origin, idx, BreakpointPlan{}, spec);
  std::vector<double> y(idx.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 5000.0 + 12.5 * static_cast<double>(idx[i]);
  const auto f = fit(dm.X, y, dm.layout);
  CHECK(f.coefficients[1] == doctest::Approx(12.5).epsilon(1e-8));
  CHECK(f.coefficients[0] == doctest::Approx(5000.0).epsilon(1e-8));
  CHECK(f.rss < 1e-12 * 5000.0 * 5000.0 * 120.0);
  // Months after April and unused holidays are all-zero and pinned.
  CHECK_FALSE(f.pinned.empty());
  for (auto c : f.pinned) CHECK(f.coefficients[c] == 0.0);
}

TEST_CASE("duplicate breakpoint is a degenerate design") {
  const auto series = generate(params(3, 500.0)).series;
  const BreakpointPlan plan({make_date(2019, 6, 1), make_date(2019, 6, 1)}, {});
  try {
    fit_filter(series, ExclusionMask{}, plan, spec_2018_2022());
    FAIL("expected DegenerateDesignError");
  } catch (const DegenerateDesignError& e) {
    CHECK(e.group() == "hinge");
    CHECK(e.exit_code() == 4);
  }
}

TEST_CASE("fit rejects mismatched and short inputs") {
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 1, 1, 2;
  const FeatureLayout layout({{ColumnGroup::Intercept, "intercept"}, {ColumnGroup::Trend, "t"}});
  const std::vector<double> y2{1.0, 2.0};
  CHECK_THROWS_AS(fit(X, y2, layout), ShapeError);
  const std::vector<double> y3{1.0, 2.0, 3.0};
  CHECK(fit(X, y3, layout).coefficients[1] == doctest::Approx(1.0));
  Eigen::MatrixXd one(1, 2);
  one << 1, 5;
  const std::vector<double> y1{1.0};
  CHECK_THROWS_AS(fit(one, y1, layout), InsufficientDataError);
}

TEST_CASE("filter properties on synthetic data") {
  const auto out = generate(params(11, 800.0));
  const auto spec = spec_2018_2022(true);
  const BreakpointPlan plan(out.truth.breakpoints, {});
  const ExclusionMask mask({{make_date(2020, 1, 1), make_date(2020, 3, 31)}});
  const auto model = fit_filter(out.series, mask, plan, spec);
  const auto res = residuals(model, out.series, mask);

  SUBCASE("residuals have zero mean and reconstruct the series") {
    const auto v = res.values();
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    CHECK(std::abs(mean) < 1e-6 * 100000.0);
    for (const auto& p : res.points()) {
      const Date d = res.date_of(p);
      const std::vector<Date> one{d};
      CHECK(p.value + predict(model, one)[0] == doctest::Approx(out.series.at(d)).epsilon(1e-12));
      CHECK_FALSE(mask.excludes(d));
    }
    CHECK(res.size() == out.series.size() - 91);
  }

  SUBCASE("weekly structure is filtered out") {
    const auto v = res.values();
    const auto raw = out.series.values();
    CHECK(autocorr(v, 7) < autocorr(raw, 7));
  }

  SUBCASE("in-sample prediction equals the fitted values") {
    const auto dates = dates_between(make_date(2019, 1, 1), make_date(2019, 2, 1));
    const auto dm = build_design_matrix(model.origin(),
                                        [&] {
                                          std::vector<long> idx;
                                          for (Date d : dates) idx.push_back(days_between(model.origin(), d));
                                          return idx;
                                        }(),
                                        plan, spec);
    const Eigen::VectorXd fitted =
        dm.X * Eigen::Map<const Eigen::VectorXd>(model.coefficients().data(), model.coefficients().size());
    const auto pred = predict(model, dates);
    for (std::size_t i = 0; i < dates.size(); ++i) CHECK(pred[i] == doctest::Approx(fitted[i]).epsilon(1e-12));
  }

  SUBCASE("trend is continuous across every breakpoint") {
    for (Date bp : plan.historical()) {
      std::vector<Date> around;
      for (long k = -2; k <= 2; ++k) around.push_back(add_days(bp, k));
      const auto c = predict_components(model, around).trend;
      // Extend each side's line to the breakpoint; both limits must agree.
      const double left = c[1] + (c[1] - c[0]);
      const double right = c[3] - (c[4] - c[3]);
      CHECK(left == doctest::Approx(c[2]).epsilon(1e-12));
      CHECK(right == doctest::Approx(c[2]).epsilon(1e-12));
    }
  }

  SUBCASE("excluded dates still get predictions") {
    const auto dates = dates_between(make_date(2020, 2, 1), make_date(2020, 2, 3));
    const auto pred = predict(model, dates);
    for (double p : pred) CHECK(std::isfinite(p));
  }

  SUBCASE("artifact round trip") {
    const auto back = filter_from_json(filter_to_json(model));
    const auto dates = dates_between(make_date(2021, 12, 1), make_date(2022, 1, 31));
    CHECK(predict(back, dates) == predict(model, dates));
  }
}

TEST_CASE("fit is scale-equivariant") {
  const auto out = generate(params(5, 800.0));
  const auto spec = spec_2018_2022(true);
  const BreakpointPlan plan(out.truth.breakpoints, {});
  const auto a = fit_filter(out.series, ExclusionMask{}, plan, spec);
  std::vector<double> scaled(out.series.values().begin(), out.series.values().end());
  for (double& v : scaled) v *= 3.0;
  const auto b = fit_filter(DailySeries(out.series.start(), scaled), ExclusionMask{}, plan, spec);
  for (std::size_t i = 0; i < a.coefficients().size(); ++i) {
    CHECK(b.coefficients()[i] == doctest::Approx(3.0 * a.coefficients()[i]).epsilon(1e-9).scale(1e3));
  }
}

TEST_CASE("adding a breakpoint never increases the training rss") {
  const auto out = generate(params(7, 800.0));
  const auto spec = spec_2018_2022(true);
  std::vector<Date> bps;
  double prev = INFINITY;
  for (Date d : {make_date(2018, 6, 1), make_date(2018, 10, 1), make_date(2019, 3, 15), make_date(2019, 6, 1),
                 make_date(2020, 8, 20)}) {
    bps.push_back(d);
    std::sort(bps.begin(), bps.end());
    const auto m = fit_filter(out.series, ExclusionMask{}, BreakpointPlan(bps, {}), spec);
    CHECK(m.fit().rss <= prev * (1 + 1e-12));
    prev = m.fit().rss;
  }
}

TEST_CASE("future breakpoints set absolute slopes") {
  const auto out = generate(params(13, 800.0));
  const auto spec = spec_2018_2022(true);
  const auto hist = out.truth.breakpoints;
  const auto dates = dates_between(make_date(2022, 1, 1), make_date(2022, 3, 31));

  const auto plain = fit_filter(out.series, ExclusionMask{}, BreakpointPlan(hist, {}), spec);
  const long last_t = days_between(plain.origin(), plain.training_span().last);
  const double current = plain.fitted_slope_after(last_t);

  SUBCASE("slope equal to the prevailing slope changes nothing") {
    const auto same = fit_filter(out.series, ExclusionMask{},
                                 BreakpointPlan(hist, {{make_date(2022, 1, 15), current}}), spec);
    const auto a = predict(plain, dates);
    const auto b = predict(same, dates);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
  }

  SUBCASE("planned slopes appear in the trend") {
    const auto planned = fit_filter(
        out.series, ExclusionMask{},
        BreakpointPlan(hist, {{make_date(2022, 1, 1), -300.0}, {make_date(2022, 3, 10), 200.0}}), spec);
    const auto trend = predict_components(planned, dates).trend;
    for (std::size_t i = 1; i < dates.size(); ++i) {
      const double slope = trend[i] - trend[i - 1];
      const double expected = dates[i] <= make_date(2022, 3, 10) ? -300.0 : 200.0;
      CHECK(slope == doctest::Approx(expected).epsilon(1e-9));
    }
  }

  SUBCASE("plan validation") {
    CHECK_THROWS_AS(BreakpointPlan({make_date(2020, 1, 1)}, {{make_date(2022, 2, 1), 1.0}, {make_date(2022, 1, 1), 2.0}}),
                    ConfigError);
    const BreakpointPlan early({}, {{make_date(2021, 6, 1), 1.0}});
    CHECK_THROWS_AS(early.validate_for(plain.training_span()), ConfigError);
    const BreakpointPlan outside({make_date(2017, 6, 1)}, {});
    CHECK_THROWS_AS(outside.validate_for(plain.training_span()), ConfigError);
    const auto round = plan_from_json(plan_to_json(BreakpointPlan(hist, {{make_date(2022, 1, 1), -300.0}})));
    CHECK(round.historical() == hist);
    CHECK(round.future().size() == 1);
  }
}
