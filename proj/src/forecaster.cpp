#include "loadfc/forecaster.hpp"

#include <cmath>
#include <limits>

#include "loadfc/errors.hpp"

namespace loadfc {

void Forecast::audit() const {
  const auto n = dates.size();
  if (filter.size() != n || residual.size() != n || total.size() != n) {
    throw NumericalError("forecast components have mismatched lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (total[i] != filter[i] + residual[i]) {
      throw NumericalError("forecast total does not equal filter + residual on " + format_date(dates[i]));
    }
  }
}

Forecast compose(std::vector<Date> dates, std::vector<double> filter, std::vector<double> residual,
                 std::vector<double> trend) {
  if (filter.size() != dates.size() || residual.size() != dates.size()) {
    throw ShapeError("forecast components must match the number of dates");
  }
  Forecast f;
  f.total.reserve(dates.size());
  for (std::size_t i = 0; i < dates.size(); ++i) f.total.push_back(filter[i] + residual[i]);
  f.dates = std::move(dates);
  f.filter = std::move(filter);
  f.residual = std::move(residual);
  f.trend = std::move(trend);
  f.audit();
  return f;
}

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("rmse: series lengths differ");
  if (actual.empty()) throw UndefinedMetricError("rmse of an empty series");
  double ss = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

double mape(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ShapeError("mape: series lengths differ");
  if (actual.empty()) throw UndefinedMetricError("mape of an empty series");
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw UndefinedMetricError("mape is undefined when an actual value is zero");
    acc += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
  }
  return 100.0 * acc / static_cast<double>(actual.size());
}

Forecast forecast_from(const FilterModel& filter, const ResidualNet& net, const ResidualSeries& history, Date first,
                       std::size_t horizon) {
  std::vector<Date> dates;
  dates.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) dates.push_back(add_days(first, static_cast<long>(h)));
  auto comps = predict_components(filter, dates);

  // Residual recursion starts the day after the last known residual; steps
  // falling before `first` (e.g. excluded tail days) are discarded.
  if (history.empty()) throw InsufficientDataError("no residual history to forecast from");
  const Date last_known = history.date_of(history.points().back());
  const long lead = days_between(last_known, first) - 1;
  if (lead < 0) throw ConfigError("forecast must start after the last residual " + format_date(last_known));
  auto eps = predict_residuals(net, history, static_cast<std::size_t>(lead) + horizon);
  std::vector<double> residual(eps.begin() + lead, eps.end());

  return compose(std::move(dates), std::move(comps.total), std::move(residual), std::move(comps.trend));
}

void attach_actuals(Forecast& forecast, const DailySeries& series, const ExclusionMask& mask) {
  std::vector<double> actual(forecast.dates.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> a;
  std::vector<double> p;
  for (std::size_t i = 0; i < forecast.dates.size(); ++i) {
    const Date d = forecast.dates[i];
    if (!series.contains(d)) continue;
    actual[i] = series.at(d);
    if (mask.excludes(d)) continue;
    a.push_back(actual[i]);
    p.push_back(forecast.total[i]);
  }
  forecast.actual = std::move(actual);
  if (!a.empty()) forecast.metrics = Metrics{rmse(a, p), mape(a, p), a.size()};
}

TwoStageResult two_stage_forecast(const DailySeries& series, const CalendarSpec& spec, const BreakpointPlan& plan,
                                  const ExclusionMask& mask, const NetConfig& net_config, Date split,
                                  std::size_t horizon) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  const DailySeries train_part = split > series.end() ? series : loadfc::split(series, split).first;
  if (split > add_days(series.end(), 1)) throw InvalidSplitError("split lies beyond the day after the data ends");

  // Exclusions only matter where they touch the training span.
  std::vector<DateRange> train_ranges;
  for (const auto& r : mask.ranges()) {
    if (r.overlaps(train_part.span())) train_ranges.push_back(r);
  }
  const ExclusionMask train_mask(std::move(train_ranges));

  auto filter = fit_filter(train_part, train_mask, plan, spec);
  auto resid = residuals(filter, train_part, train_mask);
  auto trained = train(resid, net_config);
  auto fc = forecast_from(filter, trained.net, resid, split, horizon);
  if (series.end() >= split) attach_actuals(fc, series, mask);
  return {std::move(filter), std::move(resid), std::move(trained), std::move(fc)};
}

CsvTable forecast_to_csv(const Forecast& f) {
  CsvTable t;
  t.header = {"date", "filter", "residual", "total"};
  const bool with_actual = f.actual.has_value();
  if (with_actual) {
    t.header.push_back("actual");
    t.header.push_back("error");
  }
  for (std::size_t i = 0; i < f.dates.size(); ++i) {
    std::vector<std::string> row{format_date(f.dates[i]), format_number(f.filter[i]), format_number(f.residual[i]),
                                 format_number(f.total[i])};
    if (with_actual) {
      const double a = (*f.actual)[i];
      if (std::isfinite(a)) {
        row.push_back(format_number(a));
        row.push_back(format_number(f.total[i] - a));
      } else {
        row.emplace_back();
        row.emplace_back();
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"rmse", m.rmse}, {"mape", m.mape}, {"n", m.n}};
}

}  // namespace loadfc
