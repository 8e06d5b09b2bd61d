#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "loadfc/calendar.hpp"
#include "loadfc/csv.hpp"
#include "loadfc/filter.hpp"
#include "loadfc/net.hpp"
#include "loadfc/series.hpp"

namespace loadfc {

struct Metrics {
  double rmse;
  double mape;     // percent
  std::size_t n;   // compared days
};

/// Two-stage forecast: filter prediction plus recursive residual prediction.
struct Forecast {
  std::vector<Date> dates;
  std::vector<double> filter;    // X_pwl
  std::vector<double> residual;  // eps_cnn
  std::vector<double> total;     // filter + residual
  std::vector<double> trend;     // trend part of the filter, for slope audits
  std::optional<std::vector<double>> actual;  // NaN where the series has no value
  std::optional<Metrics> metrics;

  /// Throws NumericalError when total != filter + residual anywhere.
  void audit() const;
};

/// Builds a forecast from components; `total` is their exact sum.
Forecast compose(std::vector<Date> dates, std::vector<double> filter, std::vector<double> residual,
                 std::vector<double> trend = {});

double rmse(std::span<const double> actual, std::span<const double> predicted);
double mape(std::span<const double> actual, std::span<const double> predicted);

struct TwoStageResult {
  FilterModel filter;
  ResidualSeries residuals;
  TrainedNet net;
  Forecast forecast;
};

/// Fit the filter on [start, split), train the residual net, forecast
/// `horizon` days from `split`. When the series extends past `split` the
/// overlap serves as actuals; metrics skip dates excluded by `mask`.
TwoStageResult two_stage_forecast(const DailySeries& series, const CalendarSpec& spec, const BreakpointPlan& plan,
                                  const ExclusionMask& mask, const NetConfig& net_config, Date split,
                                  std::size_t horizon);

/// Forecast from already trained stages.
Forecast forecast_from(const FilterModel& filter, const ResidualNet& net, const ResidualSeries& history, Date first,
                       std::size_t horizon);

/// Attaches actuals from `series` (where covered) and computes metrics over
/// non-excluded dates.
void attach_actuals(Forecast& forecast, const DailySeries& series, const ExclusionMask& mask);

/// `date,filter,residual,total[,actual,error]`
CsvTable forecast_to_csv(const Forecast& forecast);
nlohmann::json metrics_to_json(const Metrics& m);

}  // namespace loadfc
