#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "loadfc/calendar.hpp"
#include "loadfc/series.hpp"

namespace loadfc {

struct FutureBreakpoint {
  Date date;
  double slope;  // absolute post-break trend slope, MWh/day
};

/// Manually assigned trend breakpoints.
///
/// Historical breakpoints become hinge columns in the fit. Future ones are
/// only used when predicting past the training span.
class BreakpointPlan {
 public:
  BreakpointPlan() = default;
  BreakpointPlan(std::vector<Date> historical, std::vector<FutureBreakpoint> future);

  const std::vector<Date>& historical() const { return historical_; }
  const std::vector<FutureBreakpoint>& future() const { return future_; }

  /// Historical dates must lie strictly inside the span and future dates
  /// strictly after it. Equal historical dates pass here and surface as a
  /// degenerate design in the fit.
  void validate_for(DateRange training_span) const;

 private:
  std::vector<Date> historical_;
  std::vector<FutureBreakpoint> future_;
};

BreakpointPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const BreakpointPlan& plan);

/// (t - t_i) when t > t_i, else 0.
constexpr long hinge(long t, long breakpoint) { return t > breakpoint ? t - breakpoint : 0; }

struct DesignMatrix {
  Eigen::MatrixXd X;
  FeatureLayout layout;
};

/// One row per day index (days since `origin`).
DesignMatrix build_design_matrix(Date origin, std::span<const long> indices,
                                 const BreakpointPlan& plan, const CalendarSpec& spec);

/// Ordinary least squares result aligned to a layout.
struct LinearFit {
  std::vector<double> coefficients;
  std::vector<double> std_errors;      // NaN for pinned columns or zero dof
  std::vector<std::size_t> pinned;     // all-zero columns, coefficient fixed at 0
  std::size_t rows = 0;
  double rss = 0.0;
  double sigma2 = 0.0;                 // rss / (rows - active columns)
};

/// Least squares by column-pivoted Householder QR on unit-norm columns.
///
/// Columns that are identically zero are pinned at 0. Any other rank loss
/// raises DegenerateDesignError naming the column group. Throws
/// InsufficientDataError when there are fewer rows than active columns.
LinearFit fit(const Eigen::MatrixXd& X, std::span<const double> y, const FeatureLayout& layout);

struct FilterComponents {
  std::vector<double> trend;     // intercept, t, historical and future hinges
  std::vector<double> calendar;  // dummies and Spring Festival terms
  std::vector<double> total;
};

/// Fitted piecewise linear filter. Immutable; safe for concurrent predict.
class FilterModel {
 public:
  FilterModel(Date origin, DateRange training_span, FeatureLayout layout, LinearFit fit,
              BreakpointPlan plan, CalendarSpec calendar);

  Date origin() const { return origin_; }
  DateRange training_span() const { return span_; }
  const FeatureLayout& layout() const { return layout_; }
  const LinearFit& fit() const { return fit_; }
  std::span<const double> coefficients() const { return fit_.coefficients; }
  const BreakpointPlan& plan() const { return plan_; }
  const CalendarSpec& calendar() const { return calendar_; }

  /// Trend slope in effect right after `t` from fitted hinges only.
  double fitted_slope_after(long t) const;

 private:
  Date origin_;
  DateRange span_;
  FeatureLayout layout_;
  LinearFit fit_;
  BreakpointPlan plan_;
  CalendarSpec calendar_;
};

/// Builds the design on retained training rows and fits it.
FilterModel fit_filter(const DailySeries& train, const ExclusionMask& mask, const BreakpointPlan& plan,
                       const CalendarSpec& spec);

FilterComponents predict_components(const FilterModel& model, std::span<const Date> dates);
std::vector<double> predict(const FilterModel& model, std::span<const Date> dates);

/// X_t - X_pwl,t on every retained date; indices are days since the model origin.
ResidualSeries residuals(const FilterModel& model, const DailySeries& series, const ExclusionMask& mask);

nlohmann::json filter_to_json(const FilterModel& model);
FilterModel filter_from_json(const nlohmann::json& j);
void save_filter(const FilterModel& model, const std::filesystem::path& path);
FilterModel load_filter(const std::filesystem::path& path);

}  // namespace loadfc
