#include "loadfc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json_util.hpp"
#include "loadfc/csv.hpp"
#include "loadfc/errors.hpp"

namespace loadfc {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr int kFilterFormatVersion = 1;

std::vector<long> hinge_indices(Date origin, const BreakpointPlan& plan) {
  std::vector<long> out;
  out.reserve(plan.historical().size());
  for (Date d : plan.historical()) out.push_back(days_between(origin, d));
  return out;
}

std::vector<std::string> hinge_labels(const BreakpointPlan& plan) {
  std::vector<std::string> out;
  for (Date d : plan.historical()) out.push_back(format_date(d));
  return out;
}

// Writes the calendar part of a design row starting at `col`.
void fill_calendar(Date date, const CalendarSpec& spec, double* row, std::size_t col) {
  for (double v : encode_month(date)) row[col++] = v;
  for (double v : encode_weekday(date)) row[col++] = v;
  for (double v : encode_holiday(date, spec)) row[col++] = v;
  row[col++] = encode_adjustment(date, spec);
  const auto s = static_cast<double>(spring_distance(date, spec));
  row[col++] = s * s * s;
  row[col++] = s * s;
  row[col++] = s;
  if (spec.spring_window_indicator()) row[col++] = spring_window(date, spec);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

BreakpointPlan::BreakpointPlan(std::vector<Date> historical, std::vector<FutureBreakpoint> future)
    : historical_(std::move(historical)), future_(std::move(future)) {
  if (!std::is_sorted(historical_.begin(), historical_.end())) {
    throw ConfigError("historical breakpoints must be listed in date order");
  }
  for (std::size_t i = 0; i < future_.size(); ++i) {
    if (!std::isfinite(future_[i].slope)) throw ConfigError("future breakpoint slope must be finite");
    if (i > 0 && future_[i].date <= future_[i - 1].date) {
      throw ConfigError("future breakpoints must be strictly increasing in date");
    }
  }
}

void BreakpointPlan::validate_for(DateRange span) const {
  for (Date d : historical_) {
    if (d <= span.first || d >= span.last) {
      throw ConfigError("historical breakpoint " + format_date(d) + " is not strictly inside the training span " +
                        format_date(span.first) + ".." + format_date(span.last));
    }
  }
  for (const auto& f : future_) {
    if (f.date <= span.last) {
      throw ConfigError("future breakpoint " + format_date(f.date) + " must fall after the training end " +
                        format_date(span.last));
    }
  }
}

BreakpointPlan plan_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (!j.is_object()) throw ConfigError("breakpoints must be an object");
  std::vector<Date> hist;
  std::vector<FutureBreakpoint> fut;
  if (j.contains("historical")) {
    for (const auto& d : j.at("historical")) hist.push_back(detail::config_date(d, "breakpoints.historical"));
  }
  if (j.contains("future")) {
    for (const auto& f : j.at("future")) {
      fut.push_back({detail::config_date(f.at("date"), "breakpoints.future"),
                     detail::config_required<double>(f, "slope")});
    }
  }
  return BreakpointPlan(std::move(hist), std::move(fut));
}

nlohmann::json plan_to_json(const BreakpointPlan& plan) {
  nlohmann::json j;
  j["historical"] = nlohmann::json::array();
  for (Date d : plan.historical()) j["historical"].push_back(format_date(d));
  j["future"] = nlohmann::json::array();
  for (const auto& f : plan.future()) j["future"].push_back({{"date", format_date(f.date)}, {"slope", f.slope}});
  return j;
}

// ---------------------------------------------------------------------------

DesignMatrix build_design_matrix(Date origin, std::span<const long> indices, const BreakpointPlan& plan,
                                 const CalendarSpec& spec) {
  DesignMatrix dm{Eigen::MatrixXd(), FeatureLayout::build(hinge_labels(plan), spec)};
  const auto hinges = hinge_indices(origin, plan);
  const auto cols = dm.layout.size();
  // Row-major scratch, copied column-wise into Eigen's storage.
  std::vector<double> row(cols);
  dm.X.resize(static_cast<Eigen::Index>(indices.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const long t = indices[r];
    std::size_t c = 0;
    row[c++] = 1.0;
    row[c++] = static_cast<double>(t);
    for (long h : hinges) row[c++] = static_cast<double>(hinge(t, h));
    fill_calendar(add_days(origin, t), spec, row.data(), c);
    for (std::size_t k = 0; k < cols; ++k) dm.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[k];
  }
  return dm;
}

LinearFit fit(const Eigen::MatrixXd& X, std::span<const double> y, const FeatureLayout& layout) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (static_cast<std::size_t>(p) != layout.size()) {
    throw ShapeError("design has " + std::to_string(p) + " columns but layout lists " +
                     std::to_string(layout.size()));
  }
  if (static_cast<std::size_t>(n) != y.size()) {
    throw ShapeError("design has " + std::to_string(n) + " rows but " + std::to_string(y.size()) + " targets");
  }

  LinearFit out;
  out.rows = static_cast<std::size_t>(n);
  std::vector<Eigen::Index> active;
  Eigen::VectorXd norms(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    norms(j) = X.col(j).norm();
    if (norms(j) == 0.0) {
      out.pinned.push_back(static_cast<std::size_t>(j));
    } else {
      active.push_back(j);
    }
  }
  const auto k = static_cast<Eigen::Index>(active.size());
  if (n < k || k == 0) {
    throw InsufficientDataError("least squares needs at least as many rows (" + std::to_string(n) +
                                ") as active columns (" + std::to_string(k) + ")");
  }

  Eigen::MatrixXd A(n, k);
  for (Eigen::Index c = 0; c < k; ++c) A.col(c) = X.col(active[c]) / norms(active[c]);
  const Eigen::Map<const Eigen::VectorXd> b(y.data(), n);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.rows(), A.cols());
  qr.setThreshold(kRankTolerance);
  qr.compute(A);
  if (qr.rank() < k) {
    const auto& perm = qr.colsPermutation().indices();
    const auto& col = layout[static_cast<std::size_t>(active[perm(qr.rank())])];
    throw DegenerateDesignError(group_name(col.group),
                                std::string("degenerate design: column '") + col.name + "' in group '" +
                                    group_name(col.group) + "' is collinear with other columns");
  }

  const Eigen::VectorXd scaled = qr.solve(b);
  const Eigen::VectorXd resid = b - A * scaled;
  out.rss = resid.squaredNorm();
  out.sigma2 = n > k ? out.rss / static_cast<double>(n - k) : nan();

  // (A^T A)^-1 = P R^-1 R^-T P^T
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const auto& perm = qr.colsPermutation().indices();

  out.coefficients.assign(static_cast<std::size_t>(p), 0.0);
  out.std_errors.assign(static_cast<std::size_t>(p), nan());
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto j = active[c];
    out.coefficients[static_cast<std::size_t>(j)] = scaled(c) / norms(j);
  }
  for (Eigen::Index pos = 0; pos < k; ++pos) {
    const auto j = active[perm(pos)];
    const double var = out.sigma2 * Rinv.row(pos).squaredNorm();
    out.std_errors[static_cast<std::size_t>(j)] = std::sqrt(var) / norms(j);
  }
  for (double c : out.coefficients) {
    if (!std::isfinite(c)) throw NumericalError("least squares produced a non-finite coefficient");
  }
  return out;
}

// ---------------------------------------------------------------------------

FilterModel::FilterModel(Date origin, DateRange training_span, FeatureLayout layout, LinearFit fit,
                         BreakpointPlan plan, CalendarSpec calendar)
    : origin_(origin),
      span_(training_span),
      layout_(std::move(layout)),
      fit_(std::move(fit)),
      plan_(std::move(plan)),
      calendar_(std::move(calendar)) {
  if (fit_.coefficients.size() != layout_.size()) {
    throw ShapeError("coefficient count does not match the feature layout");
  }
  for (double c : fit_.coefficients) {
    if (!std::isfinite(c)) throw NumericalError("filter coefficients must be finite");
  }
  if (layout_.count(ColumnGroup::Hinge) != plan_.historical().size()) {
    throw ShapeError("hinge columns do not match the breakpoint plan");
  }
}

double FilterModel::fitted_slope_after(long t) const {
  const auto& coef = fit_.coefficients;
  double slope = coef[layout_.first_of(ColumnGroup::Trend)];
  const auto hinges = hinge_indices(origin_, plan_);
  const std::size_t base = 2;
  for (std::size_t i = 0; i < hinges.size(); ++i) {
    if (t >= hinges[i]) slope += coef[base + i];
  }
  return slope;
}

FilterModel fit_filter(const DailySeries& train, const ExclusionMask& mask, const BreakpointPlan& plan,
                       const CalendarSpec& spec) {
  plan.validate_for(train.span());
  const auto kept = apply_mask(train, mask);
  std::vector<long> idx;
  std::vector<double> y;
  idx.reserve(kept.size());
  y.reserve(kept.size());
  for (const auto& o : kept) {
    idx.push_back(o.index);
    y.push_back(o.value);
  }
  auto dm = build_design_matrix(train.start(), idx, plan, spec);
  auto result = fit(dm.X, y, dm.layout);
  return FilterModel(train.start(), train.span(), std::move(dm.layout), std::move(result), plan, spec);
}

FilterComponents predict_components(const FilterModel& model, std::span<const Date> dates) {
  const auto& coef = model.fit().coefficients;
  const auto& spec = model.calendar();
  const auto hinges = hinge_indices(model.origin(), model.plan());
  const std::size_t cal_start = 2 + hinges.size();

  // Future breakpoints as hinge deltas relative to the slope in force.
  std::vector<long> fut_idx;
  std::vector<double> fut_delta;
  double prevailing = 0.0;
  for (std::size_t j = 0; j < model.plan().future().size(); ++j) {
    const auto& f = model.plan().future()[j];
    const long t = days_between(model.origin(), f.date);
    if (j == 0) prevailing = model.fitted_slope_after(t);
    fut_idx.push_back(t);
    fut_delta.push_back(f.slope - prevailing);
    prevailing = f.slope;
  }

  FilterComponents out;
  out.trend.reserve(dates.size());
  out.calendar.reserve(dates.size());
  out.total.reserve(dates.size());
  std::vector<double> row(model.layout().size());
  for (Date d : dates) {
    const long t = days_between(model.origin(), d);
    double trend = coef[0] + coef[1] * static_cast<double>(t);
    for (std::size_t i = 0; i < hinges.size(); ++i) trend += coef[2 + i] * static_cast<double>(hinge(t, hinges[i]));
    for (std::size_t j = 0; j < fut_idx.size(); ++j) trend += fut_delta[j] * static_cast<double>(hinge(t, fut_idx[j]));

    fill_calendar(d, spec, row.data(), cal_start);
    double cal = 0.0;
    for (std::size_t c = cal_start; c < row.size(); ++c) cal += coef[c] * row[c];

    out.trend.push_back(trend);
    out.calendar.push_back(cal);
    out.total.push_back(trend + cal);
  }
  return out;
}

std::vector<double> predict(const FilterModel& model, std::span<const Date> dates) {
  return predict_components(model, dates).total;
}

ResidualSeries residuals(const FilterModel& model, const DailySeries& series, const ExclusionMask& mask) {
  const auto kept = apply_mask(series, mask);
  std::vector<Date> dates;
  dates.reserve(kept.size());
  for (const auto& o : kept) dates.push_back(series.date_at(static_cast<std::size_t>(o.index)));
  const auto fitted = predict(model, dates);
  const long shift = days_between(model.origin(), series.start());
  std::vector<Observation> pts;
  pts.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) pts.push_back({kept[i].index + shift, kept[i].value - fitted[i]});
  return ResidualSeries(model.origin(), std::move(pts));
}

// ---------------------------------------------------------------------------

nlohmann::json filter_to_json(const FilterModel& model) {
  const auto& f = model.fit();
  nlohmann::json j;
  j["format"] = "loadfc-filter";
  j["version"] = kFilterFormatVersion;
  j["origin"] = format_date(model.origin());
  j["training_span"] = {format_date(model.training_span().first), format_date(model.training_span().last)};
  j["layout"] = layout_to_json(model.layout());
  j["coefficients"] = f.coefficients;
  j["std_errors"] = nlohmann::json::array();
  for (double se : f.std_errors) j["std_errors"].push_back(number_or_null(se));
  j["pinned"] = f.pinned;
  j["rows"] = f.rows;
  j["rss"] = f.rss;
  j["sigma2"] = number_or_null(f.sigma2);
  j["breakpoints"] = plan_to_json(model.plan());
  j["calendar"] = calendar_to_json(model.calendar());
  return j;
}

FilterModel filter_from_json(const nlohmann::json& j) {
  if (detail::config_value<std::string>(j, "format", "") != "loadfc-filter") {
    throw ConfigError("not a loadfc filter artifact");
  }
  if (detail::config_required<int>(j, "version") != kFilterFormatVersion) {
    throw ConfigError("unsupported filter artifact version");
  }
  LinearFit f;
  f.coefficients = detail::config_required<std::vector<double>>(j, "coefficients");
  for (const auto& se : j.at("std_errors")) f.std_errors.push_back(se.is_null() ? nan() : se.get<double>());
  f.pinned = detail::config_value<std::vector<std::size_t>>(j, "pinned", {});
  f.rows = detail::config_value<std::size_t>(j, "rows", 0);
  f.rss = detail::config_value<double>(j, "rss", 0.0);
  f.sigma2 = j.contains("sigma2") && !j.at("sigma2").is_null() ? j.at("sigma2").get<double>() : nan();
  const auto& span = j.at("training_span");
  return FilterModel(detail::config_date(j.at("origin"), "origin"),
                     {detail::config_date(span.at(0), "training_span"), detail::config_date(span.at(1), "training_span")},
                     layout_from_json(j.at("layout")), std::move(f), plan_from_json(j.at("breakpoints")),
                     calendar_from_json(j.at("calendar")));
}

void save_filter(const FilterModel& model, const std::filesystem::path& path) {
  write_text_file(path, filter_to_json(model).dump(2) + "\n");
}

FilterModel load_filter(const std::filesystem::path& path) {
  return filter_from_json(detail::parse_json(read_text_file(path), path.string()));
}

}  // namespace loadfc
