#include "loadfc/commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "json_util.hpp"
#include "loadfc/csv.hpp"
#include "loadfc/errors.hpp"
#include "loadfc/synth.hpp"

namespace loadfc::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_relative() ? base / p : p; }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string fixed(double v, const char* fmt = "%.6g") {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

DailySeries training_part(const DailySeries& series, const RunConfig& cfg) {
  if (!cfg.split || *cfg.split > series.end()) return series;
  return split(series, *cfg.split).first;
}

ExclusionMask restrict_mask(const ExclusionMask& mask, DateRange span) {
  std::vector<DateRange> kept;
  for (const auto& r : mask.ranges()) {
    if (r.overlaps(span)) kept.push_back(r);
  }
  return ExclusionMask(std::move(kept));
}

CsvTable residuals_to_csv(const ResidualSeries& r) {
  CsvTable t;
  t.header = {"date", "residual"};
  for (const auto& p : r.points()) t.rows.push_back({format_date(r.date_of(p)), format_number(p.value)});
  return t;
}

std::string report_text(const nlohmann::json& rep) {
  std::string s;
  s += "piecewise linear filter fit\n";
  s += "training span: " + rep["training_span"][0].get<std::string>() + " .. " +
       rep["training_span"][1].get<std::string>() + "\n";
  s += "rows retained: " + std::to_string(rep["rows_retained"].get<std::size_t>()) +
       ", excluded: " + std::to_string(rep["rows_excluded"].get<std::size_t>()) + "\n";
  s += "training RMSE: " + fixed(rep["training_rmse"].get<double>(), "%.3f") + "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-14s %16s %14s\n", "column", "group", "estimate", "std_error");
  s += line;
  for (const auto& c : rep["coefficients"]) {
    const double se = c["std_error"].is_null() ? NAN : c["std_error"].get<double>();
    std::snprintf(line, sizeof line, "%-28s %-14s %16s %14s\n", c["name"].get<std::string>().c_str(),
                  c["group"].get<std::string>().c_str(), fixed(c["estimate"].get<double>(), "%.6f").c_str(),
                  fixed(se, "%.6f").c_str());
    s += line;
  }
  return s;
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir, const Overrides& overrides) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  c.data = resolve(base_dir, detail::config_required<std::string>(j, "data"));
  if (j.contains("actuals")) c.actuals = resolve(base_dir, detail::config_required<std::string>(j, "actuals"));

  if (j.contains("calendar")) {
    const auto& cal = j.at("calendar");
    c.calendar = cal.is_string() ? load_calendar(resolve(base_dir, cal.get<std::string>())) : calendar_from_json(cal);
  }
  if (j.contains("breakpoints")) c.plan = plan_from_json(j.at("breakpoints"));
  if (j.contains("exclude")) {
    std::vector<DateRange> ranges;
    for (const auto& r : j.at("exclude")) {
      ranges.push_back({detail::config_date(r.at("first"), "exclude.first"),
                        detail::config_date(r.at("last"), "exclude.last")});
    }
    c.exclusions = ExclusionMask(std::move(ranges));
  }
  if (j.contains("split")) c.split = detail::config_date(j.at("split"), "split");
  if (j.contains("horizon")) {
    const auto h = detail::config_required<long>(j, "horizon");
    if (h < 1) throw ConfigError("horizon must be >= 1");
    c.horizon = static_cast<std::size_t>(h);
  }
  c.seed = detail::config_value<std::uint64_t>(j, "seed", c.seed);
  if (overrides.seed) c.seed = *overrides.seed;
  c.output_dir = overrides.output_dir ? *overrides.output_dir
                                      : resolve(base_dir, detail::config_value<std::string>(j, "output_dir", "out"));
  NetConfig base;
  base.seed = c.seed;
  c.net = net_config_from_json(j.contains("net") ? j.at("net") : nlohmann::json(), base);
  c.net.seed = c.seed;
  return c;
}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
  return run_config_from_json(detail::parse_json(read_text_file(path), path.string()), path.parent_path(), overrides);
}

// ---------------------------------------------------------------------------

void cmd_synth(const fs::path& params_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
               std::ostream& log) {
  auto params = load_synth_params(params_path);
  if (seed) params.seed = *seed;
  const auto out = generate(params);
  write_csv(out_dir / "data.csv", series_to_csv(out.series));
  write_csv(out_dir / "ground_truth.csv", ground_truth_to_csv(out));
  log << "wrote " << out.series.size() << " days (" << format_date(out.series.start()) << " .. "
      << format_date(out.series.end()) << ") to " << (out_dir / "data.csv").string() << "\n";
}

FitOutcome cmd_fit(const RunConfig& cfg, std::ostream& log) {
  const auto series = read_series_csv(cfg.data);
  const auto train = training_part(series, cfg);
  const auto mask = restrict_mask(cfg.exclusions, train.span());
  auto model = fit_filter(train, mask, cfg.plan, cfg.calendar);
  const auto resid = residuals(model, train, mask);

  double ss = 0.0;
  for (const auto& p : resid.points()) ss += p.value * p.value;
  const double train_rmse = std::sqrt(ss / static_cast<double>(resid.size()));

  nlohmann::json rep;
  rep["training_span"] = {format_date(train.start()), format_date(train.end())};
  rep["rows_total"] = train.size();
  rep["rows_retained"] = resid.size();
  rep["rows_excluded"] = train.size() - resid.size();
  rep["training_rmse"] = train_rmse;
  rep["sigma"] = number_or_null(std::sqrt(model.fit().sigma2));
  rep["coefficients"] = nlohmann::json::array();
  const auto& f = model.fit();
  for (std::size_t i = 0; i < model.layout().size(); ++i) {
    const auto& col = model.layout()[i];
    rep["coefficients"].push_back({{"name", col.name},
                                   {"group", group_name(col.group)},
                                   {"estimate", f.coefficients[i]},
                                   {"std_error", number_or_null(f.std_errors[i])}});
  }
  rep["pinned"] = nlohmann::json::array();
  for (auto i : f.pinned) rep["pinned"].push_back(model.layout()[i].name);

  save_filter(model, cfg.output_dir / "filter.json");
  write_csv(cfg.output_dir / "residuals.csv", residuals_to_csv(resid));
  write_text_file(cfg.output_dir / "fit_report.json", rep.dump(2) + "\n");
  write_text_file(cfg.output_dir / "fit_report.txt", report_text(rep));
  log << "fitted " << model.layout().size() << " columns on " << resid.size() << " rows (" << rep["rows_excluded"]
      << " excluded), training RMSE " << fixed(train_rmse, "%.3f") << "\n";
  return {std::move(model), std::move(rep)};
}

Forecast cmd_forecast(const RunConfig& cfg, std::ostream& log) {
  const auto series = read_series_csv(cfg.data);
  const Date split_date = cfg.split.value_or(add_days(series.end(), 1));
  std::size_t horizon = cfg.horizon;
  if (horizon == 0) {
    if (split_date > series.end()) throw ConfigError("horizon is required when the data ends before the split");
    horizon = static_cast<std::size_t>(days_between(split_date, series.end()) + 1);
  }

  auto result = two_stage_forecast(series, cfg.calendar, cfg.plan, cfg.exclusions, cfg.net, split_date, horizon);
  auto& fc = result.forecast;
  if (cfg.actuals) attach_actuals(fc, read_series_csv(*cfg.actuals), cfg.exclusions);
  fc.audit();

  write_csv(cfg.output_dir / "forecast.csv", forecast_to_csv(fc));
  write_text_file(cfg.output_dir / "training_log.csv", training_log_csv(result.net.log));
  save_filter(result.filter, cfg.output_dir / "filter.json");
  save_net(result.net.net, cfg.output_dir / "net.json");
  if (fc.metrics) {
    write_text_file(cfg.output_dir / "metrics.json", metrics_to_json(*fc.metrics).dump(2) + "\n");
    log << "forecast " << horizon << " days; RMSE " << fixed(fc.metrics->rmse, "%.3f") << " MAPE "
        << fixed(fc.metrics->mape, "%.3f") << "%\n";
  } else {
    log << "forecast " << horizon << " days from " << format_date(split_date) << "\n";
  }
  return std::move(fc);
}

Metrics cmd_evaluate(const fs::path& forecast_csv, const fs::path& actual_csv, const std::optional<fs::path>& out_json,
                     std::ostream& log) {
  const auto fc = read_csv(forecast_csv);
  const auto actual = read_series_csv(actual_csv);
  const auto date_col = fc.column("date");
  const auto total_col = fc.column("total");
  if (fc.rows.empty()) throw DataError("forecast CSV has no rows");
  std::vector<double> a;
  std::vector<double> p;
  for (const auto& row : fc.rows) {
    const Date d = parse_date(row[date_col]);
    if (!actual.contains(d)) {
      throw DataError("forecast date " + row[date_col] + " has no actual value (actuals cover " +
                      format_date(actual.start()) + " .. " + format_date(actual.end()) + ")");
    }
    a.push_back(actual.at(d));
    p.push_back(parse_number(row[total_col]));
  }
  const Metrics m{rmse(a, p), mape(a, p), a.size()};
  const auto text = metrics_to_json(m).dump(2) + "\n";
  if (out_json) {
    write_text_file(*out_json, text);
  } else {
    log << text;
  }
  return m;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Two-stage daily electricity consumption forecasting"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::string forecast_path;
  std::string actual_path;

  auto* synth = app.add_subcommand("synth", "generate a synthetic consumption series");
  synth->add_option("--config,--params", config_path, "synthetic parameter JSON")->required();
  synth->add_option("--out", out_path, "output directory")->required();
  auto* synth_seed = synth->add_option("--seed", seed, "override the generator seed");

  auto* fit = app.add_subcommand("fit", "fit the piecewise linear filter");
  fit->add_option("--config", config_path, "run config JSON")->required();
  auto* fit_out = fit->add_option("--out", out_path, "output directory");
  auto* fit_seed = fit->add_option("--seed", seed, "override the run seed");

  auto* forecast = app.add_subcommand("forecast", "fit both stages and forecast");
  forecast->add_option("--config", config_path, "run config JSON")->required();
  auto* fc_out = forecast->add_option("--out", out_path, "output directory");
  auto* fc_seed = forecast->add_option("--seed", seed, "override the run seed");

  auto* evaluate = app.add_subcommand("evaluate", "score a forecast CSV against actuals");
  evaluate->add_option("--forecast", forecast_path, "forecast CSV")->required();
  evaluate->add_option("--actual", actual_path, "date,consumption CSV")->required();
  auto* eval_out = evaluate->add_option("--out", out_path, "metrics JSON path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Config);
  }

  try {
    auto overrides = [&](CLI::Option* out, CLI::Option* s) {
      Overrides o;
      if (out->count()) o.output_dir = fs::path(out_path);
      if (s->count()) o.seed = seed;
      return o;
    };
    if (synth->parsed()) {
      cmd_synth(config_path, out_path, synth_seed->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                std::cerr);
    } else if (fit->parsed()) {
      cmd_fit(load_run_config(config_path, overrides(fit_out, fit_seed)), std::cerr);
    } else if (forecast->parsed()) {
      cmd_forecast(load_run_config(config_path, overrides(fc_out, fc_seed)), std::cerr);
    } else if (evaluate->parsed()) {
      cmd_evaluate(forecast_path, actual_path,
                   eval_out->count() ? std::optional<fs::path>(out_path) : std::nullopt, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace loadfc::cli
