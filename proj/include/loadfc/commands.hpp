#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "loadfc/calendar.hpp"
#include "loadfc/filter.hpp"
#include "loadfc/forecaster.hpp"
#include "loadfc/net.hpp"
#include "loadfc/series.hpp"

// Subcommand implementations behind the `loadfc` executable.

namespace loadfc::cli {

/// Everything a `fit` or `forecast` run needs. Loaded from one JSON file;
/// relative paths resolve against that file's directory.
struct RunConfig {
  std::filesystem::path data;
  std::optional<std::filesystem::path> actuals;
  CalendarSpec calendar;
  BreakpointPlan plan;
  ExclusionMask exclusions;
  NetConfig net;
  std::optional<Date> split;
  std::size_t horizon = 0;  // 0: every data day from the split onward
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;
};

struct Overrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                               const Overrides& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Writes data.csv and ground_truth.csv into `out_dir`.
void cmd_synth(const std::filesystem::path& params_path, const std::filesystem::path& out_dir,
               std::optional<std::uint64_t> seed, std::ostream& log);

struct FitOutcome {
  FilterModel model;
  nlohmann::json report;
};

/// Writes filter.json, residuals.csv, fit_report.json and fit_report.txt.
FitOutcome cmd_fit(const RunConfig& config, std::ostream& log);

/// Writes forecast.csv, filter.json, net.json, training_log.csv, and
/// metrics.json when actuals cover the horizon.
Forecast cmd_forecast(const RunConfig& config, std::ostream& log);

/// Compares a forecast CSV's `total` column with a `date,consumption` CSV.
Metrics cmd_evaluate(const std::filesystem::path& forecast_csv, const std::filesystem::path& actual_csv,
                     const std::optional<std::filesystem::path>& out_json, std::ostream& log);

/// Entry point used by the executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace loadfc::cli
