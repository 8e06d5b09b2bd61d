#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "loadfc/calendar.hpp"
#include "loadfc/csv.hpp"
#include "loadfc/series.hpp"

namespace loadfc {

struct ResidualProcess {
  enum class Kind { White, Ar1 };
  Kind kind = Kind::White;
  double sigma = 1.0;  // innovation standard deviation
  double phi = 0.0;    // AR(1) coefficient
};

/// Parameters of a synthetic daily consumption series.
///
/// The trend is continuous piecewise linear with `segment_starts.size()`
/// segments per year. `segment_slopes[i]` holds the slopes for the i-th
/// calendar year of the span; the last row is reused for later years.
struct SynthParams {
  Date start = make_date(2018, 1, 1);
  Date end = make_date(2021, 12, 31);
  double base_level = 100000.0;
  std::vector<std::pair<unsigned, unsigned>> segment_starts;  // (month, day)
  std::vector<std::vector<double>> segment_slopes;
  std::array<double, 7> weekday_offsets{};  // Monday .. Sunday
  std::map<std::string, double> holiday_offsets;
  double adjustment_offset = 0.0;
  double spring_depth = 0.0;
  int spring_half_width = 21;
  ResidualProcess residual;
  CalendarSpec calendar;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per-day components; they sum exactly to the emitted series.
struct GroundTruth {
  std::vector<double> trend;
  std::vector<double> weekday;
  std::vector<double> holiday;
  std::vector<double> adjustment;
  std::vector<double> spring;
  std::vector<double> residual;

  /// Slope changes strictly inside the span, in date order.
  std::vector<Date> breakpoints;
  /// Slope of the first segment followed by the slope after each breakpoint.
  std::vector<double> segment_slopes;
};

struct SynthOutput {
  DailySeries series;
  GroundTruth truth;
};

SynthOutput generate(const SynthParams& params);

/// Relative `calendar` paths resolve against `base_dir`.
SynthParams synth_params_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json synth_params_to_json(const SynthParams& params);
SynthParams load_synth_params(const std::filesystem::path& path);

/// `date,trend,weekday,holiday,adjustment,spring,residual,total`
CsvTable ground_truth_to_csv(const SynthOutput& out);

}  // namespace loadfc
