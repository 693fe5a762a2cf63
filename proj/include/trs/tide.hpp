#pragma once

// Ocean forcing: harmonic synthesis, CSV ingestion, and the correction factor
// that rescales one prediction's oscillation onto a reference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trs/csv.hpp"
#include "trs/error.hpp"

namespace trs {

struct HarmonicConstituent {
  std::string name;
  double amplitude_m = 0.0;
  double period_h = 12.0;
  double phase_rad = 0.0;
};

/// Uniformly sampled ocean elevations.
///
/// `levels` are heights above the series' own zero. `datum_offset_m` is the
/// height of that zero above the lowest equinoctial low tide, so
/// `z = level + datum_offset_m` is always defined.
class TideSeries {
 public:
  TideSeries(std::int64_t start_time_s, double dt_s, std::vector<double> levels, double datum_offset_m = 0.0)
      : start_(start_time_s), dt_(dt_s), levels_(std::move(levels)), datum_offset_(datum_offset_m) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidInput("tide series needs dt > 0");
    if (levels_.empty()) throw InvalidInput("tide series is empty");
    for (std::size_t i = 0; i < levels_.size(); ++i)
      if (!std::isfinite(levels_[i])) throw InvalidInput("non-finite tide level at index " + std::to_string(i));
    if (!std::isfinite(datum_offset_)) throw InvalidInput("non-finite datum offset");
  }

  std::int64_t start_time() const noexcept { return start_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return levels_.size(); }
  std::span<const double> levels() const noexcept { return levels_; }
  double operator[](std::size_t i) const { return levels_[i]; }
  double datum_offset() const noexcept { return datum_offset_; }

  double time_at(std::size_t i) const noexcept { return static_cast<double>(start_) + dt_ * static_cast<double>(i); }
  double end_time() const noexcept { return time_at(levels_.size() - 1); }
  /// Level on the tidal datum z.
  double z_at_index(std::size_t i) const { return levels_[i] + datum_offset_; }

  double mean() const noexcept {
    return std::accumulate(levels_.begin(), levels_.end(), 0.0) / static_cast<double>(levels_.size());
  }
  double min() const noexcept { return *std::min_element(levels_.begin(), levels_.end()); }
  double max() const noexcept { return *std::max_element(levels_.begin(), levels_.end()); }

  /// Samples [first, first + count) as a new series with the same datum.
  TideSeries window(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > levels_.size()) throw InvalidInput("tide window out of range");
    std::vector<double> sub(levels_.begin() + static_cast<std::ptrdiff_t>(first),
                            levels_.begin() + static_cast<std::ptrdiff_t>(first + count));
    return TideSeries(start_ + static_cast<std::int64_t>(std::llround(dt_ * static_cast<double>(first))), dt_,
                      std::move(sub), datum_offset_);
  }

 private:
  std::int64_t start_;
  double dt_;
  std::vector<double> levels_;
  double datum_offset_;
};

inline TideSeries synthesize_tide(std::span<const HarmonicConstituent> constituents, double mean_level_m,
                                  std::int64_t start_s, double duration_s, double dt_s, double datum_offset_m = 0.0) {
  if (!(dt_s > 0.0)) throw InvalidInput("synthesize_tide: dt must be positive");
  if (!(duration_s >= dt_s)) throw InvalidInput("synthesize_tide: duration must be at least one step");
  for (const auto& c : constituents) {
    if (c.amplitude_m < 0.0) throw InvalidInput("constituent " + c.name + ": negative amplitude");
    if (!(c.period_h > 0.0)) throw InvalidInput("constituent " + c.name + ": period must be positive");
  }
  const auto n = static_cast<std::size_t>(std::floor(duration_s / dt_s + 1e-9)) + 1;
  std::vector<double> levels(n, mean_level_m);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(start_s) + dt_s * static_cast<double>(k);
    for (const auto& c : constituents)
      levels[k] += c.amplitude_m * std::cos(2.0 * std::numbers::pi * t / (c.period_h * 3600.0) + c.phase_rad);
  }
  return TideSeries(start_s, dt_s, std::move(levels), datum_offset_m);
}

/// Least-squares scale of `predicted` onto `reference`, both taken about
/// their own means: sum(p*r) / sum(p*p).
inline double calibrate_correction_factor(const TideSeries& predicted, const TideSeries& reference) {
  if (predicted.size() != reference.size()) throw InvalidInput("correction factor: series lengths differ");
  if (std::abs(predicted.dt() - reference.dt()) > 1e-9 * predicted.dt())
    throw InvalidInput("correction factor: series sampling differs");
  const double mp = predicted.mean();
  const double mr = reference.mean();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double op = predicted[i] - mp;
    num += op * (reference[i] - mr);
    den += op * op;
  }
  if (den == 0.0) throw DegenerateInput("correction factor: predicted series has no oscillation");
  return num / den;
}

/// Scales the oscillation about the series mean; mean and datum unchanged.
inline TideSeries apply_correction(const TideSeries& series, double factor) {
  if (!std::isfinite(factor)) throw InvalidInput("correction factor must be finite");
  const double m = series.mean();
  std::vector<double> out(series.levels().begin(), series.levels().end());
  for (auto& v : out) v = m + factor * (v - m);
  return TideSeries(series.start_time(), series.dt(), std::move(out), series.datum_offset());
}

/// Linear interpolation; exact at sample instants.
inline double level_at(const TideSeries& series, double t_s) {
  const double rel = (t_s - static_cast<double>(series.start_time())) / series.dt();
  const double last = static_cast<double>(series.size() - 1);
  if (!(rel >= -1e-9 && rel <= last + 1e-9))
    throw InvalidInput("level_at: time " + std::to_string(t_s) + " outside the series");
  const double clamped = std::clamp(rel, 0.0, last);
  const auto i = static_cast<std::size_t>(std::floor(clamped));
  if (i + 1 >= series.size()) return series[series.size() - 1];
  const double w = clamped - static_cast<double>(i);
  if (w == 0.0) return series[i];
  return series[i] + w * (series[i + 1] - series[i]);
}

/// Heights between successive high and low waters (local extrema of the samples).
inline std::vector<double> tidal_ranges(const TideSeries& series) {
  std::vector<double> extrema;
  for (std::size_t i = 1; i + 1 < series.size(); ++i) {
    const double a = series[i - 1], b = series[i], c = series[i + 1];
    if ((b > a && b >= c) || (b < a && b <= c)) extrema.push_back(b);
  }
  std::vector<double> ranges;
  for (std::size_t i = 1; i < extrema.size(); ++i) ranges.push_back(std::abs(extrema[i] - extrema[i - 1]));
  return ranges;
}

inline const std::vector<std::string>& tide_csv_header() {
  static const std::vector<std::string> h{"timestamp_s", "level_m"};
  return h;
}

inline void export_tide_csv(const TideSeries& series, const std::filesystem::path& path) {
  if (std::abs(series.dt() - std::round(series.dt())) > 1e-9)
    throw InvalidInput("tide CSV needs whole-second sampling");
  csv::Writer w(path, tide_csv_header());
  const auto step = static_cast<std::int64_t>(std::llround(series.dt()));
  for (std::size_t i = 0; i < series.size(); ++i)
    w.row(series.start_time() + step * static_cast<std::int64_t>(i), series[i]);
}

/// Reads `timestamp_s,level_m`. Sampling must be uniform to within 1 ppm.
inline TideSeries ingest_tide_csv(const std::filesystem::path& path, double datum_offset_m = 0.0) {
  const auto table = csv::read(path, tide_csv_header());
  if (table.rows.size() < 2) throw FormatError(path.string() + ": need at least two samples");
  std::vector<std::int64_t> times;
  std::vector<double> levels;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t row = r + 2;
    times.push_back(csv::parse_int(table.rows[r][0], row, "timestamp_s"));
    const double v = csv::parse_double(table.rows[r][1], row, "level_m");
    if (!std::isfinite(v)) throw FormatError("non-finite level", row);
    levels.push_back(v);
  }
  const double dt = static_cast<double>(times[1] - times[0]);
  if (!(dt > 0.0)) throw FormatError(path.string() + ": timestamps not increasing", 3);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double d = static_cast<double>(times[i] - times[i - 1]);
    if (d <= 0.0) throw FormatError(path.string() + ": timestamps not increasing", i + 2);
    if (std::abs(d - dt) > 1e-6 * dt) throw FormatError(path.string() + ": irregular sampling (gap)", i + 2);
  }
  return TideSeries(times.front(), dt, std::move(levels), datum_offset_m);
}

}  // namespace trs
