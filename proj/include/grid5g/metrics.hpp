#pragma once

// Step-response metrics on sampled traces: percent overshoot, settling time
// and a boundedness-based stability flag. Peaks are taken on the raw samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "grid5g/errors.hpp"

namespace grid5g {

struct StepSpec {
  double t0 = 0.0;  // step instant
  double y_init = 0.0;
  double y_final = 1.0;
  double band = 0.02;  // settling tolerance, fraction of the step size
  double t_end = std::numeric_limits<double>::infinity();  // window end, exclusive

  double amplitude() const noexcept { return std::abs(y_final - y_init); }
};

struct MetricsReport {
  double overshoot_pct = 0.0;
  std::optional<double> settling_time;  // nullopt: never settled inside the window
  double peak_time = 0.0;
  bool stable = false;
  double band = 0.0;
};

namespace detail {

inline void check_step(std::span<const double> t, std::span<const double> y, const StepSpec& spec) {
  if (t.size() != y.size()) throw InputError("time and value series differ in length");
  if (!(spec.y_final != spec.y_init)) throw InputError("step spec needs y_final != y_init");
  if (!(spec.band > 0.0 && spec.band <= 0.2)) throw InputError("settling band must be in (0, 0.2]");
  if (!(spec.t_end > spec.t0)) throw InputError("step window must end after t0");
  if (t.empty() || t.back() < spec.t0 - 1e-9 * std::max(1.0, std::abs(spec.t0)))
    throw InputError("trace ends before the step at t0 = " + std::to_string(spec.t0));
}

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline Window step_window(std::span<const double> t, const StepSpec& spec) {
  const double slack = 1e-9 * std::max(1.0, std::abs(spec.t0));
  Window w{t.size(), t.size()};
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= spec.t0 - slack) {
      w.begin = k;
      break;
    }
  w.end = w.begin;
  while (w.end < t.size() && t[w.end] < spec.t_end - slack) ++w.end;
  if (w.begin == w.end) throw InputError("no samples inside the step window");
  return w;
}

}  // namespace detail

/// 100 * max(0, peak excursion - |y_final - y_init|) / |y_final - y_init|.
inline double overshoot(std::span<const double> t, std::span<const double> y, const StepSpec& spec) {
  detail::check_step(t, y, spec);
  const auto w = detail::step_window(t, spec);
  const double amp = spec.amplitude();
  const double dir = spec.y_final > spec.y_init ? 1.0 : -1.0;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = w.begin; k < w.end; ++k) peak = std::max(peak, dir * (y[k] - spec.y_init));
  return 100.0 * std::max(0.0, peak - amp) / amp;
}

inline double peak_time(std::span<const double> t, std::span<const double> y, const StepSpec& spec) {
  detail::check_step(t, y, spec);
  const auto w = detail::step_window(t, spec);
  const double dir = spec.y_final > spec.y_init ? 1.0 : -1.0;
  std::size_t best = w.begin;
  for (std::size_t k = w.begin; k < w.end; ++k)
    if (dir * (y[k] - spec.y_init) > dir * (y[best] - spec.y_init)) best = k;
  return t[best];
}

/// Smallest T with |y(t) - y_final| <= band * |y_final - y_init| for every
/// sample from t0 + T to the end of the window; nullopt if the last sample is
/// still outside the band.
inline std::optional<double> settling_time(std::span<const double> t, std::span<const double> y,
                                           const StepSpec& spec) {
  detail::check_step(t, y, spec);
  const auto w = detail::step_window(t, spec);
  const double tol = spec.band * spec.amplitude();
  std::size_t k = w.end;
  while (k > w.begin && std::abs(y[k - 1] - spec.y_final) <= tol) --k;
  if (k == w.end) return std::nullopt;
  if (k == w.begin) return 0.0;
  return std::max(0.0, t[k] - spec.t0);
}

/// Settles inside the window and never strays more than 10 step sizes from y_final.
inline bool stability_flag(std::span<const double> t, std::span<const double> y, const StepSpec& spec) {
  if (!settling_time(t, y, spec)) return false;
  const auto w = detail::step_window(t, spec);
  const double bound = 10.0 * spec.amplitude();
  for (std::size_t k = w.begin; k < w.end; ++k)
    if (!(std::abs(y[k] - spec.y_final) <= bound)) return false;
  return true;
}

inline MetricsReport evaluate(std::span<const double> t, std::span<const double> y, const StepSpec& spec) {
  MetricsReport r;
  r.overshoot_pct = overshoot(t, y, spec);
  r.settling_time = settling_time(t, y, spec);
  r.peak_time = peak_time(t, y, spec);
  r.stable = stability_flag(t, y, spec);
  r.band = spec.band;
  return r;
}

}  // namespace grid5g
