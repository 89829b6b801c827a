#pragma once

// Declarative experiment description and its invariants.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "grid5g/channel.hpp"
#include "grid5g/errors.hpp"
#include "grid5g/power_ctrl.hpp"
#include "grid5g/ran_sched.hpp"

namespace grid5g {

inline constexpr int kSchemaVersion = 1;

// IDEAL delivers every state packet at its creation instant; FIVE_G routes
// it through the RAN scheduler.
enum class RunMode { Ideal, FiveG };

// Cspm: coordinated set-point modulation among DERs.
// FreqPart: central low-frequency path over the RAN, local high-frequency path.
enum class ControlMode { Cspm, FreqPart };

inline std::string_view to_string(RunMode m) { return m == RunMode::Ideal ? "ideal" : "5g"; }
inline std::string_view to_string(ControlMode m) { return m == ControlMode::Cspm ? "cspm" : "freqpart"; }

struct DerSpec {
  double tau_p = 0.004;          // s
  double gain = 1.2;             // m
  double pred_horizon = 0.00025; // s
  double initial_setpoint = 0.0;
  double initial_output = 0.0;
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name = "unnamed";
  double duration = 1.0;  // s
  std::uint64_t seed = 1;
  RunMode mode = RunMode::FiveG;
  ControlMode control = ControlMode::Cspm;
  RanConfig ran;
  ChannelConfig channel;
  std::vector<DerSpec> ders;
  Topology topology;
  std::vector<Event> events;  // sorted by time
  double sample_period = 1e-3;    // s
  std::size_t substeps_per_tti = 20;
  Discretization discretization = Discretization::Exact;
  std::size_t queue_capacity = 1000;
  double partition_cutoff = 20.0;  // Hz, FreqPart only

  double substep() const noexcept { return ran.tti / static_cast<double>(substeps_per_tti); }
};

namespace detail {

// n when x is (to 1e-9 relative) an integer multiple n >= 1 of unit.
inline std::int64_t whole_multiple(double x, double unit) {
  if (!(x > 0.0) || !(unit > 0.0)) return 0;
  const double r = x / unit;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * n) return 0;
  return static_cast<std::int64_t>(n);
}

}  // namespace detail

inline std::int64_t total_ttis(const Scenario& s) { return detail::whole_multiple(s.duration, s.ran.tti); }

inline std::int64_t sample_stride_substeps(const Scenario& s) {
  return s.substeps_per_tti == 0 ? 0 : detail::whole_multiple(s.sample_period, s.substep());
}

/// Every violated scenario invariant. Empty means the scenario can run.
inline std::vector<Diagnostic> validate(const Scenario& s) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string msg, int line = 0) { out.push_back(Diagnostic{line, std::move(msg)}); };

  if (s.schema_version != kSchemaVersion)
    add("schema_version " + std::to_string(s.schema_version) + " unsupported (expected " +
        std::to_string(kSchemaVersion) + ")");
  for (auto& msg : validate(s.ran)) add(msg);
  if (!(s.duration > 0.0)) add("duration must be > 0");
  else if (s.ran.tti > 0.0 && total_ttis(s) == 0)
    add("duration (" + std::to_string(s.duration) + " s) is not a whole number of TTIs");
  if (s.ders.empty()) add("at least one DER is required");
  if (s.substeps_per_tti == 0) add("substeps_per_tti must be >= 1");
  if (s.queue_capacity == 0) add("queue_capacity must be >= 1");
  if (!(s.channel.markov_stay_prob >= 0.0 && s.channel.markov_stay_prob <= 1.0))
    add("channel.markov_stay_prob must be in [0,1]");
  if (s.channel.initial_cqi != 0 && (s.channel.initial_cqi < kMinCqi || s.channel.initial_cqi > kMaxCqi))
    add("channel.initial_cqi must be 0 or in [1,15]");
  if (s.control == ControlMode::FreqPart && !(s.partition_cutoff > 0.0)) add("partition.cutoff must be > 0");

  if (s.substeps_per_tti > 0 && s.ran.tti > 0.0) {
    const double h = s.substep();
    if (!(s.sample_period >= h * (1.0 - 1e-9)))
      add("sample_period must be >= the plant substep (" + std::to_string(h) + " s)");
    else if (sample_stride_substeps(s) == 0)
      add("sample_period must be a whole number of plant substeps (" + std::to_string(h) + " s)");
    for (std::size_t i = 0; i < s.ders.size(); ++i) {
      const auto& d = s.ders[i];
      const std::string who = "der." + std::to_string(i + 1);
      if (!(d.tau_p > 0.0)) add(who + ".tau_p must be > 0");
      else if (s.discretization == Discretization::ExplicitEuler && h > d.tau_p / 2.0)
        add(who + ": explicit discretization needs substep <= tau_p/2");
      if (!(d.pred_horizon >= 0.0)) add(who + ".pred_horizon must be >= 0");
    }
  }

  if (s.topology.size() != s.ders.size()) {
    add("topology covers " + std::to_string(s.topology.size()) + " DERs but " + std::to_string(s.ders.size()) +
        " are declared");
  } else {
    for (DerId i = 0; i < s.topology.size(); ++i)
      if (s.topology.adjacent(i, i)) add("a." + std::to_string(i + 1) + "." + std::to_string(i + 1) + " must be 0");
  }

  double prev = -1.0;
  for (const auto& ev : s.events) {
    if (ev.time < prev) add("events must be sorted by time", ev.line);
    prev = ev.time;
    if (ev.time < 0.0 || ev.time > s.duration) add("event time " + std::to_string(ev.time) + " outside [0, duration]", ev.line);
    else if (ev.time > 0.0 && s.ran.tti > 0.0 && detail::whole_multiple(ev.time, s.ran.tti) == 0)
      add("event time " + std::to_string(ev.time) + " is not a whole number of TTIs", ev.line);
    if (ev.ders.empty()) add("event names no DER", ev.line);
    for (DerId d : ev.ders)
      if (d >= s.ders.size()) add("event names unknown DER " + std::to_string(d + 1), ev.line);
  }
  return out;
}

inline void require_valid(const Scenario& s) {
  auto diags = validate(s);
  if (!diags.empty()) throw ValidationError(std::move(diags));
}

}  // namespace grid5g
