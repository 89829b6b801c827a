#pragma once

// Bundled scenarios for the two use cases. Each is ordinary scenario-file
// text, so `grid5g preset <name>` prints something `validate` accepts.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grid5g/scenario.hpp"
#include "grid5g/scenario_file.hpp"

namespace grid5g {

namespace detail {

inline constexpr std::string_view kCspmCommon = R"(schema_version = 1
seed = 1
mode = 5g                       # ideal | 5g
control = cspm
sample_period = 0.001           # s
substeps_per_tti = 20
discretization = exact
queue_capacity = 1000           # packets per DER

ran.carriers = 2                # J
ran.modulation_orders = 2 4 6 8
ran.max_layers = 2
ran.scaling_factor = 0.8
ran.max_code_rate = 0.92578125  # 948/1024
ran.numerology = 2
ran.total_rbs = 3               # M
ran.rbs_per_der = 1
ran.overhead = 0.08
ran.tti = 0.001                 # s
ran.bsr_period = 0.001          # s
ran.packet_size = 150           # bytes
ran.bandwidth = 5e6             # Hz
ran.carrier_freq = 2.63e9       # Hz

channel.model = iid_uniform

ders = 3
der.default.tau_p = 0.004           # s
der.default.gain = 1.2
der.default.pred_horizon = 0.00025  # s
topology = all_to_all
)";

struct PresetText {
  std::string_view name;
  std::string_view summary;
  std::string_view body;  // appended to the common block where one applies
  bool cspm;
};

inline constexpr PresetText kPresets[] = {
    {"cspm_staggered", "coordinated set-point modulation, 0->1 steps at 0.5/1.0/1.5 s on DERs 1/2/3",
     R"(name = cspm_staggered
duration = 2.5
event = 0.5 setpoint 1 1
event = 1.0 setpoint 2 1
event = 1.5 setpoint 3 1
)",
     true},
    {"cspm_simultaneous", "coordinated set-point modulation, all DERs 0->1 at 0.5 s and back to 0 at 2 s",
     R"(name = cspm_simultaneous
duration = 3.0
event = 0.5 setpoint all 1
event = 2.0 setpoint all 0
)",
     true},
    {"cspm_comm_failure", "staggered steps with DER 2 unable to send its state for the whole run",
     R"(name = cspm_comm_failure
duration = 2.5
event = 0 link_fail 2 out
event = 0.5 setpoint 1 1
event = 1.0 setpoint 2 1
event = 1.5 setpoint 3 1
)",
     true},
    {"power_park_step", "frequency-partitioned control, bus set point 0.2->0.3 at 0.07 s",
     R"(schema_version = 1
name = power_park_step
duration = 0.2
seed = 1
mode = 5g
control = freqpart
sample_period = 0.001
substeps_per_tti = 20
partition.cutoff = 20           # Hz
channel.model = iid_uniform
ders = 3
der.default.tau_p = 0.004
der.default.gain = 1.2
der.default.pred_horizon = 0.00025
der.default.initial_setpoint = 0.2
der.default.initial_output = 0.2
topology = none
event = 0.07 setpoint all 0.3
)",
     false},
    {"power_park_load", "frequency-partitioned control, load switched in at 0.08 s (output disturbance)",
     R"(schema_version = 1
name = power_park_load
duration = 0.2
seed = 1
mode = 5g
control = freqpart
sample_period = 0.001
substeps_per_tti = 20
partition.cutoff = 20           # Hz
channel.model = iid_uniform
ders = 3
der.default.tau_p = 0.004
der.default.gain = 1.2
der.default.pred_horizon = 0.00025
der.default.initial_setpoint = 0.3
der.default.initial_output = 0.3
topology = none
event = 0.08 disturbance all -0.03
)",
     false},
};

}  // namespace detail

inline std::vector<std::string_view> preset_names() {
  std::vector<std::string_view> out;
  for (const auto& p : detail::kPresets) out.push_back(p.name);
  return out;
}

inline std::optional<std::string_view> preset_summary(std::string_view name) {
  for (const auto& p : detail::kPresets)
    if (p.name == name) return p.summary;
  return std::nullopt;
}

/// Scenario-file text of a bundled preset.
inline std::optional<std::string> preset_text(std::string_view name) {
  for (const auto& p : detail::kPresets)
    if (p.name == name) {
      std::string text;
      if (p.cspm) text = std::string(detail::kCspmCommon);
      text += p.body;
      return text;
    }
  return std::nullopt;
}

inline Scenario load_preset(std::string_view name) {
  auto text = preset_text(name);
  if (!text) throw InputError("unknown preset `" + std::string(name) + "`");
  return load_scenario(*text);
}

}  // namespace grid5g
