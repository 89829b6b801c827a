#pragma once

// Power-system side: surrogate DER plants, coordinated set-point modulation,
// frequency partitioning and the scenario events that drive them.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grid5g/errors.hpp"
#include "grid5g/ran_sched.hpp"

namespace grid5g {

// ---------------------------------------------------------------------------
// Topology

// a(i, j) = 1 means DER i's control law uses DER j's predictive error, so j
// sends its state to i. link_up(i, j) is the time-varying health of that link.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::size_t n) : n_(n), adjacency_(n * n, 0), up_(n * n, 1) {}

  static Topology all_to_all(std::size_t n) {
    Topology t(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) t.set_adjacent(i, j, true);
    return t;
  }

  std::size_t size() const noexcept { return n_; }
  bool adjacent(DerId i, DerId j) const { return adjacency_[i * n_ + j] != 0; }
  bool link_up(DerId i, DerId j) const { return up_[i * n_ + j] != 0; }
  // Value from j is usable by i right now.
  bool receives(DerId i, DerId j) const { return adjacent(i, j) && link_up(i, j); }

  void set_adjacent(DerId i, DerId j, bool v) { adjacency_[i * n_ + j] = v ? 1 : 0; }
  void set_link_up(DerId i, DerId j, bool v) { up_[i * n_ + j] = v ? 1 : 0; }

  std::vector<DerId> neighbors_of(DerId i) const {
    std::vector<DerId> out;
    for (DerId j = 0; j < n_; ++j)
      if (adjacent(i, j)) out.push_back(j);
    return out;
  }

  // DERs whose control law consumes j's state, i.e. j's packet destinations.
  std::vector<DerId> subscribers_of(DerId j) const {
    std::vector<DerId> out;
    for (DerId i = 0; i < n_; ++i)
      if (adjacent(i, j)) out.push_back(i);
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adjacency_;
  std::vector<std::uint8_t> up_;
};

// ---------------------------------------------------------------------------
// Controller

struct NeighborValue {
  double value = 0.0;
  double received_at = 0.0;
};

struct DerController {
  double setpoint = 0.0;        // x_sp
  double gain = 0.0;            // m
  double pred_horizon = 0.0;    // T_pred, s
  double last_error = 0.0;      // e at the previous control instant
  double last_prediction = 0.0; // own e_pred at the current control instant
  std::vector<std::optional<NeighborValue>> neighbor_errors;  // indexed by DerId
  double modulated_setpoint = 0.0;  // x_sp'
};

inline double tracking_error(double setpoint, double output) noexcept { return setpoint - output; }

/// Linear extrapolation of the tracking error T_pred seconds ahead.
inline double predictive_error(double e_now, double e_prev, double dt, double pred_horizon) {
  if (!(dt > 0.0)) throw InputError("predictive_error: dt must be > 0");
  return e_now + pred_horizon * (e_now - e_prev) / dt;
}

struct NeighborTerm {
  std::optional<double> value;  // nullopt until the first delivery
  bool link_up = true;
};

// x_sp + m * e_pred,self. Shares no inputs with the neighbour sum.
inline double self_modulation(const DerController& ctl) noexcept {
  return ctl.setpoint + ctl.gain * ctl.last_prediction;
}

/// Coordinated set-point modulation: the self terms plus m times the sum of
/// received neighbour predictive errors. Down or never-heard neighbours add 0.
inline double modulated_setpoint(const DerController& ctl, std::span<const NeighborTerm> neighbors) {
  double coupling = 0.0;
  for (const auto& n : neighbors)
    if (n.link_up && n.value) coupling += *n.value;
  return self_modulation(ctl) + ctl.gain * coupling;
}

// ---------------------------------------------------------------------------
// Plant

enum class Discretization { Exact, ExplicitEuler };

inline std::string_view to_string(Discretization d) {
  return d == Discretization::Exact ? "exact" : "explicit";
}

// First-order lag with an additive output disturbance: x = lag(u) + d.
struct PlantState {
  double x = 0.0;
  double tau_p = 0.02;
  double d = 0.0;
};

inline PlantState plant_step(PlantState p, double u, double dt, Discretization mode = Discretization::Exact) {
  if (!(dt > 0.0)) throw ConfigError("plant_step: dt must be > 0");
  if (!(p.tau_p > 0.0)) throw ConfigError("plant_step: tau_p must be > 0");
  if (mode == Discretization::ExplicitEuler) {
    if (dt > p.tau_p / 2.0) throw ConfigError("plant_step: explicit step requires dt <= tau_p/2");
    p.x += dt * ((u + p.d - p.x) / p.tau_p);
    return p;
  }
  const double lagged = p.x - p.d;
  p.x = p.d + u + (lagged - u) * std::exp(-dt / p.tau_p);
  return p;
}

// Load switching stand-in: shifts the output and its equilibrium by delta.
inline PlantState apply_disturbance(PlantState p, double delta) noexcept {
  p.x += delta;
  p.d += delta;
  return p;
}

/// Response at the point of common coupling: the mean DER output.
inline double pcc_aggregate(std::span<const double> outputs) {
  if (outputs.empty()) throw InputError("pcc_aggregate: no DER outputs");
  double sum = 0.0;
  for (double x : outputs) sum += x;
  return sum / static_cast<double>(outputs.size());
}

// ---------------------------------------------------------------------------
// Frequency partitioning

struct FreqPartition {
  double cutoff = 10.0;  // Hz
  double lpf_state = 0.0;
};

struct PartitionedSample {
  double low = 0.0;
  double high = 0.0;
  FreqPartition next;
};

/// First-order low-pass with its exact complement as the high-pass part.
inline PartitionedSample frequency_partition(double sample, FreqPartition fp, double dt) {
  if (!(dt > 0.0)) throw InputError("frequency_partition: dt must be > 0");
  if (!(fp.cutoff > 0.0)) throw InputError("frequency_partition: cutoff must be > 0");
  const double rc = 1.0 / (2.0 * std::numbers::pi * fp.cutoff);
  const double alpha = dt / (dt + rc);
  const double low = fp.lpf_state + alpha * (sample - fp.lpf_state);
  fp.lpf_state = low;
  return PartitionedSample{low, sample - low, fp};
}

// ---------------------------------------------------------------------------
// Events

enum class EventKind { Setpoint, LinkFail, LinkRestore, Disturbance };
enum class LinkDirection { Out, In, Both };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Setpoint: return "setpoint";
    case EventKind::LinkFail: return "link_fail";
    case EventKind::LinkRestore: return "link_restore";
    case EventKind::Disturbance: return "disturbance";
  }
  return "?";
}

inline std::string_view to_string(LinkDirection d) {
  switch (d) {
    case LinkDirection::Out: return "out";
    case LinkDirection::In: return "in";
    case LinkDirection::Both: return "both";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Setpoint;
  std::vector<DerId> ders;
  double value = 0.0;  // new setpoint, or disturbance increment
  LinkDirection direction = LinkDirection::Out;
  int line = 0;  // source line in the scenario file, 0 if built in code
};

// Everything the power side owns for one simulation.
struct GridState {
  std::vector<DerController> controllers;
  std::vector<PlantState> plants;
  Topology topology;

  std::size_t size() const noexcept { return plants.size(); }
};

inline void set_links(Topology& topo, DerId der, LinkDirection dir, bool up) {
  for (DerId other = 0; other < topo.size(); ++other) {
    if (other == der) continue;
    if (dir == LinkDirection::Out || dir == LinkDirection::Both) topo.set_link_up(other, der, up);
    if (dir == LinkDirection::In || dir == LinkDirection::Both) topo.set_link_up(der, other, up);
  }
}

inline void apply_event(const Event& ev, GridState& grid) {
  for (DerId der : ev.ders)
    if (der >= grid.size())
      throw ConfigError("event at t=" + std::to_string(ev.time) + " names unknown DER " + std::to_string(der + 1));
  for (DerId der : ev.ders) {
    switch (ev.kind) {
      case EventKind::Setpoint:
        grid.controllers[der].setpoint = ev.value;
        break;
      case EventKind::LinkFail:
        set_links(grid.topology, der, ev.direction, false);
        break;
      case EventKind::LinkRestore:
        set_links(grid.topology, der, ev.direction, true);
        break;
      case EventKind::Disturbance:
        grid.plants[der] = apply_disturbance(grid.plants[der], ev.value);
        break;
    }
  }
}

}  // namespace grid5g
