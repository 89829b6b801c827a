#pragma once

// Lock-step co-simulation: the RAN and the power system advance through the
// same TTI. Within one TTI the order is fixed:
//
//   events -> sense/enqueue -> BSR -> channel -> schedule -> deliver
//          -> control update -> plant substeps
//
// Packets transmitted in TTI k carry delivered_at = (k+1)*tti and are first
// consumed by the control update of TTI k+1. In IDEAL mode packets are
// consumed in the TTI that created them.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grid5g/channel.hpp"
#include "grid5g/errors.hpp"
#include "grid5g/power_ctrl.hpp"
#include "grid5g/ran_sched.hpp"
#include "grid5g/scenario.hpp"
#include "grid5g/trace.hpp"

namespace grid5g {

struct SimClock {
  std::int64_t tti_index = 0;
  double tti = 1e-3;
  std::size_t substeps_per_tti = 20;
  std::int64_t substeps_done = 0;

  double now() const noexcept { return static_cast<double>(tti_index) * tti; }
  double plant_time() const noexcept {
    return static_cast<double>(substeps_done) / static_cast<double>(substeps_per_tti) * tti;
  }
};

struct PacketCounters {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;  // reached the receiver
  std::uint64_t lost = 0;       // transmitted on a failed link
  std::uint64_t dropped = 0;    // evicted from a full transmit queue

  bool operator==(const PacketCounters&) const = default;
};

// One neighbour value consumed by a control update.
struct DeliveryRecord {
  std::uint64_t packet_id = 0;
  double delivered_at = 0.0;
  DerId source = 0;
  DerId destination = 0;
  double value = 0.0;
  std::int64_t created_tti = 0;
  std::int64_t consumed_tti = 0;
};

// Replaces the internal plant for one TTI: receives the applied set points,
// returns the DER outputs at the end of the TTI.
using PlantDriver = std::function<std::vector<double>(std::int64_t tti_index, std::span<const double> applied)>;

class Engine {
 public:
  explicit Engine(Scenario scenario, std::unique_ptr<SchedulingPolicy> policy = nullptr)
      : sc_(std::move(scenario)),
        policy_(policy ? std::move(policy) : std::make_unique<RoundRobinPolicy>()),
        channel_(make_channel(sc_)) {
    const std::size_t n = sc_.ders.size();
    total_ttis_ = grid5g::total_ttis(sc_);
    stride_ = sample_stride_substeps(sc_);
    bsr_every_ = *bsr_period_ttis(sc_.ran);
    clock_.tti = sc_.ran.tti;
    clock_.substeps_per_tti = sc_.substeps_per_tti;

    grid_.topology = sc_.topology;
    for (const auto& d : sc_.ders) {
      DerController ctl;
      ctl.setpoint = d.initial_setpoint;
      ctl.gain = d.gain;
      ctl.pred_horizon = d.pred_horizon;
      ctl.last_error = tracking_error(d.initial_setpoint, d.initial_output);
      ctl.last_prediction = ctl.last_error;
      ctl.neighbor_errors.assign(n, std::nullopt);
      ctl.modulated_setpoint = self_modulation(ctl);
      grid_.controllers.push_back(std::move(ctl));
      grid_.plants.push_back(PlantState{d.initial_output, d.tau_p, 0.0});
    }
    for (std::size_t i = 0; i < n; ++i) queues_.emplace_back(sc_.queue_capacity);
    per_der_.assign(n, PacketCounters{});
    bsrs_.resize(n);
    for (DerId i = 0; i < n; ++i) bsrs_[i] = BufferStatus{i, 0, 0.0};
    qms_.assign(n, std::vector<int>(sc_.ran.aggregated_carriers, sc_.ran.modulation_orders.front()));
    cqi_.assign(n, std::vector<int>(sc_.ran.aggregated_carriers, 0));
    delivered_tti_.assign(n, 0);

    if (sc_.control == ControlMode::FreqPart) {
      for (const auto& ctl : grid_.controllers) {
        const double s0 = self_modulation(ctl);
        central_lpf_.push_back(FreqPartition{sc_.partition_cutoff, s0});
        local_lpf_.push_back(FreqPartition{sc_.partition_cutoff, s0});
        central_signal_.push_back(s0);
      }
    }
  }

  const Scenario& scenario() const noexcept { return sc_; }
  const SimClock& clock() const noexcept { return clock_; }
  const GridState& grid() const noexcept { return grid_; }
  const std::vector<TransmitQueue>& queues() const noexcept { return queues_; }
  const std::vector<PacketCounters>& per_der_counters() const noexcept { return per_der_; }
  std::int64_t total_ttis() const noexcept { return total_ttis_; }
  bool finished() const noexcept { return clock_.tti_index >= total_ttis_; }
  const std::optional<Allocation>& last_allocation() const noexcept { return last_alloc_; }

  PacketCounters counters() const {
    PacketCounters sum;
    for (const auto& c : per_der_) {
      sum.generated += c.generated;
      sum.delivered += c.delivered;
      sum.lost += c.lost;
      sum.dropped += c.dropped;
    }
    return sum;
  }

  void enable_delivery_log(bool on = true) { log_deliveries_ = on; }
  const std::vector<DeliveryRecord>& delivery_log() const noexcept { return delivery_log_; }

  // An attached driver replaces plant integration. Records are only taken at
  // TTI boundaries then, so the sample period must be a whole number of TTIs.
  void attach_plant_driver(PlantDriver driver) {
    if (stride_ % static_cast<std::int64_t>(sc_.substeps_per_tti) != 0)
      throw ConfigError("an external plant needs sample_period to be a whole number of TTIs");
    for (const auto& ev : sc_.events)
      if (ev.kind == EventKind::Disturbance)
        throw ConfigError("disturbance events are not supported with an external plant");
    driver_ = std::move(driver);
  }

  /// Advances exactly one TTI; returns the trace records taken during it.
  std::vector<TraceRecord> step_tti() {
    if (finished()) throw EndOfSimulation();
    const std::int64_t k = clock_.tti_index;
    const double now = clock_.now();
    const std::size_t n = grid_.size();
    std::fill(delivered_tti_.begin(), delivered_tti_.end(), 0);

    // 1. events due at or before this TTI boundary
    const double eps = 1e-9 * sc_.ran.tti;
    while (next_event_ < sc_.events.size() && sc_.events[next_event_].time <= now + eps)
      apply_event(sc_.events[next_event_++], grid_);

    // 2. sense and enqueue state packets
    for (DerId i = 0; i < n; ++i) {
      auto& ctl = grid_.controllers[i];
      const double e = tracking_error(ctl.setpoint, grid_.plants[i].x);
      ctl.last_prediction = predictive_error(e, ctl.last_error, sc_.ran.tti, ctl.pred_horizon);
      ctl.last_error = e;
      if (sc_.control == ControlMode::Cspm) {
        for (DerId dst : grid_.topology.subscribers_of(i)) emit_packet(i, dst, ctl.last_prediction, k, now);
      } else {
        emit_packet(i, central_sink(), self_modulation(ctl), k, now);
      }
    }

    if (sc_.mode == RunMode::FiveG) {
      // 3. buffer status, every tau
      if (k % bsr_every_ == 0)
        for (DerId i = 0; i < n; ++i) bsrs_[i] = report_bsr(i, queues_[i], now);
      // 4. channel
      for (const auto& rep : channel_.advance(k)) {
        cqi_[rep.der] = rep.per_carrier_cqi;
        qms_[rep.der] = admissible_orders(rep);
      }
      // 5. schedule
      last_alloc_ = policy_->allocate(bsrs_, sc_.ran, k);
      // 6. transmit
      const double tti_end = static_cast<double>(k + 1) * sc_.ran.tti;
      for (DerId i = 0; i < n; ++i) {
        const std::size_t grant = last_alloc_->grants[i];
        if (grant == 0) continue;
        for (auto& p : deliver_packets(queues_[i], grant, sc_.ran, qms_[i], tti_end)) receive(std::move(p));
      }
    }

    // 7. control update from everything visible by now
    consume_arrivals(now, k);
    update_setpoints();

    // 8-9. plant substeps, sampling at record boundaries
    std::vector<TraceRecord> records;
    const auto steps = static_cast<std::int64_t>(sc_.substeps_per_tti);
    if (driver_) {
      if (clock_.substeps_done % stride_ == 0) records.push_back(snapshot(clock_.plant_time()));
      std::vector<double> applied(n);
      for (DerId i = 0; i < n; ++i) applied[i] = grid_.controllers[i].modulated_setpoint;
      auto xs = driver_(k, applied);
      if (xs.size() != n)
        throw ProtocolError("external plant returned " + std::to_string(xs.size()) + " outputs for " +
                            std::to_string(n) + " DERs");
      for (DerId i = 0; i < n; ++i) grid_.plants[i].x = xs[i];
      clock_.substeps_done += steps;
    } else {
      const double h = sc_.substep();
      for (std::int64_t s = 0; s < steps; ++s) {
        if (clock_.substeps_done % stride_ == 0) records.push_back(snapshot(clock_.plant_time()));
        for (DerId i = 0; i < n; ++i)
          grid_.plants[i] = plant_step(grid_.plants[i], grid_.controllers[i].modulated_setpoint, h, sc_.discretization);
        ++clock_.substeps_done;
      }
    }
    ++clock_.tti_index;
    return records;
  }

  Trace run_to_end() {
    Trace trace;
    trace.n_ders = grid_.size();
    trace.carriers = sc_.ran.aggregated_carriers;
    while (!finished())
      for (auto& r : step_tti()) trace.records.push_back(std::move(r));
    return trace;
  }

 private:
  static ChannelState make_channel(const Scenario& s) {
    require_valid(s);
    return ChannelState(s.ders.size(), s.ran.aggregated_carriers, s.channel, s.seed);
  }

  // CQI table orders, lowered to the best order the RAN config admits.
  std::vector<int> admissible_orders(const CqiReport& rep) const {
    auto qms = modulation_orders(rep);
    for (auto& q : qms) {
      int best = 0;
      for (int a : sc_.ran.modulation_orders)
        if (a <= q && a > best) best = a;
      if (best == 0) best = *std::min_element(sc_.ran.modulation_orders.begin(), sc_.ran.modulation_orders.end());
      q = best;
    }
    return qms;
  }

  DerId central_sink() const noexcept { return grid_.size(); }

  void emit_packet(DerId src, DerId dst, double value, std::int64_t k, double now) {
    Packet p;
    p.id = next_packet_id_++;
    p.source = src;
    p.destination = dst;
    p.size = sc_.ran.packet_size;
    p.created_tti = k;
    p.created_at = now;
    p.payload_value = value;
    ++per_der_[src].generated;
    if (sc_.mode == RunMode::Ideal) {
      p.delivered_at = now;
      receive(std::move(p));
      return;
    }
    auto& q = queues_[src];
    const auto before = q.dropped();
    q.push(std::move(p));
    per_der_[src].dropped += q.dropped() - before;
  }

  void receive(Packet p) {
    const DerId src = p.source;
    const bool to_central = p.destination == central_sink();
    if (!to_central && !grid_.topology.link_up(p.destination, src)) {
      ++per_der_[src].lost;
      return;
    }
    ++per_der_[src].delivered;
    ++delivered_tti_[src];
    in_flight_.push_back(std::move(p));
  }

  void consume_arrivals(double now, std::int64_t k) {
    const double eps = 1e-9 * sc_.ran.tti;
    std::vector<Packet> later;
    for (auto& p : in_flight_) {
      if (*p.delivered_at > now + eps) {
        later.push_back(std::move(p));
        continue;
      }
      if (p.destination == central_sink()) {
        central_signal_[p.source] = p.payload_value;
      } else {
        grid_.controllers[p.destination].neighbor_errors[p.source] = NeighborValue{p.payload_value, *p.delivered_at};
      }
      if (log_deliveries_)
        delivery_log_.push_back(
            DeliveryRecord{p.id, *p.delivered_at, p.source, p.destination, p.payload_value, p.created_tti, k});
    }
    in_flight_ = std::move(later);
  }

  void update_setpoints() {
    const std::size_t n = grid_.size();
    const double dt = sc_.ran.tti;
    std::vector<NeighborTerm> terms;
    for (DerId i = 0; i < n; ++i) {
      auto& ctl = grid_.controllers[i];
      if (sc_.control == ControlMode::Cspm) {
        terms.clear();
        for (DerId j : grid_.topology.neighbors_of(i)) {
          const auto& nv = ctl.neighbor_errors[j];
          terms.push_back(NeighborTerm{nv ? std::optional<double>(nv->value) : std::nullopt,
                                       grid_.topology.link_up(i, j)});
        }
        ctl.modulated_setpoint = modulated_setpoint(ctl, terms);
      } else {
        const auto local = frequency_partition(self_modulation(ctl), local_lpf_[i], dt);
        local_lpf_[i] = local.next;
        const auto central = frequency_partition(central_signal_[i], central_lpf_[i], dt);
        central_lpf_[i] = central.next;
        ctl.modulated_setpoint = central.low + local.high;
      }
    }
  }

  TraceRecord snapshot(double t) const {
    TraceRecord r;
    r.t = t;
    std::vector<double> xs;
    for (DerId i = 0; i < grid_.size(); ++i) {
      const auto& ctl = grid_.controllers[i];
      DerSample d;
      d.x_sp = ctl.setpoint;
      d.x_sp_prime = ctl.modulated_setpoint;
      d.x = grid_.plants[i].x;
      d.e = ctl.last_error;
      d.e_pred = ctl.last_prediction;
      d.queued = queues_[i].size();
      d.delivered = delivered_tti_[i];
      r.ders.push_back(d);
      xs.push_back(d.x);
    }
    r.pcc = pcc_aggregate(xs);
    r.cqi = cqi_;
    return r;
  }

  Scenario sc_;
  std::unique_ptr<SchedulingPolicy> policy_;
  ChannelState channel_;
  GridState grid_;
  SimClock clock_;
  std::int64_t total_ttis_ = 0;
  std::int64_t stride_ = 1;
  std::int64_t bsr_every_ = 1;
  std::size_t next_event_ = 0;
  std::uint64_t next_packet_id_ = 0;

  std::vector<TransmitQueue> queues_;
  std::vector<PacketCounters> per_der_;
  std::vector<BufferStatus> bsrs_;
  std::vector<std::vector<int>> qms_;
  std::vector<std::vector<int>> cqi_;
  std::vector<std::size_t> delivered_tti_;
  std::optional<Allocation> last_alloc_;
  std::vector<Packet> in_flight_;

  std::vector<FreqPartition> central_lpf_;
  std::vector<FreqPartition> local_lpf_;
  std::vector<double> central_signal_;

  PlantDriver driver_;
  bool log_deliveries_ = false;
  std::vector<DeliveryRecord> delivery_log_;
};

/// Runs a scenario from t = 0 to its duration.
inline Trace run(const Scenario& scenario) { return Engine(scenario).run_to_end(); }

}  // namespace grid5g
