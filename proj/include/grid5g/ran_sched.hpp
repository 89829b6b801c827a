#pragma once

// gNodeB side of the radio access network: buffer status collection,
// resource-block allocation per TTI and the TS 38.306 peak-rate formula used
// to turn granted RBs into a per-TTI bit budget.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grid5g/errors.hpp"

namespace grid5g {

using DerId = std::size_t;

struct RanConfig {
  std::size_t aggregated_carriers = 2;          // J
  std::vector<int> modulation_orders{2, 4, 6, 8};  // admissible Qm
  int max_layers = 2;                           // v
  double scaling_factor = 0.8;                  // f
  double max_code_rate = 948.0 / 1024.0;        // R_max
  int numerology = 2;                           // mu
  std::size_t total_rbs = 3;                    // M
  std::size_t rbs_per_der = 1;                  // N_PRB
  double overhead = 0.08;                       // OH, FR1 uplink
  double tti = 1e-3;                            // s
  double bsr_period = 1e-3;                     // tau, s
  std::size_t packet_size = 150;                // L, bytes
  double bandwidth = 5e6;                       // B, Hz (informational)
  double carrier_freq = 2.63e9;                 // f_D, Hz (informational)
  bool infinite_capacity = false;               // test override: budget = inf

  std::size_t packet_bits() const noexcept { return 8 * packet_size; }
};

// Number of TTIs per BSR period, or nullopt when tau is not an integer
// multiple of the TTI.
inline std::optional<std::int64_t> bsr_period_ttis(const RanConfig& cfg) {
  if (!(cfg.tti > 0.0) || !(cfg.bsr_period > 0.0)) return std::nullopt;
  const double ratio = cfg.bsr_period / cfg.tti;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) return std::nullopt;
  return static_cast<std::int64_t>(rounded);
}

// Every violated RanConfig invariant, one message each.
inline std::vector<std::string> validate(const RanConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.aggregated_carriers < 1 || cfg.aggregated_carriers > 16)
    out.push_back("ran.carriers must be in [1,16], got " + std::to_string(cfg.aggregated_carriers));
  if (cfg.modulation_orders.empty()) out.push_back("ran.modulation_orders must not be empty");
  for (int qm : cfg.modulation_orders)
    if (qm != 2 && qm != 4 && qm != 6 && qm != 8)
      out.push_back("ran.modulation_orders: " + std::to_string(qm) + " is not one of 2,4,6,8");
  if (cfg.max_layers < 1) out.push_back("ran.max_layers must be >= 1");
  if (!(cfg.scaling_factor > 0.0 && cfg.scaling_factor <= 1.0))
    out.push_back("ran.scaling_factor must be in (0,1]");
  if (!(cfg.max_code_rate > 0.0 && cfg.max_code_rate <= 1.0))
    out.push_back("ran.max_code_rate must be in (0,1]");
  if (cfg.numerology < 0 || cfg.numerology > 4)
    out.push_back("ran.numerology must be in [0,4], got " + std::to_string(cfg.numerology));
  if (!(cfg.overhead >= 0.0 && cfg.overhead < 1.0)) out.push_back("ran.overhead must be in [0,1)");
  if (!(cfg.tti > 0.0)) out.push_back("ran.tti must be > 0");
  if (!(cfg.bsr_period > 0.0)) out.push_back("ran.bsr_period must be > 0");
  if (cfg.tti > 0.0 && cfg.bsr_period > 0.0 && !bsr_period_ttis(cfg))
    out.push_back("ran.bsr_period (" + std::to_string(cfg.bsr_period) +
                  " s) is not an integer multiple of ran.tti (" + std::to_string(cfg.tti) + " s)");
  if (cfg.packet_size == 0) out.push_back("ran.packet_size must be > 0");
  if (cfg.rbs_per_der == 0) out.push_back("ran.rbs_per_der must be >= 1");
  if (cfg.total_rbs == 0) out.push_back("ran.total_rbs must be >= 1");
  if (cfg.rbs_per_der > cfg.total_rbs) out.push_back("ran.rbs_per_der exceeds ran.total_rbs");
  return out;
}

/// OFDM symbol duration for numerology mu: 1 ms / (14 * 2^mu).
inline double symbol_time(int mu) {
  if (mu < 0 || mu > 4) throw ConfigError("numerology must be in [0,4], got " + std::to_string(mu));
  return 1e-3 / (14.0 * static_cast<double>(1 << mu));
}

inline bool admissible_qm(const RanConfig& cfg, int qm) {
  for (int q : cfg.modulation_orders)
    if (q == qm) return true;
  return false;
}

/// One component-carrier term of the TS 38.306 approximate data rate, in bit/s.
inline double carrier_throughput(const RanConfig& cfg, int qm, std::size_t n_prb) {
  if (!admissible_qm(cfg, qm)) throw ConfigError("modulation order " + std::to_string(qm) + " not admissible");
  if (n_prb == 0) return 0.0;
  const double ts = symbol_time(cfg.numerology);
  return static_cast<double>(cfg.max_layers) * qm * cfg.scaling_factor * cfg.max_code_rate *
         (12.0 * static_cast<double>(n_prb) / ts) * (1.0 - cfg.overhead);
}

/// Sum of carrier_throughput over the J aggregated carriers, each with its own Qm.
inline double aggregate_throughput(const RanConfig& cfg, std::span<const int> per_carrier_qm,
                                   std::size_t n_prb) {
  if (per_carrier_qm.size() != cfg.aggregated_carriers)
    throw ConfigError("expected " + std::to_string(cfg.aggregated_carriers) +
                      " per-carrier modulation orders, got " + std::to_string(per_carrier_qm.size()));
  double total = 0.0;
  for (int qm : per_carrier_qm) total += carrier_throughput(cfg, qm, n_prb);
  return total;
}

struct Packet {
  std::uint64_t id = 0;
  DerId source = 0;
  DerId destination = 0;  // a DER index, or the central-controller sink
  std::size_t size = 0;   // bytes
  std::int64_t created_tti = 0;
  double created_at = 0.0;
  std::optional<double> delivered_at;
  double payload_value = 0.0;
};

struct BufferStatus {
  DerId der = 0;
  std::size_t pending_packets = 0;
  double reported_at = 0.0;
};

struct Allocation {
  std::int64_t tti_index = 0;
  std::vector<std::size_t> grants;  // RB count per DER, indexed by DerId

  std::size_t total() const noexcept {
    std::size_t s = 0;
    for (auto g : grants) s += g;
    return s;
  }
};

struct RoundRobinState {
  std::size_t cursor = 0;
};

/// Circular allocation starting at the cursor. Each backlogged DER gets up to
/// rbs_per_der RBs until the M RBs run out; empty buffers are skipped. The
/// returned cursor points just past the last DER granted.
inline std::pair<Allocation, RoundRobinState> schedule_round_robin(std::span<const BufferStatus> bsrs,
                                                                   const RanConfig& cfg,
                                                                   RoundRobinState state,
                                                                   std::int64_t tti_index = 0) {
  Allocation alloc;
  alloc.tti_index = tti_index;
  const std::size_t n = bsrs.size();
  alloc.grants.assign(n, 0);
  if (n == 0) return {alloc, state};

  std::size_t remaining = cfg.total_rbs;
  std::size_t cursor = state.cursor % n;
  std::optional<std::size_t> last;
  for (std::size_t k = 0; k < n && remaining > 0; ++k) {
    const std::size_t der = (cursor + k) % n;
    if (bsrs[der].pending_packets == 0) continue;
    const std::size_t grant = std::min(cfg.rbs_per_der, remaining);
    alloc.grants[der] = grant;
    remaining -= grant;
    last = der;
  }
  if (last) state.cursor = (*last + 1) % n;
  return {alloc, state};
}

// Pluggable allocation policy. Only round robin ships.
class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;
  virtual Allocation allocate(std::span<const BufferStatus> bsrs, const RanConfig& cfg,
                              std::int64_t tti_index) = 0;
  virtual std::string_view name() const noexcept = 0;
};

class RoundRobinPolicy final : public SchedulingPolicy {
 public:
  Allocation allocate(std::span<const BufferStatus> bsrs, const RanConfig& cfg,
                      std::int64_t tti_index) override {
    auto [alloc, next] = schedule_round_robin(bsrs, cfg, state_, tti_index);
    state_ = next;
    return alloc;
  }
  std::string_view name() const noexcept override { return "round_robin"; }
  const RoundRobinState& state() const noexcept { return state_; }

 private:
  RoundRobinState state_;
};

// Per-DER FIFO transmit buffer. Full queues drop their oldest packet.
class TransmitQueue {
 public:
  explicit TransmitQueue(std::size_t capacity = 1000) : capacity_(capacity) {}

  void push(Packet p) {
    if (capacity_ > 0 && packets_.size() >= capacity_) {
      packets_.pop_front();
      ++dropped_;
    }
    packets_.push_back(std::move(p));
    ++enqueued_;
  }

  Packet pop() {
    Packet p = std::move(packets_.front());
    packets_.pop_front();
    return p;
  }

  std::size_t size() const noexcept { return packets_.size(); }
  bool empty() const noexcept { return packets_.empty(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  std::uint64_t enqueued() const noexcept { return enqueued_; }
  const std::deque<Packet>& packets() const noexcept { return packets_; }

 private:
  std::size_t capacity_;
  std::deque<Packet> packets_;
  std::uint64_t dropped_ = 0;
  std::uint64_t enqueued_ = 0;
};

/// Packets the granted RBs can carry this TTI: floor(rate * tti / (8 L)).
/// Residual bits are discarded; there is no fragmentation.
inline std::size_t packet_budget(const RanConfig& cfg, std::span<const int> per_carrier_qm,
                                 std::size_t granted_rbs) {
  if (granted_rbs == 0) return 0;
  if (cfg.infinite_capacity) return std::numeric_limits<std::size_t>::max();
  const double bits = aggregate_throughput(cfg, per_carrier_qm, granted_rbs) * cfg.tti;
  return static_cast<std::size_t>(std::floor(bits / static_cast<double>(cfg.packet_bits())));
}

/// Dequeues up to the TTI's packet budget in FIFO order and stamps them
/// delivered at `tti_end`.
inline std::vector<Packet> deliver_packets(TransmitQueue& queue, std::size_t granted_rbs,
                                           const RanConfig& cfg, std::span<const int> per_carrier_qm,
                                           double tti_end) {
  std::vector<Packet> out;
  const std::size_t budget = packet_budget(cfg, per_carrier_qm, granted_rbs);
  while (out.size() < budget && !queue.empty()) {
    Packet p = queue.pop();
    p.delivered_at = tti_end;
    out.push_back(std::move(p));
  }
  return out;
}

/// Out-of-band, lossless, instantaneous buffer status report.
inline BufferStatus report_bsr(DerId der, const TransmitQueue& queue, double now) {
  return BufferStatus{der, queue.size(), now};
}

}  // namespace grid5g
