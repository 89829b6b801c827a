#pragma once

// Random time-varying uplink channel: per-DER, per-carrier CQI drawn every
// TTI, and the CQI -> modulation order table.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grid5g/errors.hpp"
#include "grid5g/ran_sched.hpp"

namespace grid5g {

inline constexpr int kMinCqi = 1;
inline constexpr int kMaxCqi = 15;

enum class ChannelModel { IidUniform, MarkovStep };

inline std::string_view to_string(ChannelModel m) {
  return m == ChannelModel::IidUniform ? "iid_uniform" : "markov_step";
}

struct ChannelConfig {
  ChannelModel model = ChannelModel::IidUniform;
  double markov_stay_prob = 0.9;
  bool shared_across_carriers = false;  // one CQI per DER reused on all carriers
  int initial_cqi = 0;                  // MarkovStep start; 0 draws it from the seed
};

struct CqiReport {
  DerId der = 0;
  std::vector<int> per_carrier_cqi;
  std::int64_t tti_index = 0;
};

/// CQI 1-6 -> QPSK, 7-9 -> 16QAM, 10-12 -> 64QAM, 13-15 -> 256QAM.
inline int cqi_to_modulation(int cqi) {
  if (cqi < kMinCqi || cqi > kMaxCqi) throw InputError("CQI must be in [1,15], got " + std::to_string(cqi));
  if (cqi <= 6) return 2;
  if (cqi <= 9) return 4;
  if (cqi <= 12) return 6;
  return 8;
}

// One MarkovStep transition given the two random decisions.
inline int markov_step(int cqi, bool stay, bool up) noexcept {
  if (stay) return cqi;
  const int next = up ? cqi + 1 : cqi - 1;
  return next < kMinCqi ? kMinCqi : (next > kMaxCqi ? kMaxCqi : next);
}

class ChannelState {
 public:
  ChannelState(std::size_t n_ders, std::size_t carriers, ChannelConfig cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed), current_(n_ders, std::vector<int>(carriers, kMaxCqi)) {
    if (!(cfg_.markov_stay_prob >= 0.0 && cfg_.markov_stay_prob <= 1.0))
      throw ConfigError("channel.markov_stay_prob must be in [0,1]");
    if (cfg_.initial_cqi != 0 && (cfg_.initial_cqi < kMinCqi || cfg_.initial_cqi > kMaxCqi))
      throw ConfigError("channel.initial_cqi must be 0 or in [1,15]");
    for (auto& row : current_)
      for (auto& c : row) c = cfg_.initial_cqi != 0 ? cfg_.initial_cqi : draw_uniform();
    if (cfg_.shared_across_carriers)
      for (auto& row : current_)
        for (auto& c : row) c = row.front();
  }

  const ChannelConfig& config() const noexcept { return cfg_; }
  const std::vector<std::vector<int>>& current() const noexcept { return current_; }

  // Draws the CQI for every DER and carrier for this TTI.
  std::vector<CqiReport> advance(std::int64_t tti_index) {
    std::vector<CqiReport> out;
    out.reserve(current_.size());
    for (DerId der = 0; der < current_.size(); ++der) {
      auto& row = current_[der];
      const std::size_t draws = cfg_.shared_across_carriers ? std::min<std::size_t>(1, row.size()) : row.size();
      for (std::size_t c = 0; c < draws; ++c) row[c] = next_cqi(row[c]);
      if (cfg_.shared_across_carriers)
        for (auto& c : row) c = row.front();
      out.push_back(CqiReport{der, row, tti_index});
    }
    return out;
  }

 private:
  int draw_uniform() { return std::uniform_int_distribution<int>(kMinCqi, kMaxCqi)(rng_); }

  int next_cqi(int prev) {
    if (cfg_.model == ChannelModel::IidUniform) return draw_uniform();
    const bool stay = std::bernoulli_distribution(cfg_.markov_stay_prob)(rng_);
    if (stay) return prev;
    const bool up = std::bernoulli_distribution(0.5)(rng_);
    return markov_step(prev, false, up);
  }

  ChannelConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::vector<int>> current_;
};

/// Value-semantics form of ChannelState::advance.
inline std::pair<std::vector<CqiReport>, ChannelState> sample_cqi(ChannelState state, std::int64_t tti_index) {
  auto reports = state.advance(tti_index);
  return {std::move(reports), std::move(state)};
}

inline std::vector<int> modulation_orders(const CqiReport& report) {
  std::vector<int> qms;
  qms.reserve(report.per_carrier_cqi.size());
  for (int cqi : report.per_carrier_cqi) qms.push_back(cqi_to_modulation(cqi));
  return qms;
}

}  // namespace grid5g
