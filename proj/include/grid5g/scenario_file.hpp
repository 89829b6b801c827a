#pragma once

// Scenario file: flat `key = value` text, `#` comments, one `event = ...`
// line per event. DER and adjacency indices are 1-based in the file.
//
//   schema_version = 1            # required, must be 1
//   duration = 2.5                # s
//   mode = 5g                     # ideal | 5g
//   ders = 3
//   der.default.tau_p = 0.004     # s; der.<n>.<field> overrides one DER
//   topology = all_to_all         # all_to_all | none | explicit (with a.<i>.<j> = 0|1)
//   event = 0.5 setpoint 1 1.0    # <t> setpoint <ders> <value>
//   event = 0 link_fail 2 out     # <t> link_fail|link_restore <ders> [out|in|both]
//   event = 0.8 disturbance all -0.05
//
// <ders> is `all` or a comma-separated list such as `1,3`.

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "grid5g/errors.hpp"
#include "grid5g/scenario.hpp"

namespace grid5g {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  return std::nullopt;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

// 1-based DER list: `all` or `1,2,3`, each id at most n_ders. Returns 0-based ids.
inline std::optional<std::vector<DerId>> parse_der_list(std::string_view s, std::size_t n_ders) {
  std::vector<DerId> out;
  if (s == "all") {
    for (DerId i = 0; i < n_ders; ++i) out.push_back(i);
    return out;
  }
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto tok = s.substr(0, comma);
    const auto v = detail::parse_int(tok);
    if (!v || *v < 1 || static_cast<std::size_t>(*v) > n_ders) return std::nullopt;
    out.push_back(static_cast<DerId>(*v - 1));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
    if (s.empty()) return std::nullopt;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

struct ParseResult {
  Scenario scenario;
  std::vector<Diagnostic> diagnostics;
};

/// Parses scenario text and validates it. Every problem is reported, with
/// its line when it has one.
inline ParseResult parse_scenario(std::string_view text) {
  ParseResult res;
  Scenario& sc = res.scenario;
  auto& diags = res.diagnostics;
  auto diag = [&](int line, std::string msg) { diags.push_back(Diagnostic{line, std::move(msg)}); };

  std::optional<std::size_t> n_ders;
  int ders_line = 0;
  bool saw_version = false;
  std::string topology_kind = "all_to_all";
  int topology_line = 0;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<bool, int>> adjacency_entries;  // 1-based
  std::map<std::string, std::pair<std::string, int>> der_fields;  // "n.field" -> value
  struct RawEvent { std::string text; int line; };
  std::vector<RawEvent> raw_events;
  std::set<std::string> seen;
  std::map<std::string, int> key_lines;

  using Setter = std::function<bool(std::string_view)>;
  auto num = [](double& dst) -> Setter {
    return [&dst](std::string_view v) {
      auto d = detail::parse_double(v);
      if (d) dst = *d;
      return d.has_value();
    };
  };
  auto count = [](std::size_t& dst) -> Setter {
    return [&dst](std::string_view v) {
      auto d = detail::parse_int(v);
      if (!d || *d < 0) return false;
      dst = static_cast<std::size_t>(*d);
      return true;
    };
  };
  auto integer = [](int& dst) -> Setter {
    return [&dst](std::string_view v) {
      auto d = detail::parse_int(v);
      if (d) dst = static_cast<int>(*d);
      return d.has_value();
    };
  };
  auto flag = [](bool& dst) -> Setter {
    return [&dst](std::string_view v) {
      auto d = detail::parse_bool(v);
      if (d) dst = *d;
      return d.has_value();
    };
  };

  std::map<std::string, Setter, std::less<>> setters{
      {"schema_version", [&](std::string_view v) { saw_version = true; return integer(sc.schema_version)(v); }},
      {"name", [&](std::string_view v) { sc.name = std::string(v); return !v.empty(); }},
      {"duration", num(sc.duration)},
      {"seed",
       [&](std::string_view v) {
         auto d = detail::parse_int(v);
         if (!d || *d < 0) return false;
         sc.seed = static_cast<std::uint64_t>(*d);
         return true;
       }},
      {"mode",
       [&](std::string_view v) {
         if (v == "ideal") sc.mode = RunMode::Ideal;
         else if (v == "5g") sc.mode = RunMode::FiveG;
         else return false;
         return true;
       }},
      {"control",
       [&](std::string_view v) {
         if (v == "cspm") sc.control = ControlMode::Cspm;
         else if (v == "freqpart") sc.control = ControlMode::FreqPart;
         else return false;
         return true;
       }},
      {"sample_period", num(sc.sample_period)},
      {"substeps_per_tti", count(sc.substeps_per_tti)},
      {"discretization",
       [&](std::string_view v) {
         if (v == "exact") sc.discretization = Discretization::Exact;
         else if (v == "explicit") sc.discretization = Discretization::ExplicitEuler;
         else return false;
         return true;
       }},
      {"queue_capacity", count(sc.queue_capacity)},
      {"ran.carriers", count(sc.ran.aggregated_carriers)},
      {"ran.modulation_orders",
       [&](std::string_view v) {
         std::vector<int> qms;
         for (auto tok : detail::split_ws(v)) {
           auto q = detail::parse_int(tok);
           if (!q) return false;
           qms.push_back(static_cast<int>(*q));
         }
         sc.ran.modulation_orders = qms;
         return !qms.empty();
       }},
      {"ran.max_layers", integer(sc.ran.max_layers)},
      {"ran.scaling_factor", num(sc.ran.scaling_factor)},
      {"ran.max_code_rate", num(sc.ran.max_code_rate)},
      {"ran.numerology", integer(sc.ran.numerology)},
      {"ran.total_rbs", count(sc.ran.total_rbs)},
      {"ran.rbs_per_der", count(sc.ran.rbs_per_der)},
      {"ran.overhead", num(sc.ran.overhead)},
      {"ran.tti", num(sc.ran.tti)},
      {"ran.bsr_period", num(sc.ran.bsr_period)},
      {"ran.packet_size", count(sc.ran.packet_size)},
      {"ran.bandwidth", num(sc.ran.bandwidth)},
      {"ran.carrier_freq", num(sc.ran.carrier_freq)},
      {"ran.infinite_capacity", flag(sc.ran.infinite_capacity)},
      {"channel.model",
       [&](std::string_view v) {
         if (v == "iid_uniform") sc.channel.model = ChannelModel::IidUniform;
         else if (v == "markov_step") sc.channel.model = ChannelModel::MarkovStep;
         else return false;
         return true;
       }},
      {"channel.markov_stay_prob", num(sc.channel.markov_stay_prob)},
      {"channel.shared_across_carriers", flag(sc.channel.shared_across_carriers)},
      {"channel.initial_cqi", integer(sc.channel.initial_cqi)},
      {"partition.cutoff", num(sc.partition_cutoff)},
      {"topology",
       [&](std::string_view v) {
         topology_kind = std::string(v);
         return v == "all_to_all" || v == "none" || v == "explicit";
       }},
  };

  static const std::set<std::string, std::less<>> der_field_names{"tau_p", "gain", "pred_horizon",
                                                                  "initial_setpoint", "initial_output"};

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      diag(line_no, "expected `key = value`, got `" + std::string(line) + "`");
      continue;
    }
    const std::string key{detail::trim(line.substr(0, eq))};
    const std::string_view value = detail::trim(line.substr(eq + 1));

    if (key == "event") {
      raw_events.push_back({std::string(value), line_no});
      continue;
    }
    if (!seen.insert(key).second) {
      diag(line_no, "duplicate key `" + key + "`");
      continue;
    }
    key_lines[key] = line_no;
    if (key == "ders") {
      auto v = detail::parse_int(value);
      if (!v || *v < 1) diag(line_no, "ders must be a positive integer");
      else n_ders = static_cast<std::size_t>(*v);
      ders_line = line_no;
      continue;
    }
    if (key == "topology") topology_line = line_no;
    if (key.rfind("der.", 0) == 0) {
      const auto dot = key.find('.', 4);
      const std::string who = dot == std::string::npos ? "" : key.substr(4, dot - 4);
      const std::string field = dot == std::string::npos ? "" : key.substr(dot + 1);
      if (who.empty() || !der_field_names.count(field) ||
          (who != "default" && (!detail::parse_int(who) || *detail::parse_int(who) < 1))) {
        diag(line_no, "unknown key `" + key + "`");
        continue;
      }
      if (!detail::parse_double(value)) {
        diag(line_no, "`" + key + "` expects a number, got `" + std::string(value) + "`");
        continue;
      }
      der_fields[key.substr(4)] = {std::string(value), line_no};
      continue;
    }
    if (key.rfind("a.", 0) == 0) {
      const auto dot = key.find('.', 2);
      auto i = dot == std::string::npos ? std::nullopt : detail::parse_int(std::string_view(key).substr(2, dot - 2));
      auto j = dot == std::string::npos ? std::nullopt : detail::parse_int(std::string_view(key).substr(dot + 1));
      auto v = detail::parse_int(value);
      if (!i || !j || *i < 1 || *j < 1) {
        diag(line_no, "unknown key `" + key + "`");
        continue;
      }
      if (!v || (*v != 0 && *v != 1)) {
        diag(line_no, "`" + key + "` must be 0 or 1");
        continue;
      }
      adjacency_entries[{static_cast<std::size_t>(*i), static_cast<std::size_t>(*j)}] = {*v == 1, line_no};
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) {
      diag(line_no, "unknown key `" + key + "`");
      continue;
    }
    if (!it->second(value)) diag(line_no, "invalid value `" + std::string(value) + "` for `" + key + "`");
  }

  if (!saw_version) diag(0, "missing required key `schema_version`");
  if (!n_ders) {
    if (ders_line == 0) diag(0, "missing required key `ders`");
    n_ders = 0;
  }
  const std::size_t n = *n_ders;

  // DERs: defaults first, then per-DER overrides.
  sc.ders.assign(n, DerSpec{});
  auto apply_field = [](DerSpec& d, const std::string& field, double v) {
    if (field == "tau_p") d.tau_p = v;
    else if (field == "gain") d.gain = v;
    else if (field == "pred_horizon") d.pred_horizon = v;
    else if (field == "initial_setpoint") d.initial_setpoint = v;
    else if (field == "initial_output") d.initial_output = v;
  };
  for (const auto& [k, val] : der_fields) {
    const auto dot = k.find('.');
    if (k.substr(0, dot) != "default") continue;
    for (auto& d : sc.ders) apply_field(d, k.substr(dot + 1), *detail::parse_double(val.first));
  }
  for (const auto& [k, val] : der_fields) {
    const auto dot = k.find('.');
    const std::string who = k.substr(0, dot);
    if (who == "default") continue;
    const auto idx = static_cast<std::size_t>(*detail::parse_int(who));
    if (idx > n) {
      diag(val.second, "der." + who + " exceeds ders = " + std::to_string(n));
      continue;
    }
    apply_field(sc.ders[idx - 1], k.substr(dot + 1), *detail::parse_double(val.first));
  }

  // Topology.
  if (topology_kind == "all_to_all") sc.topology = Topology::all_to_all(n);
  else sc.topology = Topology(n);
  if (topology_kind != "explicit") {
    for (const auto& [ij, v] : adjacency_entries)
      diag(v.second, "a." + std::to_string(ij.first) + "." + std::to_string(ij.second) +
                         " requires `topology = explicit`");
  } else {
    for (const auto& [ij, v] : adjacency_entries) {
      const auto [i, j] = ij;
      if (i > n || j > n) {
        diag(v.second, "a." + std::to_string(i) + "." + std::to_string(j) + " names a DER beyond ders = " +
                           std::to_string(n));
        continue;
      }
      if (i == j && v.first) diag(v.second, "a." + std::to_string(i) + "." + std::to_string(i) + " must be 0");
      if (i != j) sc.topology.set_adjacent(i - 1, j - 1, v.first);
      if (i != j && v.first && !adjacency_entries.count({j, i}))
        diag(v.second, "a." + std::to_string(i) + "." + std::to_string(j) + " = 1 but a." + std::to_string(j) + "." +
                           std::to_string(i) + " is unspecified (adjacency must be explicit in both directions)");
    }
    (void)topology_line;
  }

  // Events.
  for (const auto& re : raw_events) {
    auto toks = detail::split_ws(re.text);
    auto bad = [&](const std::string& why) { diag(re.line, "event `" + re.text + "`: " + why); };
    if (toks.size() < 3) {
      bad("expected `<t> <kind> <ders> ...`");
      continue;
    }
    Event ev;
    ev.line = re.line;
    auto t = detail::parse_double(toks[0]);
    if (!t) {
      bad("time is not a number");
      continue;
    }
    ev.time = *t;
    auto ders = parse_der_list(toks[2], n);
    if (!ders) {
      bad("bad DER list `" + std::string(toks[2]) + "` (ders = " + std::to_string(n) + ")");
      continue;
    }
    ev.ders = *ders;
    const auto kind = toks[1];
    if (kind == "setpoint" || kind == "disturbance") {
      ev.kind = kind == "setpoint" ? EventKind::Setpoint : EventKind::Disturbance;
      auto v = toks.size() == 4 ? detail::parse_double(toks[3]) : std::nullopt;
      if (!v) {
        bad("expects exactly one numeric value");
        continue;
      }
      ev.value = *v;
    } else if (kind == "link_fail" || kind == "link_restore") {
      ev.kind = kind == "link_fail" ? EventKind::LinkFail : EventKind::LinkRestore;
      if (toks.size() > 4) {
        bad("too many fields");
        continue;
      }
      if (toks.size() == 4) {
        if (toks[3] == "out") ev.direction = LinkDirection::Out;
        else if (toks[3] == "in") ev.direction = LinkDirection::In;
        else if (toks[3] == "both") ev.direction = LinkDirection::Both;
        else {
          bad("direction must be out, in or both");
          continue;
        }
      }
    } else {
      bad("unknown kind `" + std::string(kind) + "`");
      continue;
    }
    sc.events.push_back(std::move(ev));
  }

  // Semantic checks only make sense once the document itself parsed.
  // Unlined ones point at the earliest-mentioned key present in the file.
  if (diags.empty())
    for (auto& d : validate(sc)) {
      std::size_t best = std::string::npos;
      const bool lined = d.line != 0;
      for (const auto& [key, line] : key_lines) {
        if (lined) break;
        const auto pos = d.message.find(key);
        if (pos != std::string::npos && pos < best) {
          best = pos;
          d.line = line;
        }
      }
      diags.push_back(std::move(d));
    }
  return res;
}

/// Parses and validates; throws ValidationError listing every problem.
inline Scenario load_scenario(std::string_view text) {
  auto res = parse_scenario(text);
  if (!res.diagnostics.empty()) throw ValidationError(std::move(res.diagnostics));
  return std::move(res.scenario);
}

inline std::string format_der_list(const std::vector<DerId>& ders) {
  std::string out;
  for (std::size_t k = 0; k < ders.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(ders[k] + 1);
  }
  return out;
}

/// Canonical text for a scenario; parse_scenario(emit_scenario(s)) reproduces s.
inline std::string emit_scenario(const Scenario& s) {
  using detail::format_double;
  std::ostringstream o;
  o << "schema_version = " << s.schema_version << '\n'
    << "name = " << s.name << '\n'
    << "duration = " << format_double(s.duration) << '\n'
    << "seed = " << s.seed << '\n'
    << "mode = " << to_string(s.mode) << '\n'
    << "control = " << to_string(s.control) << '\n'
    << "sample_period = " << format_double(s.sample_period) << '\n'
    << "substeps_per_tti = " << s.substeps_per_tti << '\n'
    << "discretization = " << to_string(s.discretization) << '\n'
    << "queue_capacity = " << s.queue_capacity << '\n'
    << "ran.carriers = " << s.ran.aggregated_carriers << '\n'
    << "ran.modulation_orders =";
  for (int q : s.ran.modulation_orders) o << ' ' << q;
  o << '\n'
    << "ran.max_layers = " << s.ran.max_layers << '\n'
    << "ran.scaling_factor = " << format_double(s.ran.scaling_factor) << '\n'
    << "ran.max_code_rate = " << format_double(s.ran.max_code_rate) << '\n'
    << "ran.numerology = " << s.ran.numerology << '\n'
    << "ran.total_rbs = " << s.ran.total_rbs << '\n'
    << "ran.rbs_per_der = " << s.ran.rbs_per_der << '\n'
    << "ran.overhead = " << format_double(s.ran.overhead) << '\n'
    << "ran.tti = " << format_double(s.ran.tti) << '\n'
    << "ran.bsr_period = " << format_double(s.ran.bsr_period) << '\n'
    << "ran.packet_size = " << s.ran.packet_size << '\n'
    << "ran.bandwidth = " << format_double(s.ran.bandwidth) << '\n'
    << "ran.carrier_freq = " << format_double(s.ran.carrier_freq) << '\n'
    << "ran.infinite_capacity = " << (s.ran.infinite_capacity ? "true" : "false") << '\n'
    << "channel.model = " << to_string(s.channel.model) << '\n'
    << "channel.markov_stay_prob = " << format_double(s.channel.markov_stay_prob) << '\n'
    << "channel.shared_across_carriers = " << (s.channel.shared_across_carriers ? "true" : "false") << '\n'
    << "channel.initial_cqi = " << s.channel.initial_cqi << '\n'
    << "partition.cutoff = " << format_double(s.partition_cutoff) << '\n'
    << "ders = " << s.ders.size() << '\n';
  for (std::size_t i = 0; i < s.ders.size(); ++i) {
    const auto& d = s.ders[i];
    const std::string p = "der." + std::to_string(i + 1) + ".";
    o << p << "tau_p = " << format_double(d.tau_p) << '\n'
      << p << "gain = " << format_double(d.gain) << '\n'
      << p << "pred_horizon = " << format_double(d.pred_horizon) << '\n'
      << p << "initial_setpoint = " << format_double(d.initial_setpoint) << '\n'
      << p << "initial_output = " << format_double(d.initial_output) << '\n';
  }
  o << "topology = explicit\n";
  for (DerId i = 0; i < s.topology.size(); ++i)
    for (DerId j = 0; j < s.topology.size(); ++j)
      if (i != j)
        o << "a." << i + 1 << '.' << j + 1 << " = " << (s.topology.adjacent(i, j) ? 1 : 0) << '\n';
  for (const auto& ev : s.events) {
    o << "event = " << format_double(ev.time) << ' ' << to_string(ev.kind) << ' ' << format_der_list(ev.ders);
    if (ev.kind == EventKind::Setpoint || ev.kind == EventKind::Disturbance) o << ' ' << format_double(ev.value);
    else o << ' ' << to_string(ev.direction);
    o << '\n';
  }
  return o.str();
}

/// FNV-1a over the canonical text; identifies a scenario in run manifests.
inline std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : emit_scenario(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace grid5g
