#pragma once

// Command-line verbs. Kept in a header so tests can drive run_cli directly.
//
// Exit codes: 0 success, 2 validation or malformed input, 3 runtime failure
// (I/O, unsettled response under --require-settled, bridge peer gone),
// 4 bridge protocol violation.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grid5g/bridge.hpp"
#include "grid5g/engine.hpp"
#include "grid5g/errors.hpp"
#include "grid5g/metrics.hpp"
#include "grid5g/presets.hpp"
#include "grid5g/scenario.hpp"
#include "grid5g/scenario_file.hpp"
#include "grid5g/trace.hpp"

namespace grid5g {

inline constexpr const char* kVersion = "0.1.0";

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kRuntime = 3;
inline constexpr int kProtocol = 4;
}  // namespace exit_code

// I/O and environment failures, mapped to exit code 3.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cli_detail {

struct ScenarioSource {
  std::string label;  // path, or preset:<name>
  std::string text;
};

// A readable file wins; otherwise the argument names a bundled preset.
inline ScenarioSource read_scenario_source(const std::string& arg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) {
    std::ifstream in(arg, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot read `" + arg + "`");
    std::ostringstream ss;
    ss << in.rdbuf();
    return {arg, ss.str()};
  }
  if (auto text = preset_text(arg)) return {"preset:" + arg, *text};
  if (fs::exists(arg, ec)) throw RuntimeFailure("`" + arg + "` is not a regular file");
  throw RuntimeFailure("no such file or preset: `" + arg + "`");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot read `" + path + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write `" + path.string() + "`");
  out << body;
  out.flush();
  if (!out) throw RuntimeFailure("write to `" + path.string() + "` failed");
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw RuntimeFailure("cannot create output directory `" + dir.string() + "`");
}

inline std::uint64_t parse_seed(const std::string& s, const char* what) {
  auto v = detail::parse_int(s);
  if (!v || *v < 0) throw InputError(std::string(what) + " must be a non-negative integer, got `" + s + "`");
  return static_cast<std::uint64_t>(*v);
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string manifest_text(const Scenario& sc, const std::string& source, const PacketCounters& c,
                                 std::size_t samples, std::string_view status) {
  std::ostringstream o;
  o << "scenario=" << source << '\n'
    << "scenario_name=" << sc.name << '\n'
    << "scenario_hash=" << hex64(scenario_hash(sc)) << '\n'
    << "seed=" << sc.seed << '\n'
    << "mode=" << to_string(sc.mode) << '\n'
    << "control=" << to_string(sc.control) << '\n'
    << "version=" << kVersion << '\n'
    << "timestamp=" << utc_timestamp() << '\n'
    << "status=" << status << '\n'
    << "samples=" << samples << '\n'
    << "packets_generated=" << c.generated << '\n'
    << "packets_delivered=" << c.delivered << '\n'
    << "packets_lost=" << c.lost << '\n'
    << "packets_dropped=" << c.dropped << '\n';
  return o.str();
}

// t0:y0:y1 or t0:y0:y1:t_end
inline StepSpec parse_step(const std::string& s, double band) {
  std::vector<double> parts;
  std::size_t start = 0;
  for (;;) {
    const auto colon = s.find(':', start);
    auto v = detail::parse_double(s.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
    if (!v) throw InputError("malformed step `" + s + "`; expected t0:y0:y1[:t_end]");
    parts.push_back(*v);
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3 && parts.size() != 4)
    throw InputError("malformed step `" + s + "`; expected t0:y0:y1[:t_end]");
  StepSpec spec{parts[0], parts[1], parts[2], band};
  if (parts.size() == 4) spec.t_end = parts[3];
  if (!(spec.y_final != spec.y_init)) throw InputError("step `" + s + "` has y0 == y1");
  if (!(spec.t_end > spec.t0)) throw InputError("step `" + s + "` ends before it starts");
  return spec;
}

inline std::string fmt_settling(const std::optional<double>& ts) {
  return ts ? format_real(*ts * 1e3) : std::string("NOT_SETTLED");
}

struct Series {
  std::vector<double> t;
  std::vector<double> y;
};

inline Series load_series(const std::string& path, const std::string& column, CsvTable* keep = nullptr) {
  std::istringstream in(read_file(path));
  CsvTable table;
  try {
    table = read_csv_table(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
  if (!table.index_of("t")) throw InputError(path + ": trace has no `t` column");
  if (!table.index_of(column)) throw InputError(path + ": trace has no column `" + column + "`");
  Series s{table.column("t"), table.column(column)};
  if (keep) *keep = std::move(table);
  return s;
}

inline MetricsReport evaluate_on(const Series& s, const StepSpec& spec, const std::string& label) {
  try {
    return evaluate(s.t, s.y, spec);
  } catch (const InputError& e) {
    throw InputError(label + ": " + e.what());
  }
}

}  // namespace cli_detail

struct CliStreams {
  std::ostream& out;
  std::ostream& err;
};

inline int cmd_validate(const std::string& arg, CliStreams io) {
  const auto src = cli_detail::read_scenario_source(arg);
  const auto res = parse_scenario(src.text);
  for (const auto& d : res.diagnostics) {
    io.out << src.label;
    if (d.line > 0) io.out << ':' << d.line;
    io.out << ": " << d.message << '\n';
  }
  if (!res.diagnostics.empty()) {
    io.err << res.diagnostics.size() << " problem(s) in " << src.label << '\n';
    return exit_code::kValidation;
  }
  io.out << src.label << ": ok\n";
  return exit_code::kOk;
}

struct SimulateOptions {
  std::string scenario;
  std::optional<std::string> seed;
  std::optional<std::string> mode;
  std::string out_dir = ".";
};

// Seed precedence: --seed, then GRID5G_SEED, then the scenario file.
inline Scenario prepare_scenario(const std::string& text, const std::optional<std::string>& seed,
                                 const std::optional<std::string>& mode) {
  Scenario sc = load_scenario(text);
  if (seed) {
    sc.seed = cli_detail::parse_seed(*seed, "--seed");
  } else if (const char* env = std::getenv("GRID5G_SEED"); env && *env) {
    sc.seed = cli_detail::parse_seed(env, "GRID5G_SEED");
  }
  if (mode) {
    if (*mode == "ideal")
      sc.mode = RunMode::Ideal;
    else if (*mode == "5g")
      sc.mode = RunMode::FiveG;
    else
      throw InputError("--mode must be ideal or 5g, got `" + *mode + "`");
  }
  require_valid(sc);
  return sc;
}

inline int cmd_simulate(const SimulateOptions& opt, CliStreams io) {
  const auto src = cli_detail::read_scenario_source(opt.scenario);
  const Scenario sc = prepare_scenario(src.text, opt.seed, opt.mode);
  const std::filesystem::path dir(opt.out_dir);
  cli_detail::ensure_dir(dir);

  Engine engine(sc);
  const Trace trace = engine.run_to_end();
  cli_detail::write_file(dir / "trace.csv", trace_to_csv(trace));
  cli_detail::write_file(dir / "run_manifest.txt",
                         cli_detail::manifest_text(sc, src.label, engine.counters(), trace.records.size(), "complete"));
  io.out << "wrote " << (dir / "trace.csv").string() << " (" << trace.records.size() << " samples, mode "
         << to_string(sc.mode) << ", seed " << sc.seed << ")\n";
  return exit_code::kOk;
}

struct MetricsOptions {
  std::string trace;
  std::vector<std::string> steps;
  double band = 0.02;
  std::string column = "pcc";
  std::optional<std::string> out_file;
  bool require_settled = false;
};

inline int cmd_metrics(const MetricsOptions& opt, CliStreams io) {
  std::vector<StepSpec> specs;
  for (const auto& s : opt.steps) specs.push_back(cli_detail::parse_step(s, opt.band));
  const auto series = cli_detail::load_series(opt.trace, opt.column);

  std::ostringstream rep;
  rep << "# metrics trace=" << opt.trace << " column=" << opt.column << " band=" << format_real(opt.band) << '\n';
  bool all_settled = true;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto r = cli_detail::evaluate_on(series, specs[k], opt.trace);
    all_settled = all_settled && r.settling_time.has_value();
    rep << "step=" << k + 1 << " t0=" << format_real(specs[k].t0) << " y0=" << format_real(specs[k].y_init)
        << " y1=" << format_real(specs[k].y_final) << " overshoot_pct=" << format_real(r.overshoot_pct)
        << " settling_time_ms=" << cli_detail::fmt_settling(r.settling_time)
        << " peak_time=" << format_real(r.peak_time) << " stable=" << (r.stable ? "true" : "false") << '\n';
  }
  io.out << rep.str();
  const std::string out_file = opt.out_file.value_or(opt.trace + ".metrics.txt");
  cli_detail::write_file(out_file, rep.str());

  if (opt.require_settled && !all_settled) {
    io.err << "at least one step is NOT_SETTLED\n";
    return exit_code::kRuntime;
  }
  return exit_code::kOk;
}

struct CompareOptions {
  std::string ideal;
  std::string fiveg;
  std::vector<std::string> steps;
  double band = 0.02;
  std::string column = "pcc";
  std::optional<std::string> out_file;
};

inline int cmd_compare(const CompareOptions& opt, CliStreams io) {
  std::vector<StepSpec> specs;
  for (const auto& s : opt.steps) specs.push_back(cli_detail::parse_step(s, opt.band));
  CsvTable ta, tb;
  const auto a = cli_detail::load_series(opt.ideal, opt.column, &ta);
  const auto b = cli_detail::load_series(opt.fiveg, opt.column, &tb);

  if (ta.columns != tb.columns) throw InputError("traces differ in column layout");
  if (a.t.size() != b.t.size())
    throw InputError("traces differ in length (" + std::to_string(a.t.size()) + " vs " + std::to_string(b.t.size()) +
                     " samples)");
  for (std::size_t k = 0; k < a.t.size(); ++k)
    if (std::abs(a.t[k] - b.t[k]) > 1e-9 * std::max(1.0, std::abs(a.t[k])))
      throw InputError("traces differ in sample times at row " + std::to_string(k + 1));

  std::ostringstream rep;
  rep << "# compare column=" << opt.column << " band=" << format_real(opt.band) << '\n';
  rep << "step,case,overshoot_pct,settling_time_ms,stable\n";
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto ri = cli_detail::evaluate_on(a, specs[k], opt.ideal);
    const auto rg = cli_detail::evaluate_on(b, specs[k], opt.fiveg);
    const auto row = [&](const char* label, const MetricsReport& r) {
      rep << k + 1 << ',' << label << ',' << format_real(r.overshoot_pct) << ','
          << cli_detail::fmt_settling(r.settling_time) << ',' << (r.stable ? "true" : "false") << '\n';
    };
    row("Ideal", ri);
    row("5G", rg);
    rep << k + 1 << ",Delta," << format_real(rg.overshoot_pct - ri.overshoot_pct) << ',';
    if (ri.settling_time && rg.settling_time)
      rep << format_real((*rg.settling_time - *ri.settling_time) * 1e3);
    else
      rep << "n/a";
    rep << ",\n";
  }
  io.out << rep.str();
  if (opt.out_file) cli_detail::write_file(*opt.out_file, rep.str());
  return exit_code::kOk;
}

struct BridgeOptions {
  std::string scenario;
  std::string listen;
  std::optional<std::string> seed;
  std::optional<std::string> out_dir;
};

inline int cmd_bridge(const BridgeOptions& opt, CliStreams io) {
  const auto src = cli_detail::read_scenario_source(opt.scenario);
  const Scenario sc = prepare_scenario(src.text, opt.seed, std::nullopt);
  if (opt.out_dir) cli_detail::ensure_dir(*opt.out_dir);

  bridge::SessionResult res;
  if (opt.listen == "stdio") {
    bridge::FdLineStream link(0, 1, false);
    res = bridge::run_session(sc, link);
  } else {
    bridge::TcpListener listener(bridge::parse_endpoint(opt.listen));
    io.err << "listening on " << listener.endpoint().host << ':' << listener.endpoint().port << std::endl;
    auto link = listener.accept();
    res = bridge::run_session(sc, *link);
  }

  if (opt.out_dir) {
    const std::filesystem::path dir(*opt.out_dir);
    const char* status = res.outcome == bridge::Outcome::Completed ? "complete" : "partial";
    cli_detail::write_file(dir / "trace.csv", trace_to_csv(res.trace));
    cli_detail::write_file(dir / "run_manifest.txt",
                           cli_detail::manifest_text(sc, src.label, PacketCounters{}, res.trace.records.size(), status));
  }
  switch (res.outcome) {
    case bridge::Outcome::Completed:
      io.err << "bridge session complete (" << res.trace.records.size() << " samples)\n";
      return exit_code::kOk;
    case bridge::Outcome::PeerClosed:
      io.err << "bridge session ended early: " << res.reason << '\n';
      return exit_code::kRuntime;
    case bridge::Outcome::ProtocolViolation:
      io.err << "bridge protocol violation: " << res.reason << '\n';
      return exit_code::kProtocol;
  }
  return exit_code::kRuntime;
}

inline int cmd_preset(const std::optional<std::string>& name, CliStreams io) {
  if (!name) {
    for (auto n : preset_names()) io.out << n << "  " << *preset_summary(n) << '\n';
    return exit_code::kOk;
  }
  auto text = preset_text(*name);
  if (!text) throw InputError("unknown preset `" + *name + "`");
  io.out << *text;
  return exit_code::kOk;
}

/// Entry point shared by the binary and the tests. args[0] is the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliStreams io{out, err};
  CLI::App app{"Lock-step 5G RAN and DER control co-simulation", "grid5g"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string scenario_arg;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file (or preset name) and list every problem");
  validate_cmd->add_option("scenario", scenario_arg, "scenario file or preset name")->required();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario and write trace.csv plus run_manifest.txt");
  sim_cmd->add_option("scenario", sim.scenario, "scenario file or preset name")->required();
  sim_cmd->add_option("--seed", sim.seed, "RNG seed (default: GRID5G_SEED, then the scenario file)");
  sim_cmd->add_option("--mode", sim.mode, "ideal or 5g (default: the scenario file)");
  sim_cmd->add_option("--out", sim.out_dir, "output directory")->capture_default_str();

  MetricsOptions met;
  auto* met_cmd = app.add_subcommand("metrics", "Overshoot, settling time and stability of one trace column");
  met_cmd->add_option("trace", met.trace, "trace CSV")->required();
  met_cmd->add_option("--step", met.steps, "t0:y0:y1[:t_end], repeatable")->required();
  met_cmd->add_option("--band", met.band, "settling band as a fraction of the step size")->capture_default_str();
  met_cmd->add_option("--column", met.column, "trace column to evaluate")->capture_default_str();
  met_cmd->add_option("--out", met.out_file, "report file (default: <trace>.metrics.txt)");
  met_cmd->add_flag("--require-settled", met.require_settled, "exit 3 if any step is NOT_SETTLED");

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Ideal vs 5G step metrics side by side");
  cmp_cmd->add_option("ideal", cmp.ideal, "trace CSV of the ideal run")->required();
  cmp_cmd->add_option("fiveg", cmp.fiveg, "trace CSV of the 5G run")->required();
  cmp_cmd->add_option("--step", cmp.steps, "t0:y0:y1[:t_end], repeatable")->required();
  cmp_cmd->add_option("--band", cmp.band, "settling band as a fraction of the step size")->capture_default_str();
  cmp_cmd->add_option("--column", cmp.column, "trace column to evaluate")->capture_default_str();
  cmp_cmd->add_option("--out", cmp.out_file, "also write the table to this file");

  BridgeOptions br;
  auto* br_cmd = app.add_subcommand("bridge", "Run a scenario against an external plant over the line protocol");
  br_cmd->add_option("scenario", br.scenario, "scenario file or preset name")->required();
  br_cmd->add_option("--listen", br.listen, "HOST:PORT (port 0 picks a free one) or stdio")->required();
  br_cmd->add_option("--seed", br.seed, "RNG seed (default: GRID5G_SEED, then the scenario file)");
  br_cmd->add_option("--out", br.out_dir, "write trace.csv and run_manifest.txt here");

  std::optional<std::string> preset_name;
  auto* preset_cmd = app.add_subcommand("preset", "List bundled presets, or print one as a scenario file");
  preset_cmd->add_option("name", preset_name, "preset to print");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_code::kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return exit_code::kValidation;
  }

  try {
    if (*validate_cmd) return cmd_validate(scenario_arg, io);
    if (*sim_cmd) return cmd_simulate(sim, io);
    if (*met_cmd) return cmd_metrics(met, io);
    if (*cmp_cmd) return cmd_compare(cmp, io);
    if (*br_cmd) return cmd_bridge(br, io);
    if (*preset_cmd) return cmd_preset(preset_name, io);
  } catch (const ValidationError& e) {
    err << e.what() << '\n';
    return exit_code::kValidation;
  } catch (const std::invalid_argument& e) {  // ConfigError, InputError
    err << "error: " << e.what() << '\n';
    return exit_code::kValidation;
  } catch (const ProtocolError& e) {
    err << "protocol error: " << e.what() << '\n';
    return exit_code::kProtocol;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kRuntime;
  }
  return exit_code::kRuntime;
}

}  // namespace grid5g
