#pragma once

// Sampled simulation output and its CSV form.
//
// Columns: t, then per DER i (1-based) der<i>_x_sp, der<i>_x_sp_prime,
// der<i>_x, der<i>_e, der<i>_e_pred, der<i>_queued, der<i>_delivered, then
// pcc, then der<i>_cqi<j> for every DER i and carrier j. Reals are written
// with 9 significant digits.

#include <cstddef>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "grid5g/errors.hpp"

namespace grid5g {

struct DerSample {
  double x_sp = 0.0;
  double x_sp_prime = 0.0;
  double x = 0.0;
  double e = 0.0;
  double e_pred = 0.0;
  std::size_t queued = 0;
  std::size_t delivered = 0;

  bool operator==(const DerSample&) const = default;
};

struct TraceRecord {
  double t = 0.0;
  std::vector<DerSample> ders;
  double pcc = 0.0;
  std::vector<std::vector<int>> cqi;  // [der][carrier]; 0 when the RAN is bypassed

  bool operator==(const TraceRecord&) const = default;
};

struct Trace {
  std::size_t n_ders = 0;
  std::size_t carriers = 0;
  std::vector<TraceRecord> records;

  bool operator==(const Trace&) const = default;
};

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::vector<std::string> trace_columns(std::size_t n_ders, std::size_t carriers) {
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 1; i <= n_ders; ++i) {
    const std::string p = "der" + std::to_string(i) + "_";
    for (const char* f : {"x_sp", "x_sp_prime", "x", "e", "e_pred", "queued", "delivered"}) cols.push_back(p + f);
  }
  cols.push_back("pcc");
  for (std::size_t i = 1; i <= n_ders; ++i)
    for (std::size_t j = 1; j <= carriers; ++j)
      cols.push_back("der" + std::to_string(i) + "_cqi" + std::to_string(j));
  return cols;
}

inline void write_trace_header(std::ostream& out, std::size_t n_ders, std::size_t carriers) {
  const auto cols = trace_columns(n_ders, carriers);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
}

inline void write_trace_row(std::ostream& out, const TraceRecord& r) {
  out << format_real(r.t);
  for (const auto& d : r.ders)
    out << ',' << format_real(d.x_sp) << ',' << format_real(d.x_sp_prime) << ',' << format_real(d.x) << ','
        << format_real(d.e) << ',' << format_real(d.e_pred) << ',' << d.queued << ',' << d.delivered;
  out << ',' << format_real(r.pcc);
  for (const auto& row : r.cqi)
    for (int c : row) out << ',' << c;
  out << '\n';
}

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  write_trace_header(out, trace.n_ders, trace.carriers);
  for (const auto& r : trace.records) write_trace_row(out, r);
}

inline std::string trace_to_csv(const Trace& trace) {
  std::ostringstream o;
  write_trace_csv(o, trace);
  return o.str();
}

// Header plus numeric rows; the shape every trace-consuming tool reads.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == name) return k;
    return std::nullopt;
  }

  std::vector<double> column(std::string_view name) const {
    auto k = index_of(name);
    if (!k) throw InputError("trace has no column `" + std::string(name) + "`");
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[*k]);
    return out;
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv_table(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw InputError("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.columns = split_csv_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.columns.size())
      throw InputError("trace line " + std::to_string(line_no) + ": expected " + std::to_string(table.columns.size()) +
                       " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty())
        throw InputError("trace line " + std::to_string(line_no) + ": `" + c + "` is not a number");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline Trace read_trace_csv(std::istream& in) {
  CsvTable table = read_csv_table(in);
  const auto& cols = table.columns;
  const auto pcc = table.index_of("pcc");
  if (cols.empty() || cols[0] != "t" || !pcc || (*pcc - 1) % 7 != 0)
    throw InputError("not a trace: header does not follow the trace column layout");
  Trace trace;
  trace.n_ders = (*pcc - 1) / 7;
  const std::size_t cqi_cols = cols.size() - *pcc - 1;
  if (trace.n_ders == 0 || cqi_cols % trace.n_ders != 0) throw InputError("not a trace: inconsistent CQI columns");
  trace.carriers = cqi_cols / trace.n_ders;
  if (cols != trace_columns(trace.n_ders, trace.carriers))
    throw InputError("not a trace: header does not follow the trace column layout");

  for (const auto& row : table.rows) {
    TraceRecord r;
    r.t = row[0];
    std::size_t k = 1;
    for (std::size_t i = 0; i < trace.n_ders; ++i) {
      DerSample d;
      d.x_sp = row[k++];
      d.x_sp_prime = row[k++];
      d.x = row[k++];
      d.e = row[k++];
      d.e_pred = row[k++];
      d.queued = static_cast<std::size_t>(row[k++]);
      d.delivered = static_cast<std::size_t>(row[k++]);
      r.ders.push_back(d);
    }
    r.pcc = row[k++];
    r.cqi.assign(trace.n_ders, std::vector<int>(trace.carriers, 0));
    for (std::size_t i = 0; i < trace.n_ders; ++i)
      for (std::size_t j = 0; j < trace.carriers; ++j) r.cqi[i][j] = static_cast<int>(row[k++]);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

inline Trace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  return read_trace_csv(in);
}

}  // namespace grid5g
