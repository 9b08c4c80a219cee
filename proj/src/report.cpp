#include "uwfl/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "uwfl/errors.hpp"

namespace uwfl {

std::string format_real(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw DomainError("format_real: conversion failed");
  return std::string(buf, p);
}

void emit_csv(std::ostream& out, std::span<const RoundReport> reports) {
  out << kRoundsCsvHeader << '\n';
  for (const auto& r : reports) {
    out << r.round;
    for (double v : {r.e_s2f, r.e_f2f, r.e_f2g, r.e_rx, r.e_comp, r.e_round, r.e_total, r.latency_s, r.participation,
                     r.mean_train_loss, r.battery_min, r.battery_mean})
      out << ',' << format_real(v);
    out << ',' << r.payload_bits_total << '\n';
  }
}

void emit_csv(const std::filesystem::path& path, std::span<const RoundReport> reports) {
  std::ostringstream ss;
  emit_csv(ss, reports);
  write_text_file(path, ss.str());
}

namespace {

template <class T>
T parse_cell(const std::string& cell, std::size_t lineno) {
  T v{};
  const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    throw LoadError("rounds csv line " + std::to_string(lineno) + ": bad value '" + cell + "'");
  return v;
}

}  // namespace

std::vector<RoundReport> read_rounds_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRoundsCsvHeader) throw LoadError("rounds csv: unexpected header");
  std::vector<RoundReport> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 14) throw LoadError("rounds csv line " + std::to_string(lineno) + ": expected 14 columns");
    RoundReport r;
    r.round = parse_cell<std::size_t>(cells[0], lineno);
    double* fields[] = {&r.e_s2f, &r.e_f2f, &r.e_f2g, &r.e_rx, &r.e_comp, &r.e_round, &r.e_total,
                        &r.latency_s, &r.participation, &r.mean_train_loss, &r.battery_min, &r.battery_mean};
    for (std::size_t k = 0; k < 12; ++k) *fields[k] = parse_cell<double>(cells[k + 1], lineno);
    r.payload_bits_total = parse_cell<std::uint64_t>(cells[13], lineno);
    out.push_back(r);
  }
  return out;
}

std::vector<RoundReport> read_rounds_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return read_rounds_csv(in);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
  if (!out) throw LoadError("write failed for " + path.string());
}

}  // namespace uwfl
