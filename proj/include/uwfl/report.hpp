#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uwfl/metrics.hpp"

namespace uwfl {

inline constexpr const char* kRoundsCsvHeader =
    "round,e_s2f,e_f2f,e_f2g,e_rx,e_comp,e_round,e_total,latency_s,participation,mean_train_loss,"
    "battery_min,battery_mean,payload_bits_total";

/// Shortest decimal form that reads back to the same double.
std::string format_real(double x);

void emit_csv(std::ostream& out, std::span<const RoundReport> reports);
void emit_csv(const std::filesystem::path& path, std::span<const RoundReport> reports);

std::vector<RoundReport> read_rounds_csv(std::istream& in);
std::vector<RoundReport> read_rounds_csv(const std::filesystem::path& path);

/// Writes text with LF endings, replacing any existing file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace uwfl
