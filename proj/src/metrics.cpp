#include "uwfl/metrics.hpp"

#include <algorithm>
#include <limits>

#include "uwfl/errors.hpp"

namespace uwfl {

void RoundReport::close_totals() {
  e_round = e_s2f + e_f2f + e_f2g;
  e_total = e_round + e_rx + e_comp;
}

double BatteryState::min() const {
  if (residual.empty()) return 0.0;
  return *std::min_element(residual.begin(), residual.end());
}

double BatteryState::mean() const {
  if (residual.empty()) return 0.0;
  double s = 0.0;
  for (double r : residual) s += r;
  return s / static_cast<double>(residual.size());
}

std::vector<std::size_t> battery_step(BatteryState& state, std::span<const double> costs) {
  if (costs.size() != state.residual.size()) throw DomainError("battery_step: cost vector has the wrong length");
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    state.residual[i] -= costs[i];
    if (state.residual[i] < state.e_min) flagged.push_back(i);
  }
  return flagged;
}

double round_latency(std::span<const double> sensor_tier, std::span<const double> fog_tier,
                     std::span<const double> gateway_tier, double comp_time_s) {
  double slowest = 0.0;
  for (auto tier : {sensor_tier, fog_tier, gateway_tier})
    for (double t : tier) slowest = std::max(slowest, t);
  return slowest + comp_time_s;
}

DetectionResult detection_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  DetectionResult r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  const bool no_pred = tp + fp == 0, no_pos = tp + fn == 0;
  if (no_pred && no_pos) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = no_pred ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = no_pos ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

DetectionResult f1_point(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels) {
  if (pred.size() != labels.size()) throw DomainError("f1: prediction and label lengths differ");
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, l = labels[i] != 0;
    tp += p && l;
    fp += p && !l;
    fn += !p && l;
  }
  return detection_from_counts(tp, fp, fn);
}

std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels) {
  if (pred.size() != labels.size()) throw DomainError("point_adjust: prediction and label lengths differ");
  std::vector<std::uint8_t> out(pred.begin(), pred.end());
  std::size_t i = 0;
  while (i < labels.size()) {
    if (!labels[i]) {
      ++i;
      continue;
    }
    std::size_t end = i;
    bool hit = false;
    while (end < labels.size() && labels[end]) hit |= pred[end++] != 0;
    if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(end), 1);
    i = end;
  }
  return out;
}

DetectionResult f1_point_adjusted(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels) {
  const auto adjusted = point_adjust(pred, labels);
  return f1_point(adjusted, labels);
}

double objective_value(double final_loss, std::span<const double> energy, std::span<const double> latency,
                       double lambda_e, double lambda_tau) {
  double e = 0.0, t = 0.0;
  for (double v : energy) e += v;
  for (double v : latency) t += v;
  return final_loss + lambda_e * e + lambda_tau * t;
}

}  // namespace uwfl
