#include "uwfl/compression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "uwfl/errors.hpp"

namespace uwfl {

void CompressionConfig::validate() const {
  if (!(rho_s > 0.0 && rho_s <= 1.0)) throw ConfigError("compression: rho_s must lie in (0, 1]");
  if (quantize && b_q != 8) throw ConfigError("compression: only 8-bit quantization is implemented");
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
  return out;
}

std::size_t topk_count(double rho_s, std::size_t d) {
  if (!(rho_s > 0.0 && rho_s <= 1.0)) throw DomainError("topk: rho_s must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(rho_s * static_cast<double>(d)));
  return std::clamp<std::size_t>(k, 1, d);
}

unsigned index_bits(std::size_t d) {
  if (d == 0) throw DomainError("index_bits: empty vector");
  return d == 1 ? 0U : static_cast<unsigned>(std::bit_width(d - 1));
}

std::uint64_t payload_bits(double rho_s, std::size_t d, unsigned b_q, unsigned b_idx) {
  return static_cast<std::uint64_t>(topk_count(rho_s, d)) * (b_q + b_idx);
}

std::uint64_t upload_bits(const CompressionConfig& cfg, std::size_t d) {
  const std::size_t k = topk_count(cfg.rho_s, d);
  const unsigned b_idx = k == d ? 0U : index_bits(d);
  return k * static_cast<std::uint64_t>((cfg.quantize ? cfg.b_q : 32U) + b_idx);
}

SparseVector topk_ef(std::span<const double> update, ErrorBuffer& buffer, double rho_s) {
  const std::size_t d = update.size();
  if (buffer.residual.size() != d) throw DomainError("topk_ef: update and error buffer lengths differ");
  const std::size_t k = topk_count(rho_s, d);

  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = update[i] + buffer.residual[i];

  std::vector<std::uint32_t> order(d);
  std::iota(order.begin(), order.end(), 0U);
  auto larger = [&](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(v[a]), mb = std::abs(v[b]);
    return ma != mb ? ma > mb : a < b;
  };
  if (k < d) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), larger);
  order.resize(k);
  std::sort(order.begin(), order.end());

  SparseVector kept;
  kept.dim = d;
  kept.indices = order;
  kept.values.reserve(k);
  buffer.residual = v;
  for (auto i : order) {
    kept.values.push_back(v[i]);
    buffer.residual[i] = 0.0;
  }
  return kept;
}

Quantized quantize(std::span<const double> values) {
  if (values.empty()) throw DomainError("quantize: no values");
  double max_abs = 0.0;
  for (double x : values) {
    if (!std::isfinite(x)) throw NumericError("quantize: non-finite value");
    max_abs = std::max(max_abs, std::abs(x));
  }
  Quantized out;
  out.q.assign(values.size(), 0);
  if (max_abs == 0.0) return out;
  out.scale = max_abs / 127.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double r = std::clamp(std::round(values[i] / out.scale), -127.0, 127.0);
    out.q[i] = static_cast<std::int8_t>(r);
  }
  return out;
}

std::vector<double> dequantize(std::span<const std::int8_t> q, double scale) {
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = static_cast<double>(q[i]) * scale;
  return out;
}

std::vector<double> CompressedUpdate::to_dense() const {
  std::vector<double> out(dim, 0.0);
  if (quantized) {
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = static_cast<double>(qvalues[k]) * scale;
  } else {
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
  }
  return out;
}

CompressedUpdate compress(std::span<const double> update, ErrorBuffer& buffer, const CompressionConfig& cfg,
                          std::uint64_t n_samples) {
  cfg.validate();
  const std::size_t d = update.size();
  auto kept = topk_ef(update, buffer, cfg.rho_s);

  CompressedUpdate out;
  out.dim = d;
  out.n_samples = n_samples;
  out.indices = std::move(kept.indices);
  const bool dense = out.indices.size() == d;
  const unsigned b_idx = dense ? 0U : index_bits(d);
  if (cfg.quantize) {
    auto q = quantize(kept.values);
    out.qvalues = std::move(q.q);
    out.scale = q.scale;
    out.quantized = true;
    out.payload_bits = out.indices.size() * static_cast<std::uint64_t>(cfg.b_q + b_idx);
  } else {
    out.values = std::move(kept.values);
    out.payload_bits = out.indices.size() * static_cast<std::uint64_t>(32U + b_idx);
  }
  return out;
}

namespace {

class BitWriter {
public:
  void put(std::uint32_t value, unsigned bits) {
    for (unsigned b = 0; b < bits; ++b) {
      if (pos_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1U) bytes_.back() |= static_cast<std::uint8_t>(1U << (pos_ % 8));
      ++pos_;
    }
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class BitReader {
public:
  BitReader(std::span<const std::uint8_t> bytes, std::size_t start_byte) : bytes_(bytes), pos_(start_byte * 8) {}
  std::uint32_t get(unsigned bits) {
    std::uint32_t v = 0;
    for (unsigned b = 0; b < bits; ++b, ++pos_) {
      if (pos_ / 8 >= bytes_.size()) throw LoadError("decode_wire: truncated payload");
      if ((bytes_[pos_ / 8] >> (pos_ % 8)) & 1U) v |= 1U << b;
    }
    return v;
  }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(in[off + k]) << (8 * k);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_wire(const CompressedUpdate& u) {
  if (!u.quantized) throw DomainError("encode_wire: only quantized updates have a wire layout");
  std::vector<std::uint8_t> out;
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(u.scale)));
  put_u32(out, static_cast<std::uint32_t>(u.indices.size()));
  const unsigned b_idx = u.indices.size() == u.dim ? 0U : index_bits(u.dim);
  BitWriter w;
  for (std::size_t k = 0; k < u.indices.size(); ++k) {
    w.put(u.indices[k], b_idx);
    w.put(static_cast<std::uint8_t>(u.qvalues[k]), 8);
  }
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
  return out;
}

CompressedUpdate decode_wire(std::span<const std::uint8_t> bytes, std::size_t dim) {
  if (bytes.size() < 8) throw LoadError("decode_wire: missing header");
  CompressedUpdate u;
  u.dim = dim;
  u.quantized = true;
  u.scale = static_cast<double>(std::bit_cast<float>(get_u32(bytes, 0)));
  const std::uint32_t k = get_u32(bytes, 4);
  if (k > dim) throw LoadError("decode_wire: more records than coordinates");
  const bool dense = k == dim;
  const unsigned b_idx = dense ? 0U : index_bits(dim);
  BitReader r(bytes, 8);
  for (std::uint32_t i = 0; i < k; ++i) {
    const std::uint32_t idx = dense ? i : r.get(b_idx);
    if (dense) r.get(0);
    if (idx >= dim) throw LoadError("decode_wire: index out of range");
    u.indices.push_back(idx);
    u.qvalues.push_back(static_cast<std::int8_t>(static_cast<std::uint8_t>(r.get(8))));
  }
  u.payload_bits = static_cast<std::uint64_t>(k) * (8U + b_idx);
  return u;
}

}  // namespace uwfl
