#pragma once

// Sensor-uplink compression: Top-K sparsification with error feedback,
// symmetric 8-bit quantization and payload accounting.

#include <cstdint>
#include <span>
#include <vector>

namespace uwfl {

struct ErrorBuffer {
  std::vector<double> residual;

  explicit ErrorBuffer(std::size_t d = 0) : residual(d, 0.0) {}
};

struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  std::vector<double> to_dense() const;
};

struct Quantized {
  std::vector<std::int8_t> q;
  double scale = 0.0;
};

struct CompressionConfig {
  double rho_s = 0.05;
  bool quantize = true;
  unsigned b_q = 8;  // bits per quantized value

  void validate() const;
};

/// K = ceil(rho_s d), clamped to [1, d].
std::size_t topk_count(double rho_s, std::size_t d);

/// ceil(log2 d); 0 for d = 1.
unsigned index_bits(std::size_t d);

/// ceil(rho_s d) (b_q + b_idx).
std::uint64_t payload_bits(double rho_s, std::size_t d, unsigned b_q, unsigned b_idx);

/// Bits one sensor upload costs under `cfg`; matches CompressedUpdate::payload_bits.
std::uint64_t upload_bits(const CompressionConfig& cfg, std::size_t d);

/// v = update + buffer; keep the K largest |v| (ties to the lower index);
/// buffer <- v - kept.
SparseVector topk_ef(std::span<const double> update, ErrorBuffer& buffer, double rho_s);

/// scale = max|v| / 127, q = clamp(round(v / scale), -127, 127).
Quantized quantize(std::span<const double> values);
std::vector<double> dequantize(std::span<const std::int8_t> q, double scale);

/// What a sensor puts on the wire for one round.
struct CompressedUpdate {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<std::int8_t> qvalues;  // used when quantized
  std::vector<double> values;        // full-precision values when not quantized
  double scale = 0.0;
  bool quantized = false;
  std::uint64_t payload_bits = 0;
  std::uint64_t n_samples = 0;

  std::vector<double> to_dense() const;
};

/// Full sensor pipeline: EF Top-K then optional quantization. The error
/// buffer keeps only the sparsification residual; quantization error is not
/// fed back. Dense full-precision uploads (rho_s = 1, no quantization) are
/// charged 32 d bits with no index bits.
CompressedUpdate compress(std::span<const double> update, ErrorBuffer& buffer, const CompressionConfig& cfg,
                          std::uint64_t n_samples);

/// Wire layout: float32 scale, uint32 K (both little-endian), then K
/// records of (index: b_idx bits, qvalue: 8 bits) packed LSB-first.
std::vector<std::uint8_t> encode_wire(const CompressedUpdate& update);
CompressedUpdate decode_wire(std::span<const std::uint8_t> bytes, std::size_t dim);

}  // namespace uwfl
