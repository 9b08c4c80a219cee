#include "uwfl/autoenc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "uwfl/errors.hpp"

namespace uwfl {

std::size_t param_count(std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw DomainError("autoencoder needs at least an input and an output layer");
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] == 0 || sizes[l + 1] == 0) throw DomainError("autoencoder layer sizes must be positive");
    n += sizes[l] * sizes[l + 1] + sizes[l + 1];
  }
  return n;
}

void SgdConfig::validate() const {
  if (epochs < 1) throw ConfigError("sgd: epochs must be >= 1");
  if (!(lr >= 0)) throw ConfigError("sgd: lr must be non-negative");
  if (batch_size < 1) throw ConfigError("sgd: batch_size must be >= 1");
  if (!(prox_mu >= 0)) throw ConfigError("sgd: prox_mu must be non-negative");
}

ModelParams zero_params(std::span<const std::size_t> sizes) {
  return {std::vector<std::size_t>(sizes.begin(), sizes.end()), std::vector<double>(param_count(sizes), 0.0)};
}

ModelParams init_params(std::span<const std::size_t> sizes, Rng& rng) {
  ModelParams p = zero_params(sizes);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t k = 0; k < n_in * n_out; ++k) p.values[off + k] = u(rng);
    off += n_in * n_out + n_out;  // biases stay zero
  }
  return p;
}

namespace {

struct Layer {
  std::size_t n_in, n_out, w_off, b_off;
};

std::vector<Layer> layout(const ModelParams& p) {
  if (p.values.size() != param_count(p.layer_sizes)) throw DomainError("model parameter vector has the wrong length");
  std::vector<Layer> layers;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const std::size_t n_in = p.layer_sizes[l], n_out = p.layer_sizes[l + 1];
    layers.push_back({n_in, n_out, off, off + n_in * n_out});
    off += n_in * n_out + n_out;
  }
  return layers;
}

// Mini-batch workspace. Activations are stored feature-major ([n x B]) so
// the innermost loops run over the batch and vectorise without reordering
// any floating-point sums.
class Workspace {
public:
  explicit Workspace(const ModelParams& p) : layers_(layout(p)) {
    act_.resize(layers_.size() + 1);
    delta_.resize(layers_.size() + 1);
  }

  // Forward pass over rows[idx]; returns per-sample squared errors.
  void forward(const ModelParams& p, const Matrix& x, std::span<const std::size_t> idx) {
    batch_ = idx.size();
    const std::size_t in_dim = p.layer_sizes.front();
    if (x.cols != in_dim) throw DomainError("sample dimension does not match the model input size");
    auto& a0 = act_[0];
    a0.assign(in_dim * batch_, 0.0);
    for (std::size_t b = 0; b < batch_; ++b) {
      const auto row = x.row(idx[b]);
      for (std::size_t j = 0; j < in_dim; ++j) a0[j * batch_ + b] = row[j];
    }
    const double* w = p.values.data();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& L = layers_[l];
      const auto& prev = act_[l];
      auto& out = act_[l + 1];
      out.assign(L.n_out * batch_, 0.0);
      for (std::size_t o = 0; o < L.n_out; ++o) {
        double* z = out.data() + o * batch_;
        const double bias = w[L.b_off + o];
        for (std::size_t b = 0; b < batch_; ++b) z[b] = bias;
        const double* wrow = w + L.w_off + o * L.n_in;
        for (std::size_t i = 0; i < L.n_in; ++i) {
          const double wi = wrow[i];
          const double* a = prev.data() + i * batch_;
          for (std::size_t b = 0; b < batch_; ++b) z[b] += wi * a[b];
        }
        if (l + 1 < layers_.size())
          for (std::size_t b = 0; b < batch_; ++b) z[b] = z[b] > 0.0 ? z[b] : 0.0;
      }
    }
    const auto& y = act_.back();
    err_.assign(batch_, 0.0);
    for (std::size_t j = 0; j < in_dim; ++j) {
      const double* yj = y.data() + j * batch_;
      const double* xj = a0.data() + j * batch_;
      for (std::size_t b = 0; b < batch_; ++b) {
        const double r = xj[b] - yj[b];
        err_[b] += r * r;
      }
    }
  }

  std::span<const double> errors() const { return err_; }
  std::span<const double> output() const { return act_.back(); }
  std::size_t batch() const { return batch_; }

  // Backward pass after `forward`; accumulates into grad (not cleared).
  // The loss is the batch mean of the squared errors.
  void backward(const ModelParams& p, std::span<double> grad) {
    const double* w = p.values.data();
    const std::size_t nl = layers_.size();
    const double scale = 2.0 / static_cast<double>(batch_);
    {
      auto& d = delta_[nl];
      const auto& y = act_[nl];
      const auto& x = act_[0];
      d.resize(y.size());
      for (std::size_t k = 0; k < y.size(); ++k) d[k] = scale * (y[k] - x[k]);
    }
    for (std::size_t l = nl; l-- > 0;) {
      const Layer& L = layers_[l];
      const auto& d = delta_[l + 1];
      const auto& prev = act_[l];
      // Batch-major copy of the layer input for the weight-gradient loop.
      prev_t_.resize(L.n_in * batch_);
      for (std::size_t i = 0; i < L.n_in; ++i)
        for (std::size_t b = 0; b < batch_; ++b) prev_t_[b * L.n_in + i] = prev[i * batch_ + b];
      for (std::size_t o = 0; o < L.n_out; ++o) {
        double* gw = grad.data() + L.w_off + o * L.n_in;
        const double* drow = d.data() + o * batch_;
        double gb = 0.0;
        for (std::size_t b = 0; b < batch_; ++b) {
          const double dv = drow[b];
          gb += dv;
          if (dv == 0.0) continue;
          const double* a = prev_t_.data() + b * L.n_in;
          for (std::size_t i = 0; i < L.n_in; ++i) gw[i] += dv * a[i];
        }
        grad[L.b_off + o] += gb;
      }
      if (l == 0) break;
      auto& dp = delta_[l];
      dp.assign(L.n_in * batch_, 0.0);
      for (std::size_t o = 0; o < L.n_out; ++o) {
        const double* wrow = w + L.w_off + o * L.n_in;
        const double* drow = d.data() + o * batch_;
        for (std::size_t i = 0; i < L.n_in; ++i) {
          const double wi = wrow[i];
          double* dpi = dp.data() + i * batch_;
          for (std::size_t b = 0; b < batch_; ++b) dpi[b] += wi * drow[b];
        }
      }
      // ReLU mask of the hidden layer that produced `prev` (prev > 0 iff z > 0).
      for (std::size_t k = 0; k < dp.size(); ++k)
        if (!(prev[k] > 0.0)) dp[k] = 0.0;
    }
  }

private:
  std::vector<Layer> layers_;
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> delta_;
  std::vector<double> prev_t_;
  std::vector<double> err_;
  std::size_t batch_ = 0;
};

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

std::vector<double> forward(const ModelParams& params, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  Workspace ws(params);
  const std::size_t idx = 0;
  ws.forward(params, m, {&idx, 1});
  const auto out = ws.output();
  return {out.begin(), out.end()};
}

double loss(const ModelParams& params, const Matrix& batch) {
  if (batch.rows == 0) throw DomainError("loss: empty batch");
  Workspace ws(params);
  const auto idx = iota_n(batch.rows);
  ws.forward(params, batch, idx);
  return mean_of(ws.errors());
}

std::vector<double> gradient(const ModelParams& params, const Matrix& batch) {
  if (batch.rows == 0) throw DomainError("gradient: empty batch");
  Workspace ws(params);
  const auto idx = iota_n(batch.rows);
  ws.forward(params, batch, idx);
  std::vector<double> g(params.size(), 0.0);
  ws.backward(params, g);
  for (double v : g)
    if (!std::isfinite(v)) throw NumericError("gradient: non-finite value");
  return g;
}

std::uint64_t training_flops(std::size_t d_params, std::uint64_t samples_seen) {
  return 6ULL * d_params * samples_seen;
}

LocalResult local_sgd(const ModelParams& start, const Matrix& train, const SgdConfig& cfg, Rng& rng) {
  cfg.validate();
  if (train.rows == 0) throw DomainError("local_sgd: empty training set");
  LocalResult r;
  r.params = start;
  auto& theta = r.params.values;
  Workspace ws(start);
  std::vector<double> g(theta.size());
  auto order = iota_n(train.rows);
  const std::size_t bs = cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t end = std::min(order.size(), begin + bs);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      ws.forward(r.params, train, idx);
      double batch_sum = 0.0;
      for (double e : ws.errors()) batch_sum += e;
      if (!std::isfinite(batch_sum)) throw NumericError("local_sgd: loss diverged");
      epoch_loss += batch_sum;
      std::fill(g.begin(), g.end(), 0.0);
      ws.backward(r.params, g);
      if (cfg.prox_mu > 0.0)
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += cfg.prox_mu * (theta[k] - start.values[k]);
      for (std::size_t k = 0; k < g.size(); ++k) theta[k] -= cfg.lr * g[k];
      r.samples_seen += idx.size();
    }
    r.last_epoch_loss = epoch_loss / static_cast<double>(order.size());
  }
  for (double v : theta)
    if (!std::isfinite(v)) throw NumericError("local_sgd: parameters diverged");
  r.flops = training_flops(theta.size(), r.samples_seen);
  return r;
}

std::vector<double> scores(const ModelParams& params, const Matrix& samples, Execution exec) {
  constexpr std::size_t kChunk = 64;
  std::vector<double> out(samples.rows, 0.0);
  const std::size_t n_chunks = (samples.rows + kChunk - 1) / kChunk;
  auto run_chunk = [&](Workspace& ws, std::size_t c) {
    const std::size_t begin = c * kChunk, end = std::min(samples.rows, begin + kChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    ws.forward(params, samples, idx);
    const auto e = ws.errors();
    std::copy(e.begin(), e.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel
    {
      Workspace ws(params);
#pragma omp for schedule(static)
      for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) run_chunk(ws, c);
    }
  } else {
    Workspace ws(params);
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(ws, c);
  }
  return out;
}

double calibrate_threshold(std::span<const double> errors, double p) {
  if (errors.empty()) throw DomainError("calibrate_threshold: no errors to calibrate on");
  if (!(p > 0.0 && p <= 100.0)) throw DomainError("calibrate_threshold: percentile must lie in (0, 100]");
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<std::uint8_t> flag(std::span<const double> s, double threshold) {
  std::vector<std::uint8_t> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > threshold ? 1 : 0;
  return out;
}

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r |= ((v >> (8 * k)) & 0xffULL) << (8 * (7 - k));
    return r;
  }
  return v;
}

}  // namespace

void save_params(const ModelParams& params, const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw LoadError("cannot write " + bin.string());
  for (double v : params.values) {
    const std::uint64_t raw = to_little_endian(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&raw), sizeof raw);
  }
  nlohmann::json header;
  header["layer_sizes"] = params.layer_sizes;
  header["d_params"] = params.values.size();
  header["dtype"] = "float64-le";
  auto js = stem;
  js += ".json";
  std::ofstream(js) << header.dump(1) << "\n";
}

ModelParams load_params(const std::filesystem::path& stem) {
  auto js = stem;
  js += ".json";
  std::ifstream hin(js);
  if (!hin) throw LoadError("cannot read " + js.string());
  const auto header = nlohmann::json::parse(hin);
  ModelParams p;
  p.layer_sizes = header.at("layer_sizes").get<std::vector<std::size_t>>();
  const auto n = header.at("d_params").get<std::size_t>();
  if (n != param_count(p.layer_sizes)) throw LoadError("parameter count does not match layer sizes in " + js.string());
  auto bin = stem;
  bin += ".bin";
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw LoadError("cannot read " + bin.string());
  p.values.resize(n);
  for (auto& v : p.values) {
    std::uint64_t raw = 0;
    if (!in.read(reinterpret_cast<char*>(&raw), sizeof raw)) throw LoadError("truncated parameter file " + bin.string());
    v = std::bit_cast<double>(to_little_endian(raw));
  }
  return p;
}

}  // namespace uwfl
