#include "uwfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uwfl/errors.hpp"

namespace uwfl {

void SynthConfig::validate() const {
  if (n_sensors < 1 || dim < 1 || n_modes < 1) throw ConfigError("data: n_sensors, dim and n_modes must be >= 1");
  if (n_train < 1 || n_val < 1 || n_test < 1) throw ConfigError("data: split sizes must be positive");
  if (!(dirichlet_alpha > 0)) throw ConfigError("data: dirichlet_alpha must be positive");
  if (!(anomaly_rate >= 0 && anomaly_rate < 1)) throw ConfigError("data: anomaly_rate must lie in [0, 1)");
  if (!(anomaly_mag_lo > 0 && anomaly_mag_lo <= anomaly_mag_hi)) throw ConfigError("data: invalid anomaly magnitude range");
  if (!(mode_sigma > 0)) throw ConfigError("data: mode_sigma must be positive");
  if (!(anomaly_feature_fraction > 0 && anomaly_feature_fraction <= 1))
    throw ConfigError("data: anomaly_feature_fraction must lie in (0, 1]");
  if (!(mean_segment_length >= 1)) throw ConfigError("data: mean_segment_length must be >= 1");
}

std::vector<std::vector<double>> dirichlet_partition(std::size_t n_modes, double alpha, std::size_t n_sensors,
                                                     Rng& rng) {
  if (n_modes < 1) throw DomainError("dirichlet_partition: need at least one mode");
  if (!(alpha > 0)) throw DomainError("dirichlet_partition: alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<std::vector<double>> out(n_sensors, std::vector<double>(n_modes));
  for (auto& w : out) {
    double sum = 0.0;
    for (auto& x : w) sum += (x = gamma(rng));
    if (sum > 0.0) {
      for (auto& x : w) x /= sum;
    } else {
      // Every gamma draw underflowed (tiny alpha): fall back to a one-hot mixture.
      std::fill(w.begin(), w.end(), 0.0);
      w[std::uniform_int_distribution<std::size_t>(0, n_modes - 1)(rng)] = 1.0;
    }
  }
  return out;
}

namespace {

struct Modes {
  std::vector<std::vector<double>> means;
};

Modes draw_modes(const SynthConfig& cfg) {
  auto rng = make_rng(cfg.seed, {kStreamData, 0});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Modes m;
  m.means.assign(cfg.n_modes, std::vector<double>(cfg.dim));
  for (auto& mean : m.means)
    for (auto& x : mean) x = u(rng);
  return m;
}

void fill_normal(Matrix& out, const Modes& modes, const std::vector<double>& weights, double sigma, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t r = 0; r < out.rows; ++r) {
    const auto& mean = modes.means[pick(rng)];
    auto row = out.row(r);
    for (std::size_t j = 0; j < out.cols; ++j) row[j] = mean[j] + noise(rng);
  }
}

void inject_anomalies(LocalDataset& ds, const SynthConfig& cfg, Rng& rng) {
  ds.test_labels.assign(ds.test.rows, 0);
  if (cfg.anomaly_rate <= 0.0) return;
  const double seg = cfg.mean_segment_length;
  const double start_p = cfg.anomaly_rate / (seg - cfg.anomaly_rate * (seg - 1.0));
  std::bernoulli_distribution start(start_p);
  std::geometric_distribution<std::size_t> extra(1.0 / seg);
  std::uniform_real_distribution<double> mag(cfg.anomaly_mag_lo * cfg.mode_sigma, cfg.anomaly_mag_hi * cfg.mode_sigma);
  std::bernoulli_distribution sign(0.5);
  const auto n_feat = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(cfg.anomaly_feature_fraction * static_cast<double>(cfg.dim))));
  std::vector<std::size_t> features(cfg.dim);

  std::size_t t = 0;
  while (t < ds.test.rows) {
    if (!start(rng)) {
      ++t;
      continue;
    }
    const std::size_t len = 1 + extra(rng);
    std::iota(features.begin(), features.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n_feat entries form the affected subset.
    for (std::size_t k = 0; k < n_feat; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, cfg.dim - 1);
      std::swap(features[k], features[pick(rng)]);
    }
    std::vector<double> offset(n_feat);
    for (auto& o : offset) o = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    const std::size_t end = std::min(ds.test.rows, t + len);
    for (; t < end; ++t) {
      ds.test_labels[t] = 1;
      auto row = ds.test.row(t);
      for (std::size_t k = 0; k < n_feat; ++k) row[features[k]] += offset[k];
    }
    ++t;  // at least one normal point between segments
  }
}

}  // namespace

std::vector<LocalDataset> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const Modes modes = draw_modes(cfg);
  auto part_rng = make_rng(cfg.seed, {kStreamData, 1});
  const auto weights = dirichlet_partition(cfg.n_modes, cfg.dirichlet_alpha, cfg.n_sensors, part_rng);

  std::vector<LocalDataset> out(cfg.n_sensors);
  for (std::size_t i = 0; i < cfg.n_sensors; ++i) {
    auto& ds = out[i];
    auto rng = make_rng(cfg.seed, {kStreamData, 2, i});
    ds.train = Matrix(cfg.n_train, cfg.dim);
    ds.val = Matrix(cfg.n_val, cfg.dim);
    ds.test = Matrix(cfg.n_test, cfg.dim);
    fill_normal(ds.train, modes, weights[i], cfg.mode_sigma, rng);
    fill_normal(ds.val, modes, weights[i], cfg.mode_sigma, rng);
    fill_normal(ds.test, modes, weights[i], cfg.mode_sigma, rng);
    auto arng = make_rng(cfg.anomaly_seed, {kStreamAnomaly, i});
    inject_anomalies(ds, cfg, arng);
  }
  return out;
}

Normalizer Normalizer::fit(const Matrix& train) {
  if (train.rows == 0) throw DomainError("normalizer: empty training split");
  Normalizer n;
  n.mean.assign(train.cols, 0.0);
  n.stddev.assign(train.cols, 0.0);
  for (std::size_t r = 0; r < train.rows; ++r)
    for (std::size_t j = 0; j < train.cols; ++j) n.mean[j] += train(r, j);
  for (auto& m : n.mean) m /= static_cast<double>(train.rows);
  for (std::size_t r = 0; r < train.rows; ++r)
    for (std::size_t j = 0; j < train.cols; ++j) {
      const double d = train(r, j) - n.mean[j];
      n.stddev[j] += d * d;
    }
  for (auto& s : n.stddev) {
    s = std::sqrt(s / static_cast<double>(train.rows));
    if (!(s > 1e-12)) s = 1.0;  // constant feature
  }
  return n;
}

void Normalizer::apply(Matrix& m) const {
  if (m.cols != mean.size()) throw DomainError("normalizer: dimension mismatch");
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t j = 0; j < m.cols; ++j) m(r, j) = (m(r, j) - mean[j]) / stddev[j];
}

void normalize(LocalDataset& ds) {
  const auto n = Normalizer::fit(ds.train);
  n.apply(ds.train);
  n.apply(ds.val);
  n.apply(ds.test);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  Matrix m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw LoadError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
    }
    if (m.rows == 0) {
      m.cols = row.size();
    } else if (row.size() != m.cols) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(m.cols) +
                      " columns, found " + std::to_string(row.size()));
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
    ++m.rows;
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  char buf[32];
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

std::vector<std::uint8_t> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::uint8_t> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0" || line == "0.0") {
      labels.push_back(0);
    } else if (line == "1" || line == "1.0") {
      labels.push_back(1);
    } else {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": label must be 0 or 1, got '" + line + "'");
    }
  }
  return labels;
}

void write_labels_csv(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  for (auto l : labels) out << (l ? '1' : '0') << '\n';
}

Matrix make_windows(const Matrix& m, std::size_t window, std::size_t stride) {
  if (window < 1 || stride < 1) throw DomainError("make_windows: window and stride must be >= 1");
  if (window == 1 && stride == 1) return m;
  Matrix out;
  out.cols = m.cols * window;
  for (std::size_t end = window; end <= m.rows; end += stride) {
    for (std::size_t r = end - window; r < end; ++r) {
      const auto row = m.row(r);
      out.data.insert(out.data.end(), row.begin(), row.end());
    }
    ++out.rows;
  }
  return out;
}

std::vector<std::uint8_t> window_labels(const std::vector<std::uint8_t>& labels, std::size_t window,
                                        std::size_t stride) {
  if (window < 1 || stride < 1) throw DomainError("window_labels: window and stride must be >= 1");
  std::vector<std::uint8_t> out;
  for (std::size_t end = window; end <= labels.size(); end += stride) out.push_back(labels[end - 1]);
  return out;
}

BenchmarkData load_benchmark(const BenchmarkSpec& spec) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(spec.root)) throw LoadError("benchmark root is not a directory: " + spec.root.string());
  BenchmarkData out;
  out.entities = spec.entities;
  if (out.entities.empty()) {
    for (const auto& e : fs::directory_iterator(spec.root))
      if (e.is_directory()) out.entities.push_back(e.path().filename().string());
    std::sort(out.entities.begin(), out.entities.end());
  }
  if (out.entities.empty()) throw LoadError("no entities found under " + spec.root.string());

  for (const auto& name : out.entities) {
    const fs::path dir = spec.root / name;
    for (const char* f : {"train.csv", "test.csv", "labels.csv"})
      if (!fs::exists(dir / f)) throw LoadError("entity '" + name + "' is missing " + f);
    Matrix train = read_matrix_csv(dir / "train.csv");
    Matrix test = read_matrix_csv(dir / "test.csv");
    auto labels = read_labels_csv(dir / "labels.csv");
    Matrix val;
    if (fs::exists(dir / "val.csv")) {
      val = read_matrix_csv(dir / "val.csv");
    } else {
      const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(train.rows)));
      if (n_val == 0 || n_val >= train.rows) throw LoadError("entity '" + name + "': training split too short for validation");
      val = Matrix(n_val, train.cols);
      const std::size_t keep = train.rows - n_val;
      std::copy(train.data.begin() + static_cast<std::ptrdiff_t>(keep * train.cols), train.data.end(), val.data.begin());
      train.data.resize(keep * train.cols);
      train.rows = keep;
    }
    auto check_dim = [&](const Matrix& m, const char* what) {
      if (m.rows == 0) throw LoadError("entity '" + name + "': " + what + " is empty");
      if (spec.dim != 0 && m.cols != spec.dim)
        throw LoadError("entity '" + name + "': " + what + " has " + std::to_string(m.cols) + " features, expected " +
                        std::to_string(spec.dim));
    };
    check_dim(train, "train.csv");
    check_dim(val, "validation split");
    check_dim(test, "test.csv");
    if (val.cols != train.cols || test.cols != train.cols)
      throw LoadError("entity '" + name + "': splits disagree on the feature count");
    if (labels.size() != test.rows)
      throw LoadError("entity '" + name + "': labels.csv has " + std::to_string(labels.size()) + " rows, test.csv has " +
                      std::to_string(test.rows));

    LocalDataset ds;
    ds.train = std::move(train);
    ds.val = std::move(val);
    ds.test = std::move(test);
    ds.test_labels = std::move(labels);
    normalize(ds);
    if (spec.window > 1 || spec.stride > 1) {
      ds.train = make_windows(ds.train, spec.window, spec.stride);
      ds.val = make_windows(ds.val, spec.window, spec.stride);
      ds.test_labels = window_labels(ds.test_labels, spec.window, spec.stride);
      ds.test = make_windows(ds.test, spec.window, spec.stride);
    }
    out.datasets.push_back(std::move(ds));
  }
  return out;
}

void write_benchmark(const std::filesystem::path& root, const std::vector<std::string>& entities,
                     const std::vector<LocalDataset>& datasets) {
  namespace fs = std::filesystem;
  if (entities.size() != datasets.size()) throw DomainError("write_benchmark: entity/dataset count mismatch");
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const fs::path dir = root / entities[i];
    fs::create_directories(dir);
    write_matrix_csv(dir / "train.csv", datasets[i].train);
    write_matrix_csv(dir / "val.csv", datasets[i].val);
    write_matrix_csv(dir / "test.csv", datasets[i].test);
    write_labels_csv(dir / "labels.csv", datasets[i].test_labels);
  }
}

}  // namespace uwfl
