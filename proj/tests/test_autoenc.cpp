#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "uwfl/autoenc.hpp"
#include "uwfl/errors.hpp"

using namespace uwfl;

namespace {

// Straightforward reimplementation of the canonical layout, used as oracle.
std::vector<double> naive_forward(const std::vector<std::size_t>& sizes, const std::vector<double>& theta,
                                  std::vector<double> a) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    std::vector<double> z(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double s = theta[off + n_in * n_out + o];
      for (std::size_t i = 0; i < n_in; ++i) s += theta[off + o * n_in + i] * a[i];
      const bool last = l + 2 == sizes.size();
      z[o] = last ? s : std::max(0.0, s);
    }
    off += n_in * n_out + n_out;
    a = std::move(z);
  }
  return a;
}

double naive_loss(const std::vector<std::size_t>& sizes, const std::vector<double>& theta, const Matrix& x) {
  double total = 0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    const auto y = naive_forward(sizes, theta, std::vector<double>(row.begin(), row.end()));
    for (std::size_t j = 0; j < x.cols; ++j) total += (row[j] - y[j]) * (row[j] - y[j]);
  }
  return total / static_cast<double>(x.rows);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : m.data) v = n(rng);
  return m;
}

}  // namespace

TEST_CASE("parameter count of the reference architecture") {
  CHECK(param_count(kDefaultLayerSizes) == 1352);
  CHECK(param_count(std::vector<std::size_t>{3, 2}) == 8);
  CHECK_THROWS(param_count(std::vector<std::size_t>{4}));
}

TEST_CASE("glorot init bounds and zero biases") {
  auto rng = make_rng(1, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  REQUIRE(p.size() == 1352);
  // First layer: 32x16 weights then 16 biases.
  const double limit = std::sqrt(6.0 / 48.0);
  for (std::size_t k = 0; k < 512; ++k) CHECK(std::abs(p.values[k]) <= limit);
  for (std::size_t k = 512; k < 528; ++k) CHECK(p.values[k] == 0.0);
}

TEST_CASE("forward matches the naive oracle") {
  auto rng = make_rng(2, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto x = random_matrix(5, 32, rng);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto row = x.row(r);
    const auto y = forward(p, row);
    const auto ref = naive_forward(kDefaultLayerSizes, p.values, std::vector<double>(row.begin(), row.end()));
    for (std::size_t j = 0; j < 32; ++j) CHECK(y[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
  CHECK(loss(p, x) == doctest::Approx(naive_loss(kDefaultLayerSizes, p.values, x)).epsilon(1e-12));
}

TEST_CASE("zero parameters reconstruct zero") {
  const auto p = zero_params(kDefaultLayerSizes);
  Matrix x(1, 32);
  for (std::size_t j = 0; j < 32; ++j) x(0, j) = 0.5;
  CHECK(loss(p, x) == doctest::Approx(32 * 0.25));
}

TEST_CASE("gradient matches central finite differences") {
  const std::vector<std::size_t> sizes{6, 4, 3, 4, 6};
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    auto rng = make_rng(100 + trial, {kStreamInit});
    auto p = init_params(sizes, rng);
    std::uniform_real_distribution<double> b(-0.3, 0.3);
    for (auto& v : p.values) v += b(rng);  // nonzero biases, varied ReLU states
    const auto x = random_matrix(7, 6, rng);
    const auto g = gradient(p, x);
    const double h = 1e-5;
    for (std::size_t k = 0; k < p.size(); ++k) {
      auto plus = p.values, minus = p.values;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (naive_loss(sizes, plus, x) - naive_loss(sizes, minus, x)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[k]), 1e-6});
      CHECK(std::abs(fd - g[k]) / denom <= 1e-4);
    }
  }
}

TEST_CASE("duplicating the batch leaves the gradient unchanged") {
  auto rng = make_rng(3, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto x = random_matrix(4, 32, rng);
  Matrix xx(8, 32);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t j = 0; j < 32; ++j) xx(r, j) = x(r % 4, j);
  const auto g1 = gradient(p, x), g2 = gradient(p, xx);
  for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2[k] == doctest::Approx(g1[k]).epsilon(1e-10));
}

TEST_CASE("loss is nonnegative") {
  auto rng = make_rng(4, {kStreamInit});
  for (int t = 0; t < 10; ++t) {
    const auto p = init_params(kDefaultLayerSizes, rng);
    CHECK(loss(p, random_matrix(3, 32, rng)) >= 0.0);
  }
}

TEST_CASE("local sgd is deterministic and reduces the loss") {
  auto rng = make_rng(5, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto x = random_matrix(200, 32, rng, 0.3);
  SgdConfig cfg;
  auto r1 = make_rng(9, {kStreamTrain}), r2 = make_rng(9, {kStreamTrain});
  const auto a = local_sgd(p, x, cfg, r1), b = local_sgd(p, x, cfg, r2);
  CHECK(a.params == b.params);
  CHECK(loss(a.params, x) < loss(p, x));
  CHECK(a.samples_seen == 5 * 200);
  CHECK(a.flops == training_flops(1352, 1000));
  CHECK(training_flops(1352, 1000) == 6ULL * 1352 * 1000);
}

TEST_CASE("proximal term shrinks the update monotonically") {
  auto rng = make_rng(6, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto x = random_matrix(100, 32, rng, 0.3);
  double prev = std::numeric_limits<double>::infinity();
  for (double mu : {0.0, 0.01, 1.0, 100.0}) {
    SgdConfig cfg;
    cfg.lr = 0.005;
    cfg.prox_mu = mu;
    auto r = make_rng(1, {kStreamTrain});
    const auto res = local_sgd(p, x, cfg, r);
    double norm = 0;
    for (std::size_t k = 0; k < p.size(); ++k) norm += std::pow(res.params.values[k] - p.values[k], 2);
    CHECK(std::sqrt(norm) < prev);
    prev = std::sqrt(norm);
  }
}

TEST_CASE("divergence raises a numeric error") {
  auto rng = make_rng(7, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto x = random_matrix(64, 32, rng, 10.0);
  SgdConfig cfg;
  cfg.lr = 50.0;
  cfg.epochs = 20;
  auto r = make_rng(1, {kStreamTrain});
  CHECK_THROWS_AS(local_sgd(p, x, cfg, r), NumericError);
}

TEST_CASE("sgd config validation") {
  SgdConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("serial and parallel scores agree bit for bit") {
  auto rng = make_rng(8, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto x = random_matrix(1000, 32, rng);
  const auto s = scores(p, x, Execution::Serial), q = scores(p, x, Execution::Parallel);
  CHECK(s == q);
  for (std::size_t r = 0; r < 1000; r += 97) {
    Matrix one(1, 32);
    std::copy(x.row(r).begin(), x.row(r).end(), one.data.begin());
    CHECK(s[r] == doctest::Approx(loss(p, one)).epsilon(1e-12));
  }
}

TEST_CASE("nearest-rank threshold") {
  std::vector<double> e;
  for (int i = 1; i <= 100; ++i) e.push_back(i);
  CHECK(calibrate_threshold(e, 99) == 99);
  CHECK(calibrate_threshold(e, 100) == 100);
  CHECK(calibrate_threshold(e, 0.5) == 1);
  CHECK(calibrate_threshold(std::vector<double>{3, 1, 2}, 50) == 2);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{}, 99), DomainError);
  CHECK_THROWS_AS(calibrate_threshold(e, 0), DomainError);
}

TEST_CASE("flagging is strict") {
  const auto f = flag(std::vector<double>{1.0, 2.0, 3.0}, 2.0);
  CHECK(f == std::vector<std::uint8_t>{0, 0, 1});
}

TEST_CASE("params save and load round trip") {
  auto rng = make_rng(9, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  const auto dir = std::filesystem::temp_directory_path() / "uwfl_test_params";
  std::filesystem::create_directories(dir);
  save_params(p, dir / "model");
  CHECK(std::filesystem::file_size(dir / "model.bin") == 1352 * 8);
  CHECK(load_params(dir / "model") == p);
  CHECK_THROWS(load_params(dir / "missing"));
  std::filesystem::remove_all(dir);
}
