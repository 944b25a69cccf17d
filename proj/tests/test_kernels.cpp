#include <doctest.h>

#include <random>

#include "haloflow/kernels.hpp"

using namespace haloflow::kernels;

namespace {

LocalCsr random_csr(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  LocalCsr csr;
  std::uniform_int_distribution<std::uint32_t> deg(0, 8), col(0, static_cast<std::uint32_t>(cols - 1));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto d = deg(rng);
    for (std::uint32_t k = 0; k < d; ++k) csr.cols.push_back(col(rng));
    csr.offsets.push_back(static_cast<std::uint32_t>(csr.cols.size()));
  }
  return csr;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("gather reads each index once") {
  const std::vector<double> src{10, 20, 30};
  const std::vector<std::uint32_t> idx{2, 0};
  std::vector<double> out(2);
  CHECK(gather_serial(src, idx, out) == 2);
  CHECK(out == std::vector<double>{30, 10});
  std::vector<double> none;
  CHECK(gather_omp(src, {}, none) == 0);
}

TEST_CASE("scatter fills slots") {
  std::vector<double> dst(4, 0.0);
  scatter_serial(std::vector<double>{1, 2}, std::vector<std::uint32_t>{3, 1}, dst);
  CHECK(dst == std::vector<double>{0, 2, 0, 1});
}

TEST_CASE("rows without neighbours keep their value") {
  LocalCsr csr;
  csr.offsets = {0, 0, 2};
  csr.cols = {0, 2};
  const std::vector<double> in{4, 5, 8};
  std::vector<double> out(2);
  neighbor_mean_serial(csr, in, out);
  CHECK(out == std::vector<double>{4, 6});
}

TEST_CASE("openmp kernels match the serial reference bit for bit") {
  std::mt19937_64 rng(3);
  for (std::size_t rows : {10u, 5000u, 20000u}) {
    const LocalCsr csr = random_csr(rng, rows, rows + 500);
    const auto in = random_values(rng, rows + 500);
    std::vector<double> a(rows), b(rows);
    neighbor_mean_serial(csr, in, a);
    neighbor_mean_omp(csr, in, b);
    CHECK(a == b);

    std::vector<std::uint8_t> mask(rows);
    std::vector<std::uint32_t> on, off;
    for (std::size_t r = 0; r < rows; ++r) {
      mask[r] = rng() % 3 == 0;
      (mask[r] ? on : off).push_back(static_cast<std::uint32_t>(r));
    }
    std::vector<double> m1(rows, -1), m2(rows, -1), i1(rows, -1), i2(rows, -1);
    neighbor_mean_masked_serial(csr, in, m1, mask, true);
    neighbor_mean_masked_serial(csr, in, m1, mask, false);
    neighbor_mean_masked_omp(csr, in, m2, mask, true);
    neighbor_mean_masked_omp(csr, in, m2, mask, false);
    neighbor_mean_indexed_serial(csr, in, i1, on);
    neighbor_mean_indexed_serial(csr, in, i1, off);
    neighbor_mean_indexed_omp(csr, in, i2, on);
    neighbor_mean_indexed_omp(csr, in, i2, off);
    CHECK(m1 == a);
    CHECK(m2 == a);
    CHECK(i1 == a);
    CHECK(i2 == a);

    std::vector<std::uint32_t> idx(rows);
    for (auto& x : idx) x = static_cast<std::uint32_t>(rng() % in.size());
    std::vector<double> g1(rows), g2(rows);
    CHECK(gather_serial(in, idx, g1) == rows);
    CHECK(gather_omp(in, idx, g2) == rows);
    CHECK(g1 == g2);
  }
}
