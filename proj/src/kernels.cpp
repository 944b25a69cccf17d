#include "haloflow/kernels.hpp"

#include <cstddef>

namespace haloflow::kernels {

namespace {

inline double row_mean(const LocalCsr& csr, std::span<const double> in, std::size_t row) {
  const std::uint32_t begin = csr.offsets[row];
  const std::uint32_t end = csr.offsets[row + 1];
  if (begin == end) return in[row];
  double sum = 0.0;
  for (std::uint32_t k = begin; k < end; ++k) sum += in[csr.cols[k]];
  return sum / static_cast<double>(end - begin);
}

}  // namespace

std::uint64_t gather_serial(std::span<const double> src, std::span<const std::uint32_t> idx,
                            std::span<double> out) {
  std::uint64_t reads = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out[k] = src[idx[k]];
    ++reads;
  }
  return reads;
}

std::uint64_t gather_omp(std::span<const double> src, std::span<const std::uint32_t> idx,
                         std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(idx.size());
  std::uint64_t reads = 0;
#pragma omp parallel for reduction(+ : reads) schedule(static) if (idx.size() >= kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[k] = src[idx[k]];
    ++reads;
  }
  return reads;
}

void scatter_serial(std::span<const double> buf, std::span<const std::uint32_t> slots,
                    std::span<double> dst) {
  for (std::size_t k = 0; k < slots.size(); ++k) dst[slots[k]] = buf[k];
}

void neighbor_mean_serial(const LocalCsr& csr, std::span<const double> in, std::span<double> out) {
  for (std::size_t row = 0; row < csr.rows(); ++row) out[row] = row_mean(csr, in, row);
}

void neighbor_mean_omp(const LocalCsr& csr, std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(csr.rows());
#pragma omp parallel for schedule(static) if (csr.rows() >= kParallelThreshold)
  for (std::ptrdiff_t row = 0; row < n; ++row) out[row] = row_mean(csr, in, row);
}

void neighbor_mean_masked_serial(const LocalCsr& csr, std::span<const double> in,
                                 std::span<double> out, std::span<const std::uint8_t> mask,
                                 bool select) {
  for (std::size_t row = 0; row < csr.rows(); ++row)
    if ((mask[row] != 0) == select) out[row] = row_mean(csr, in, row);
}

void neighbor_mean_masked_omp(const LocalCsr& csr, std::span<const double> in,
                              std::span<double> out, std::span<const std::uint8_t> mask,
                              bool select) {
  const auto n = static_cast<std::ptrdiff_t>(csr.rows());
#pragma omp parallel for schedule(static) if (csr.rows() >= kParallelThreshold)
  for (std::ptrdiff_t row = 0; row < n; ++row)
    if ((mask[row] != 0) == select) out[row] = row_mean(csr, in, row);
}

void neighbor_mean_indexed_serial(const LocalCsr& csr, std::span<const double> in,
                                  std::span<double> out, std::span<const std::uint32_t> rows) {
  for (std::uint32_t row : rows) out[row] = row_mean(csr, in, row);
}

void neighbor_mean_indexed_omp(const LocalCsr& csr, std::span<const double> in,
                               std::span<double> out, std::span<const std::uint32_t> rows) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static) if (rows.size() >= kParallelThreshold)
  for (std::ptrdiff_t k = 0; k < n; ++k) out[rows[k]] = row_mean(csr, in, rows[k]);
}

}  // namespace haloflow::kernels
