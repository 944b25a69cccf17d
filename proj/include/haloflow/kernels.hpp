// Data-parallel inner loops of the halo engine. Each kernel has a serial
// reference and an OpenMP version; both produce bit-identical output because
// every output element is computed independently in a fixed order.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace haloflow::kernels {

/// Neighbour lists of the owned elements of one rank, as local indices
/// (owned slots first, ghost slots after), in ascending global order.
struct LocalCsr {
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> cols;

  std::size_t rows() const { return offsets.size() - 1; }
};

// Below this many elements the OpenMP variants run on the calling thread.
inline constexpr std::size_t kParallelThreshold = 4096;

/// out[k] = src[idx[k]]. Returns the number of reads from `src`.
std::uint64_t gather_serial(std::span<const double> src, std::span<const std::uint32_t> idx,
                            std::span<double> out);
std::uint64_t gather_omp(std::span<const double> src, std::span<const std::uint32_t> idx,
                         std::span<double> out);

/// dst[slots[k]] = buf[k].
void scatter_serial(std::span<const double> buf, std::span<const std::uint32_t> slots,
                    std::span<double> dst);

/// out[row] = mean of in[cols] over the row's neighbours, summed left to right.
/// Rows with no neighbours keep in[row].
void neighbor_mean_serial(const LocalCsr& csr, std::span<const double> in, std::span<double> out);
void neighbor_mean_omp(const LocalCsr& csr, std::span<const double> in, std::span<double> out);

/// Same, restricted to rows with mask[row] == select.
void neighbor_mean_masked_serial(const LocalCsr& csr, std::span<const double> in,
                                 std::span<double> out, std::span<const std::uint8_t> mask,
                                 bool select);
void neighbor_mean_masked_omp(const LocalCsr& csr, std::span<const double> in,
                              std::span<double> out, std::span<const std::uint8_t> mask,
                              bool select);

/// Same, restricted to the listed rows.
void neighbor_mean_indexed_serial(const LocalCsr& csr, std::span<const double> in,
                                  std::span<double> out, std::span<const std::uint32_t> rows);
void neighbor_mean_indexed_omp(const LocalCsr& csr, std::span<const double> in,
                               std::span<double> out, std::span<const std::uint32_t> rows);

}  // namespace haloflow::kernels
