#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace labelassoc::kernels {

struct Best {
  std::uint32_t index = 0;
  double score = 0.0;
};

// Double-accumulated dot product over `dim` floats.
inline double dot(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

// rows: n_rows x dim, queries: n_queries x dim, both row-major.
// top1_rows: per row, best query (strict >, so ties keep the lowest index).
// nearest_rows: per query, best row.

namespace serial {
std::vector<Best> top1_rows(std::span<const float> rows, std::span<const float> queries,
                            std::size_t dim);
std::vector<Best> nearest_rows(std::span<const float> rows, std::span<const float> queries,
                               std::size_t dim);
}  // namespace serial

namespace parallel {
std::vector<Best> top1_rows(std::span<const float> rows, std::span<const float> queries,
                            std::size_t dim);
std::vector<Best> nearest_rows(std::span<const float> rows, std::span<const float> queries,
                               std::size_t dim);
}  // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace labelassoc::kernels
