#include "labelassoc/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace labelassoc::kernels {

namespace {

Best best_of(const float* target, const float* candidates, std::size_t n_candidates, std::size_t dim) {
  Best best{0, dot(target, candidates, dim)};
  for (std::size_t q = 1; q < n_candidates; ++q) {
    const double s = dot(target, candidates + q * dim, dim);
    if (s > best.score) best = {static_cast<std::uint32_t>(q), s};
  }
  return best;
}

}  // namespace

namespace serial {

std::vector<Best> top1_rows(std::span<const float> rows, std::span<const float> queries, std::size_t dim) {
  const std::size_t n_rows = rows.size() / dim;
  const std::size_t n_queries = queries.size() / dim;
  std::vector<Best> out(n_rows);
  if (n_queries == 0) return out;
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = best_of(rows.data() + r * dim, queries.data(), n_queries, dim);
  return out;
}

std::vector<Best> nearest_rows(std::span<const float> rows, std::span<const float> queries, std::size_t dim) {
  const std::size_t n_rows = rows.size() / dim;
  const std::size_t n_queries = queries.size() / dim;
  std::vector<Best> out(n_queries);
  if (n_rows == 0) return out;
  for (std::size_t q = 0; q < n_queries; ++q) out[q] = best_of(queries.data() + q * dim, rows.data(), n_rows, dim);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<Best> top1_rows(std::span<const float> rows, std::span<const float> queries, std::size_t dim) {
  const std::size_t n_rows = rows.size() / dim;
  const std::size_t n_queries = queries.size() / dim;
  std::vector<Best> out(n_rows);
  if (n_queries == 0) return out;
  const auto n = static_cast<std::ptrdiff_t>(n_rows);
  const float* r0 = rows.data();
  const float* q0 = queries.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    out[static_cast<std::size_t>(r)] = best_of(r0 + static_cast<std::size_t>(r) * dim, q0, n_queries, dim);
  }
  return out;
}

std::vector<Best> nearest_rows(std::span<const float> rows, std::span<const float> queries, std::size_t dim) {
  const std::size_t n_rows = rows.size() / dim;
  const std::size_t n_queries = queries.size() / dim;
  std::vector<Best> out(n_queries);
  if (n_rows == 0) return out;
  const auto n = static_cast<std::ptrdiff_t>(n_queries);
  const float* r0 = rows.data();
  const float* q0 = queries.data();
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    out[static_cast<std::size_t>(q)] = best_of(q0 + static_cast<std::size_t>(q) * dim, r0, n_rows, dim);
  }
  return out;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace labelassoc::kernels
