#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "labelassoc/corpus.hpp"
#include "labelassoc/encoder.hpp"
#include "labelassoc/error.hpp"

namespace labelassoc {

inline constexpr std::uint32_t kCacheFormatVersion = 1;
// magic(4) + version(4) + dim(4) + count(8)
inline constexpr std::size_t kCacheHeaderSize = 20;
inline constexpr std::size_t kDefaultWordLimit = 200;

/// Bad magic, version mismatch, truncated or oversized cache file.
class CacheFormatError : public InputError {
 public:
  using InputError::InputError;
};

/// Dense count x dim float32 matrix of document embeddings keyed by id.
///
/// On disk (little-endian): "WCEC", version u32, dim u32, count u64, then
/// count u64 ids, then the row-major matrix. Row k starts at
/// kCacheHeaderSize + 8*count + 4*dim*k. A cache opened from disk maps the
/// file and serves rows straight from the mapping; ids are copied out.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  EmbeddingCache(std::uint32_t dim, std::vector<std::uint64_t> ids, std::vector<float> matrix);

  /// Validates the header and size, then memory-maps the file. Throws
  /// CacheFormatError on bad magic, version mismatch or truncation.
  static EmbeddingCache open(const std::filesystem::path& path);

  std::uint32_t dim() const { return dim_; }
  std::uint64_t count() const { return ids_.size(); }
  std::span<const std::uint64_t> ids() const { return ids_; }
  std::span<const float> matrix() const { return matrix_; }
  std::span<const float> row(std::size_t k) const;
  bool is_mapped() const;

  void save(const std::filesystem::path& path) const;

 private:
  struct Storage;

  std::uint32_t dim_ = 0;
  std::vector<std::uint64_t> ids_;
  std::shared_ptr<const Storage> storage_;
  std::span<const float> matrix_;
};

/// Byte offset of row k in a cache file.
constexpr std::uint64_t cache_row_offset(std::uint64_t count, std::uint32_t dim, std::uint64_t k) {
  return kCacheHeaderSize + 8 * count + 4ull * dim * k;
}

EmbeddingCache load_cache(const std::filesystem::path& path);

/// Encodes the first `word_limit` words of every document, in corpus order.
EmbeddingCache build_cache(const EncoderModel& model, const Corpus& corpus,
                           std::size_t word_limit = kDefaultWordLimit);

/// One row per string; ids are 0..n-1.
EmbeddingCache build_string_cache(const EncoderModel& model, std::span<const std::string> strings);

struct ScanHit {
  std::uint32_t query = 0;
  double score = 0.0;

  friend bool operator==(const ScanHit&, const ScanHit&) = default;
};

/// For every cached row, the most similar query and its cosine. Ties go to
/// the lowest query index. `queries` is row-major n_queries x dim. Throws
/// InputError on a dimension mismatch.
std::vector<ScanHit> top1_scan(const EmbeddingCache& cache, std::span<const float> queries,
                               std::size_t query_dim);

/// Recomputes `samples` distinct seeded-random rows (all rows if fewer) and
/// returns how many differ bitwise from the cache.
std::size_t verify_cache(const EncoderModel& model, const Corpus& corpus, const EmbeddingCache& cache,
                         std::size_t samples, std::uint64_t seed,
                         std::size_t word_limit = kDefaultWordLimit);

}  // namespace labelassoc
