#include "labelassoc/cache.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <algorithm>

#include "labelassoc/kernels.hpp"
#include "labelassoc/tokenizer.hpp"
#include "labelassoc/training.hpp"

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

namespace labelassoc {

namespace {
constexpr char kMagic[4] = {'W', 'C', 'E', 'C'};
}

struct EmbeddingCache::Storage {
  std::vector<float> owned;
  void* map = nullptr;
  std::size_t map_size = 0;

  Storage() = default;
  Storage(const Storage&) = delete;
  Storage& operator=(const Storage&) = delete;
  ~Storage() {
    if (map != nullptr) munmap(map, map_size);
  }
};

EmbeddingCache::EmbeddingCache(std::uint32_t dim, std::vector<std::uint64_t> ids, std::vector<float> matrix)
    : dim_(dim), ids_(std::move(ids)) {
  if (dim == 0) throw InputError("cache dimension must be positive");
  if (matrix.size() != ids_.size() * dim) {
    throw InputError("cache matrix holds " + std::to_string(matrix.size()) + " floats, expected " +
                     std::to_string(ids_.size() * dim));
  }
  auto storage = std::make_shared<Storage>();
  storage->owned = std::move(matrix);
  matrix_ = storage->owned;
  storage_ = std::move(storage);
}

std::span<const float> EmbeddingCache::row(std::size_t k) const {
  if (k >= ids_.size()) throw InputError("cache row " + std::to_string(k) + " out of range");
  return matrix_.subspan(k * dim_, dim_);
}

bool EmbeddingCache::is_mapped() const { return storage_ && storage_->map != nullptr; }

void EmbeddingCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write cache " + path.string());
  const std::uint32_t version = kCacheFormatVersion;
  const std::uint64_t count = ids_.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&dim_), 4);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(ids_.data()), static_cast<std::streamsize>(ids_.size() * 8));
  out.write(reinterpret_cast<const char*>(matrix_.data()), static_cast<std::streamsize>(matrix_.size_bytes()));
  if (!out) throw InputError("write failure on " + path.string());
}

EmbeddingCache EmbeddingCache::open(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) throw InputError("cannot open cache " + path.string());
  struct stat st {};
  if (fstat(fd, &st) != 0) {
    ::close(fd);
    throw InputError("cannot stat cache " + path.string());
  }
  const auto file_size = static_cast<std::uint64_t>(st.st_size);
  if (file_size < kCacheHeaderSize) {
    ::close(fd);
    throw CacheFormatError("truncated file: expected at least " + std::to_string(kCacheHeaderSize) +
                           " header bytes, got " + std::to_string(file_size));
  }
  void* map = mmap(nullptr, file_size, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (map == MAP_FAILED) throw InputError("cannot map cache " + path.string());
  auto storage = std::make_shared<Storage>();
  storage->map = map;
  storage->map_size = file_size;

  const auto* bytes = static_cast<const std::uint8_t*>(map);
  if (std::memcmp(bytes, kMagic, 4) != 0) throw CacheFormatError("bad magic: not an embedding cache");
  std::uint32_t version, dim;
  std::uint64_t count;
  std::memcpy(&version, bytes + 4, 4);
  std::memcpy(&dim, bytes + 8, 4);
  std::memcpy(&count, bytes + 12, 8);
  if (version != kCacheFormatVersion) {
    throw CacheFormatError("version mismatch: file " + std::to_string(version) + ", expected " +
                           std::to_string(kCacheFormatVersion));
  }
  if (dim == 0) throw CacheFormatError("cache header has dim 0");
  // Guard the size arithmetic against absurd headers.
  if (count > file_size / 8 + 1) {
    throw CacheFormatError("truncated file: header declares " + std::to_string(count) + " rows but file has " +
                           std::to_string(file_size) + " bytes");
  }
  const std::uint64_t expected = cache_row_offset(count, dim, count);
  if (file_size < expected) {
    throw CacheFormatError("truncated file: expected " + std::to_string(expected) + " bytes, got " +
                           std::to_string(file_size));
  }
  if (file_size > expected) {
    throw CacheFormatError("oversized file: expected " + std::to_string(expected) + " bytes, got " +
                           std::to_string(file_size));
  }

  EmbeddingCache cache;
  cache.dim_ = dim;
  cache.ids_.resize(count);
  std::memcpy(cache.ids_.data(), bytes + kCacheHeaderSize, count * 8);
  cache.matrix_ = std::span<const float>(reinterpret_cast<const float*>(bytes + cache_row_offset(count, dim, 0)),
                                         count * dim);
  cache.storage_ = std::move(storage);
  return cache;
}

EmbeddingCache load_cache(const std::filesystem::path& path) { return EmbeddingCache::open(path); }

EmbeddingCache build_cache(const EncoderModel& model, const Corpus& corpus, std::size_t word_limit) {
  if (word_limit == 0) throw ConfigError("word_limit must be positive");
  std::vector<std::string> texts;
  std::vector<std::uint64_t> ids;
  texts.reserve(corpus.size());
  ids.reserve(corpus.size());
  for (const auto& doc : corpus.documents()) {
    texts.push_back(truncate_words(doc.text, word_limit));
    ids.push_back(doc.id);
  }
  return EmbeddingCache(static_cast<std::uint32_t>(model.dim()), std::move(ids), encode_batch(model, texts));
}

EmbeddingCache build_string_cache(const EncoderModel& model, std::span<const std::string> strings) {
  std::vector<std::uint64_t> ids(strings.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return EmbeddingCache(static_cast<std::uint32_t>(model.dim()), std::move(ids), encode_batch(model, strings));
}

std::vector<ScanHit> top1_scan(const EmbeddingCache& cache, std::span<const float> queries, std::size_t query_dim) {
  if (query_dim != cache.dim()) {
    throw InputError("dimension mismatch: cache dim " + std::to_string(cache.dim()) + ", query dim " +
                     std::to_string(query_dim));
  }
  if (queries.size() % query_dim != 0) throw InputError("query buffer is not a whole number of rows");
  if (queries.empty()) throw InputError("top1_scan needs at least one query");
  const auto best = kernels::parallel::top1_rows(cache.matrix(), queries, query_dim);
  std::vector<ScanHit> hits(best.size());
  for (std::size_t i = 0; i < best.size(); ++i) hits[i] = {best[i].index, best[i].score};
  return hits;
}

std::size_t verify_cache(const EncoderModel& model, const Corpus& corpus, const EmbeddingCache& cache,
                         std::size_t samples, std::uint64_t seed, std::size_t word_limit) {
  if (cache.dim() != model.dim()) {
    throw InputError("dimension mismatch: cache dim " + std::to_string(cache.dim()) + ", model dim " +
                     std::to_string(model.dim()));
  }
  if (cache.count() != corpus.size()) throw InputError("cache row count does not match corpus size");
  // Distinct rows: the first `samples` entries of a seeded permutation.
  const auto order = seeded_permutation(cache.count(), seed);
  const std::size_t n = std::min<std::size_t>(samples, order.size());
  std::size_t mismatches = 0;
  std::vector<float> row(model.dim());
  for (std::size_t s = 0; s < n; ++s) {
    const auto k = order[s];
    const auto& doc = corpus.documents()[k];
    if (cache.ids()[k] != doc.id) {
      ++mismatches;
      continue;
    }
    model.encode_into(truncate_words(doc.text, word_limit), row);
    if (std::memcmp(row.data(), cache.row(k).data(), row.size() * sizeof(float)) != 0) ++mismatches;
  }
  return mismatches;
}

}  // namespace labelassoc
