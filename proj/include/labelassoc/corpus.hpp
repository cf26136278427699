#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace labelassoc {

/// One categorized corpus entry. `categories` keeps input order because pair
/// enumeration depends on it.
struct Document {
  std::uint64_t id = 0;
  std::string url;
  std::string title;
  std::string text;
  std::vector<std::string> categories;
};

/// A positive sentence pair for ranking-loss training.
struct TrainPair {
  std::string anchor;
  std::string positive;

  friend bool operator==(const TrainPair&, const TrainPair&) = default;
};

/// Immutable after construction; holds at least one document.
class Corpus {
 public:
  Corpus(std::vector<Document> documents, std::string source_path);

  const std::vector<Document>& documents() const { return documents_; }
  const std::string& source_path() const { return source_path_; }
  std::size_t size() const { return documents_.size(); }

 private:
  std::vector<Document> documents_;
  std::string source_path_;
};

/// Reads a JSON Lines corpus. Each line must be an object with keys id, url,
/// title, text, categories; unknown keys are ignored with a warning. Reads at
/// most `limit` documents. Throws InputError naming the offending line.
Corpus ingest(const std::filesystem::path& path,
              std::optional<std::size_t> limit = std::nullopt);

/// Serializes one document as a single JSONL record (no trailing newline).
std::string to_jsonl(const Document& doc);

/// For every document with at least two categories, every combination
/// (c_j, c_k) with j < k in index order. Output is concatenated in document
/// order without deduplication.
std::vector<TrainPair> generate_pairs(const Corpus& corpus);

/// C(n, 2) summed over documents with n >= 2.
std::uint64_t expected_pair_count(const Corpus& corpus);

/// "anchor\tpositive\n" per pair.
void write_pairs_tsv(const std::filesystem::path& path, const std::vector<TrainPair>& pairs);
std::vector<TrainPair> read_pairs_tsv(const std::filesystem::path& path);

}  // namespace labelassoc
