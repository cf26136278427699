#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace labelassoc {

using TokenId = std::uint32_t;

/// Lowercases ASCII letters and splits on every run of non-alphanumeric
/// ASCII bytes. Bytes >= 0x80 are kept inside words so UTF-8 text survives.
std::vector<std::string> split_words(std::string_view text);

/// Keeps the first `word_limit` whitespace-delimited words, joined by single
/// spaces.
std::string truncate_words(std::string_view text, std::size_t word_limit);

/// Token <-> index map. Index 0 is always the unknown token.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr std::string_view kUnkToken = "[UNK]";

  Vocabulary();

  /// Most frequent `max_size - 1` words of `texts` (ties broken
  /// lexicographically) after UNK.
  static Vocabulary build(std::span<const std::string> texts, std::size_t max_size);

  /// Index order, entry 0 must be the UNK token; rejects duplicates.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  TokenId lookup(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

  /// Word split, lookup, truncation to `max_seq_len` tokens.
  std::vector<TokenId> tokenize(std::string_view text, std::size_t max_seq_len) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace labelassoc
