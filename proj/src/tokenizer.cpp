#include "labelassoc/tokenizer.hpp"

#include <algorithm>
#include <map>

#include "labelassoc/error.hpp"

namespace labelassoc {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(lower(c));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string truncate_words(std::string_view text, std::size_t word_limit) {
  std::string out;
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size() && words < word_limit) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(start, i - start));
    ++words;
  }
  return out;
}

Vocabulary::Vocabulary() {
  tokens_.emplace_back(kUnkToken);
  index_.emplace(std::string(kUnkToken), kUnk);
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t max_size) {
  if (max_size < 1) throw ConfigError("vocabulary size must be at least 1");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& text : texts) {
    for (auto& w : split_words(text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  // counts is already lexicographic, so a stable sort keeps that as tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (auto& [word, count] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.index_.emplace(word, static_cast<TokenId>(vocab.tokens_.size()));
    vocab.tokens_.push_back(std::move(word));
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty() || tokens.front() != kUnkToken) {
    throw InputError("vocabulary must start with " + std::string(kUnkToken));
  }
  Vocabulary vocab;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (!vocab.index_.emplace(tokens[i], static_cast<TokenId>(i)).second) {
      throw InputError("duplicate vocabulary token \"" + tokens[i] + "\"");
    }
  }
  vocab.tokens_ = std::move(tokens);
  return vocab;
}

TokenId Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text, std::size_t max_seq_len) const {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) {
    if (ids.size() >= max_seq_len) break;
    ids.push_back(lookup(w));
  }
  return ids;
}

}  // namespace labelassoc
