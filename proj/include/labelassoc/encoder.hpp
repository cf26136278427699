#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelassoc/tokenizer.hpp"

namespace labelassoc {

/// Mean-pooled token embeddings followed by one affine projection and L2
/// normalization. The production path is `EncoderModel` (float); the double
/// instantiation exists for gradient verification.
template <typename T>
class BasicEncoder {
 public:
  using Scalar = T;

  BasicEncoder() = default;
  BasicEncoder(Vocabulary vocab, std::size_t dim, std::size_t max_seq_len);

  /// Token rows ~ U(-0.5/d, 0.5/d) from `seed`, identity projection, zero bias.
  static BasicEncoder initialize(Vocabulary vocab, std::size_t dim, std::size_t max_seq_len,
                                 std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::size_t max_seq_len() const { return max_seq_len_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const Vocabulary& vocab() const { return vocab_; }

  // Row-major V x d.
  std::span<T> token_embeddings() { return token_embeddings_; }
  std::span<const T> token_embeddings() const { return token_embeddings_; }
  std::span<T> token_row(TokenId id) { return std::span<T>(token_embeddings_).subspan(id * dim_, dim_); }
  std::span<const T> token_row(TokenId id) const {
    return std::span<const T>(token_embeddings_).subspan(id * dim_, dim_);
  }
  // Row-major d x d.
  std::span<T> projection_weight() { return projection_weight_; }
  std::span<const T> projection_weight() const { return projection_weight_; }
  std::span<T> projection_bias() { return projection_bias_; }
  std::span<const T> projection_bias() const { return projection_bias_; }

  std::vector<TokenId> tokenize(std::string_view text) const {
    return vocab_.tokenize(text, max_seq_len_);
  }

  /// Unit-norm sentence embedding. An empty token list (or a zero projected
  /// vector) yields the basis vector e1.
  std::vector<T> encode(std::string_view text) const;
  void encode_into(std::string_view text, std::span<T> out) const;
  void encode_tokens(std::span<const TokenId> tokens, std::span<T> out) const;

  bool all_finite() const;

  template <typename U>
  BasicEncoder<U> cast() const;

  friend bool operator==(const BasicEncoder&, const BasicEncoder&) = default;

 private:
  template <typename>
  friend class BasicEncoder;

  Vocabulary vocab_;
  std::size_t dim_ = 0;
  std::size_t max_seq_len_ = 0;
  std::vector<T> token_embeddings_;
  std::vector<T> projection_weight_;
  std::vector<T> projection_bias_;
};

template <typename T>
template <typename U>
BasicEncoder<U> BasicEncoder<T>::cast() const {
  BasicEncoder<U> out(vocab_, dim_, max_seq_len_);
  std::copy(token_embeddings_.begin(), token_embeddings_.end(), out.token_embeddings_.begin());
  std::copy(projection_weight_.begin(), projection_weight_.end(), out.projection_weight_.begin());
  std::copy(projection_bias_.begin(), projection_bias_.end(), out.projection_bias_.begin());
  return out;
}

using EncoderModel = BasicEncoder<float>;
using EncoderModel64 = BasicEncoder<double>;

inline constexpr std::size_t kDefaultDim = 64;
inline constexpr std::size_t kDefaultMaxSeqLen = 128;
inline constexpr std::size_t kDefaultMaxVocab = 50'000;

/// Encodes `texts` into a row-major texts.size() x d matrix. The parallel
/// version shards texts across OpenMP threads; results are bitwise equal to
/// the serial one.
std::vector<float> encode_batch(const EncoderModel& model, std::span<const std::string> texts);
std::vector<float> encode_batch_serial(const EncoderModel& model, std::span<const std::string> texts);

/// Dot product of two unit vectors, accumulated in double.
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const double> v);

/// Process-wide count of sentence-encoder invocations, for structural
/// cost accounting.
std::uint64_t encode_call_count();
void reset_encode_call_count();

/// Binary model file, little-endian: "WCSM", version, d, max_seq_len,
/// vocab size, length-prefixed vocab strings, token embeddings, projection
/// weight, projection bias.
void save_model(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const EncoderModel& model);
EncoderModel deserialize_model(std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace labelassoc
