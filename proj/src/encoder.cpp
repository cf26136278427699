#include "labelassoc/encoder.hpp"

#include <atomic>
#include <cmath>
#include <random>

#include "labelassoc/error.hpp"

namespace labelassoc {

namespace {

std::atomic<std::uint64_t> g_encode_calls{0};

// 53-bit uniform in [0, 1) from a raw 64-bit draw.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::uint64_t encode_call_count() { return g_encode_calls.load(std::memory_order_relaxed); }
void reset_encode_call_count() { g_encode_calls.store(0, std::memory_order_relaxed); }

template <typename T>
BasicEncoder<T>::BasicEncoder(Vocabulary vocab, std::size_t dim, std::size_t max_seq_len)
    : vocab_(std::move(vocab)),
      dim_(dim),
      max_seq_len_(max_seq_len),
      token_embeddings_(vocab_.size() * dim, T{0}),
      projection_weight_(dim * dim, T{0}),
      projection_bias_(dim, T{0}) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (max_seq_len == 0) throw ConfigError("max_seq_len must be positive");
}

template <typename T>
BasicEncoder<T> BasicEncoder<T>::initialize(Vocabulary vocab, std::size_t dim, std::size_t max_seq_len,
                                            std::uint64_t seed) {
  BasicEncoder model(std::move(vocab), dim, max_seq_len);
  std::mt19937_64 rng(seed);
  const double half_width = 0.5 / static_cast<double>(dim);
  for (auto& x : model.token_embeddings_) x = static_cast<T>((2.0 * unit_uniform(rng) - 1.0) * half_width);
  for (std::size_t i = 0; i < dim; ++i) model.projection_weight_[i * dim + i] = T{1};
  return model;
}

template <typename T>
std::vector<T> BasicEncoder<T>::encode(std::string_view text) const {
  std::vector<T> out(dim_);
  encode_into(text, out);
  return out;
}

template <typename T>
void BasicEncoder<T>::encode_into(std::string_view text, std::span<T> out) const {
  g_encode_calls.fetch_add(1, std::memory_order_relaxed);
  const auto tokens = tokenize(text);
  encode_tokens(tokens, out);
}

template <typename T>
void BasicEncoder<T>::encode_tokens(std::span<const TokenId> tokens, std::span<T> out) const {
  const std::size_t d = dim_;
  std::fill(out.begin(), out.end(), T{0});
  if (tokens.empty()) {
    out[0] = T{1};
    return;
  }
  std::vector<double> pooled(d, 0.0);
  for (TokenId t : tokens) {
    const T* row = token_embeddings_.data() + static_cast<std::size_t>(t) * d;
    for (std::size_t i = 0; i < d; ++i) pooled[i] += static_cast<double>(row[i]);
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : pooled) x *= inv_n;

  std::vector<double> projected(d);
  double norm2 = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    const T* w = projection_weight_.data() + r * d;
    double acc = static_cast<double>(projection_bias_[r]);
    for (std::size_t c = 0; c < d; ++c) acc += static_cast<double>(w[c]) * pooled[c];
    projected[r] = acc;
    norm2 += acc * acc;
  }
  if (norm2 == 0.0) {
    out[0] = T{1};
    return;
  }
  const double inv_norm = 1.0 / std::sqrt(norm2);
  for (std::size_t r = 0; r < d; ++r) out[r] = static_cast<T>(projected[r] * inv_norm);
}

template <typename T>
bool BasicEncoder<T>::all_finite() const {
  auto finite = [](const std::vector<T>& v) {
    for (T x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  return finite(token_embeddings_) && finite(projection_weight_) && finite(projection_bias_);
}

template class BasicEncoder<float>;
template class BasicEncoder<double>;

std::vector<float> encode_batch_serial(const EncoderModel& model, std::span<const std::string> texts) {
  const std::size_t d = model.dim();
  std::vector<float> out(texts.size() * d);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    model.encode_into(texts[i], std::span<float>(out).subspan(i * d, d));
  }
  return out;
}

std::vector<float> encode_batch(const EncoderModel& model, std::span<const std::string> texts) {
  const std::size_t d = model.dim();
  std::vector<float> out(texts.size() * d);
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    model.encode_into(texts[i], std::span<float>(out).subspan(static_cast<std::size_t>(i) * d, d));
  }
  return out;
}

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw InputError("cosine: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  return acc;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InputError("cosine: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

}  // namespace labelassoc
