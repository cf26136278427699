#pragma once

// Independent oracles and random generators shared by the unit tests and
// the acceptance runner. Nothing here calls the code under test except to
// evaluate a loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "labelassoc/corpus.hpp"
#include "labelassoc/encoder.hpp"
#include "labelassoc/training.hpp"

#ifndef LABELASSOC_DATA_DIR
#define LABELASSOC_DATA_DIR "data"
#endif

namespace testsupport {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(LABELASSOC_DATA_DIR) / rel;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("labelassoc_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

// ---- generators ----

inline std::vector<std::string> numbered_tokens(std::size_t vocab_size) {
  std::vector<std::string> tokens{std::string(labelassoc::Vocabulary::kUnkToken)};
  for (std::size_t i = 1; i < vocab_size; ++i) tokens.push_back("t" + std::to_string(i));
  return tokens;
}

/// Model over tokens t1..t{V-1} with every parameter drawn from a scaled
/// uniform: rows U(-m, m), W = I + U(-m/2, m/2), b U(-m/2, m/2).
template <typename T>
labelassoc::BasicEncoder<T> random_model(std::mt19937_64& rng, std::size_t vocab_size, std::size_t dim,
                                         double magnitude) {
  labelassoc::BasicEncoder<T> m(labelassoc::Vocabulary::from_tokens(numbered_tokens(vocab_size)), dim, 32);
  std::uniform_real_distribution<double> u(-magnitude, magnitude);
  for (auto& x : m.token_embeddings()) x = static_cast<T>(u(rng));
  auto w = m.projection_weight();
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) w[i * dim + j] = static_cast<T>((i == j ? 1.0 : 0.0) + 0.5 * u(rng));
  }
  for (auto& x : m.projection_bias()) x = static_cast<T>(0.5 * u(rng));
  return m;
}

/// 1-4 random in-vocabulary words.
inline std::string random_text(std::mt19937_64& rng, std::size_t vocab_size) {
  std::string s;
  const auto n = 1 + rng() % 4;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += "t" + std::to_string(1 + rng() % (vocab_size - 1));
  }
  return s;
}

inline std::vector<labelassoc::TrainPair> random_batch(std::mt19937_64& rng, std::size_t batch,
                                                       std::size_t vocab_size) {
  std::vector<labelassoc::TrainPair> out;
  for (std::size_t k = 0; k < batch; ++k) out.push_back({random_text(rng, vocab_size), random_text(rng, vocab_size)});
  return out;
}

/// Random corpus; each document gets n_i in [0, max_categories] categories
/// drawn from a small pool so repeats happen.
inline std::vector<labelassoc::Document> random_documents(std::mt19937_64& rng, std::size_t n,
                                                          std::size_t max_categories) {
  std::vector<labelassoc::Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    labelassoc::Document d;
    d.id = i * 3 + 1;
    d.url = "https://example.org/" + std::to_string(d.id);
    d.title = "doc " + std::to_string(i);
    d.text = "text " + std::to_string(rng() % 100) + " body";
    const auto c = rng() % (max_categories + 1);
    for (std::uint64_t k = 0; k < c; ++k) d.categories.push_back("cat" + std::to_string(rng() % 12));
    docs.push_back(std::move(d));
  }
  return docs;
}

inline std::vector<float> random_unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<float> m(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    double norm = 0.0;
    std::vector<double> v(dim);
    for (auto& x : v) {
      x = g(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim; ++j) m[r * dim + j] = static_cast<float>(v[j] / norm);
  }
  return m;
}

// ---- oracles ----

/// Double loop over i < j on each document's category list.
inline std::vector<labelassoc::TrainPair> brute_force_pairs(const std::vector<labelassoc::Document>& docs) {
  std::vector<labelassoc::TrainPair> out;
  for (const auto& d : docs) {
    const auto& c = d.categories;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (i < j) out.push_back({c[i], c[j]});
      }
    }
  }
  return out;
}

inline std::map<std::pair<std::string, std::string>, int> multiset(const std::vector<labelassoc::TrainPair>& pairs) {
  std::map<std::pair<std::string, std::string>, int> m;
  for (const auto& p : pairs) ++m[{p.anchor, p.positive}];
  return m;
}

struct NaiveHit {
  std::size_t query = 0;
  long double score = 0.0L;
};

/// Per row, the best query by an extended-precision dot product.
inline std::vector<NaiveHit> naive_top1(const std::vector<float>& rows, const std::vector<float>& queries,
                                        std::size_t dim) {
  const std::size_t n = rows.size() / dim;
  const std::size_t q = queries.size() / dim;
  std::vector<NaiveHit> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    NaiveHit best{0, -1e300L};
    for (std::size_t k = 0; k < q; ++k) {
      long double s = 0.0L;
      for (std::size_t j = 0; j < dim; ++j) s += static_cast<long double>(rows[r * dim + j]) * queries[k * dim + j];
      if (s > best.score) best = {k, s};
    }
    out[r] = best;
  }
  return out;
}

struct GradientCheck {
  // Worst over tensors of max|analytic - numeric| / max|numeric|.
  double max_relative_error = 0.0;
};

/// Central differences of mnr_loss on the 64-bit model against `analytic`
/// (any scalar type), tensor by tensor.
template <typename A>
GradientCheck finite_difference_check(labelassoc::EncoderModel64 model,
                                      const std::vector<labelassoc::TrainPair>& batch, double scale,
                                      const labelassoc::Gradients<A>& analytic, double step) {
  GradientCheck result;
  auto check = [&](std::span<double> params, const std::vector<A>& grad) {
    double diff = 0.0;
    double size = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double plus = labelassoc::mnr_loss(model, batch, scale);
      params[i] = saved - step;
      const double minus = labelassoc::mnr_loss(model, batch, scale);
      params[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      diff = std::max(diff, std::abs(numeric - static_cast<double>(grad[i])));
      size = std::max(size, std::abs(numeric));
    }
    const double rel = size > 0.0 ? diff / size : diff;
    result.max_relative_error = std::max(result.max_relative_error, rel);
  };
  check(model.token_embeddings(), analytic.token_embeddings);
  check(model.projection_weight(), analytic.projection_weight);
  check(model.projection_bias(), analytic.projection_bias);
  return result;
}

/// counts[gold][pred] by direct tallying, labels indexed by `order`.
inline std::vector<std::vector<std::uint64_t>> count_confusion(const std::vector<std::string>& predicted,
                                                               const std::vector<std::string>& gold,
                                                               const std::vector<std::string>& order) {
  std::vector<std::vector<std::uint64_t>> m(order.size(), std::vector<std::uint64_t>(order.size(), 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::size_t g = 0;
    std::size_t p = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (order[k] == gold[i]) g = k;
      if (order[k] == predicted[i]) p = k;
    }
    ++m[g][p];
  }
  return m;
}

}  // namespace testsupport
