#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "labelassoc/corpus.hpp"
#include "labelassoc/encoder.hpp"

namespace labelassoc {

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  double learning_rate = 1e-3;
  double mnr_scale = 20.0;
  std::uint64_t seed = 42;
  bool shuffle = true;

  /// Throws ConfigError on a zero batch size, zero epochs or a non-positive
  /// rate or scale.
  void validate() const;
};

/// Gradients with the same shapes as the model's parameter tensors.
template <typename T>
struct Gradients {
  std::vector<T> token_embeddings;
  std::vector<T> projection_weight;
  std::vector<T> projection_bias;
};

template <typename T>
struct LossAndGradients {
  double loss = 0.0;
  Gradients<T> gradients;
};

/// Multiple negatives ranking loss over a batch of positive pairs:
///   S_kj = scale * cos(anchor_k, positive_j)
///   L = (1/B) * sum_k (logsumexp_j S_kj - S_kk)
/// Every other positive in the batch is a negative for anchor k. The result
/// is never negative and is exactly zero for B = 1. Throws InvariantError if
/// the model holds a non-finite parameter.
template <typename T>
double mnr_loss(const BasicEncoder<T>& model, std::span<const TrainPair> batch, double scale);

/// Loss plus its exact gradient with respect to every parameter. Token rows
/// that do not occur in the batch get a zero gradient.
template <typename T>
LossAndGradients<T> mnr_gradients(const BasicEncoder<T>& model, std::span<const TrainPair> batch,
                                  double scale);

struct LossReport {
  std::vector<double> batch_losses;
  std::vector<std::size_t> batch_sizes;
  double mean_loss = 0.0;
};

struct FitResult {
  EncoderModel model;
  LossReport report;
};

/// Sizes of consecutive batches covering `n` items; the short tail batch is
/// kept.
std::vector<std::size_t> batch_partition(std::size_t n, std::size_t batch_size);

/// Seeded Fisher-Yates permutation of [0, n), identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8), one step per batch, `epochs`
/// passes over a seeded shuffle of `pairs`. Throws InputError on an empty
/// pair list and InvariantError (naming the batch) on a non-finite loss.
FitResult fit(const EncoderModel& start, std::span<const TrainPair> pairs, const TrainConfig& config);

/// Vocabulary over the first `word_limit` words of every text plus every
/// category name.
Vocabulary corpus_vocabulary(const Corpus& corpus, std::size_t word_limit, std::size_t max_size);

/// "batch_index,loss" header plus one row per batch.
void write_loss_csv(const std::filesystem::path& path, const LossReport& report);

}  // namespace labelassoc
