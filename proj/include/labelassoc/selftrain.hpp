#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelassoc/cache.hpp"
#include "labelassoc/corpus.hpp"
#include "labelassoc/encoder.hpp"
#include "labelassoc/training.hpp"

namespace labelassoc {

enum class FinetuneFrom { Base, Previous };

std::string_view to_string(FinetuneFrom from);
FinetuneFrom parse_finetune_from(std::string_view text);

inline constexpr std::string_view kTopicPrompt = "This topic is talk about {label}.";
inline constexpr std::string_view kSentencePrompt = "This sentence is belong to {label}.";

struct SelfTrainConfig {
  std::size_t iterations = 1;
  double threshold = 0.8;
  FinetuneFrom finetune_from = FinetuneFrom::Base;
  std::string prompt_template = std::string(kTopicPrompt);
  // When false labels are compared bare, without the template.
  bool use_prompt = true;
  // Re-encode corpus texts with the current model every iteration instead
  // of reading the cache.
  bool reencode = false;
  std::size_t word_limit = kDefaultWordLimit;
  TrainConfig train;

  void validate() const;
};

/// Named settings: "agnews" (i=2, t=0.8), "yahoo" (i=1, t=0.8) and
/// "dbpedia" (i=1, t=0.7, sentence prompt). Throws ConfigError otherwise.
SelfTrainConfig selftrain_preset(std::string_view name);

/// Substitutes `label` for the single "{label}" in `prompt_template`.
std::string apply_prompt(std::string_view prompt_template, std::string_view label);

struct AcceptedDocument {
  std::uint64_t document_id = 0;
  std::uint32_t label_index = 0;
  double similarity = 0.0;
  std::vector<TrainPair> pairs;
};

struct PseudoLabelBatch {
  std::vector<AcceptedDocument> accepted;

  std::size_t pair_count() const;
  std::vector<TrainPair> all_pairs() const;
  double mean_similarity() const;
};

/// Scores cached document embeddings against the encoded `labels`, keeps
/// documents whose best similarity is strictly above `threshold` and pairs
/// each of their categories with the winning label. Encodes only the labels.
/// Throws InputError when the cache ids do not follow the corpus.
PseudoLabelBatch pseudo_label(const EncoderModel& model, const EmbeddingCache& cache,
                              const Corpus& corpus, std::span<const std::string> labels,
                              double threshold);

/// Same selection, but every document text is re-encoded with `model`
/// (N + L encoder calls).
PseudoLabelBatch pseudo_label_reencode(const EncoderModel& model, const Corpus& corpus,
                                       std::span<const std::string> labels, double threshold,
                                       std::size_t word_limit = kDefaultWordLimit);

struct IterationStats {
  std::size_t iteration = 0;
  std::size_t accepted = 0;
  std::size_t pairs = 0;
  double mean_similarity = 0.0;
  double seconds_inference = 0.0;
  double seconds_finetune = 0.0;
};

struct SelfTrainResult {
  EncoderModel final_model;
  std::vector<IterationStats> stats;
  // Pair set used for each iteration's fit (empty when nothing passed).
  std::vector<std::vector<TrainPair>> iteration_pairs;
  std::vector<LossReport> loss_reports;
};

/// Iteration k labels with M_{k-1} (M_0 = base) and fits
/// M_k = fit(start, pairs_k) where start is the base model or M_{k-1}.
/// An iteration that accepts nothing passes M_{k-1} through unchanged.
SelfTrainResult run_selftrain(const EncoderModel& base_model, const EmbeddingCache& cache,
                              const Corpus& corpus, std::span<const std::string> raw_labels,
                              const SelfTrainConfig& config);

/// {"documents": N, "iterations": [{iteration, accepted, pairs,
/// mean_similarity, seconds_inference, seconds_finetune}, ...]}
void write_stats_json(const std::filesystem::path& path, std::size_t documents,
                      const std::vector<IterationStats>& stats);

}  // namespace labelassoc
