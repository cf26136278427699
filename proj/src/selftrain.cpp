#include "labelassoc/selftrain.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "labelassoc/error.hpp"
#include "labelassoc/kernels.hpp"

namespace labelassoc {

std::string_view to_string(FinetuneFrom from) { return from == FinetuneFrom::Base ? "base" : "previous"; }

FinetuneFrom parse_finetune_from(std::string_view text) {
  if (text == "base") return FinetuneFrom::Base;
  if (text == "previous") return FinetuneFrom::Previous;
  throw ConfigError("finetune_from must be \"base\" or \"previous\", got \"" + std::string(text) + "\"");
}

void SelfTrainConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(threshold >= -1.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [-1, 1]");
  if (word_limit == 0) throw ConfigError("word_limit must be positive");
  if (use_prompt) {
    const auto first = prompt_template.find("{label}");
    if (first == std::string::npos || prompt_template.find("{label}", first + 1) != std::string::npos) {
      throw ConfigError("prompt template must contain \"{label}\" exactly once");
    }
  }
  train.validate();
}

SelfTrainConfig selftrain_preset(std::string_view name) {
  SelfTrainConfig config;
  if (name == "agnews") {
    config.iterations = 2;
    config.threshold = 0.8;
  } else if (name == "yahoo") {
    config.iterations = 1;
    config.threshold = 0.8;
  } else if (name == "dbpedia") {
    config.iterations = 1;
    config.threshold = 0.7;
    config.prompt_template = std::string(kSentencePrompt);
  } else {
    throw ConfigError("unknown preset \"" + std::string(name) + "\" (agnews, yahoo, dbpedia)");
  }
  return config;
}

std::string apply_prompt(std::string_view prompt_template, std::string_view label) {
  const auto pos = prompt_template.find("{label}");
  if (pos == std::string_view::npos) throw ConfigError("prompt template lacks \"{label}\"");
  std::string out(prompt_template.substr(0, pos));
  out.append(label);
  out.append(prompt_template.substr(pos + 7));
  return out;
}

std::size_t PseudoLabelBatch::pair_count() const {
  std::size_t n = 0;
  for (const auto& a : accepted) n += a.pairs.size();
  return n;
}

std::vector<TrainPair> PseudoLabelBatch::all_pairs() const {
  std::vector<TrainPair> out;
  out.reserve(pair_count());
  for (const auto& a : accepted) out.insert(out.end(), a.pairs.begin(), a.pairs.end());
  return out;
}

double PseudoLabelBatch::mean_similarity() const {
  if (accepted.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& a : accepted) sum += a.similarity;
  return sum / static_cast<double>(accepted.size());
}

namespace {

PseudoLabelBatch select(const Corpus& corpus, std::span<const ScanHit> hits, std::span<const std::string> labels,
                        double threshold) {
  PseudoLabelBatch batch;
  const auto& docs = corpus.documents();
  for (std::size_t k = 0; k < hits.size(); ++k) {
    if (!(hits[k].score > threshold)) continue;
    AcceptedDocument acc;
    acc.document_id = docs[k].id;
    acc.label_index = hits[k].query;
    acc.similarity = hits[k].score;
    const auto& label = labels[hits[k].query];
    for (const auto& c : docs[k].categories) acc.pairs.push_back({c, label});
    batch.accepted.push_back(std::move(acc));
  }
  return batch;
}

void check_labels(std::span<const std::string> labels) {
  if (labels.empty()) throw InputError("pseudo labelling needs at least one label");
}

}  // namespace

PseudoLabelBatch pseudo_label(const EncoderModel& model, const EmbeddingCache& cache, const Corpus& corpus,
                              std::span<const std::string> labels, double threshold) {
  check_labels(labels);
  if (cache.count() != corpus.size()) {
    throw InputError("cache/corpus id mismatch: cache has " + std::to_string(cache.count()) + " rows, corpus " +
                     std::to_string(corpus.size()) + " documents");
  }
  const auto ids = cache.ids();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] != corpus.documents()[k].id) {
      throw InputError("cache/corpus id mismatch at row " + std::to_string(k) + ": cache id " +
                       std::to_string(ids[k]) + ", corpus id " + std::to_string(corpus.documents()[k].id));
    }
  }
  const auto label_embeddings = encode_batch(model, labels);
  const auto hits = top1_scan(cache, label_embeddings, model.dim());
  return select(corpus, hits, labels, threshold);
}

PseudoLabelBatch pseudo_label_reencode(const EncoderModel& model, const Corpus& corpus,
                                       std::span<const std::string> labels, double threshold,
                                       std::size_t word_limit) {
  check_labels(labels);
  const EmbeddingCache fresh = build_cache(model, corpus, word_limit);
  const auto label_embeddings = encode_batch(model, labels);
  const auto hits = top1_scan(fresh, label_embeddings, model.dim());
  return select(corpus, hits, labels, threshold);
}

SelfTrainResult run_selftrain(const EncoderModel& base_model, const EmbeddingCache& cache, const Corpus& corpus,
                              std::span<const std::string> raw_labels, const SelfTrainConfig& config) {
  config.validate();
  check_labels(raw_labels);
  std::vector<std::string> labels;
  labels.reserve(raw_labels.size());
  for (const auto& raw : raw_labels) {
    labels.push_back(config.use_prompt ? apply_prompt(config.prompt_template, raw) : raw);
  }

  using clock = std::chrono::steady_clock;
  SelfTrainResult result{base_model, {}, {}, {}};
  EncoderModel current = base_model;
  for (std::size_t k = 1; k <= config.iterations; ++k) {
    const auto t0 = clock::now();
    const PseudoLabelBatch batch =
        config.reencode ? pseudo_label_reencode(current, corpus, labels, config.threshold, config.word_limit)
                        : pseudo_label(current, cache, corpus, labels, config.threshold);
    const auto t1 = clock::now();

    IterationStats stats;
    stats.iteration = k;
    stats.accepted = batch.accepted.size();
    stats.mean_similarity = batch.mean_similarity();
    stats.seconds_inference = std::chrono::duration<double>(t1 - t0).count();

    std::vector<TrainPair> pairs = batch.all_pairs();
    stats.pairs = pairs.size();
    if (pairs.empty()) {
      warn("self-training iteration " + std::to_string(k) + " accepted no training pairs; model unchanged");
      result.loss_reports.emplace_back();
    } else {
      const EncoderModel& start = config.finetune_from == FinetuneFrom::Base ? base_model : current;
      FitResult fitted = fit(start, pairs, config.train);
      current = std::move(fitted.model);
      result.loss_reports.push_back(std::move(fitted.report));
      stats.seconds_finetune = std::chrono::duration<double>(clock::now() - t1).count();
    }
    result.stats.push_back(stats);
    result.iteration_pairs.push_back(std::move(pairs));
  }
  result.final_model = std::move(current);
  return result;
}

void write_stats_json(const std::filesystem::path& path, std::size_t documents,
                      const std::vector<IterationStats>& stats) {
  nlohmann::ordered_json j;
  j["documents"] = documents;
  j["iterations"] = nlohmann::ordered_json::array();
  for (const auto& s : stats) {
    nlohmann::ordered_json row;
    row["iteration"] = s.iteration;
    row["accepted"] = s.accepted;
    row["pairs"] = s.pairs;
    row["mean_similarity"] = s.mean_similarity;
    row["seconds_inference"] = s.seconds_inference;
    row["seconds_finetune"] = s.seconds_finetune;
    j["iterations"].push_back(row);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace labelassoc
