#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace labelassoc {

struct EvalReport {
  std::vector<std::string> labels;
  // confusion[actual][predicted]
  std::vector<std::vector<std::uint64_t>> confusion;
  std::vector<double> per_label_accuracy;
  double accuracy = 0.0;
  std::uint64_t n = 0;
};

/// Throws InputError on a length mismatch or a label missing from
/// `label_order`. Labels with no gold examples get per-label accuracy 0.
EvalReport score(std::span<const std::string> predicted, std::span<const std::string> gold,
                 std::span<const std::string> label_order);

nlohmann::json to_json(const EvalReport& report);
/// Confusion matrix with actual labels as rows and a trailing per-label
/// accuracy column in percent.
std::string format_report(const EvalReport& report);

struct TimingInput {
  // Inference rounds i = 0..R, fine-tune rounds i = 1..R.
  std::vector<double> inference_seconds;
  std::vector<double> finetune_seconds;
  std::uint64_t inference_samples = 0;
  std::uint64_t finetune_samples = 0;
};

struct TimingReport {
  std::vector<double> inference_seconds;
  std::vector<double> finetune_seconds;
  double total_inference = 0.0;
  double total_finetune = 0.0;
  std::uint64_t inference_samples = 0;
  std::uint64_t finetune_samples = 0;
  // Per sample per round.
  double avg_inference_per_sample = 0.0;
  // Per 100 samples per round.
  double avg_finetune_per_100 = 0.0;
};

/// Needs exactly one more inference round than fine-tune rounds; throws
/// InputError ("missing round") otherwise.
TimingReport timing_report(const TimingInput& input);

nlohmann::json to_json(const TimingReport& report);
std::string format_timing(const TimingReport& report);

}  // namespace labelassoc
