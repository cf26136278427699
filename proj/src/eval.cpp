#include "labelassoc/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "labelassoc/error.hpp"

namespace labelassoc {

EvalReport score(std::span<const std::string> predicted, std::span<const std::string> gold,
                 std::span<const std::string> label_order) {
  if (predicted.size() != gold.size()) {
    throw InputError("length mismatch: " + std::to_string(predicted.size()) + " predictions, " +
                     std::to_string(gold.size()) + " gold labels");
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < label_order.size(); ++i) {
    if (!index.emplace(label_order[i], i).second) throw InputError("duplicate label \"" + label_order[i] + "\"");
  }
  auto lookup = [&](const std::string& label, const char* role) {
    auto it = index.find(label);
    if (it == index.end()) throw InputError(std::string("unknown ") + role + " label \"" + label + "\"");
    return it->second;
  };

  const std::size_t L = label_order.size();
  EvalReport r;
  r.labels.assign(label_order.begin(), label_order.end());
  r.confusion.assign(L, std::vector<std::uint64_t>(L, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++r.confusion[lookup(gold[i], "gold")][lookup(predicted[i], "predicted")];
  }
  r.n = gold.size();
  std::uint64_t trace = 0;
  r.per_label_accuracy.assign(L, 0.0);
  for (std::size_t k = 0; k < L; ++k) {
    std::uint64_t row = 0;
    for (auto c : r.confusion[k]) row += c;
    trace += r.confusion[k][k];
    if (row > 0) r.per_label_accuracy[k] = static_cast<double>(r.confusion[k][k]) / static_cast<double>(row);
  }
  r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(trace) / static_cast<double>(r.n);
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.n;
  j["accuracy"] = report.accuracy;
  j["labels"] = report.labels;
  j["confusion"] = report.confusion;
  j["per_label_accuracy"] = report.per_label_accuracy;
  return j;
}

std::string format_report(const EvalReport& report) {
  const std::size_t L = report.labels.size();
  std::size_t name_width = 5;
  std::vector<std::string> row_names(L);
  for (std::size_t k = 0; k < L; ++k) {
    row_names[k] = std::to_string(k) + " (" + report.labels[k] + ")";
    name_width = std::max(name_width, row_names[k].size());
  }
  std::size_t cell = 3;
  for (const auto& row : report.confusion) {
    for (auto c : row) cell = std::max(cell, std::to_string(c).size());
  }
  cell += 1;

  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "Label");
  out << buf;
  for (std::size_t k = 0; k < L; ++k) {
    std::snprintf(buf, sizeof buf, "%*zu", static_cast<int>(cell), k);
    out << buf;
  }
  out << "       A.\n";
  for (std::size_t k = 0; k < L; ++k) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), row_names[k].c_str());
    out << buf;
    for (auto c : report.confusion[k]) {
      std::snprintf(buf, sizeof buf, "%*llu", static_cast<int>(cell), static_cast<unsigned long long>(c));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%9.2f\n", 100.0 * report.per_label_accuracy[k]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "accuracy %.4f over %llu samples\n", report.accuracy,
                static_cast<unsigned long long>(report.n));
  out << buf;
  return out.str();
}

TimingReport timing_report(const TimingInput& input) {
  if (input.inference_seconds.empty()) throw InputError("missing round: no inference rounds");
  if (input.inference_seconds.size() != input.finetune_seconds.size() + 1) {
    throw InputError("missing round: " + std::to_string(input.inference_seconds.size()) + " inference rounds for " +
                     std::to_string(input.finetune_seconds.size()) + " fine-tune rounds (need one more inference)");
  }
  if (input.inference_samples == 0) throw InputError("inference sample count must be positive");
  if (!input.finetune_seconds.empty() && input.finetune_samples == 0) {
    throw InputError("fine-tune sample count must be positive");
  }
  TimingReport r;
  r.inference_seconds = input.inference_seconds;
  r.finetune_seconds = input.finetune_seconds;
  r.inference_samples = input.inference_samples;
  r.finetune_samples = input.finetune_samples;
  for (double s : r.inference_seconds) r.total_inference += s;
  for (double s : r.finetune_seconds) r.total_finetune += s;
  r.avg_inference_per_sample = r.total_inference / static_cast<double>(r.inference_seconds.size()) /
                               static_cast<double>(r.inference_samples);
  if (!r.finetune_seconds.empty()) {
    r.avg_finetune_per_100 = r.total_finetune / static_cast<double>(r.finetune_seconds.size()) /
                             static_cast<double>(r.finetune_samples) * 100.0;
  }
  return r;
}

nlohmann::json to_json(const TimingReport& report) {
  nlohmann::ordered_json j;
  j["inference_seconds"] = report.inference_seconds;
  j["finetune_seconds"] = report.finetune_seconds;
  j["total_inference"] = report.total_inference;
  j["total_finetune"] = report.total_finetune;
  j["inference_samples"] = report.inference_samples;
  j["finetune_samples"] = report.finetune_samples;
  j["avg_inference_per_sample"] = report.avg_inference_per_sample;
  j["avg_finetune_per_100"] = report.avg_finetune_per_100;
  return j;
}

std::string format_timing(const TimingReport& r) {
  std::ostringstream out;
  char buf[128];
  auto line = [&](const std::string& name, const char* value) {
    std::snprintf(buf, sizeof buf, "%-34s %14s\n", name.c_str(), value);
    out << buf;
  };
  char v[64];
  for (std::size_t i = 0; i < r.inference_seconds.size(); ++i) {
    std::snprintf(v, sizeof v, "%.3f", r.inference_seconds[i]);
    line("Inference (i=" + std::to_string(i) + ")", v);
  }
  std::snprintf(v, sizeof v, "%.3f", r.total_inference);
  line("Total time (sec.)", v);
  std::snprintf(v, sizeof v, "%llu", static_cast<unsigned long long>(r.inference_samples));
  line("#sample", v);
  std::snprintf(v, sizeof v, "%.4g", r.avg_inference_per_sample);
  line("Avg. time (sec.)", v);
  if (!r.finetune_seconds.empty()) {
    for (std::size_t i = 0; i < r.finetune_seconds.size(); ++i) {
      std::snprintf(v, sizeof v, "%.3f", r.finetune_seconds[i]);
      line("Fine-tune (i=" + std::to_string(i + 1) + ")", v);
    }
    std::snprintf(v, sizeof v, "%.3f", r.total_finetune);
    line("Total time (sec.)", v);
    std::snprintf(v, sizeof v, "%llu", static_cast<unsigned long long>(r.finetune_samples));
    line("#sample", v);
    std::snprintf(v, sizeof v, "%.4g", r.avg_finetune_per_100);
    line("Avg. time (sec./100 samples)", v);
  }
  return out.str();
}

}  // namespace labelassoc
