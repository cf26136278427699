#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelassoc/cache.hpp"
#include "labelassoc/encoder.hpp"

namespace labelassoc {

/// A target label with its post-splitting surface forms and the prompt that
/// wraps each form. A description prompt replaces the template wholesale.
struct LabelSpec {
  std::string raw_label;
  std::vector<std::string> surface_forms;
  std::string prompt_template;
  std::optional<std::string> description_prompt;

  /// Throws ConfigError on empty forms or a template without exactly one
  /// "{label}" (unless a description prompt is set).
  void validate() const;
};

struct ExpandedLabel {
  std::string prompted;
  std::string raw_label;
  std::string surface_form;
};

/// Spec order, then surface-form order. A spec with a description prompt
/// contributes a single entry for its first surface form.
std::vector<ExpandedLabel> expand_labels(std::span<const LabelSpec> specs);

/// Distinct raw labels in first-appearance order.
std::vector<std::string> raw_label_order(std::span<const LabelSpec> specs);

struct Prediction {
  std::size_t query_index = 0;
  std::string raw_label;
  std::string surface_form;
  double score = 0.0;
  std::optional<std::string> via_category;
};

/// Argmax cosine over all expanded labels; ties go to the lowest expansion
/// index. Throws ConfigError on an empty spec list.
std::vector<Prediction> predict(const EncoderModel& model, std::span<const std::string> queries,
                                std::span<const LabelSpec> specs);

/// Same rule over precomputed query and label embeddings (row-major).
std::vector<Prediction> predict_from_embeddings(std::span<const float> query_embeddings,
                                                std::span<const float> label_embeddings,
                                                std::size_t dim,
                                                std::span<const ExpandedLabel> expansions);

/// Query -> nearest cached category -> argmax label for that category
/// string. `category_cache` row k must embed `categories[k]`.
std::vector<Prediction> predict_via_category(const EncoderModel& model,
                                             std::span<const std::string> queries,
                                             std::span<const LabelSpec> specs,
                                             const EmbeddingCache& category_cache,
                                             std::span<const std::string> categories);

// Dataset label preprocessing.

/// Splits on '&' and trims each piece ("Society & Culture" -> Society, Culture).
std::vector<std::string> split_ampersand_label(std::string_view raw);

/// The fixed DBpedia-14 surface-form table (e.g. NaturalPlace -> "Nature
/// place"). Labels not in the table map to themselves.
std::string dbpedia_surface_form(std::string_view raw);
const std::vector<std::pair<std::string, std::string>>& dbpedia_label_table();

/// AG News raw labels expanded to surface forms; Sci/Tech becomes Science
/// and Technology.
std::vector<std::string> agnews_surface_forms(std::string_view raw);

// File formats.

/// JSONL: {"label", "surface_forms", "template", "description_prompt"}.
std::vector<LabelSpec> read_label_specs(const std::filesystem::path& path);
void write_label_specs(const std::filesystem::path& path, std::span<const LabelSpec> specs);

/// One query per line.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

/// TSV rows: query_index, raw_label, surface_form, score, and the matched
/// category in two-stage mode.
void write_predictions_tsv(const std::filesystem::path& path, std::span<const Prediction> predictions);
std::vector<Prediction> read_predictions_tsv(const std::filesystem::path& path);

}  // namespace labelassoc
