#include "labelassoc/classify.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "labelassoc/error.hpp"
#include "labelassoc/kernels.hpp"
#include "labelassoc/selftrain.hpp"

namespace labelassoc {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

void LabelSpec::validate() const {
  if (raw_label.empty()) throw ConfigError("label spec with an empty raw label");
  if (surface_forms.empty()) throw ConfigError("label \"" + raw_label + "\" has no surface forms");
  for (const auto& f : surface_forms) {
    if (f.empty()) throw ConfigError("label \"" + raw_label + "\" has an empty surface form");
  }
  if (description_prompt) {
    if (description_prompt->empty()) throw ConfigError("label \"" + raw_label + "\" has an empty description");
    return;
  }
  if (count_occurrences(prompt_template, "{label}") != 1) {
    throw ConfigError("template for \"" + raw_label + "\" must contain \"{label}\" exactly once: \"" +
                      prompt_template + "\"");
  }
}

std::vector<ExpandedLabel> expand_labels(std::span<const LabelSpec> specs) {
  std::vector<ExpandedLabel> out;
  for (const auto& spec : specs) {
    spec.validate();
    if (spec.description_prompt) {
      const auto& form = spec.surface_forms.front();
      const auto& desc = *spec.description_prompt;
      std::string prompted = desc.find("{label}") == std::string::npos ? desc : apply_prompt(desc, form);
      out.push_back({std::move(prompted), spec.raw_label, form});
      continue;
    }
    for (const auto& form : spec.surface_forms) {
      out.push_back({apply_prompt(spec.prompt_template, form), spec.raw_label, form});
    }
  }
  return out;
}

std::vector<std::string> raw_label_order(std::span<const LabelSpec> specs) {
  std::vector<std::string> order;
  std::unordered_set<std::string> seen;
  for (const auto& s : specs) {
    if (seen.insert(s.raw_label).second) order.push_back(s.raw_label);
  }
  return order;
}

std::vector<Prediction> predict_from_embeddings(std::span<const float> query_embeddings,
                                                std::span<const float> label_embeddings, std::size_t dim,
                                                std::span<const ExpandedLabel> expansions) {
  if (expansions.empty()) throw ConfigError("prediction needs at least one label");
  if (label_embeddings.size() != expansions.size() * dim) throw InputError("label embedding shape mismatch");
  const auto best = kernels::parallel::nearest_rows(label_embeddings, query_embeddings, dim);
  std::vector<Prediction> out(best.size());
  for (std::size_t q = 0; q < best.size(); ++q) {
    const auto& e = expansions[best[q].index];
    out[q] = {q, e.raw_label, e.surface_form, best[q].score, std::nullopt};
  }
  return out;
}

std::vector<Prediction> predict(const EncoderModel& model, std::span<const std::string> queries,
                                std::span<const LabelSpec> specs) {
  if (specs.empty()) throw ConfigError("prediction needs at least one label spec");
  const auto expansions = expand_labels(specs);
  if (queries.empty()) return {};
  std::vector<std::string> prompted;
  prompted.reserve(expansions.size());
  for (const auto& e : expansions) prompted.push_back(e.prompted);
  const auto label_emb = encode_batch(model, prompted);
  const auto query_emb = encode_batch(model, queries);
  return predict_from_embeddings(query_emb, label_emb, model.dim(), expansions);
}

std::vector<Prediction> predict_via_category(const EncoderModel& model, std::span<const std::string> queries,
                                             std::span<const LabelSpec> specs, const EmbeddingCache& category_cache,
                                             std::span<const std::string> categories) {
  if (specs.empty()) throw ConfigError("prediction needs at least one label spec");
  if (category_cache.count() != categories.size()) {
    throw InputError("category cache has " + std::to_string(category_cache.count()) + " rows but " +
                     std::to_string(categories.size()) + " categories were given");
  }
  if (category_cache.dim() != model.dim()) {
    throw InputError("dimension mismatch: category cache dim " + std::to_string(category_cache.dim()) +
                     ", model dim " + std::to_string(model.dim()));
  }
  if (categories.empty()) throw InputError("category list is empty");
  if (queries.empty()) return {};

  const auto query_emb = encode_batch(model, queries);
  const auto nearest = kernels::parallel::nearest_rows(category_cache.matrix(), query_emb, model.dim());
  std::vector<std::string> chosen(nearest.size());
  for (std::size_t q = 0; q < nearest.size(); ++q) chosen[q] = categories[nearest[q].index];

  auto out = predict(model, chosen, specs);
  for (std::size_t q = 0; q < out.size(); ++q) out[q].via_category = chosen[q];
  return out;
}

std::vector<std::string> split_ampersand_label(std::string_view raw) {
  std::vector<std::string> forms;
  std::size_t start = 0;
  while (true) {
    const auto amp = raw.find('&', start);
    auto piece = trim(raw.substr(start, amp == std::string_view::npos ? std::string_view::npos : amp - start));
    if (!piece.empty()) forms.push_back(std::move(piece));
    if (amp == std::string_view::npos) break;
    start = amp + 1;
  }
  return forms;
}

const std::vector<std::pair<std::string, std::string>>& dbpedia_label_table() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"Company", "Company"},
      {"EducationInstitution", "Education institution"},
      {"Artist", "Artist"},
      {"Athlete", "Athlete"},
      {"OfficeHolder", "Office holder"},
      {"MeanOfTransportation", "Mean of transportation"},
      {"Building", "Building"},
      {"NaturalPlace", "Nature place"},
      {"Village", "Village"},
      {"Animal", "Animal"},
      {"Plant", "Plant"},
      {"Album", "Album"},
      {"Film", "Film"},
      {"WrittenWork", "Written work"},
  };
  return table;
}

std::string dbpedia_surface_form(std::string_view raw) {
  for (const auto& [label, form] : dbpedia_label_table()) {
    if (label == raw) return form;
  }
  return std::string(raw);
}

std::vector<std::string> agnews_surface_forms(std::string_view raw) {
  if (raw == "Sci/Tech") return {"Science", "Technology"};
  return {std::string(raw)};
}

std::vector<LabelSpec> read_label_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open labels file " + path.string());
  std::vector<LabelSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      LabelSpec spec;
      spec.raw_label = j.at("label").get<std::string>();
      spec.surface_forms = j.at("surface_forms").get<std::vector<std::string>>();
      spec.prompt_template = j.value("template", std::string("{label}"));
      if (j.contains("description_prompt") && !j.at("description_prompt").is_null()) {
        spec.description_prompt = j.at("description_prompt").get<std::string>();
      }
      spec.validate();
      specs.push_back(std::move(spec));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (specs.empty()) throw ConfigError("labels file " + path.string() + " holds no labels");
  return specs;
}

void write_label_specs(const std::filesystem::path& path, std::span<const LabelSpec> specs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& s : specs) {
    nlohmann::ordered_json j;
    j["label"] = s.raw_label;
    j["surface_forms"] = s.surface_forms;
    j["template"] = s.prompt_template;
    j["description_prompt"] = s.description_prompt ? nlohmann::ordered_json(*s.description_prompt) : nullptr;
    out << j.dump() << '\n';
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

void write_predictions_tsv(const std::filesystem::path& path, std::span<const Prediction> predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  char buf[40];
  for (const auto& p : predictions) {
    std::snprintf(buf, sizeof buf, "%.9g", p.score);
    out << p.query_index << '\t' << p.raw_label << '\t' << p.surface_form << '\t' << buf;
    if (p.via_category) out << '\t' << *p.via_category;
    out << '\n';
  }
}

std::vector<Prediction> read_predictions_tsv(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != 4 && fields.size() != 5) throw InputError(where + "expected 4 or 5 tab-separated fields");
    Prediction p;
    const auto& qi = fields[0];
    if (std::from_chars(qi.data(), qi.data() + qi.size(), p.query_index).ec != std::errc{}) {
      throw InputError(where + "bad query index");
    }
    p.raw_label = fields[1];
    p.surface_form = fields[2];
    try {
      p.score = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw InputError(where + "bad score");
    }
    if (fields.size() == 5) p.via_category = fields[4];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace labelassoc
