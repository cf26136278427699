#include "labelassoc/corpus.hpp"

#include <fstream>
#include <iostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "labelassoc/error.hpp"

namespace labelassoc {

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

Corpus::Corpus(std::vector<Document> documents, std::string source_path)
    : documents_(std::move(documents)), source_path_(std::move(source_path)) {
  if (documents_.empty()) throw InputError("empty corpus");
  std::unordered_set<std::uint64_t> seen;
  for (const auto& doc : documents_) {
    if (!seen.insert(doc.id).second) throw InputError("duplicate id " + std::to_string(doc.id));
  }
}

namespace {

const std::unordered_set<std::string>& known_keys() {
  static const std::unordered_set<std::string> keys{"id", "url", "title", "text", "categories"};
  return keys;
}

std::string line_context(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no) + ": ";
}

Document parse_record(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where + "record is not a JSON object");
  for (const auto& key : {"id", "url", "title", "text", "categories"}) {
    if (!j.contains(key)) throw InputError(where + "missing field \"" + key + "\"");
  }
  Document doc;
  const auto& id = j.at("id");
  if (!id.is_number_unsigned() && !(id.is_number_integer() && id.get<std::int64_t>() >= 0)) {
    throw InputError(where + "id must be a non-negative integer");
  }
  doc.id = id.get<std::uint64_t>();
  for (const auto& key : {"url", "title", "text"}) {
    if (!j.at(key).is_string()) throw InputError(where + "\"" + key + "\" must be a string");
  }
  doc.url = j.at("url").get<std::string>();
  doc.title = j.at("title").get<std::string>();
  doc.text = j.at("text").get<std::string>();

  const auto& cats = j.at("categories");
  if (!cats.is_array()) throw InputError(where + "categories not a string array");
  std::unordered_set<std::string> seen;
  for (const auto& c : cats) {
    if (!c.is_string()) throw InputError(where + "categories not a string array");
    auto name = c.get<std::string>();
    if (name.empty()) throw InputError(where + "empty category string");
    if (!seen.insert(name).second) throw InputError(where + "duplicate category \"" + name + "\"");
    doc.categories.push_back(std::move(name));
  }
  return doc;
}

}  // namespace

Corpus ingest(const std::filesystem::path& path, std::optional<std::size_t> limit) {
  if (limit && *limit == 0) throw ConfigError("corpus limit must be positive");
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus " + path.string());

  std::vector<Document> docs;
  std::unordered_map<std::uint64_t, std::size_t> first_line;
  std::unordered_set<std::string> warned;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (limit && docs.size() >= *limit) break;
    const auto where = line_context(path, line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where + "malformed JSON: " + e.what());
    }
    Document doc = parse_record(j, where);
    for (const auto& item : j.items()) {
      if (!known_keys().count(item.key()) && warned.insert(item.key()).second) {
        warn(where + "ignoring unknown key \"" + item.key() + "\"");
      }
    }
    auto [it, inserted] = first_line.emplace(doc.id, line_no);
    if (!inserted) {
      throw InputError(where + "duplicate id " + std::to_string(doc.id) + " at line " +
                       std::to_string(line_no) + " (first seen at line " +
                       std::to_string(it->second) + ")");
    }
    docs.push_back(std::move(doc));
  }
  if (in.bad()) throw InputError("read failure on " + path.string());
  if (docs.empty()) throw InputError("empty corpus: " + path.string());
  return Corpus(std::move(docs), path.string());
}

std::string to_jsonl(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["url"] = doc.url;
  j["title"] = doc.title;
  j["text"] = doc.text;
  j["categories"] = doc.categories;
  return j.dump();
}

std::vector<TrainPair> generate_pairs(const Corpus& corpus) {
  std::vector<TrainPair> pairs;
  pairs.reserve(expected_pair_count(corpus));
  for (const auto& doc : corpus.documents()) {
    const auto& c = doc.categories;
    for (std::size_t j = 0; j + 1 < c.size(); ++j) {
      for (std::size_t k = j + 1; k < c.size(); ++k) pairs.push_back({c[j], c[k]});
    }
  }
  return pairs;
}

std::uint64_t expected_pair_count(const Corpus& corpus) {
  std::uint64_t total = 0;
  for (const auto& doc : corpus.documents()) {
    const std::uint64_t n = doc.categories.size();
    if (n >= 2) total += n * (n - 1) / 2;
  }
  return total;
}

void write_pairs_tsv(const std::filesystem::path& path, const std::vector<TrainPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : pairs) {
    if (p.anchor.find_first_of("\t\n") != std::string::npos ||
        p.positive.find_first_of("\t\n") != std::string::npos) {
      throw InputError("pair member contains a tab or newline: " + p.anchor);
    }
    out << p.anchor << '\t' << p.positive << '\n';
  }
  if (!out) throw InputError("write failure on " + path.string());
}

std::vector<TrainPair> read_pairs_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<TrainPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected anchor<TAB>positive");
    }
    pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return pairs;
}

}  // namespace labelassoc
