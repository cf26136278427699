#include "labelassoc/synthetic.hpp"

#include <array>
#include <random>
#include <set>

#include "labelassoc/error.hpp"
#include "labelassoc/selftrain.hpp"

namespace labelassoc {

namespace {

struct Topic {
  std::string label;
  std::vector<std::string> words;
};

const std::array<Topic, 2>& topics() {
  static const std::array<Topic, 2> t = {{
      {"Sports",
       {"team",    "goal",     "match",   "league",  "coach",   "score",    "player",  "stadium", "race",
        "medal",   "season",   "striker", "referee", "tennis",  "football", "cricket", "rugby",   "olympic",
        "athlete", "champion", "tournament", "sprint", "marathon", "hockey", "baseball", "pitcher", "inning",
        "defender", "keeper",  "penalty", "trophy",  "cup",     "final",    "playoff", "fixture", "derby",
        "transfer", "captain", "umpire",  "wicket"}},
      {"Science",
       {"atom",     "molecule", "physics",  "chemistry", "biology",   "genome",   "cell",     "protein",
        "quantum",  "particle", "laboratory", "experiment", "theory", "hypothesis", "telescope", "galaxy",
        "planet",   "orbit",    "enzyme",   "neuron",    "fossil",    "climate",  "isotope",  "reactor",
        "electron", "photon",   "laser",    "microscope", "bacteria", "virus",    "vaccine",  "genetics",
        "algebra",  "calculus", "equation", "theorem",   "researcher", "journal", "catalyst", "spectrum"}},
  }};
  return t;
}

const std::vector<std::string>& common_words() {
  static const std::vector<std::string> w = {"the",  "and",   "of",    "a",     "in",    "with",  "new",
                                             "year", "report", "people", "after", "before", "week", "first",
                                             "said", "group", "city",  "today", "major", "local"};
  return w;
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string make_text(const Topic& topic, std::mt19937_64& rng) {
  const std::size_t length = 40 + draw(rng, 81);
  std::string text;
  for (std::size_t i = 0; i < length; ++i) {
    const bool topical = draw(rng, 10) < 7;
    const auto& pool = topical ? topic.words : common_words();
    if (!text.empty()) text.push_back(' ');
    text += pool[draw(rng, pool.size())];
  }
  text.push_back('.');
  return text;
}

// 60 distinct two-word phrases over the topic vocabulary; every third one
// carries the label word.
std::vector<std::string> category_pool(const Topic& topic, std::mt19937_64& rng) {
  std::set<std::string> seen;
  std::vector<std::string> pool;
  std::string label_word = topic.label;
  while (pool.size() < 60) {
    const auto& a = topic.words[draw(rng, topic.words.size())];
    const auto& b = topic.words[draw(rng, topic.words.size())];
    if (a == b) continue;
    std::string name = pool.size() % 3 == 0 ? label_word + " " + a : capitalize(a) + " " + b;
    if (seen.insert(name).second) pool.push_back(std::move(name));
  }
  return pool;
}

}  // namespace

SyntheticWorld make_synthetic_world(const SyntheticOptions& options) {
  if (options.documents == 0) throw ConfigError("synthetic corpus needs at least one document");
  std::mt19937_64 rng(options.seed);
  std::array<std::vector<std::string>, 2> pools = {category_pool(topics()[0], rng), category_pool(topics()[1], rng)};

  SyntheticWorld world;
  world.documents.reserve(options.documents);
  for (std::size_t i = 0; i < options.documents; ++i) {
    const std::size_t t = draw(rng, 2);
    const Topic& topic = topics()[t];
    Document doc;
    doc.id = i;
    doc.url = "synthetic://doc/" + std::to_string(i);
    doc.title = topic.label + " document " + std::to_string(i);
    doc.text = make_text(topic, rng);
    const std::size_t n_categories = 2 + draw(rng, 3);
    std::set<std::size_t> picked;
    while (picked.size() < n_categories) {
      const std::size_t c = draw(rng, pools[t].size());
      if (picked.insert(c).second) doc.categories.push_back(pools[t][c]);
    }
    world.documents.push_back(std::move(doc));
  }

  for (const auto& topic : topics()) {
    world.labels.push_back({topic.label, {topic.label}, std::string(kTopicPrompt), std::nullopt});
  }
  for (std::size_t i = 0; i < options.test_queries; ++i) {
    const std::size_t t = draw(rng, 2);
    world.test_queries.push_back(make_text(topics()[t], rng));
    world.test_gold.push_back(topics()[t].label);
  }
  return world;
}

}  // namespace labelassoc
