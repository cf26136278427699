#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "labelassoc/classify.hpp"
#include "labelassoc/corpus.hpp"

namespace labelassoc {

struct SyntheticOptions {
  std::size_t documents = 2000;
  std::size_t test_queries = 400;
  std::uint64_t seed = 7;
};

/// Two topics with disjoint word pools. Each document draws 2-4 categories
/// from its topic's category pool; categories are short phrases over the
/// topic vocabulary and the topic's label word. Test queries are fresh texts
/// with their topic label as gold.
struct SyntheticWorld {
  std::vector<Document> documents;
  std::vector<LabelSpec> labels;
  std::vector<std::string> test_queries;
  std::vector<std::string> test_gold;
};

SyntheticWorld make_synthetic_world(const SyntheticOptions& options);

}  // namespace labelassoc
