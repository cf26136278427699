#include <doctest.h>

#include "labelassoc/config.hpp"
#include "labelassoc/error.hpp"

using namespace labelassoc;

TEST_CASE("sections, comments and quoted values") {
  const auto c = KeyValueConfig::parse(
      "seed = 7\n"
      "# comment\n"
      "[train]\n"
      "batch_size = 64   # trailing\n"
      "learning_rate = 2e-3\n"
      "shuffle = false\n"
      "[paths]\n"
      "corpus = \"data/my corpus.jsonl\"\n");
  CHECK(c.get_uint("seed") == 7u);
  CHECK(c.get_uint("train.batch_size") == 64u);
  CHECK(c.get_double("train.learning_rate") == 2e-3);
  CHECK(c.get_bool("train.shuffle") == false);
  CHECK(c.get("paths.corpus") == "data/my corpus.jsonl");
  CHECK_FALSE(c.get("missing").has_value());
}

TEST_CASE("malformed lines and values name the line") {
  try {
    KeyValueConfig::parse("a = 1\nnot a pair\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(KeyValueConfig::parse("[open\n"), ConfigError);
  const auto c = KeyValueConfig::parse("n = abc\nb = maybe\n");
  CHECK_THROWS_AS(c.get_uint("n"), ConfigError);
  CHECK_THROWS_AS(c.get_double("n"), ConfigError);
  CHECK_THROWS_AS(c.get_bool("b"), ConfigError);
}

TEST_CASE("dump is canonical") {
  const auto a = KeyValueConfig::parse("b = 2\na = 1\n");
  const auto b = KeyValueConfig::parse("a = 1\n\nb = 2 # x\n");
  CHECK(a.dump() == b.dump());
}
