// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <set>

#include <json.hpp>

#include "cli/app.hpp"
#include "dbpedia_confusion.hpp"
#include "labelassoc/cache.hpp"
#include "labelassoc/classify.hpp"
#include "labelassoc/eval.hpp"
#include "labelassoc/hashing.hpp"
#include "labelassoc/selftrain.hpp"
#include "labelassoc/synthetic.hpp"
#include "labelassoc/training.hpp"
#include "support.hpp"

using namespace labelassoc;
using testsupport::TempDir;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

// Runs a CLI command with its stdout discarded so only verdict lines remain.
int run_quiet(const std::vector<std::string>& args) {
  std::ostringstream sink;
  auto* saved = std::cout.rdbuf(sink.rdbuf());
  int rc = 0;
  try {
    rc = cli::run(args);
  } catch (...) {
    std::cout.rdbuf(saved);
    throw;
  }
  std::cout.rdbuf(saved);
  return rc;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// 1
Outcome gradient_correctness() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240101);
  double worst = 0.0;
  const int instances = 24;
  for (int i = 0; i < instances; ++i) {
    const std::size_t dim = 2 + rng() % 15;
    const std::size_t vocab = 5 + rng() % 46;
    const std::size_t batch = 2 + rng() % 7;
    const auto model = testsupport::random_model<double>(rng, vocab, dim, 10.0);
    const auto pairs = testsupport::random_batch(rng, batch, vocab);
    const auto g = mnr_gradients(model, pairs, 1.0);
    worst = std::max(worst, testsupport::finite_difference_check(model, pairs, 1.0, g.gradients, 1e-3).max_relative_error);
  }
  const double elapsed = seconds_since(t0);
  o.require(worst < 1e-6, "max relative error " + fmt("%.3g", worst));
  o.require(elapsed < 30.0, "took " + fmt("%.1f", elapsed) + " s");
  if (o.pass) o.detail = std::to_string(instances) + " instances, max relative error " + fmt("%.3g", worst) + ", " + fmt("%.2f", elapsed) + " s";
  return o;
}

EncoderModel64 basis_model(std::size_t n) {
  EncoderModel64 m(Vocabulary::from_tokens(testsupport::numbered_tokens(n + 1)), n, 8);
  auto w = m.projection_weight();
  for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) m.token_row(static_cast<TokenId>(i))[i - 1] = 1.0;
  return m;
}

// 2
Outcome loss_oracles() {
  Outcome o;
  std::mt19937_64 rng(2);
  const auto random = testsupport::random_model<double>(rng, 20, 8, 1.0);
  o.require(mnr_loss(random, std::vector<TrainPair>{{"t1 t2", "t5"}}, 20.0) == 0.0, "B=1 loss not exactly 0");
  const auto basis = basis_model(4);
  for (std::size_t b : {2u, 4u, 8u}) {
    const double l = mnr_loss(basis, std::vector<TrainPair>(b, TrainPair{"t2", "t2"}), 20.0);
    o.require(std::abs(l - std::log(double(b))) < 1e-6, "uniform batch B=" + std::to_string(b) + " loss " + fmt("%.12g", l));
  }
  const double want = std::log1p(std::exp(-20.0));
  const double got = mnr_loss(basis_model(2), std::vector<TrainPair>{{"t1", "t1"}, {"t2", "t2"}}, 20.0);
  const double rel = std::abs(got - want) / want;
  o.require(rel <= 1e-12, "orthogonal batch relative error " + fmt("%.3g", rel));
  if (o.pass) o.detail = "orthogonal relative error " + fmt("%.3g", rel);
  return o;
}

// 3
Outcome pair_generation() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::size_t total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto docs = testsupport::random_documents(rng, 1 + rng() % 40, 8);
    const Corpus corpus(docs, "<random>");
    const auto pairs = generate_pairs(corpus);
    std::uint64_t want = 0;
    for (const auto& d : docs) {
      const std::uint64_t n = d.categories.size();
      if (n >= 2) want += n * (n - 1) / 2;
    }
    o.require(pairs.size() == want, "corpus " + std::to_string(trial) + ": count mismatch");
    o.require(testsupport::multiset(pairs) == testsupport::multiset(testsupport::brute_force_pairs(docs)),
              "corpus " + std::to_string(trial) + ": multiset mismatch");
    total += pairs.size();
  }
  if (o.pass) o.detail = "200 corpora, " + std::to_string(total) + " pairs";
  return o;
}

std::string cache_error(const std::filesystem::path& path) {
  try {
    load_cache(path);
  } catch (const CacheFormatError& e) {
    return e.what();
  }
  return "";
}

// 4
Outcome cache_fidelity() {
  Outcome o;
  TempDir dir("acceptance_cache");
  std::mt19937_64 rng(4);
  const std::size_t n = 10000;
  const std::uint32_t dim = 32;
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = rng();
  const auto rows = testsupport::random_unit_rows(rng, n, dim);
  const EmbeddingCache cache(dim, ids, rows);
  cache.save(dir / "c.bin");
  const auto back = load_cache(dir / "c.bin");
  o.require(back.count() == n && back.dim() == dim, "header mismatch");
  o.require(std::equal(back.ids().begin(), back.ids().end(), ids.begin(), ids.end()), "ids differ");
  o.require(std::memcmp(back.matrix().data(), rows.data(), rows.size() * sizeof(float)) == 0, "matrix differs");

  const auto queries = testsupport::random_unit_rows(rng, 16, dim);
  const auto hits = top1_scan(back, queries, dim);
  const auto oracle = testsupport::naive_top1(rows, queries, dim);
  std::size_t wrong = 0;
  double max_diff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wrong += hits[i].query != oracle[i].query;
    max_diff = std::max(max_diff, std::abs(hits[i].score - static_cast<double>(oracle[i].score)));
  }
  o.require(wrong == 0, std::to_string(wrong) + " rows disagree with the naive scan");
  o.require(max_diff < 1e-9, "score difference " + fmt("%.3g", max_diff));

  const auto good = testsupport::read_file(dir / "c.bin");
  auto bad = good;
  bad[1] = '?';
  testsupport::write_file(dir / "magic.bin", bad);
  o.require(cache_error(dir / "magic.bin").find("bad magic") != std::string::npos, "bad magic not reported");
  bad = good;
  bad[4] = 7;
  testsupport::write_file(dir / "version.bin", bad);
  o.require(cache_error(dir / "version.bin").find("version mismatch") != std::string::npos, "version not reported");
  testsupport::write_file(dir / "short.bin", good.substr(0, good.size() - 100));
  const std::string want = "truncated file: expected " + std::to_string(good.size()) + " bytes, got " +
                           std::to_string(good.size() - 100);
  o.require(cache_error(dir / "short.bin").find(want) != std::string::npos, "truncation not reported");
  if (o.pass) o.detail = "N=10000 d=32 16 queries, max score difference " + fmt("%.3g", max_diff);
  return o;
}

struct SyntheticSetup {
  Corpus corpus;
  EncoderModel base;
  EmbeddingCache cache;
  std::vector<std::string> labels;
};

SyntheticSetup synthetic_setup(std::size_t documents) {
  SyntheticOptions opts;
  opts.documents = documents;
  opts.test_queries = 10;
  const auto world = make_synthetic_world(opts);
  Corpus corpus(world.documents, "<synthetic>");
  const auto start =
      EncoderModel::initialize(corpus_vocabulary(corpus, kDefaultWordLimit, kDefaultMaxVocab), 32, kDefaultMaxSeqLen, 1);
  auto base = fit(start, generate_pairs(corpus), TrainConfig{}).model;
  auto cache = build_cache(base, corpus);
  std::vector<std::string> labels;
  for (const auto& s : world.labels) labels.insert(labels.end(), s.surface_forms.begin(), s.surface_forms.end());
  return SyntheticSetup{std::move(corpus), std::move(base), std::move(cache), std::move(labels)};
}

// 5
Outcome speedup_mechanism() {
  Outcome o;
  auto s = synthetic_setup(1000);
  const std::size_t n = s.corpus.size();
  const std::size_t l = s.labels.size();

  reset_encode_call_count();
  auto t0 = Clock::now();
  pseudo_label(s.base, s.cache, s.corpus, s.labels, 0.5);
  const double warm_s = seconds_since(t0);
  const auto warm = encode_call_count();

  reset_encode_call_count();
  t0 = Clock::now();
  pseudo_label_reencode(s.base, s.corpus, s.labels, 0.5);
  const double cold_s = seconds_since(t0);
  const auto cold = encode_call_count();

  SelfTrainConfig cfg;
  cfg.threshold = 1.0;
  reset_encode_call_count();
  run_selftrain(s.base, s.cache, s.corpus, s.labels, cfg);
  const auto round = encode_call_count();

  o.require(warm == l, "warm round made " + std::to_string(warm) + " calls, expected " + std::to_string(l));
  o.require(cold == n + l, "cold round made " + std::to_string(cold) + " calls, expected " + std::to_string(n + l));
  o.require(round == l, "self-training round made " + std::to_string(round) + " calls");
  if (o.pass) {
    o.detail = "warm " + std::to_string(warm) + " calls (" + fmt("%.4f", warm_s) + " s), cold " + std::to_string(cold) +
               " calls (" + fmt("%.4f", cold_s) + " s)";
  }
  return o;
}

// 6
Outcome selftrain_semantics() {
  Outcome o;
  auto s = synthetic_setup(400);
  SelfTrainConfig cfg;

  cfg.threshold = 1.0;
  const auto none = run_selftrain(s.base, s.cache, s.corpus, s.labels, cfg);
  o.require(none.final_model == s.base, "threshold 1.0 changed the model");

  std::size_t total = 0;
  for (const auto& d : s.corpus.documents()) total += d.categories.size();
  const auto all = pseudo_label(s.base, s.cache, s.corpus, s.labels, -1.0);
  o.require(all.pair_count() == total, "threshold -1.0 gave " + std::to_string(all.pair_count()) + " pairs, expected " +
                                           std::to_string(total));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    double lo = u(rng);
    double hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto a = pseudo_label(s.base, s.cache, s.corpus, s.labels, lo);
    const auto b = pseudo_label(s.base, s.cache, s.corpus, s.labels, hi);
    std::set<std::uint64_t> ids;
    for (const auto& d : a.accepted) ids.insert(d.document_id);
    bool subset = true;
    for (const auto& d : b.accepted) subset = subset && ids.count(d.document_id);
    o.require(subset, "accepted set not monotone at thresholds " + fmt("%.3f", lo) + " / " + fmt("%.3f", hi));
  }

  // Iteration 2 compares M_1 labels with base-model text embeddings, so its
  // similarities sit well below iteration 1's; -0.5 keeps both fits non-empty.
  cfg.threshold = -0.5;
  cfg.iterations = 2;
  cfg.finetune_from = FinetuneFrom::Base;
  const auto two = run_selftrain(s.base, s.cache, s.corpus, s.labels, cfg);
  o.require(two.iteration_pairs.size() == 2 && !two.iteration_pairs[1].empty(), "iteration 2 accepted nothing");
  if (o.pass) {
    const auto refit = fit(s.base, two.iteration_pairs[1], cfg.train).model;
    o.require(refit == two.final_model, "re-fit from stored pairs differs from M_2");
  }
  if (o.pass) o.detail = "sum n_i = " + std::to_string(total) + ", re-fit bit-exact";
  return o;
}

// 7
Outcome synthetic_benchmark() {
  Outcome o;
  TempDir dir("acceptance_demo");
  const auto t0 = Clock::now();
  const int rc = run_quiet({"demo-synthetic", "--seed", "7", "--out-dir", (dir / "demo").string()});
  const double elapsed = seconds_since(t0);
  o.require(rc == 0, "demo-synthetic exited with " + std::to_string(rc));
  if (!o.pass) return o;
  const auto summary = json::parse(testsupport::read_file(dir / "demo" / "summary.json"));
  const double first = summary["first_batch_loss"];
  const double mean = summary["mean_epoch_loss"];
  const double acc0 = summary["accuracy_iter0"];
  const double acc1 = summary["accuracy_final"];
  o.require(summary["documents"] == 2000, "corpus size");
  o.require(mean < first, "mean epoch loss " + fmt("%.4f", mean) + " not below first batch " + fmt("%.4f", first));
  o.require(acc0 >= 0.90, "iteration-0 accuracy " + fmt("%.4f", acc0));
  o.require(acc1 >= acc0, "iteration-1 accuracy " + fmt("%.4f", acc1) + " below iteration 0");
  o.require(elapsed < 300.0, "took " + fmt("%.1f", elapsed) + " s");
  if (o.pass) {
    o.detail = "loss " + fmt("%.3f", first) + " -> " + fmt("%.3f", mean) + ", accuracy " + fmt("%.4f", acc0) + " -> " +
               fmt("%.4f", acc1) + ", " + fmt("%.1f", elapsed) + " s";
  }
  return o;
}

// 8
Outcome label_fixtures() {
  Outcome o;
  o.require(split_ampersand_label("Society & Culture") == std::vector<std::string>{"Society", "Culture"},
            "ampersand split");
  o.require(split_ampersand_label("Science & Mathematics") == std::vector<std::string>{"Science", "Mathematics"},
            "ampersand split");
  o.require(agnews_surface_forms("Sci/Tech") == std::vector<std::string>{"Science", "Technology"}, "Sci/Tech");
  const std::vector<std::pair<std::string, std::string>> table{
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
  o.require(dbpedia_label_table() == table, "DBpedia table");
  for (const auto& [raw, form] : table) o.require(dbpedia_surface_form(raw) == form, "surface form of " + raw);

  std::size_t expansions = 0;
  for (const char* file : {"agnews.jsonl", "yahoo.jsonl", "dbpedia.jsonl", "agnews_description.jsonl",
                           "yahoo_description.jsonl", "dbpedia_description.jsonl"}) {
    try {
      expansions += expand_labels(read_label_specs(testsupport::data_path(std::string("labels/") + file))).size();
    } catch (const std::exception& e) {
      o.require(false, std::string(file) + ": " + e.what());
    }
  }
  if (o.pass) {
    const auto ag = expand_labels(read_label_specs(testsupport::data_path("labels/agnews.jsonl")));
    o.require(ag.size() == 5 && ag[0].prompted == "This topic is talk about World.", "AG News prompts");
    const auto db = expand_labels(read_label_specs(testsupport::data_path("labels/dbpedia.jsonl")));
    o.require(db.size() == 14 && db[7].prompted == "This sentence is belong to Nature place.", "DBpedia prompts");
  }
  if (o.pass) o.detail = "6 fixture files, " + std::to_string(expansions) + " prompted strings";
  return o;
}

bool has_wall_clock(const json& j) {
  if (j.contains("iterations")) {
    for (const auto& row : j["iterations"]) {
      if (row.contains("seconds_inference")) return true;
    }
  }
  return false;
}

json drop_wall_clock(json j) {
  j.erase("duration_seconds");
  j.erase("seconds_inference");
  if (j.contains("iterations")) {
    for (auto& row : j["iterations"]) {
      row.erase("seconds_inference");
      row.erase("seconds_finetune");
    }
  }
  return j;
}

// Artifact bytes with wall-clock measurements removed. Run records also
// lose the file hash of any referenced artifact that itself carries timings.
std::string stable_bytes(const std::filesystem::path& path) {
  const auto bytes = testsupport::read_file(path);
  const auto name = path.filename().string();
  const bool is_json = name.size() > 5 && name.substr(name.size() - 5) == ".json";
  if (!is_json) return bytes;
  auto j = drop_wall_clock(json::parse(bytes));
  for (const char* side : {"inputs", "outputs"}) {
    if (!j.contains(side)) continue;
    for (auto& [file, hash] : j[side].items()) {
      const std::filesystem::path ref(file);
      if (ref.extension() == ".json" && std::filesystem::exists(ref) &&
          has_wall_clock(json::parse(testsupport::read_file(ref)))) {
        hash = "timed";
      }
    }
  }
  return j.dump();
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      out[std::filesystem::relative(entry.path(), dir).string()] = sha256_hex(stable_bytes(entry.path()));
    }
  }
  return out;
}

// 9
Outcome determinism() {
  Outcome o;
  TempDir dir("acceptance_det");
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  const std::vector<std::vector<std::string>> stages{
      {"demo-synthetic", "--seed", "7", "--out-dir", p("demo")},
      {"ingest", "--corpus", p("demo/corpus.jsonl"), "--out", p("work/corpus.jsonl")},
      {"pairs", "--corpus", p("work/corpus.jsonl"), "--out", p("work/pairs.tsv")},
      {"pretrain", "--corpus", p("work/corpus.jsonl"), "--pairs", p("work/pairs.tsv"), "--model-out",
       p("work/base.bin"), "--loss-out", p("work/loss.csv"), "--dim", "32"},
      {"cache", "build", "--model", p("work/base.bin"), "--corpus", p("work/corpus.jsonl"), "--out",
       p("work/cache.bin")},
      {"cache", "build", "--model", p("work/base.bin"), "--corpus", p("work/corpus.jsonl"), "--out",
       p("work/categories.bin"), "--categories", p("work/categories.txt")},
      {"cache", "verify", "--model", p("work/base.bin"), "--corpus", p("work/corpus.jsonl"), "--cache",
       p("work/cache.bin"), "--samples", "64"},
      {"selftrain", "--model", p("work/base.bin"), "--cache", p("work/cache.bin"), "--corpus",
       p("work/corpus.jsonl"), "--labels", p("demo/labels.jsonl"), "--model-out", p("work/final.bin"),
       "--stats-out", p("work/stats.json"), "--pairs-dir", p("work/pairs"), "--threshold", "0.5"},
      {"classify", "--model", p("work/final.bin"), "--labels", p("demo/labels.jsonl"), "--queries",
       p("demo/test_queries.txt"), "--out", p("work/pred.tsv")},
      {"classify", "--model", p("work/final.bin"), "--labels", p("demo/labels.jsonl"), "--queries",
       p("demo/test_queries.txt"), "--out", p("work/pred_via.tsv"), "--via-category", p("work/categories.bin"),
       "--categories", p("work/categories.txt")},
      {"eval", "score", "--pred", p("work/pred.tsv"), "--gold", p("demo/test_gold.txt"), "--labels",
       p("demo/labels.jsonl"), "--json", p("work/report.json"), "--txt", p("work/report.txt")},
  };
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& args : stages) {
      const int rc = run_quiet(args);
      o.require(rc == 0, args[0] + " exited with " + std::to_string(rc));
    }
    if (!o.pass) return o;
    const auto snap = snapshot(dir.path());
    if (pass == 0) {
      first = snap;
    } else {
      o.require(snap.size() == first.size(), "artifact set changed");
      for (const auto& [name, hash] : first) {
        const auto it = snap.find(name);
        o.require(it != snap.end() && it->second == hash, name + " differs between runs");
      }
    }
  }
  if (o.pass) o.detail = std::to_string(stages.size()) + " stages, " + std::to_string(first.size()) + " artifacts identical";
  return o;
}

// 10
Outcome eval_arithmetic() {
  Outcome o;
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t labels = 2 + rng() % 9;
    std::vector<std::string> order;
    for (std::size_t k = 0; k < labels; ++k) order.push_back("c" + std::to_string(k));
    const std::size_t n = 1 + rng() % 500;
    std::vector<std::string> predicted;
    std::vector<std::string> gold;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(order[rng() % labels]);
      predicted.push_back(order[rng() % labels]);
    }
    const auto r = score(predicted, gold, order);
    o.require(r.confusion == testsupport::count_confusion(predicted, gold, order), "matrix differs from tally");
    std::uint64_t trace = 0;
    for (std::size_t k = 0; k < labels; ++k) {
      std::uint64_t row = 0;
      for (auto c : r.confusion[k]) row += c;
      o.require(row == static_cast<std::uint64_t>(std::count(gold.begin(), gold.end(), order[k])), "row sum");
      trace += r.confusion[k][k];
    }
    o.require(std::abs(r.accuracy - double(trace) / n) < 1e-12, "trace/accuracy identity");
  }
  std::vector<std::string> predicted;
  std::vector<std::string> gold;
  for (std::size_t p = 0; p < 14; ++p) {
    for (std::uint64_t c = 0; c < testsupport::kDbpediaConfusion[3][p]; ++c) {
      gold.push_back(testsupport::kDbpediaLabels[3]);
      predicted.push_back(testsupport::kDbpediaLabels[p]);
    }
  }
  const double athlete = 100.0 * score(predicted, gold, testsupport::kDbpediaLabels).per_label_accuracy[3];
  o.require(fmt("%.2f", athlete) == "99.00", "Athlete row scored " + fmt("%.4f", athlete));
  if (o.pass) o.detail = "100 random sets, Athlete " + fmt("%.2f", athlete);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"loss oracles", loss_oracles},
      {"pair generation", pair_generation},
      {"cache fidelity", cache_fidelity},
      {"speedup mechanism", speedup_mechanism},
      {"self-training semantics", selftrain_semantics},
      {"synthetic end-to-end", synthetic_benchmark},
      {"label preprocessing fixtures", label_fixtures},
      {"determinism", determinism},
      {"eval arithmetic", eval_arithmetic},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s [%2zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
