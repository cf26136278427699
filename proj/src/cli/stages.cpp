#include "cli/stages.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "labelassoc/cache.hpp"
#include "labelassoc/classify.hpp"
#include "labelassoc/corpus.hpp"
#include "labelassoc/encoder.hpp"
#include "labelassoc/error.hpp"
#include "labelassoc/eval.hpp"
#include "labelassoc/hashing.hpp"
#include "labelassoc/selftrain.hpp"
#include "labelassoc/synthetic.hpp"
#include "labelassoc/training.hpp"

namespace labelassoc::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

Settings::Settings(KeyValueConfig manifest, const std::map<std::string, std::string>& overrides)
    : config_(std::move(manifest)) {
  for (const auto& [key, value] : overrides) {
    if (!value.empty()) config_.set(key, value);
  }
}

std::string Settings::require(const std::string& key, const std::string& flag) const {
  auto v = config_.get(key);
  if (!v || v->empty()) throw ConfigError("missing required setting " + flag + " (manifest key " + key + ")");
  return *v;
}

std::string Settings::get_or(const std::string& key, const std::string& fallback) const {
  return config_.get(key).value_or(fallback);
}

std::uint64_t Settings::uint_or(const std::string& key, std::uint64_t fallback) const {
  return config_.get_uint(key).value_or(fallback);
}

double Settings::double_or(const std::string& key, double fallback) const {
  return config_.get_double(key).value_or(fallback);
}

bool Settings::bool_or(const std::string& key, bool fallback) const { return config_.get_bool(key).value_or(fallback); }

fs::path Settings::input(const std::string& key, const std::string& flag) const {
  fs::path p = require(key, flag);
  if (!fs::exists(p)) throw InputError("missing input: " + p.string());
  return p;
}

std::string Settings::manifest_hash(const std::string& stage) const {
  return sha256_hex("stage = \"" + stage + "\"\n" + config_.dump());
}

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

std::uint64_t global_seed(const Settings& s) { return s.uint_or("seed", 42); }

TrainConfig train_config(const Settings& s) {
  TrainConfig c;
  c.batch_size = s.uint_or("train.batch_size", c.batch_size);
  c.epochs = s.uint_or("train.epochs", c.epochs);
  c.learning_rate = s.double_or("train.learning_rate", c.learning_rate);
  c.mnr_scale = s.double_or("train.mnr_scale", c.mnr_scale);
  c.seed = s.uint_or("train.seed", global_seed(s));
  c.shuffle = s.bool_or("train.shuffle", c.shuffle);
  c.validate();
  return c;
}

SelfTrainConfig selftrain_config(const Settings& s) {
  SelfTrainConfig c;
  if (auto preset = s.get("selftrain.preset")) c = selftrain_preset(*preset);
  c.iterations = s.uint_or("selftrain.iterations", c.iterations);
  c.threshold = s.double_or("selftrain.threshold", c.threshold);
  if (auto from = s.get("selftrain.finetune_from")) c.finetune_from = parse_finetune_from(*from);
  c.prompt_template = s.get_or("selftrain.prompt_template", c.prompt_template);
  c.use_prompt = s.bool_or("selftrain.use_prompt", c.use_prompt);
  c.reencode = s.bool_or("selftrain.reencode", c.reencode);
  c.word_limit = s.uint_or("cache.word_limit", c.word_limit);
  c.train = train_config(s);
  c.validate();
  return c;
}

std::size_t word_limit(const Settings& s) {
  const auto w = s.uint_or("cache.word_limit", kDefaultWordLimit);
  if (w == 0) throw ConfigError("word_limit must be positive");
  return w;
}

std::optional<std::size_t> corpus_limit(const Settings& s) {
  if (auto v = s.config().get_uint("corpus.limit")) {
    if (*v == 0) throw ConfigError("--limit must be positive");
    return *v;
  }
  return std::nullopt;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

/// Writes "<artifact>.run.json" next to the first output.
void write_run_record(const Settings& s, const std::string& stage, const std::vector<fs::path>& inputs,
                      const std::vector<fs::path>& outputs, double seconds, json extra = json::object()) {
  json rec;
  rec["stage"] = stage;
  rec["manifest_hash"] = s.manifest_hash(stage);
  rec["seed"] = global_seed(s);
  json config = json::object();
  for (const auto& [k, v] : s.config().values()) config[k] = v;
  rec["config"] = config;
  json in = json::object();
  for (const auto& p : inputs) in[p.string()] = sha256_file(p);
  rec["inputs"] = in;
  json out = json::object();
  for (const auto& p : outputs) out[p.string()] = sha256_file(p);
  rec["outputs"] = out;
  rec["duration_seconds"] = seconds;
  for (auto& [k, v] : extra.items()) rec[k] = v;
  fs::path path = outputs.front();
  path += ".run.json";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << rec.dump(2) << '\n';
}

std::vector<std::string> surface_labels(const std::vector<LabelSpec>& specs) {
  std::vector<std::string> out;
  for (const auto& spec : specs) out.insert(out.end(), spec.surface_forms.begin(), spec.surface_forms.end());
  return out;
}

EncoderModel pretrain_model(const Corpus& corpus, const std::vector<TrainPair>& pairs, const Settings& s,
                            const std::optional<fs::path>& init, LossReport& report) {
  EncoderModel start;
  if (init) {
    start = load_model(*init);
  } else {
    const auto dim = s.uint_or("encoder.dim", kDefaultDim);
    const auto max_seq_len = s.uint_or("encoder.max_seq_len", kDefaultMaxSeqLen);
    const auto max_vocab = s.uint_or("encoder.max_vocab", kDefaultMaxVocab);
    if (dim == 0 || max_seq_len == 0 || max_vocab == 0) throw ConfigError("encoder sizes must be positive");
    start = EncoderModel::initialize(corpus_vocabulary(corpus, word_limit(s), max_vocab), dim, max_seq_len,
                                     s.uint_or("encoder.init_seed", global_seed(s)));
  }
  if (pairs.empty()) throw InputError("no training pairs: every document has fewer than two categories");
  auto fitted = fit(start, pairs, train_config(s));
  report = std::move(fitted.report);
  return std::move(fitted.model);
}

}  // namespace

int run_ingest(const Settings& s) {
  const auto t0 = clock::now();
  const auto in = s.input("paths.corpus", "--corpus");
  const fs::path out = s.require("paths.out", "--out");
  const Corpus corpus = ingest(in, corpus_limit(s));
  ensure_parent(out);
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw InputError("cannot write " + out.string());
    for (const auto& doc : corpus.documents()) f << to_jsonl(doc) << '\n';
  }
  std::size_t multi = 0;
  for (const auto& d : corpus.documents()) multi += d.categories.size() >= 2;
  std::cout << "documents " << corpus.size() << ", with >= 2 categories " << multi << ", expected pairs "
            << expected_pair_count(corpus) << '\n';
  write_run_record(s, "ingest", {in}, {out}, seconds_since(t0), json{{"documents", corpus.size()}});
  return 0;
}

int run_pairs(const Settings& s) {
  const auto t0 = clock::now();
  const auto in = s.input("paths.corpus", "--corpus");
  const fs::path out = s.require("paths.out", "--out");
  const Corpus corpus = ingest(in, corpus_limit(s));
  const auto pairs = generate_pairs(corpus);
  ensure_parent(out);
  write_pairs_tsv(out, pairs);
  std::cout << "pairs " << pairs.size() << '\n';
  write_run_record(s, "pairs", {in}, {out}, seconds_since(t0), json{{"pairs", pairs.size()}});
  return 0;
}

int run_pretrain(const Settings& s) {
  const auto t0 = clock::now();
  const auto corpus_path = s.input("paths.corpus", "--corpus");
  const fs::path model_out = s.require("paths.model_out", "--model-out");
  const fs::path loss_out = s.get_or("paths.loss_out", model_out.string() + ".loss.csv");
  const Corpus corpus = ingest(corpus_path, corpus_limit(s));

  std::vector<fs::path> inputs{corpus_path};
  std::vector<TrainPair> pairs;
  if (s.get("paths.pairs")) {
    const auto p = s.input("paths.pairs", "--pairs");
    pairs = read_pairs_tsv(p);
    inputs.push_back(p);
  } else {
    pairs = generate_pairs(corpus);
  }
  std::optional<fs::path> init;
  if (s.get("paths.init_model")) {
    init = s.input("paths.init_model", "--init-model");
    inputs.push_back(*init);
  }
  LossReport report;
  const EncoderModel model = pretrain_model(corpus, pairs, s, init, report);
  ensure_parent(model_out);
  ensure_parent(loss_out);
  save_model(model, model_out);
  write_loss_csv(loss_out, report);
  std::cout << "pairs " << pairs.size() << ", batches " << report.batch_losses.size() << ", first batch loss "
            << report.batch_losses.front() << ", mean loss " << report.mean_loss << '\n';
  write_run_record(s, "pretrain", inputs, {model_out, loss_out}, seconds_since(t0),
                   json{{"pairs", pairs.size()}, {"mean_loss", report.mean_loss}});
  return 0;
}

int run_cache_build(const Settings& s) {
  const auto t0 = clock::now();
  const auto model_path = s.input("paths.model", "--model");
  const auto corpus_path = s.input("paths.corpus", "--corpus");
  const fs::path out = s.require("paths.out", "--out");
  const EncoderModel model = load_model(model_path);
  const Corpus corpus = ingest(corpus_path, corpus_limit(s));
  ensure_parent(out);
  std::vector<fs::path> outputs{out};
  if (auto categories_out = s.get("paths.categories_out")) {
    // Distinct categories in first-appearance order, one cache row each.
    std::vector<std::string> categories;
    std::set<std::string> seen;
    for (const auto& d : corpus.documents()) {
      for (const auto& c : d.categories) {
        if (seen.insert(c).second) categories.push_back(c);
      }
    }
    build_string_cache(model, categories).save(out);
    write_lines(*categories_out, categories);
    outputs.push_back(*categories_out);
    std::cout << "category rows " << categories.size() << '\n';
  } else {
    build_cache(model, corpus, word_limit(s)).save(out);
    std::cout << "rows " << corpus.size() << '\n';
  }
  write_run_record(s, "cache build", {model_path, corpus_path}, outputs, seconds_since(t0));
  return 0;
}

int run_cache_verify(const Settings& s) {
  const auto model = load_model(s.input("paths.model", "--model"));
  const Corpus corpus = ingest(s.input("paths.corpus", "--corpus"), corpus_limit(s));
  const auto cache = load_cache(s.input("paths.cache", "--cache"));
  const auto samples = s.uint_or("cache.samples", 16);
  const auto bad = verify_cache(model, corpus, cache, samples, global_seed(s), word_limit(s));
  std::cout << "checked " << samples << " rows, mismatches " << bad << '\n';
  if (bad != 0) throw InvariantError("cache verification failed: " + std::to_string(bad) + " rows differ");
  return 0;
}

int run_selftrain(const Settings& s) {
  const auto t0 = clock::now();
  const auto model_path = s.input("paths.model", "--model");
  const auto corpus_path = s.input("paths.corpus", "--corpus");
  const auto labels_path = s.input("paths.labels", "--labels");
  const fs::path model_out = s.require("paths.model_out", "--model-out");
  const fs::path stats_out = s.get_or("paths.stats_out", model_out.string() + ".stats.json");
  const SelfTrainConfig config = selftrain_config(s);

  const EncoderModel base = load_model(model_path);
  const Corpus corpus = ingest(corpus_path, corpus_limit(s));
  const auto specs = read_label_specs(labels_path);
  std::vector<fs::path> inputs{model_path, corpus_path, labels_path};
  EmbeddingCache cache;
  if (!config.reencode) {
    const auto cache_path = s.input("paths.cache", "--cache");
    cache = load_cache(cache_path);
    inputs.push_back(cache_path);
  }

  const auto result = labelassoc::run_selftrain(base, cache, corpus, surface_labels(specs), config);
  ensure_parent(model_out);
  ensure_parent(stats_out);
  save_model(result.final_model, model_out);
  write_stats_json(stats_out, corpus.size(), result.stats);
  std::vector<fs::path> outputs{model_out, stats_out};
  if (auto dir = s.get("paths.pairs_dir")) {
    fs::create_directories(*dir);
    for (std::size_t k = 0; k < result.iteration_pairs.size(); ++k) {
      const fs::path p = fs::path(*dir) / ("pairs_iter" + std::to_string(k + 1) + ".tsv");
      write_pairs_tsv(p, result.iteration_pairs[k]);
      outputs.push_back(p);
    }
  }
  for (const auto& st : result.stats) {
    std::cout << "iteration " << st.iteration << ": accepted " << st.accepted << ", pairs " << st.pairs
              << ", mean similarity " << st.mean_similarity << '\n';
  }
  write_run_record(s, "selftrain", inputs, outputs, seconds_since(t0));
  return 0;
}

int run_classify(const Settings& s) {
  const auto t0 = clock::now();
  const auto model_path = s.input("paths.model", "--model");
  const auto labels_path = s.input("paths.labels", "--labels");
  const auto queries_path = s.input("paths.queries", "--queries");
  const fs::path out = s.require("paths.out", "--out");
  const EncoderModel model = load_model(model_path);
  const auto specs = read_label_specs(labels_path);
  const auto queries = read_lines(queries_path);
  std::vector<fs::path> inputs{model_path, labels_path, queries_path};

  const auto t_inf = clock::now();
  std::vector<Prediction> predictions;
  if (s.get("paths.category_cache")) {
    const auto cache_path = s.input("paths.category_cache", "--via-category");
    const auto categories_path = s.input("paths.categories", "--categories");
    const auto cache = load_cache(cache_path);
    const auto categories = read_lines(categories_path);
    predictions = predict_via_category(model, queries, specs, cache, categories);
    inputs.push_back(cache_path);
    inputs.push_back(categories_path);
  } else {
    predictions = predict(model, queries, specs);
  }
  const double inference = seconds_since(t_inf);
  ensure_parent(out);
  write_predictions_tsv(out, predictions);
  std::cout << "predictions " << predictions.size() << '\n';
  write_run_record(s, "classify", inputs, {out}, seconds_since(t0),
                   json{{"seconds_inference", inference}, {"samples", queries.size()}});
  return 0;
}

int run_eval_score(const Settings& s) {
  const auto t0 = clock::now();
  const auto pred_path = s.input("paths.predictions", "--pred");
  const auto gold_path = s.input("paths.gold", "--gold");
  const auto labels_path = s.input("paths.labels", "--labels");
  const fs::path json_out = s.get_or("paths.report_json", "report.json");
  const fs::path txt_out = s.get_or("paths.report_txt", "report.txt");

  const auto predictions = read_predictions_tsv(pred_path);
  auto gold = read_lines(gold_path);
  while (!gold.empty() && gold.back().empty()) gold.pop_back();
  const auto order = raw_label_order(read_label_specs(labels_path));
  std::vector<std::string> predicted;
  for (const auto& p : predictions) predicted.push_back(p.raw_label);
  const EvalReport report = score(predicted, gold, order);

  ensure_parent(json_out);
  ensure_parent(txt_out);
  {
    std::ofstream f(json_out, std::ios::binary);
    f << to_json(report).dump(2) << '\n';
    std::ofstream t(txt_out, std::ios::binary);
    t << format_report(report);
  }
  std::cout << format_report(report);
  write_run_record(s, "eval score", {pred_path, gold_path, labels_path}, {json_out, txt_out}, seconds_since(t0));
  return 0;
}

int run_eval_timing(const Settings& s) {
  const auto stats_path = s.input("paths.stats", "--stats");
  const fs::path out = s.get_or("paths.out", "timing.txt");
  std::ifstream in(stats_path);
  json stats;
  try {
    stats = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(stats_path.string() + ": " + e.what());
  }
  TimingInput input;
  try {
    for (const auto& row : stats.at("iterations")) {
      input.inference_seconds.push_back(row.at("seconds_inference").get<double>());
      input.finetune_seconds.push_back(row.at("seconds_finetune").get<double>());
    }
    input.inference_samples = stats.at("documents").get<std::uint64_t>();
    input.finetune_samples = input.inference_samples;
  } catch (const json::exception& e) {
    throw InputError(stats_path.string() + ": " + e.what());
  }
  if (s.get("paths.classify_record")) {
    const auto rec_path = s.input("paths.classify_record", "--classify-record");
    std::ifstream rf(rec_path);
    try {
      const auto rec = json::parse(rf);
      input.inference_seconds.push_back(rec.at("seconds_inference").get<double>());
    } catch (const json::exception& e) {
      throw InputError(rec_path.string() + ": " + e.what());
    }
  } else if (s.get("timing.final_inference")) {
    input.inference_seconds.push_back(s.double_or("timing.final_inference", 0.0));
  }
  input.inference_samples = s.uint_or("timing.inference_samples", input.inference_samples);
  input.finetune_samples = s.uint_or("timing.finetune_samples", input.finetune_samples);
  const auto report = timing_report(input);
  ensure_parent(out);
  std::ofstream f(out, std::ios::binary);
  f << format_timing(report);
  std::cout << format_timing(report);
  return 0;
}

int run_demo_synthetic(const Settings& s) {
  const auto t0 = clock::now();
  const fs::path dir = s.get_or("paths.out_dir", "demo-out");
  fs::create_directories(dir);
  SyntheticOptions opts;
  opts.seed = global_seed(s);
  opts.documents = s.uint_or("demo.documents", opts.documents);
  opts.test_queries = s.uint_or("demo.test_queries", opts.test_queries);
  const SyntheticWorld world = make_synthetic_world(opts);

  const auto corpus_path = dir / "corpus.jsonl";
  {
    std::ofstream f(corpus_path, std::ios::binary);
    for (const auto& d : world.documents) f << to_jsonl(d) << '\n';
  }
  write_label_specs(dir / "labels.jsonl", world.labels);
  write_lines(dir / "test_queries.txt", world.test_queries);
  write_lines(dir / "test_gold.txt", world.test_gold);

  const Corpus corpus = ingest(corpus_path);
  const auto pairs = generate_pairs(corpus);
  write_pairs_tsv(dir / "pairs.tsv", pairs);

  const auto t_pre = clock::now();
  LossReport loss;
  const EncoderModel base = pretrain_model(corpus, pairs, s, std::nullopt, loss);
  const double pretrain_seconds = seconds_since(t_pre);
  save_model(base, dir / "model_base.bin");
  write_loss_csv(dir / "loss.csv", loss);

  const EmbeddingCache cache = build_cache(base, corpus, word_limit(s));
  cache.save(dir / "cache.bin");

  const auto order = raw_label_order(world.labels);
  auto accuracy_of = [&](const EncoderModel& m, const std::string& tag) {
    const auto preds = predict(m, world.test_queries, world.labels);
    write_predictions_tsv(dir / ("predictions_" + tag + ".tsv"), preds);
    std::vector<std::string> predicted;
    for (const auto& p : preds) predicted.push_back(p.raw_label);
    const auto report = score(predicted, world.test_gold, order);
    std::ofstream f(dir / ("report_" + tag + ".json"), std::ios::binary);
    f << to_json(report).dump(2) << '\n';
    return report.accuracy;
  };
  const double acc0 = accuracy_of(base, "iter0");

  SelfTrainConfig st;
  st.iterations = s.uint_or("selftrain.iterations", 1);
  st.threshold = s.double_or("selftrain.threshold", 0.5);
  if (auto from = s.get("selftrain.finetune_from")) st.finetune_from = parse_finetune_from(*from);
  st.word_limit = word_limit(s);
  st.train = train_config(s);
  st.validate();
  const auto result = labelassoc::run_selftrain(base, cache, corpus, surface_labels(world.labels), st);
  save_model(result.final_model, dir / "model_final.bin");
  write_stats_json(dir / "stats.json", corpus.size(), result.stats);
  const double acc1 = accuracy_of(result.final_model, "iter" + std::to_string(st.iterations));

  json summary;
  summary["seed"] = opts.seed;
  summary["documents"] = corpus.size();
  summary["pairs"] = pairs.size();
  summary["batches"] = loss.batch_losses.size();
  summary["first_batch_loss"] = loss.batch_losses.front();
  summary["mean_epoch_loss"] = loss.mean_loss;
  summary["accuracy_iter0"] = acc0;
  summary["accuracy_final"] = acc1;
  summary["selftrain_iterations"] = st.iterations;
  summary["threshold"] = st.threshold;
  json iters = json::array();
  for (const auto& r : result.stats) iters.push_back(json{{"iteration", r.iteration}, {"accepted", r.accepted}, {"pairs", r.pairs}});
  summary["selftrain"] = iters;
  summary["model_base_sha256"] = sha256_file(dir / "model_base.bin");
  summary["model_final_sha256"] = sha256_file(dir / "model_final.bin");
  {
    std::ofstream f(dir / "summary.json", std::ios::binary);
    f << summary.dump(2) << '\n';
  }
  std::cout << "pairs " << pairs.size() << ", first batch loss " << loss.batch_losses.front() << ", mean epoch loss "
            << loss.mean_loss << " (pretrain " << pretrain_seconds << " s)\n"
            << "accuracy iteration 0 " << acc0 << ", after self-training " << acc1 << '\n';
  write_run_record(s, "demo-synthetic", {}, {dir / "summary.json", dir / "model_final.bin"}, seconds_since(t0));
  return 0;
}

}  // namespace labelassoc::cli
