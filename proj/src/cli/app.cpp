#include "cli/app.hpp"

#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "cli/stages.hpp"
#include "labelassoc/cache.hpp"
#include "labelassoc/error.hpp"

namespace labelassoc::cli {

namespace {

constexpr int kInputExit = 2;
constexpr int kConfigExit = 3;
constexpr int kInvariantExit = 4;

using Overrides = std::map<std::string, std::string>;

// Flag values land in `overrides` under their manifest key; empty strings
// mean "not given".
void path_flag(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
               const std::string& help) {
  app->add_option(flag, o[key], help);
}

void train_flags(CLI::App* app, Overrides& o) {
  path_flag(app, o, "--batch-size", "train.batch_size", "Pairs per batch");
  path_flag(app, o, "--epochs", "train.epochs", "Training epochs");
  path_flag(app, o, "--learning-rate", "train.learning_rate", "Adam learning rate");
  path_flag(app, o, "--mnr-scale", "train.mnr_scale", "Similarity scale");
  path_flag(app, o, "--train-seed", "train.seed", "Shuffle seed (defaults to --seed)");
  path_flag(app, o, "--shuffle", "train.shuffle", "true/false");
}

void encoder_flags(CLI::App* app, Overrides& o) {
  path_flag(app, o, "--dim", "encoder.dim", "Embedding dimension");
  path_flag(app, o, "--max-seq-len", "encoder.max_seq_len", "Token cap per text");
  path_flag(app, o, "--max-vocab", "encoder.max_vocab", "Vocabulary cap");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Label-association zero-shot text classification", "labelassoc"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string manifest_path;
  Overrides o;
  app.add_option("--config", manifest_path, "Manifest file (key = value, [sections])");
  app.add_option("--seed", o["seed"], "Global seed");

  std::function<int(const Settings&)> action;
  auto on = [&](CLI::App* sub, int (*fn)(const Settings&)) { sub->callback([&action, fn] { action = fn; }); };

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a JSONL corpus");
  path_flag(ingest, o, "--corpus", "paths.corpus", "Input JSONL corpus");
  path_flag(ingest, o, "--limit", "corpus.limit", "Read at most this many documents");
  path_flag(ingest, o, "--out", "paths.out", "Normalized JSONL output");
  on(ingest, run_ingest);

  auto* pairs = app.add_subcommand("pairs", "Export category pairs as TSV");
  path_flag(pairs, o, "--corpus", "paths.corpus", "Input JSONL corpus");
  path_flag(pairs, o, "--limit", "corpus.limit", "Read at most this many documents");
  path_flag(pairs, o, "--out", "paths.out", "Pairs TSV output");
  on(pairs, run_pairs);

  auto* pretrain = app.add_subcommand("pretrain", "Fit the encoder on category pairs");
  path_flag(pretrain, o, "--corpus", "paths.corpus", "Input JSONL corpus");
  path_flag(pretrain, o, "--limit", "corpus.limit", "Read at most this many documents");
  path_flag(pretrain, o, "--pairs", "paths.pairs", "Pairs TSV (default: generated from the corpus)");
  path_flag(pretrain, o, "--init-model", "paths.init_model", "Start from this model");
  path_flag(pretrain, o, "--model-out", "paths.model_out", "Model output");
  path_flag(pretrain, o, "--loss-out", "paths.loss_out", "Loss CSV output");
  path_flag(pretrain, o, "--init-seed", "encoder.init_seed", "Embedding init seed (defaults to --seed)");
  train_flags(pretrain, o);
  encoder_flags(pretrain, o);
  on(pretrain, run_pretrain);

  auto* cache = app.add_subcommand("cache", "Embedding cache");
  cache->require_subcommand(1);
  auto* build = cache->add_subcommand("build", "Encode corpus texts into a cache file");
  path_flag(build, o, "--model", "paths.model", "Model file");
  path_flag(build, o, "--corpus", "paths.corpus", "Input JSONL corpus");
  path_flag(build, o, "--limit", "corpus.limit", "Read at most this many documents");
  path_flag(build, o, "--out", "paths.out", "Cache output");
  path_flag(build, o, "--word-limit", "cache.word_limit", "Words kept per text");
  path_flag(build, o, "--categories", "paths.categories_out",
            "Cache distinct category strings instead and write them here");
  on(build, run_cache_build);
  auto* verify = cache->add_subcommand("verify", "Recompute random rows and compare");
  path_flag(verify, o, "--model", "paths.model", "Model file");
  path_flag(verify, o, "--corpus", "paths.corpus", "Input JSONL corpus");
  path_flag(verify, o, "--limit", "corpus.limit", "Read at most this many documents");
  path_flag(verify, o, "--cache", "paths.cache", "Cache file");
  path_flag(verify, o, "--samples", "cache.samples", "Rows to check");
  path_flag(verify, o, "--word-limit", "cache.word_limit", "Words kept per text");
  on(verify, run_cache_verify);

  auto* selftrain = app.add_subcommand("selftrain", "Threshold-filtered self-training");
  path_flag(selftrain, o, "--model", "paths.model", "Base model");
  path_flag(selftrain, o, "--cache", "paths.cache", "Corpus embedding cache");
  path_flag(selftrain, o, "--corpus", "paths.corpus", "Input JSONL corpus");
  path_flag(selftrain, o, "--limit", "corpus.limit", "Read at most this many documents");
  path_flag(selftrain, o, "--labels", "paths.labels", "Label specs JSONL");
  path_flag(selftrain, o, "--model-out", "paths.model_out", "Final model output");
  path_flag(selftrain, o, "--stats-out", "paths.stats_out", "Per-iteration stats JSON");
  path_flag(selftrain, o, "--pairs-dir", "paths.pairs_dir", "Write each iteration's pairs here");
  path_flag(selftrain, o, "--preset", "selftrain.preset", "agnews, yahoo or dbpedia");
  path_flag(selftrain, o, "--iterations", "selftrain.iterations", "Self-training iterations");
  path_flag(selftrain, o, "--threshold", "selftrain.threshold", "Similarity threshold");
  path_flag(selftrain, o, "--finetune-from", "selftrain.finetune_from", "base or previous");
  path_flag(selftrain, o, "--template", "selftrain.prompt_template", "Prompt template with {label}");
  path_flag(selftrain, o, "--word-limit", "cache.word_limit", "Words kept per text");
  bool no_prompt = false;
  bool reencode = false;
  selftrain->add_flag("--no-prompt", no_prompt, "Compare bare labels");
  selftrain->add_flag("--reencode", reencode, "Re-encode texts every iteration");
  train_flags(selftrain, o);
  on(selftrain, run_selftrain);

  auto* classify = app.add_subcommand("classify", "Predict labels for queries");
  path_flag(classify, o, "--model", "paths.model", "Model file");
  path_flag(classify, o, "--labels", "paths.labels", "Label specs JSONL");
  path_flag(classify, o, "--queries", "paths.queries", "One query per line");
  path_flag(classify, o, "--out", "paths.out", "Predictions TSV output");
  path_flag(classify, o, "--via-category", "paths.category_cache", "Category cache for two-stage mode");
  path_flag(classify, o, "--categories", "paths.categories", "Category strings matching the cache rows");
  on(classify, run_classify);

  auto* eval = app.add_subcommand("eval", "Scoring and timing reports");
  eval->require_subcommand(1);
  auto* score = eval->add_subcommand("score", "Confusion matrix and accuracy");
  path_flag(score, o, "--pred", "paths.predictions", "Predictions TSV");
  path_flag(score, o, "--gold", "paths.gold", "Gold labels, one per line");
  path_flag(score, o, "--labels", "paths.labels", "Label specs JSONL");
  path_flag(score, o, "--json", "paths.report_json", "JSON report output");
  path_flag(score, o, "--txt", "paths.report_txt", "Text report output");
  on(score, run_eval_score);
  auto* timing = eval->add_subcommand("timing", "Per-round timing table");
  path_flag(timing, o, "--stats", "paths.stats", "Self-training stats JSON");
  path_flag(timing, o, "--classify-record", "paths.classify_record", "Run record of the final classify");
  path_flag(timing, o, "--final-inference", "timing.final_inference", "Seconds of the final inference round");
  path_flag(timing, o, "--inference-samples", "timing.inference_samples", "Samples per inference round");
  path_flag(timing, o, "--finetune-samples", "timing.finetune_samples", "Samples per fine-tune round");
  path_flag(timing, o, "--out", "paths.out", "Timing report output");
  on(timing, run_eval_timing);

  auto* demo = app.add_subcommand("demo-synthetic", "Full pipeline on a seeded synthetic corpus");
  path_flag(demo, o, "--out-dir", "paths.out_dir", "Output directory");
  path_flag(demo, o, "--threshold", "selftrain.threshold", "Self-training threshold");
  path_flag(demo, o, "--iterations", "selftrain.iterations", "Self-training iterations");
  path_flag(demo, o, "--documents", "demo.documents", "Corpus size");
  train_flags(demo, o);
  encoder_flags(demo, o);
  on(demo, run_demo_synthetic);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }
  if (no_prompt) o["selftrain.use_prompt"] = "false";
  if (reencode) o["selftrain.reencode"] = "true";

  try {
    KeyValueConfig manifest;
    if (!manifest_path.empty()) {
      if (!std::filesystem::exists(manifest_path)) throw InputError("missing input: " + manifest_path);
      manifest = KeyValueConfig::load(manifest_path);
    }
    return action(Settings(std::move(manifest), o));
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputExit;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariantExit;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputExit;
  }
}

}  // namespace labelassoc::cli
