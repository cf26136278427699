#include "labelassoc/training.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "labelassoc/error.hpp"

namespace labelassoc {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!(mnr_scale > 0.0) || !std::isfinite(mnr_scale)) throw ConfigError("mnr_scale must be positive");
}

namespace {

// Forward intermediates of one sentence encoding, kept for backprop.
struct Trace {
  std::vector<TokenId> tokens;
  std::vector<double> pooled;     // v
  std::vector<double> embedding;  // u / |u|
  double norm = 0.0;              // |u|
  bool sentinel = false;          // constant e1 output, no gradient
};

template <typename T>
Trace forward(const BasicEncoder<T>& model, const std::string& text) {
  const std::size_t d = model.dim();
  Trace tr;
  tr.tokens = model.tokenize(text);
  tr.pooled.assign(d, 0.0);
  tr.embedding.assign(d, 0.0);
  if (tr.tokens.empty()) {
    tr.sentinel = true;
    tr.embedding[0] = 1.0;
    return tr;
  }
  const auto emb = model.token_embeddings();
  for (TokenId t : tr.tokens) {
    for (std::size_t i = 0; i < d; ++i) tr.pooled[i] += static_cast<double>(emb[t * d + i]);
  }
  const double inv_n = 1.0 / static_cast<double>(tr.tokens.size());
  for (auto& x : tr.pooled) x *= inv_n;

  const auto w = model.projection_weight();
  const auto b = model.projection_bias();
  std::vector<double> u(d);
  double norm2 = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    double acc = static_cast<double>(b[r]);
    for (std::size_t c = 0; c < d; ++c) acc += static_cast<double>(w[r * d + c]) * tr.pooled[c];
    u[r] = acc;
    norm2 += acc * acc;
  }
  if (norm2 == 0.0) {
    tr.sentinel = true;
    tr.embedding[0] = 1.0;
    return tr;
  }
  tr.norm = std::sqrt(norm2);
  for (std::size_t r = 0; r < d; ++r) tr.embedding[r] = u[r] / tr.norm;
  return tr;
}

template <typename T>
void check_finite(const BasicEncoder<T>& model) {
  if (!model.all_finite()) throw InvariantError("non-finite model parameter detected");
}

struct BatchForward {
  std::vector<Trace> anchors;
  std::vector<Trace> positives;
  // Row-wise softmax of the scaled similarity matrix, B x B.
  std::vector<double> probs;
  double loss = 0.0;
};

template <typename T>
BatchForward batch_forward(const BasicEncoder<T>& model, std::span<const TrainPair> batch, double scale) {
  if (batch.empty()) throw InputError("mnr loss needs a nonempty batch");
  check_finite(model);
  const std::size_t B = batch.size();
  BatchForward f;
  f.anchors.resize(B);
  f.positives.resize(B);
  const auto n = static_cast<std::ptrdiff_t>(2 * B);
#pragma omp parallel for schedule(static) if (B >= 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i) / 2;
    if (i % 2 == 0) {
      f.anchors[k] = forward(model, batch[k].anchor);
    } else {
      f.positives[k] = forward(model, batch[k].positive);
    }
  }

  const std::size_t d = model.dim();
  std::vector<double> s(B * B);
  for (std::size_t k = 0; k < B; ++k) {
    for (std::size_t j = 0; j < B; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += f.anchors[k].embedding[i] * f.positives[j].embedding[i];
      s[k * B + j] = scale * dot;
    }
  }

  f.probs.assign(B * B, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < B; ++k) {
    const double* row = s.data() + k * B;
    double m = row[0];
    for (std::size_t j = 1; j < B; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < B; ++j) z += std::exp(row[j] - m);
    for (std::size_t j = 0; j < B; ++j) f.probs[k * B + j] = std::exp(row[j] - m) / z;

    const double diag = row[k];
    double row_loss;
    if (diag >= m) {
      // log(1 + sum_{j != k} exp(S_kj - S_kk)) keeps tiny losses accurate.
      double rest = 0.0;
      for (std::size_t j = 0; j < B; ++j) {
        if (j != k) rest += std::exp(row[j] - diag);
      }
      row_loss = std::log1p(rest);
    } else {
      row_loss = (m - diag) + std::log(z);
    }
    total += row_loss;
  }
  f.loss = total / static_cast<double>(B);
  return f;
}

}  // namespace

template <typename T>
double mnr_loss(const BasicEncoder<T>& model, std::span<const TrainPair> batch, double scale) {
  return batch_forward(model, batch, scale).loss;
}

template <typename T>
LossAndGradients<T> mnr_gradients(const BasicEncoder<T>& model, std::span<const TrainPair> batch,
                                  double scale) {
  BatchForward f = batch_forward(model, batch, scale);
  const std::size_t B = batch.size();
  const std::size_t d = model.dim();

  // dL/dS_kj = (P_kj - [k == j]) / B, folded with the scale of S.
  std::vector<double> g(B * B);
  for (std::size_t k = 0; k < B; ++k) {
    for (std::size_t j = 0; j < B; ++j) {
      g[k * B + j] = scale * (f.probs[k * B + j] - (k == j ? 1.0 : 0.0)) / static_cast<double>(B);
    }
  }

  // Gradient on each unit embedding, then back through the normalization to
  // the projected vector u. Texts are laid out anchors first, then positives.
  std::vector<const Trace*> traces;
  traces.reserve(2 * B);
  for (auto& t : f.anchors) traces.push_back(&t);
  for (auto& t : f.positives) traces.push_back(&t);
  std::vector<double> du(2 * B * d, 0.0);
  for (std::size_t k = 0; k < B; ++k) {
    std::vector<double> ga(d, 0.0), gp(d, 0.0);
    for (std::size_t j = 0; j < B; ++j) {
      const double gkj = g[k * B + j];
      const double gjk = g[j * B + k];
      for (std::size_t i = 0; i < d; ++i) {
        ga[i] += gkj * f.positives[j].embedding[i];
        gp[i] += gjk * f.anchors[j].embedding[i];
      }
    }
    const std::pair<const Trace*, std::vector<double>*> items[2] = {{traces[k], &ga}, {traces[B + k], &gp}};
    for (std::size_t which = 0; which < 2; ++which) {
      const Trace& tr = *items[which].first;
      if (tr.sentinel) continue;
      const auto& ge = *items[which].second;
      double proj = 0.0;
      for (std::size_t i = 0; i < d; ++i) proj += tr.embedding[i] * ge[i];
      double* out = du.data() + (which * B + k) * d;
      for (std::size_t i = 0; i < d; ++i) out[i] = (ge[i] - tr.embedding[i] * proj) / tr.norm;
    }
  }

  LossAndGradients<T> result;
  result.loss = f.loss;
  auto& grads = result.gradients;
  grads.token_embeddings.assign(model.token_embeddings().size(), T{0});
  grads.projection_weight.assign(d * d, T{0});
  grads.projection_bias.assign(d, T{0});

  const std::size_t texts = 2 * B;
  const auto rows = static_cast<std::ptrdiff_t>(d);
  // u = W v + b: dW = sum_t du_t v_t^T, db = sum_t du_t. Each row of W is
  // owned by one thread and summed in text order.
#pragma omp parallel for schedule(static) if (texts * d >= 4096)
  for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    std::vector<double> acc(d, 0.0);
    double bias = 0.0;
    for (std::size_t t = 0; t < texts; ++t) {
      if (traces[t]->sentinel) continue;
      const double dur = du[t * d + r];
      if (dur == 0.0) continue;
      bias += dur;
      const auto& v = traces[t]->pooled;
      for (std::size_t c = 0; c < d; ++c) acc[c] += dur * v[c];
    }
    for (std::size_t c = 0; c < d; ++c) grads.projection_weight[r * d + c] = static_cast<T>(acc[c]);
    grads.projection_bias[r] = static_cast<T>(bias);
  }

  // v = mean of token rows: every occurrence receives W^T du / n.
  const auto w = model.projection_weight();
  std::vector<double> token_acc(grads.token_embeddings.size(), 0.0);
  std::vector<double> dv(d);
  for (std::size_t t = 0; t < texts; ++t) {
    const Trace& tr = *traces[t];
    if (tr.sentinel) continue;
    const double* dut = du.data() + t * d;
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const double x = dut[r];
      for (std::size_t c = 0; c < d; ++c) dv[c] += static_cast<double>(w[r * d + c]) * x;
    }
    const double inv_n = 1.0 / static_cast<double>(tr.tokens.size());
    for (TokenId tok : tr.tokens) {
      double* row = token_acc.data() + static_cast<std::size_t>(tok) * d;
      for (std::size_t c = 0; c < d; ++c) row[c] += dv[c] * inv_n;
    }
  }
  for (std::size_t i = 0; i < token_acc.size(); ++i) grads.token_embeddings[i] = static_cast<T>(token_acc[i]);
  return result;
}

template double mnr_loss<float>(const EncoderModel&, std::span<const TrainPair>, double);
template double mnr_loss<double>(const EncoderModel64&, std::span<const TrainPair>, double);
template LossAndGradients<float> mnr_gradients<float>(const EncoderModel&, std::span<const TrainPair>, double);
template LossAndGradients<double> mnr_gradients<double>(const EncoderModel64&, std::span<const TrainPair>,
                                                        double);

std::vector<std::size_t> batch_partition(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < n; start += batch_size) sizes.push_back(std::min(batch_size, n - start));
  return sizes;
}

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

void shuffle_in_place(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

class Adam {
 public:
  explicit Adam(std::size_t size) : m_(size, 0.0f), v_(size, 0.0f) {}

  void step(std::span<float> params, std::span<const float> grads, double lr, std::uint64_t t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (n >= 65536)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const double g = grads[i];
      const double m = beta1 * m_[i] + (1.0 - beta1) * g;
      const double v = beta2 * v_[i] + (1.0 - beta2) * g * g;
      m_[i] = static_cast<float>(m);
      v_[i] = static_cast<float>(v);
      params[i] = static_cast<float>(params[i] - lr * (m / c1) / (std::sqrt(v / c2) + eps));
    }
  }

 private:
  std::vector<float> m_;
  std::vector<float> v_;
};

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle_in_place(order, rng);
  return order;
}

FitResult fit(const EncoderModel& start, std::span<const TrainPair> pairs, const TrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw InputError("fit needs at least one training pair");
  FitResult result{start, {}};
  EncoderModel& model = result.model;

  Adam opt_tokens(model.token_embeddings().size());
  Adam opt_weight(model.projection_weight().size());
  Adam opt_bias(model.projection_bias().size());

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::uint64_t step = 0;
  std::vector<TrainPair> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (config.shuffle) shuffle_in_place(order, rng);

    std::size_t offset = 0;
    for (std::size_t size : batch_partition(pairs.size(), config.batch_size)) {
      batch.clear();
      for (std::size_t i = 0; i < size; ++i) batch.push_back(pairs[order[offset + i]]);
      offset += size;

      auto lg = mnr_gradients(model, std::span<const TrainPair>(batch), config.mnr_scale);
      const std::size_t batch_index = result.report.batch_losses.size();
      if (!std::isfinite(lg.loss)) {
        throw InvariantError("non-finite loss at batch " + std::to_string(batch_index));
      }
      ++step;
      opt_tokens.step(model.token_embeddings(), lg.gradients.token_embeddings, config.learning_rate, step);
      opt_weight.step(model.projection_weight(), lg.gradients.projection_weight, config.learning_rate, step);
      opt_bias.step(model.projection_bias(), lg.gradients.projection_bias, config.learning_rate, step);
      result.report.batch_losses.push_back(lg.loss);
      result.report.batch_sizes.push_back(size);
    }
  }
  double sum = 0.0;
  for (double l : result.report.batch_losses) sum += l;
  result.report.mean_loss = sum / static_cast<double>(result.report.batch_losses.size());
  return result;
}

Vocabulary corpus_vocabulary(const Corpus& corpus, std::size_t word_limit, std::size_t max_size) {
  std::vector<std::string> texts;
  for (const auto& doc : corpus.documents()) {
    texts.push_back(truncate_words(doc.text, word_limit));
    texts.insert(texts.end(), doc.categories.begin(), doc.categories.end());
  }
  return Vocabulary::build(texts, max_size);
}

void write_loss_csv(const std::filesystem::path& path, const LossReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "batch_index,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < report.batch_losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, report.batch_losses[i]);
    out << buf;
  }
}

}  // namespace labelassoc
