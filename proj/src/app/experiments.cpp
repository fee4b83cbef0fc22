#include "rnncomp/app/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rnncomp/errors.hpp"
#include "rnncomp/nn/loss.hpp"
#include "rnncomp/nn/training.hpp"
#include "rnncomp/perturbation.hpp"

namespace rnncomp::app {

LmData load_lm_data(const LmParams& params, std::optional<tasks::Vocab> vocab) {
  std::string text = tasks::read_text_file(params.corpus_path);
  if (params.corpus_bytes > 0 && text.size() > params.corpus_bytes) {
    const std::size_t cut = text.rfind('\n', params.corpus_bytes);
    text.resize(cut == std::string::npos ? params.corpus_bytes : cut + 1);
  }
  const auto tokens = tasks::tokenize_corpus(text, params.corpus_path);
  const auto heldout = static_cast<std::size_t>(std::floor(static_cast<double>(tokens.size()) * params.heldout_fraction));
  if (heldout < 2 || heldout >= tokens.size()) throw IngestionError(params.corpus_path, 0, "corpus too small to split");
  const std::span<const std::string> all(tokens);
  const auto train_tokens = all.first(tokens.size() - heldout);
  LmData d;
  d.vocab = vocab ? std::move(*vocab) : tasks::build_vocab(train_tokens, params.vocab_cap);
  d.train = d.vocab.encode(train_tokens);
  d.heldout = d.vocab.encode(all.last(heldout));
  return d;
}

Dataset load_dataset(const RunConfig& config, std::optional<tasks::Vocab> vocab) {
  Dataset d;
  d.experiment = config.experiment;
  if (config.experiment == Experiment::Lm) d.lm = load_lm_data(config.lm, std::move(vocab));
  if (config.experiment == Experiment::Mnist) d.mnist = tasks::load_mnist(config.mnist.data_dir);
  return d;
}

nn::Network build_network(const RunConfig& config, const Dataset& data) {
  nn::NetworkSpec spec;
  spec.cell = config.cell;
  spec.hidden = config.hidden;
  switch (config.experiment) {
    case Experiment::Lm:
      if (!data.lm) throw DomainError("build_network: language-model data not loaded");
      spec.vocab_size = data.lm->vocab.size();
      spec.input_dim = config.lm.embed_dim;
      spec.output_dim = data.lm->vocab.size();
      break;
    case Experiment::Mnist:
      spec.input_dim = 28;
      spec.output_dim = 10;
      spec.readout = nn::Readout::MeanPool;
      break;
    case Experiment::Memorize:
      spec.input_dim = tasks::kMemorizationChannels;
      spec.output_dim = 1;
      spec.loss = nn::LossKind::SigmoidCrossEntropy;
      break;
  }
  Rng rng(derive_seed(config.seed, "init"));
  return nn::initialize(spec, rng);
}

std::string metric_name(Experiment e) {
  switch (e) {
    case Experiment::Lm:
      return "perplexity";
    case Experiment::Mnist:
      return "accuracy";
    case Experiment::Memorize:
      return "rms";
  }
  return "?";
}

bool metric_better(Experiment e, double candidate, double incumbent) {
  return e == Experiment::Mnist ? candidate > incumbent : candidate < incumbent;
}

double lm_perplexity(const nn::NetworkView& model, std::span<const int> ids, std::size_t window) {
  if (ids.size() < 2) throw DomainError("lm_perplexity: need at least two tokens");
  nn::LossTotals totals;
  Vector state;
  for (std::size_t pos = 0; pos + 1 < ids.size(); pos += window) {
    const std::size_t len = std::min(window, ids.size() - 1 - pos);
    nn::Example ex;
    ex.tokens.assign(ids.begin() + static_cast<std::ptrdiff_t>(pos), ids.begin() + static_cast<std::ptrdiff_t>(pos + len));
    ex.labels.assign(ids.begin() + static_cast<std::ptrdiff_t>(pos + 1),
                     ids.begin() + static_cast<std::ptrdiff_t>(pos + 1 + len));
    ex.initial_state = std::move(state);
    const nn::SequenceTrace trace = nn::forward_sequence(model, ex);
    const nn::LossTotals t = nn::example_loss(model, trace, ex);
    totals.loss += t.loss;
    totals.weight += t.weight;
    state = trace.final_state();
  }
  return nn::perplexity(totals.mean());
}

double mnist_accuracy(const nn::NetworkView& model, const tasks::MnistSplit& split, std::size_t limit) {
  const std::size_t n = limit == 0 ? split.size() : std::min(limit, split.size());
  if (n == 0) throw DomainError("mnist_accuracy: empty split");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const nn::Example ex = tasks::mnist_example(split, i);
    const nn::SequenceTrace trace = nn::forward_sequence(model, ex);
    const Vector& logits = trace.logits.back();
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    correct += best == ex.labels[0] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double memorization_rms(const nn::NetworkView& model, const MemorizeParams& params, std::uint64_t seed) {
  double sum_sq = 0.0;
  std::size_t positions = 0;
  for (std::size_t t = params.t_min; t <= params.t_max; ++t) {
    const auto m = perturbation::measure_error(model, params.n_bits, t, params.eval_trials, seed);
    sum_sq += m.rms * m.rms * static_cast<double>(m.positions);
    positions += m.positions;
  }
  return std::sqrt(sum_sq / static_cast<double>(positions));
}

sweep::Evaluation evaluate(const nn::NetworkView& model, const Dataset& data, const RunConfig& config) {
  switch (config.experiment) {
    case Experiment::Lm: {
      if (!data.lm) throw DomainError("evaluate: language-model data not loaded");
      std::span<const int> ids(data.lm->heldout);
      if (config.lm.eval_tokens > 0 && ids.size() > config.lm.eval_tokens + 1) ids = ids.first(config.lm.eval_tokens + 1);
      return {lm_perplexity(model, ids), ids.size() - 1};
    }
    case Experiment::Mnist: {
      if (!data.mnist) throw DomainError("evaluate: MNIST data not loaded");
      const std::size_t n = config.mnist.test_limit == 0 ? data.mnist->test.size()
                                                         : std::min(config.mnist.test_limit, data.mnist->test.size());
      return {mnist_accuracy(model, data.mnist->test, n), n};
    }
    case Experiment::Memorize: {
      const auto& p = config.memorize;
      return {memorization_rms(model, p, derive_seed(config.seed, "eval")),
              (p.t_max - p.t_min + 1) * p.eval_trials};
    }
  }
  throw DomainError("evaluate: unknown experiment");
}

namespace {

struct EpochLoss {
  double sum = 0.0;
  double weight = 0.0;
  void add(const nn::StepReport& r) {
    if (!std::isfinite(r.totals.loss)) throw DivergenceError("training diverged: non-finite loss");
    sum += r.totals.loss;
    weight += r.totals.weight;
  }
  double mean() const { return weight > 0.0 ? sum / weight : 0.0; }
};

double lm_epoch(const RunConfig& config, const LmData& data, nn::Trainer& trainer) {
  tasks::LmBatchStream stream = tasks::lm_batches(data.train, config.training.batch_size, config.training.bptt_window);
  std::vector<Vector> carried(stream.batch());
  EpochLoss loss;
  for (auto windows = stream.next(); !windows.empty(); windows = stream.next()) {
    std::vector<nn::Example> batch;
    batch.reserve(windows.size());
    for (auto& w : windows) {
      nn::Example ex;
      ex.tokens = std::move(w.inputs);
      ex.labels = std::move(w.targets);
      ex.initial_state = carried[w.stream];
      batch.push_back(std::move(ex));
    }
    const nn::StepReport r = trainer.step(batch);
    loss.add(r);
    for (std::size_t k = 0; k < windows.size(); ++k) carried[windows[k].stream] = r.final_states[k];
  }
  return loss.mean();
}

double mnist_epoch(const RunConfig& config, const tasks::MnistSplit& train, nn::Trainer& trainer, std::size_t epoch) {
  const std::size_t n = config.mnist.train_limit == 0 ? train.size() : std::min(config.mnist.train_limit, train.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config.seed, "shuffle", epoch));
  for (std::size_t k = n; k > 1; --k) {
    std::swap(order[k - 1], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(k) - 1))]);
  }
  EpochLoss loss;
  const std::size_t bs = config.training.batch_size;
  for (std::size_t start = 0; start < n; start += bs) {
    std::vector<nn::Example> batch;
    for (std::size_t k = start; k < std::min(n, start + bs); ++k) batch.push_back(tasks::mnist_example(train, order[k]));
    loss.add(trainer.step(batch));
  }
  return loss.mean();
}

double memorize_epoch(const RunConfig& config, Rng& task_rng, nn::Trainer& trainer) {
  const auto& p = config.memorize;
  EpochLoss loss;
  for (std::size_t b = 0; b < p.batches_per_epoch; ++b) {
    const auto delay = static_cast<std::size_t>(
        task_rng.integer(static_cast<std::int64_t>(p.t_min), static_cast<std::int64_t>(p.t_max)));
    const auto batch = tasks::memorization_batch(config.training.batch_size, p.n_bits, delay, task_rng);
    loss.add(trainer.step(batch));
  }
  return loss.mean();
}

}  // namespace

std::vector<EpochRecord> train(const RunConfig& config, const Dataset& data, nn::Network& net, const EpochHook& on_epoch) {
  config.validate();
  nn::TrainingConfig tc = config.training;
  tc.seed = config.seed;
  nn::Trainer trainer(net, tc);
  Rng task_rng(derive_seed(config.seed, "task"));
  std::vector<EpochRecord> records;
  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    trainer.set_learning_rate(tc.rate_at(epoch));
    switch (config.experiment) {
      case Experiment::Lm:
        rec.train_loss = lm_epoch(config, *data.lm, trainer);
        break;
      case Experiment::Mnist:
        rec.train_loss = mnist_epoch(config, data.mnist->train, trainer, epoch);
        break;
      case Experiment::Memorize:
        rec.train_loss = memorize_epoch(config, task_rng, trainer);
        break;
    }
    for (const auto& p : nn::parameters(net)) {
      for (double v : p.values) {
        if (!std::isfinite(v)) throw DivergenceError("training diverged: non-finite parameter in " + std::string(p.name));
      }
    }
    const sweep::Evaluation e = evaluate(nn::view(net), data, config);
    rec.metric = e.metric;
    rec.samples = e.samples;
    records.push_back(rec);
    if (on_epoch) on_epoch(rec, net);
    if (config.experiment == Experiment::Memorize && rec.metric < config.memorize.target_rms) break;
  }
  return records;
}

}  // namespace rnncomp::app
