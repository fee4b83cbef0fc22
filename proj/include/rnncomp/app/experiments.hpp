#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rnncomp/app/config.hpp"
#include "rnncomp/nn/network.hpp"
#include "rnncomp/sweep.hpp"
#include "rnncomp/tasks.hpp"

namespace rnncomp::app {

struct LmData {
  tasks::Vocab vocab;
  std::vector<int> train;
  std::vector<int> heldout;
};

// Tokenizes the corpus prefix, splits off the trailing held-out share and
// builds the vocabulary from the training part unless `vocab` is given.
LmData load_lm_data(const LmParams& params, std::optional<tasks::Vocab> vocab = std::nullopt);

// Everything an experiment reads; memorization samples are generated on the
// fly and need nothing here.
struct Dataset {
  Experiment experiment = Experiment::Memorize;
  std::optional<LmData> lm;
  std::optional<tasks::MnistDataset> mnist;
};

Dataset load_dataset(const RunConfig& config, std::optional<tasks::Vocab> vocab = std::nullopt);

nn::Network build_network(const RunConfig& config, const Dataset& data);

// "perplexity", "accuracy" or "rms".
std::string metric_name(Experiment e);
bool metric_better(Experiment e, double candidate, double incumbent);

// Held-out perplexity (one stream, state carried), test accuracy, or recall
// RMS over every delay in [t_min, t_max].
sweep::Evaluation evaluate(const nn::NetworkView& model, const Dataset& data, const RunConfig& config);

double lm_perplexity(const nn::NetworkView& model, std::span<const int> ids, std::size_t window = 64);
double mnist_accuracy(const nn::NetworkView& model, const tasks::MnistSplit& split, std::size_t limit = 0);
double memorization_rms(const nn::NetworkView& model, const MemorizeParams& params, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double metric = 0.0;
  std::size_t samples = 0;
};

using EpochHook = std::function<void(const EpochRecord&, const nn::Network&)>;

// Trains in place for config.training.epochs epochs (memorization stops
// early once the recall RMS is below target). Throws DivergenceError on a
// non-finite loss.
std::vector<EpochRecord> train(const RunConfig& config, const Dataset& data, nn::Network& net,
                               const EpochHook& on_epoch = {});

}  // namespace rnncomp::app
