#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnncomp/nn/layers.hpp"
#include "rnncomp/nn/training.hpp"

namespace rnncomp::app {

enum class Experiment { Lm, Mnist, Memorize };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct LmParams {
  std::string corpus_path;
  std::size_t corpus_bytes = 0;  // leading bytes used, cut back to a line end; 0 = all
  std::size_t vocab_cap = 10000;
  std::size_t embed_dim = 128;
  double heldout_fraction = 0.1;  // trailing share of tokens kept for evaluation
  std::size_t eval_tokens = 0;    // 0 = the whole held-out split
};

struct MnistParams {
  std::string data_dir;
  std::size_t train_limit = 0;  // 0 = all 60000
  std::size_t test_limit = 0;   // 0 = all 10000
};

struct MemorizeParams {
  std::size_t n_bits = 8;
  std::size_t t_min = 0;
  std::size_t t_max = 30;
  std::size_t batches_per_epoch = 100;
  double target_rms = 0.05;  // training stops once the recall RMS is below this; 0 never stops
  std::size_t eval_trials = 20;  // per delay, for the per-epoch RMS
};

struct SweepParams {
  std::vector<std::size_t> forward_ranks;    // empty = geometric axis up to full
  std::vector<std::size_t> recurrent_ranks;  // empty = geometric axis up to full
  std::size_t rank_step = 0;                 // > 0 selects a linear axis with this step
  std::vector<std::size_t> delays;           // empty = t_min .. t_max
  std::size_t trials = 1000;
  std::vector<double> isolines;  // dB levels (lm), accuracy levels (mnist)
  std::size_t threads = 1;
};

struct RunConfig {
  Experiment experiment = Experiment::Memorize;
  nn::CellKind cell = nn::CellKind::Rnn;
  std::size_t hidden = 100;
  nn::TrainingConfig training;
  LmParams lm;
  MnistParams mnist;
  MemorizeParams memorize;
  SweepParams sweep;
  std::string output_dir = "run";
  std::uint64_t seed = 1;

  // Throws DomainError describing the first invalid field.
  void validate() const;
  nlohmann::json to_json() const;
  // to_json without output_dir: what results depend on. Written into every
  // output file so reruns elsewhere stay byte-identical.
  nlohmann::json provenance_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // 16 hex digits over provenance_json. output_dir is optional on input.
  std::string digest() const;
};

// Published-scale defaults per experiment, with desk-scale substitutions.
RunConfig default_config(Experiment e);

std::string fnv1a_hex(const std::string& text);

}  // namespace rnncomp::app
