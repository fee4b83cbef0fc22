#include "rnncomp/app/config.hpp"

#include <cstdio>

#include "rnncomp/errors.hpp"

namespace rnncomp::app {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Lm:
      return "lm";
    case Experiment::Mnist:
      return "mnist";
    case Experiment::Memorize:
      return "memorize";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  if (name == "lm") return Experiment::Lm;
  if (name == "mnist") return Experiment::Mnist;
  if (name == "memorize") return Experiment::Memorize;
  throw DomainError("unknown experiment '" + name + "' (expected lm, mnist or memorize)");
}

namespace {

std::string cell_string(nn::CellKind k) { return k == nn::CellKind::Mgru ? "mgru" : "rnn"; }

nn::CellKind cell_from_string(const std::string& s) {
  if (s == "rnn") return nn::CellKind::Rnn;
  if (s == "mgru") return nn::CellKind::Mgru;
  throw DomainError("unknown cell '" + s + "' (expected rnn or mgru)");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError("config: " + what);
}

}  // namespace

void RunConfig::validate() const {
  training.validate();
  require(hidden > 0, "hidden must be positive");
  require(!output_dir.empty(), "output_dir must be set");
  switch (experiment) {
    case Experiment::Lm:
      require(!lm.corpus_path.empty(), "lm.corpus_path must be set");
      require(lm.vocab_cap > 0 && lm.embed_dim > 0, "lm.vocab_cap and lm.embed_dim must be positive");
      require(lm.heldout_fraction > 0.0 && lm.heldout_fraction < 1.0, "lm.heldout_fraction must be in (0, 1)");
      break;
    case Experiment::Mnist:
      require(!mnist.data_dir.empty(), "mnist.data_dir must be set");
      break;
    case Experiment::Memorize:
      require(memorize.n_bits > 0, "memorize.n_bits must be positive");
      require(memorize.t_min <= memorize.t_max, "memorize.t_min must not exceed t_max");
      require(memorize.batches_per_epoch > 0, "memorize.batches_per_epoch must be positive");
      require(memorize.target_rms >= 0.0, "memorize.target_rms must not be negative");
      require(memorize.eval_trials > 0, "memorize.eval_trials must be positive");
      break;
  }
  require(sweep.trials > 0, "sweep.trials must be positive");
  require(sweep.threads > 0, "sweep.threads must be positive");
  for (const auto* axis : {&sweep.forward_ranks, &sweep.recurrent_ranks, &sweep.delays}) {
    for (std::size_t i = 1; i < axis->size(); ++i) require((*axis)[i] > (*axis)[i - 1], "sweep axes must ascend strictly");
  }
  for (std::size_t r : sweep.forward_ranks) require(r > 0, "sweep ranks must be positive");
  for (std::size_t r : sweep.recurrent_ranks) require(r > 0, "sweep ranks must be positive");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = to_string(experiment);
  j["cell"] = cell_string(cell);
  j["hidden"] = hidden;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["training"] = {{"learning_rate", training.learning_rate},
                   {"beta1", training.beta1},
                   {"beta2", training.beta2},
                   {"epsilon", training.epsilon},
                   {"keep_prob", training.keep_prob},
                   {"batch_size", training.batch_size},
                   {"epochs", training.epochs},
                   {"bptt_window", training.bptt_window},
                   {"clip_norm", training.clip_norm ? nlohmann::json(*training.clip_norm) : nlohmann::json(nullptr)}};
  // Omitted when constant so configs written before schedules existed keep their digest.
  if (training.schedule == nn::LrSchedule::Cosine) {
    j["training"]["lr_schedule"] = "cosine";
    j["training"]["lr_hold"] = training.hold_fraction;
  }
  j["lm"] = {{"corpus_path", lm.corpus_path},   {"corpus_bytes", lm.corpus_bytes},
             {"vocab_cap", lm.vocab_cap},       {"embed_dim", lm.embed_dim},
             {"heldout_fraction", lm.heldout_fraction}, {"eval_tokens", lm.eval_tokens}};
  j["mnist"] = {{"data_dir", mnist.data_dir}, {"train_limit", mnist.train_limit}, {"test_limit", mnist.test_limit}};
  j["memorize"] = {{"n_bits", memorize.n_bits},
                   {"t_min", memorize.t_min},
                   {"t_max", memorize.t_max},
                   {"batches_per_epoch", memorize.batches_per_epoch},
                   {"target_rms", memorize.target_rms},
                   {"eval_trials", memorize.eval_trials}};
  j["sweep"] = {{"forward_ranks", sweep.forward_ranks}, {"recurrent_ranks", sweep.recurrent_ranks},
                {"rank_step", sweep.rank_step},         {"delays", sweep.delays},
                {"trials", sweep.trials},               {"isolines", sweep.isolines}};
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    c.cell = cell_from_string(j.at("cell").get<std::string>());
    c.hidden = j.at("hidden").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output_dir = j.value("output_dir", c.output_dir);
    const auto& t = j.at("training");
    c.training.learning_rate = t.at("learning_rate").get<double>();
    c.training.beta1 = t.at("beta1").get<double>();
    c.training.beta2 = t.at("beta2").get<double>();
    c.training.epsilon = t.at("epsilon").get<double>();
    c.training.keep_prob = t.at("keep_prob").get<double>();
    c.training.batch_size = t.at("batch_size").get<std::size_t>();
    c.training.epochs = t.at("epochs").get<std::size_t>();
    c.training.bptt_window = t.at("bptt_window").get<std::size_t>();
    const std::string schedule = t.value("lr_schedule", "constant");
    if (schedule != "constant" && schedule != "cosine") throw DomainError("unknown lr_schedule '" + schedule + "'");
    c.training.schedule = schedule == "cosine" ? nn::LrSchedule::Cosine : nn::LrSchedule::Constant;
    c.training.hold_fraction = t.value("lr_hold", 0.0);
    c.training.clip_norm = t.at("clip_norm").is_null() ? std::nullopt : std::optional(t["clip_norm"].get<double>());
    c.training.seed = c.seed;
    const auto& l = j.at("lm");
    c.lm.corpus_path = l.at("corpus_path").get<std::string>();
    c.lm.corpus_bytes = l.at("corpus_bytes").get<std::size_t>();
    c.lm.vocab_cap = l.at("vocab_cap").get<std::size_t>();
    c.lm.embed_dim = l.at("embed_dim").get<std::size_t>();
    c.lm.heldout_fraction = l.at("heldout_fraction").get<double>();
    c.lm.eval_tokens = l.at("eval_tokens").get<std::size_t>();
    const auto& m = j.at("mnist");
    c.mnist.data_dir = m.at("data_dir").get<std::string>();
    c.mnist.train_limit = m.at("train_limit").get<std::size_t>();
    c.mnist.test_limit = m.at("test_limit").get<std::size_t>();
    const auto& z = j.at("memorize");
    c.memorize.n_bits = z.at("n_bits").get<std::size_t>();
    c.memorize.t_min = z.at("t_min").get<std::size_t>();
    c.memorize.t_max = z.at("t_max").get<std::size_t>();
    c.memorize.batches_per_epoch = z.at("batches_per_epoch").get<std::size_t>();
    c.memorize.target_rms = z.at("target_rms").get<double>();
    c.memorize.eval_trials = z.at("eval_trials").get<std::size_t>();
    const auto& s = j.at("sweep");
    c.sweep.forward_ranks = s.at("forward_ranks").get<std::vector<std::size_t>>();
    c.sweep.recurrent_ranks = s.at("recurrent_ranks").get<std::vector<std::size_t>>();
    c.sweep.rank_step = s.at("rank_step").get<std::size_t>();
    c.sweep.delays = s.at("delays").get<std::vector<std::size_t>>();
    c.sweep.trials = s.at("trials").get<std::size_t>();
    c.sweep.isolines = s.at("isolines").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  return c;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunConfig::provenance_json() const {
  nlohmann::json j = to_json();
  j.erase("output_dir");
  return j;
}

// Thread count and output location do not change results.
std::string RunConfig::digest() const { return fnv1a_hex(provenance_json().dump()); }

RunConfig default_config(Experiment e) {
  RunConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Lm:
      c.cell = nn::CellKind::Mgru;
      c.hidden = 128;
      c.training.batch_size = 20;
      c.training.epochs = 6;
      c.training.keep_prob = 0.5;
      c.training.bptt_window = 32;
      c.sweep.isolines = {1.0};
      break;
    case Experiment::Mnist:
      c.cell = nn::CellKind::Mgru;
      c.hidden = 128;
      c.training.batch_size = 20;
      c.training.epochs = 10;
      c.training.keep_prob = 1.0;
      c.sweep.isolines = {0.985};
      break;
    case Experiment::Memorize:
      c.cell = nn::CellKind::Rnn;
      c.hidden = 100;
      c.training.batch_size = 64;
      c.training.epochs = 200;
      c.training.keep_prob = 1.0;
      c.training.clip_norm = 1.0;
      c.training.schedule = nn::LrSchedule::Cosine;
      c.training.hold_fraction = 0.5;
      break;
  }
  return c;
}

}  // namespace rnncomp::app
