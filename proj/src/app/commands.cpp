#include "rnncomp/app/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rnncomp/errors.hpp"

namespace rnncomp::app {

namespace fs = std::filesystem;

fs::path resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("RNNCOMP_OUTPUT_ROOT"); root != nullptr && *root != '\0') p = fs::path(root) / p;
  }
  return p;
}

namespace {

// Write-then-rename so a reader never sees a partial file.
void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestionError(tmp.string(), 0, "cannot open for writing");
    out << text;
    if (!out) throw IngestionError(tmp.string(), 0, "write failed");
  }
  fs::rename(tmp, path);
}

std::vector<std::string> provenance(const RunConfig& config, const std::string& what) {
  return {"rnncomp " + what, "digest: " + config.digest(), "seed: " + std::to_string(config.seed),
          "config: " + config.provenance_json().dump()};
}

std::string comment_block(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += "# " + l + "\n";
  return s;
}

std::string train_log_csv(const RunConfig& config, const std::vector<EpochRecord>& log) {
  std::string s = comment_block(provenance(config, "train"));
  s += "epoch,train_loss," + metric_name(config.experiment) + ",samples\n";
  for (const auto& r : log) {
    s += std::to_string(r.epoch) + "," + sweep::format_double(r.train_loss) + "," + sweep::format_double(r.metric) +
         "," + std::to_string(r.samples) + "\n";
  }
  return s;
}

void check_compatible(const ModelArchive& archive, const RunConfig& config) {
  if (archive.experiment != to_string(config.experiment)) {
    throw DomainError("archive holds a '" + archive.experiment + "' model but the config selects '" +
                      to_string(config.experiment) + "'");
  }
  const nn::Network& net = archive.network;
  switch (config.experiment) {
    case Experiment::Lm:
      if (!net.embedding || !archive.vocab) throw DomainError("language-model archive lacks an embedding or vocabulary");
      if (archive.vocab->size() != net.embedding->vocab_size() || net.output_dim() != archive.vocab->size()) {
        throw DomainError("archive vocabulary size does not match its embedding and output shapes");
      }
      break;
    case Experiment::Mnist:
      if (net.cell_input_dim() != 28 || net.output_dim() != 10) throw DomainError("MNIST archive must map 28 inputs to 10 classes");
      break;
    case Experiment::Memorize:
      if (net.cell_input_dim() != tasks::kMemorizationChannels || net.output_dim() != 1) {
        throw DomainError("memorization archive must map 2 inputs to 1 output");
      }
      break;
  }
}

std::vector<std::size_t> pick_axis(const std::vector<std::size_t>& explicit_ranks, std::size_t full, std::size_t step) {
  if (!explicit_ranks.empty()) {
    for (std::size_t r : explicit_ranks) {
      if (r == 0 || r > full) {
        throw DomainError("sweep rank " + std::to_string(r) + " outside [1, " + std::to_string(full) + "]");
      }
    }
    return explicit_ranks;
  }
  return step > 0 ? sweep::rank_axis(full, sweep::RankSpacing::Linear, step) : sweep::rank_axis(full);
}

std::string isoline_csv(const sweep::SweepGrid& grid, double level, const std::vector<std::pair<double, double>>& pts,
                        const std::vector<std::string>& header) {
  std::string s = comment_block(header);
  s += "# level: " + sweep::format_double(level) + "\n";
  s += grid.axis1.name + "," + grid.axis2.name + "\n";
  for (const auto& [a, b] : pts) s += sweep::format_double(a) + "," + sweep::format_double(b) + "\n";
  return s;
}

}  // namespace

RunConfig archive_config(const ModelArchive& archive) {
  if (!archive.metadata.contains("config")) throw DomainError("archive metadata carries no run config");
  return RunConfig::from_json(archive.metadata.at("config"));
}

TrainOutcome cmd_train(const RunConfig& config, const Dataset& data, std::ostream* progress) {
  config.validate();
  TrainOutcome out;
  out.dir = resolve_output_dir(config.output_dir);
  fs::create_directories(out.dir);

  ModelArchive& archive = out.archive;
  archive.experiment = to_string(config.experiment);
  archive.network = build_network(config, data);
  archive.metadata = {{"config", config.provenance_json()}, {"digest", config.digest()}, {"epochs_completed", 0}};
  if (data.lm) archive.vocab = data.lm->vocab;

  std::optional<double> best;
  const auto on_epoch = [&](const EpochRecord& rec, const nn::Network& net) {
    out.log.push_back(rec);
    ModelArchive snap = archive;
    snap.network = net;
    snap.metadata["epochs_completed"] = rec.epoch;
    snap.metadata[metric_name(config.experiment)] = rec.metric;
    save_archive(snap, out.dir / kCheckpointFile);
    if (!best || metric_better(config.experiment, rec.metric, *best)) {
      best = rec.metric;
      save_archive(snap, out.dir / kBestFile);
    }
    write_file(out.dir / kTrainLogFile, train_log_csv(config, out.log));
    if (progress != nullptr) {
      *progress << "epoch " << rec.epoch << " loss " << sweep::format_double(rec.train_loss) << ' '
                << metric_name(config.experiment) << ' ' << sweep::format_double(rec.metric) << std::endl;
    }
  };

  nn::Network net = archive.network;
  train(config, data, net, on_epoch);

  archive.network = std::move(net);
  archive.metadata["epochs_completed"] = out.log.size();
  if (!out.log.empty()) archive.metadata[metric_name(config.experiment)] = out.log.back().metric;
  save_archive(archive, out.dir / kModelFile);
  write_file(out.dir / kTrainLogFile, train_log_csv(config, out.log));

  nlohmann::json run = {{"config", config.provenance_json()},
                        {"digest", config.digest()},
                        {"epochs_completed", out.log.size()},
                        {"metric", metric_name(config.experiment)}};
  if (!out.log.empty()) run["final_metric"] = out.log.back().metric;
  if (best) run["best_metric"] = *best;
  write_file(out.dir / kRunFile, run.dump(2) + "\n");
  return out;
}

TrainOutcome cmd_train(const RunConfig& config, std::ostream* progress) {
  config.validate();
  return cmd_train(config, load_dataset(config), progress);
}

CompressOutcome cmd_compress(const ModelArchive& source, const CompressionPlan& plan, const fs::path& out_dir) {
  if (source.compressed()) throw DomainError("archive is already compressed; compress the dense original");
  const nn::Network& net = source.network;
  validate_plan(net, plan);
  const ModelFactors factors = factorize(net);
  CompressOutcome out;
  out.archive = compressed_archive(source, compress_model(net, plan, factors));
  out.report = compression_report(net, plan, factors);

  std::vector<std::string> header = {"rnncomp compress", "plan: " + plan.describe()};
  if (source.metadata.contains("digest")) header.push_back("digest: " + source.metadata["digest"].get<std::string>());
  std::string csv = comment_block(header);
  csv += "matrix,rows,cols,rank,compressed,delta,dense_parameters,stored_parameters,dense_multiply_adds,"
         "stored_multiply_adds,ratio\n";
  for (const auto& m : out.report) {
    csv += m.name + "," + std::to_string(m.rows) + "," + std::to_string(m.cols) + "," + std::to_string(m.rank) + "," +
           (m.compressed ? "1" : "0") + "," + sweep::format_double(m.delta) + "," +
           std::to_string(m.dense_parameters) + "," + std::to_string(m.stored_parameters) + "," +
           std::to_string(m.dense_multiply_adds) + "," + std::to_string(m.stored_multiply_adds) + "," +
           sweep::format_double(m.ratio()) + "\n";
  }
  fs::create_directories(out_dir);
  save_archive(out.archive, out_dir / kCompressedFile);
  write_file(out_dir / kCompressReportFile, csv);
  return out;
}

EvalReport cmd_eval(const ModelArchive& archive, const RunConfig& config, const Dataset& data,
                    const std::optional<fs::path>& out_dir) {
  config.validate();
  check_compatible(archive, config);
  const CompressedModel model = archive.model();
  const sweep::Evaluation e = evaluate(model.view(), data, config);
  EvalReport r{metric_name(config.experiment), e.metric, e.samples};
  if (out_dir) {
    std::vector<std::string> header = provenance(config, "eval");
    header.push_back("plan: " + archive.plan().describe());
    write_file(*out_dir / kEvalFile, comment_block(header) + "metric,value,samples\n" + r.metric + "," +
                                          sweep::format_double(r.value) + "," + std::to_string(r.samples) + "\n");
  }
  return r;
}

EvalReport cmd_eval(const ModelArchive& archive, const RunConfig& config, const std::optional<fs::path>& out_dir) {
  config.validate();
  check_compatible(archive, config);
  return cmd_eval(archive, config, load_dataset(config, archive.vocab), out_dir);
}

SweepOutcome cmd_sweep(const ModelArchive& archive, const RunConfig& config, const Dataset& data,
                       const fs::path& out_dir) {
  config.validate();
  check_compatible(archive, config);
  if (archive.compressed()) throw DomainError("sweeps start from a dense archive");
  const nn::Network& net = archive.network;
  const RankLimits limits = rank_limits(net);
  const auto& sp = config.sweep;
  const sweep::SweepOptions options{sp.threads, std::nullopt};

  SweepOutcome out;
  if (config.experiment == Experiment::Memorize) {
    sweep::TemporalSweepConfig tc;
    tc.ranks = pick_axis(sp.recurrent_ranks, limits.recurrent, sp.rank_step);
    tc.delays = sp.delays;
    if (tc.delays.empty()) {
      for (std::size_t t = config.memorize.t_min; t <= config.memorize.t_max; ++t) tc.delays.push_back(t);
    }
    tc.trials = sp.trials;
    tc.n_bits = config.memorize.n_bits;
    tc.seed = derive_seed(config.seed, "sweep");
    out.grid = sweep::temporal_sweep(net, tc, options);
  } else {
    const auto fr = pick_axis(sp.forward_ranks, limits.forward, sp.rank_step);
    const auto rr = pick_axis(sp.recurrent_ranks, limits.recurrent, sp.rank_step);
    const sweep::Evaluator evaluator = [&](const nn::NetworkView& view) { return evaluate(view, data, config); };
    out.grid = sweep::rank_sweep(net, fr, rr, evaluator, metric_name(config.experiment), options);
  }
  const std::size_t cells = out.grid.rows() * out.grid.cols();
  out.failure_fraction = cells == 0 ? 0.0 : static_cast<double>(out.grid.failures()) / static_cast<double>(cells);

  const std::vector<std::string> header = provenance(config, "sweep");
  fs::create_directories(out_dir);
  write_file(out_dir / kGridCsvFile, sweep::to_csv(out.grid, header));
  nlohmann::json j = sweep::to_json(out.grid);
  j["provenance"] = {{"digest", config.digest()}, {"seed", config.seed}, {"config", config.provenance_json()}};
  write_file(out_dir / kGridJsonFile, j.dump(2) + "\n");

  const sweep::SweepGrid* iso_source = &out.grid;
  if (config.experiment == Experiment::Lm) {
    out.db_grid = sweep::to_perplexity_db(out.grid);
    write_file(out_dir / "grid_db.csv", sweep::to_csv(*out.db_grid, header));
    iso_source = &*out.db_grid;
  }
  for (double level : sp.isolines) {
    auto pts = sweep::extract_isoline(*iso_source, {level});
    write_file(out_dir / ("isoline_" + sweep::format_double(level) + ".csv"),
               isoline_csv(*iso_source, level, pts, header));
    out.isolines.emplace_back(level, std::move(pts));
  }
  return out;
}

SweepOutcome cmd_sweep(const ModelArchive& archive, const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  check_compatible(archive, config);
  return cmd_sweep(archive, config, load_dataset(config, archive.vocab), out_dir);
}

BetaOutcome cmd_beta(const sweep::SweepGrid& temporal, double delta_f, std::size_t fit_t_min, std::size_t fit_t_max,
                     const fs::path& out_dir, const std::vector<std::string>& provenance_lines) {
  if (fit_t_min > fit_t_max) throw DomainError("beta: fit window is empty");
  BetaOutcome out;
  out.fit_t_min = fit_t_min;
  out.fit_t_max = fit_t_max;
  out.curve = perturbation::beta(sweep::to_error_surface(temporal), delta_f);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < out.curve.delays.size(); ++k) {
    const std::size_t t = out.curve.delays[k];
    if (t >= fit_t_min && t <= fit_t_max) pts.emplace_back(static_cast<double>(t), out.curve.beta[k]);
  }
  out.fit = perturbation::linearity_fit(pts);

  std::vector<std::string> header = provenance_lines;
  header.insert(header.begin(), "rnncomp beta");
  header.push_back("delta_f: " + sweep::format_double(delta_f));
  header.push_back("n_delta: " + std::to_string(out.curve.n_delta));
  std::string csv = comment_block(header) + "delay,beta\n";
  for (std::size_t k = 0; k < out.curve.delays.size(); ++k) {
    csv += std::to_string(out.curve.delays[k]) + "," + sweep::format_double(out.curve.beta[k]) + "\n";
  }
  nlohmann::json fit = {{"delta_f", delta_f},
                        {"n_delta", out.curve.n_delta},
                        {"fit_t_min", fit_t_min},
                        {"fit_t_max", fit_t_max},
                        {"points", pts.size()},
                        {"slope", out.fit.slope},
                        {"intercept", out.fit.intercept},
                        {"r_squared", out.fit.r_squared},
                        {"provenance", provenance_lines}};
  fs::create_directories(out_dir);
  write_file(out_dir / kBetaFile, csv);
  write_file(out_dir / kFitFile, fit.dump(2) + "\n");
  return out;
}

sweep::SweepGrid read_grid(const fs::path& path) {
  const std::string text = tasks::read_text_file(path);
  try {
    if (path.extension() == ".json") return sweep::from_json(nlohmann::json::parse(text));
    return sweep::from_csv(text);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(path.string(), 0, e.what());
  } catch (const DomainError& e) {
    throw IngestionError(path.string(), 0, e.what());
  }
}

// ---------------------------------------------------------------------------
// Command line

namespace {

// Flags mirror RunConfig fields. Unset flags leave the config untouched.
struct Overrides {
  std::optional<std::string> config_file;
  std::optional<std::string> experiment, cell, output_dir, corpus, mnist_dir, lr_schedule;
  std::optional<std::size_t> hidden, batch_size, epochs, bptt_window, corpus_bytes, vocab_cap, embed_dim, eval_tokens,
      train_limit, test_limit, n_bits, t_min, t_max, batches_per_epoch, eval_trials, rank_step, trials, threads;
  std::optional<double> learning_rate, lr_hold, keep_prob, clip_norm, heldout_fraction, target_rms;
  bool no_clip = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> forward_ranks, recurrent_ranks, delays;
  std::vector<double> isolines;
};

void add_config_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_file, "JSON run config; flags given on the command line win");
  app.add_option("--cell", o.cell, "rnn or mgru");
  app.add_option("--hidden", o.hidden, "hidden units");
  app.add_option("--seed", o.seed, "root seed");
  app.add_option("--out", o.output_dir, "output directory (under $RNNCOMP_OUTPUT_ROOT when relative)");
  app.add_option("--lr", o.learning_rate, "Adam learning rate");
  app.add_option("--lr-schedule", o.lr_schedule, "constant or cosine")->check(CLI::IsMember({"constant", "cosine"}));
  app.add_option("--lr-hold", o.lr_hold, "share of epochs at the full rate before cosine annealing");
  app.add_option("--keep-prob", o.keep_prob, "dropout keep probability");
  app.add_option("--batch-size", o.batch_size);
  app.add_option("--epochs", o.epochs);
  app.add_option("--bptt-window", o.bptt_window);
  app.add_option("--clip-norm", o.clip_norm, "global gradient-norm clip");
  app.add_flag("--no-clip", o.no_clip, "disable gradient clipping");
  app.add_option("--corpus", o.corpus, "UTF-8 text corpus (lm)");
  app.add_option("--corpus-bytes", o.corpus_bytes, "leading corpus bytes to use, 0 = all");
  app.add_option("--vocab-cap", o.vocab_cap);
  app.add_option("--embed-dim", o.embed_dim);
  app.add_option("--heldout-fraction", o.heldout_fraction);
  app.add_option("--eval-tokens", o.eval_tokens, "held-out tokens scored, 0 = all");
  app.add_option("--mnist-dir", o.mnist_dir, "directory with the four IDX files");
  app.add_option("--train-limit", o.train_limit);
  app.add_option("--test-limit", o.test_limit);
  app.add_option("--bits", o.n_bits, "memorization bits");
  app.add_option("--t-min", o.t_min);
  app.add_option("--t-max", o.t_max);
  app.add_option("--batches-per-epoch", o.batches_per_epoch);
  app.add_option("--target-rms", o.target_rms);
  app.add_option("--eval-trials", o.eval_trials);
  app.add_option("--forward-ranks", o.forward_ranks, "explicit forward rank axis")->delimiter(',');
  app.add_option("--recurrent-ranks", o.recurrent_ranks, "explicit recurrent rank axis")->delimiter(',');
  app.add_option("--rank-step", o.rank_step, "linear rank axis step, 0 = geometric");
  app.add_option("--delays", o.delays, "memorization delay axis")->delimiter(',');
  app.add_option("--trials", o.trials, "memorization trials per sweep cell");
  app.add_option("--isolines", o.isolines, "isoline levels")->delimiter(',');
  app.add_option("--threads", o.threads, "sweep worker threads");
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = tasks::read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("config " + path + ": " + e.what());
  }
}

// base -> config file (merge patch) -> flags.
RunConfig resolve_config(RunConfig base, const Overrides& o) {
  if (o.config_file) {
    nlohmann::json j = base.to_json();
    j.merge_patch(read_json_file(*o.config_file));
    base = RunConfig::from_json(j);
  }
  RunConfig& c = base;
  if (o.cell) {
    nlohmann::json j = c.to_json();
    j["cell"] = *o.cell;
    c = RunConfig::from_json(j);
  }
  auto set = [](auto& field, const auto& value) {
    if (value) field = *value;
  };
  set(c.hidden, o.hidden);
  set(c.seed, o.seed);
  set(c.output_dir, o.output_dir);
  set(c.training.learning_rate, o.learning_rate);
  if (o.lr_schedule) c.training.schedule = *o.lr_schedule == "cosine" ? nn::LrSchedule::Cosine : nn::LrSchedule::Constant;
  set(c.training.hold_fraction, o.lr_hold);
  set(c.training.keep_prob, o.keep_prob);
  set(c.training.batch_size, o.batch_size);
  set(c.training.epochs, o.epochs);
  set(c.training.bptt_window, o.bptt_window);
  if (o.clip_norm) c.training.clip_norm = *o.clip_norm;
  if (o.no_clip) c.training.clip_norm.reset();
  set(c.lm.corpus_path, o.corpus);
  set(c.lm.corpus_bytes, o.corpus_bytes);
  set(c.lm.vocab_cap, o.vocab_cap);
  set(c.lm.embed_dim, o.embed_dim);
  set(c.lm.heldout_fraction, o.heldout_fraction);
  set(c.lm.eval_tokens, o.eval_tokens);
  set(c.mnist.data_dir, o.mnist_dir);
  set(c.mnist.train_limit, o.train_limit);
  set(c.mnist.test_limit, o.test_limit);
  set(c.memorize.n_bits, o.n_bits);
  set(c.memorize.t_min, o.t_min);
  set(c.memorize.t_max, o.t_max);
  set(c.memorize.batches_per_epoch, o.batches_per_epoch);
  set(c.memorize.target_rms, o.target_rms);
  set(c.memorize.eval_trials, o.eval_trials);
  if (!o.forward_ranks.empty()) c.sweep.forward_ranks = o.forward_ranks;
  if (!o.recurrent_ranks.empty()) c.sweep.recurrent_ranks = o.recurrent_ranks;
  set(c.sweep.rank_step, o.rank_step);
  if (!o.delays.empty()) c.sweep.delays = o.delays;
  set(c.sweep.trials, o.trials);
  if (!o.isolines.empty()) c.sweep.isolines = o.isolines;
  set(c.sweep.threads, o.threads);
  c.training.seed = c.seed;
  c.validate();
  return c;
}

std::optional<std::size_t> parse_rank(const std::string& text, const char* what) {
  if (text.empty() || text == "full") return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used == text.size()) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw DomainError(std::string(what) + " must be a positive integer or 'full', got '" + text + "'");
}

// digest and seed lines of a grid file written by cmd_sweep.
std::vector<std::string> grid_provenance(const fs::path& path) {
  std::vector<std::string> out;
  const std::string text = tasks::read_text_file(path);
  if (path.extension() == ".json") {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.contains("provenance")) {
      const auto& p = j["provenance"];
      if (p.contains("digest")) out.push_back("digest: " + p["digest"].get<std::string>());
      if (p.contains("seed")) out.push_back("seed: " + std::to_string(p["seed"].get<std::uint64_t>()));
    }
    return out;
  }
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# digest: ", 0) == 0 || line.rfind("# seed: ", 0) == 0) out.push_back(line.substr(2));
  }
  return out;
}

fs::path out_dir_for(const Overrides& o, const fs::path& fallback) {
  return o.output_dir ? resolve_output_dir(*o.output_dir) : fallback;
}

fs::path parent_or_dot(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Train, compress and probe small recurrent networks."};
  app.require_subcommand(1);

  Overrides train_o, eval_o, sweep_o;
  std::string train_experiment;

  auto* train_cmd = app.add_subcommand("train", "train a model and write its archive and log");
  train_cmd->add_option("--experiment", train_o.experiment, "lm, mnist or memorize");
  add_config_flags(*train_cmd, train_o);

  std::string compress_archive, forward_rank = "full", recurrent_rank = "full";
  std::optional<std::string> compress_out;
  auto* compress_cmd = app.add_subcommand("compress", "SVD-compress an archive's cell matrices");
  compress_cmd->add_option("archive", compress_archive, "dense model archive")->required();
  compress_cmd->add_option("--forward-rank", forward_rank, "rank or 'full'");
  compress_cmd->add_option("--recurrent-rank", recurrent_rank, "rank or 'full'");
  compress_cmd->add_option("--out", compress_out, "output directory (default: the archive's)");

  std::string eval_archive;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate an archive");
  eval_cmd->add_option("archive", eval_archive, "model archive")->required();
  add_config_flags(*eval_cmd, eval_o);

  std::string sweep_archive;
  auto* sweep_cmd = app.add_subcommand("sweep", "rank sweep (temporal sweep for memorization models)");
  sweep_cmd->add_option("archive", sweep_archive, "dense model archive")->required();
  add_config_flags(*sweep_cmd, sweep_o);

  std::string beta_grid;
  double delta_f = 0.03;
  std::size_t fit_t_min = 5, fit_t_max = 30;
  std::optional<std::string> beta_out;
  auto* beta_cmd = app.add_subcommand("beta", "beta curve and linear fit from a temporal sweep grid");
  beta_cmd->add_option("grid", beta_grid, "grid.csv or grid.json from a memorization sweep")->required();
  beta_cmd->add_option("--delta-f", delta_f, "upper delta of the average")->capture_default_str();
  beta_cmd->add_option("--fit-t-min", fit_t_min)->capture_default_str();
  beta_cmd->add_option("--fit-t-max", fit_t_max)->capture_default_str();
  beta_cmd->add_option("--out", beta_out, "output directory (default: the grid's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      Experiment e = Experiment::Memorize;
      if (train_o.experiment) {
        e = experiment_from_string(*train_o.experiment);
      } else if (train_o.config_file) {
        const auto j = read_json_file(*train_o.config_file);
        if (j.contains("experiment")) e = experiment_from_string(j["experiment"].get<std::string>());
      }
      const RunConfig config = resolve_config(default_config(e), train_o);
      const TrainOutcome r = cmd_train(config, &std::cout);
      std::cout << "wrote " << (r.dir / kModelFile).string() << " after " << r.log.size() << " epochs\n";
    } else if (*compress_cmd) {
      const ModelArchive source = load_archive(compress_archive);
      CompressionPlan plan{parse_rank(forward_rank, "--forward-rank"), parse_rank(recurrent_rank, "--recurrent-rank")};
      const fs::path dir = compress_out ? resolve_output_dir(*compress_out) : parent_or_dot(compress_archive);
      const CompressOutcome r = cmd_compress(source, plan, dir);
      for (const auto& m : r.report) {
        std::cout << m.name << " " << m.rows << "x" << m.cols << " rank " << m.rank << " delta "
                  << sweep::format_double(m.delta) << " params " << m.stored_parameters << "/" << m.dense_parameters
                  << " mult-adds " << m.stored_multiply_adds << "/" << m.dense_multiply_adds << " ratio "
                  << sweep::format_double(m.ratio()) << "\n";
      }
      std::cout << "wrote " << (dir / kCompressedFile).string() << "\n";
    } else if (*eval_cmd) {
      const ModelArchive archive = load_archive(eval_archive);
      const RunConfig config = resolve_config(archive_config(archive), eval_o);
      const auto dir = eval_o.output_dir ? std::optional(resolve_output_dir(*eval_o.output_dir)) : std::nullopt;
      const EvalReport r = cmd_eval(archive, config, dir);
      std::cout << r.metric << " " << sweep::format_double(r.value) << " samples " << r.samples << "\n";
    } else if (*sweep_cmd) {
      const ModelArchive archive = load_archive(sweep_archive);
      const RunConfig config = resolve_config(archive_config(archive), sweep_o);
      const fs::path dir = out_dir_for(sweep_o, parent_or_dot(sweep_archive));
      const SweepOutcome r = cmd_sweep(archive, config, dir);
      std::cout << "grid " << r.grid.rows() << "x" << r.grid.cols() << " " << r.grid.metric << ", "
                << r.grid.failures() << " failed cells, wrote " << (dir / kGridCsvFile).string() << "\n";
      for (std::size_t i = 0; i < r.grid.rows(); ++i) {
        for (std::size_t j = 0; j < r.grid.cols(); ++j) {
          if (!r.grid.info(i, j).error.empty()) std::cerr << "cell failed: " << r.grid.info(i, j).error << "\n";
        }
      }
      if (r.failure_fraction > 0.1) return kExitSweepFailures;
    } else if (*beta_cmd) {
      const fs::path grid_path(beta_grid);
      const sweep::SweepGrid grid = read_grid(grid_path);
      const std::vector<std::string> prov = grid_provenance(grid_path);
      const fs::path dir = beta_out ? resolve_output_dir(*beta_out) : parent_or_dot(grid_path);
      const BetaOutcome r = cmd_beta(grid, delta_f, fit_t_min, fit_t_max, dir, prov);
      std::cout << "beta over " << r.curve.n_delta << " delta rows; fit T in [" << r.fit_t_min << ", " << r.fit_t_max
                << "]: slope " << sweep::format_double(r.fit.slope) << " intercept "
                << sweep::format_double(r.fit.intercept) << " r2 " << sweep::format_double(r.fit.r_squared) << "\n";
    }
    return kExitOk;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IngestionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace rnncomp::app
