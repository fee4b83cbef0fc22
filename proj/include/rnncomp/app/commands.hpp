#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rnncomp/app/archive.hpp"
#include "rnncomp/app/config.hpp"
#include "rnncomp/app/experiments.hpp"
#include "rnncomp/compression.hpp"
#include "rnncomp/perturbation.hpp"
#include "rnncomp/sweep.hpp"

namespace rnncomp::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitDivergence = 4,
  kExitSweepFailures = 5,
};

// Relative paths are placed under $RNNCOMP_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_dir(const std::string& dir);

// Output file names inside a run directory.
inline constexpr const char* kModelFile = "model.rnnc";
inline constexpr const char* kCheckpointFile = "checkpoint.rnnc";
inline constexpr const char* kBestFile = "best.rnnc";
inline constexpr const char* kTrainLogFile = "train_log.csv";
inline constexpr const char* kRunFile = "run.json";
inline constexpr const char* kCompressedFile = "compressed.rnnc";
inline constexpr const char* kCompressReportFile = "compress_report.csv";
inline constexpr const char* kEvalFile = "eval.csv";
inline constexpr const char* kGridCsvFile = "grid.csv";
inline constexpr const char* kGridJsonFile = "grid.json";
inline constexpr const char* kBetaFile = "beta.csv";
inline constexpr const char* kFitFile = "fit.json";

// The RunConfig stored in an archive's metadata.
RunConfig archive_config(const ModelArchive& archive);

struct TrainOutcome {
  ModelArchive archive;
  std::vector<EpochRecord> log;
  std::filesystem::path dir;
};

// Writes model, per-epoch checkpoint, best-metric archive, train_log.csv and
// run.json. On divergence the last checkpoint is kept and DivergenceError
// propagates.
TrainOutcome cmd_train(const RunConfig& config, const Dataset& data, std::ostream* progress = nullptr);
TrainOutcome cmd_train(const RunConfig& config, std::ostream* progress = nullptr);

struct CompressOutcome {
  ModelArchive archive;
  std::vector<MatrixReport> report;
};

// Writes compressed.rnnc and compress_report.csv into `out_dir`.
CompressOutcome cmd_compress(const ModelArchive& source, const CompressionPlan& plan,
                             const std::filesystem::path& out_dir);

struct EvalReport {
  std::string metric;
  double value = 0.0;
  std::size_t samples = 0;
};

// Evaluates under the archive's plan. LM data is encoded with the archive's
// vocabulary. Writes eval.csv when `out_dir` is given.
EvalReport cmd_eval(const ModelArchive& archive, const RunConfig& config, const Dataset& data,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);
EvalReport cmd_eval(const ModelArchive& archive, const RunConfig& config,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct SweepOutcome {
  sweep::SweepGrid grid;  // raw metric: perplexity, accuracy or rms
  // Perplexity grids also get a dB view; the isolines are taken from it.
  std::optional<sweep::SweepGrid> db_grid;
  std::vector<std::pair<double, std::vector<std::pair<double, double>>>> isolines;
  double failure_fraction = 0.0;
};

// LM and MNIST: forward x recurrent rank grid. Memorization: recurrent rank
// x delay grid of recall RMS with delta per row. Writes grid.csv, grid.json,
// grid_db.csv (LM) and isoline_<level>.csv, each headed by the run digest.
SweepOutcome cmd_sweep(const ModelArchive& archive, const RunConfig& config, const Dataset& data,
                       const std::filesystem::path& out_dir);
SweepOutcome cmd_sweep(const ModelArchive& archive, const RunConfig& config, const std::filesystem::path& out_dir);

struct BetaOutcome {
  perturbation::BetaCurve curve;
  perturbation::LinearFit fit;
  std::size_t fit_t_min = 0;
  std::size_t fit_t_max = 0;
};

// Beta curve of a temporal grid plus an OLS fit of beta against T over
// [fit_t_min, fit_t_max]. Writes beta.csv and fit.json.
BetaOutcome cmd_beta(const sweep::SweepGrid& temporal, double delta_f, std::size_t fit_t_min, std::size_t fit_t_max,
                     const std::filesystem::path& out_dir, const std::vector<std::string>& provenance = {});

// Reads a grid written by cmd_sweep (grid.csv or grid.json).
sweep::SweepGrid read_grid(const std::filesystem::path& path);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace rnncomp::app
