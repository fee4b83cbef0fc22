#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rnncomp/compression.hpp"
#include "rnncomp/matrix.hpp"
#include "rnncomp/nn/network.hpp"
#include "rnncomp/perturbation.hpp"

namespace rnncomp::sweep {

struct Axis {
  std::string name;
  std::vector<double> values;  // strictly ascending
};

struct CellInfo {
  double delta = 0.0;  // RMS weight change of the compressed matrix; 0 when uncompressed
  std::size_t samples = 0;
  std::string error;  // non-empty for failed cells
};

// 2-D metric surface. Failed cells hold NaN.
struct SweepGrid {
  Axis axis1;
  Axis axis2;
  std::string metric;
  Matrix values;                // axis1.values.size() x axis2.values.size()
  std::vector<CellInfo> cells;  // row-major, same shape as values

  SweepGrid() = default;
  SweepGrid(Axis a1, Axis a2, std::string metric_name);

  std::size_t rows() const noexcept { return axis1.values.size(); }
  std::size_t cols() const noexcept { return axis2.values.size(); }
  CellInfo& info(std::size_t i, std::size_t j) { return cells.at(i * cols() + j); }
  const CellInfo& info(std::size_t i, std::size_t j) const { return cells.at(i * cols() + j); }
  bool missing(std::size_t i, std::size_t j) const;
  std::size_t failures() const;
  void validate() const;
};

enum class RankSpacing { Geometric, Linear };

// Geometric: 1, 2, 4, ... below full, then full. Linear: step, 2 step, ...,
// full (and 1 when step > 1).
std::vector<std::size_t> rank_axis(std::size_t full, RankSpacing spacing = RankSpacing::Geometric,
                                   std::size_t step = 1);

struct Evaluation {
  double metric = 0.0;
  std::size_t samples = 0;
};

using Evaluator = std::function<Evaluation(const nn::NetworkView&)>;

struct SweepOptions {
  std::size_t threads = 1;
  // Evaluate cells in a seeded random order; the grid must not change.
  std::optional<std::uint64_t> shuffle_seed;
};

// Cells where a rank equals the matrix's full rank leave that matrix dense.
SweepGrid rank_sweep(const nn::Network& net, std::span<const std::size_t> forward_ranks,
                     std::span<const std::size_t> recurrent_ranks, const Evaluator& evaluator, std::string metric,
                     const SweepOptions& options = {});

struct TemporalSweepConfig {
  std::vector<std::size_t> ranks;
  std::vector<std::size_t> delays;
  std::size_t trials = 1000;
  std::size_t n_bits = 8;
  std::uint64_t seed = 1;
};

// measure_error over (recurrent rank x delay); each row carries its delta.
SweepGrid temporal_sweep(const nn::Network& net, const TemporalSweepConfig& config, const SweepOptions& options = {});

// Rows reordered by ascending delta. Requires a full-rank row (delta = 0).
perturbation::ErrorSurface to_error_surface(const SweepGrid& temporal);

// 20 log10(p / p_min).
double perplexity_db(double p, double p_min);

// Replaces every finite value with perplexity_db(value, grid minimum).
SweepGrid to_perplexity_db(const SweepGrid& perplexity);

struct IsolineSpec {
  double level = 0.0;
  // Values within this distance of the level count as lying on it.
  double tolerance = 1e-12;
};

// Level crossings found by linear interpolation along every grid row and
// column, sorted by (axis1, axis2) and de-duplicated. Grid nodes lying on the
// level are returned as they are, so a grid constant at the level returns
// every node.
std::vector<std::pair<double, double>> extract_isoline(const SweepGrid& grid, const IsolineSpec& spec);

// Along a 1-D slice whose metric worsens as x decreases: walks down from the
// largest x and returns the interpolated x where the metric first passes
// `level`; x.front() when it never does. `higher_is_worse` picks the
// direction of "passes".
double threshold_crossing(std::span<const double> x, std::span<const double> y, double level, bool higher_is_worse);

// One row per cell: axis1, axis2, metric, delta, n. Missing metrics are
// empty fields. Lines starting with '#' are comments.
std::string to_csv(const SweepGrid& grid, std::span<const std::string> comments = {});
SweepGrid from_csv(std::string_view text);

nlohmann::json to_json(const SweepGrid& grid);
SweepGrid from_json(const nlohmann::json& j);

// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace rnncomp::sweep
