#include "rnncomp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "rnncomp/errors.hpp"
#include "rnncomp/random.hpp"

namespace rnncomp::sweep {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

void check_axis(const Axis& a) {
  if (a.values.empty()) throw DomainError("SweepGrid: axis '" + a.name + "' is empty");
  for (std::size_t i = 1; i < a.values.size(); ++i) {
    if (!(a.values[i] > a.values[i - 1])) throw DomainError("SweepGrid: axis '" + a.name + "' is not ascending");
  }
}

std::vector<double> to_doubles(std::span<const std::size_t> v) { return {v.begin(), v.end()}; }

// Calls fn(i, j) for every cell, in order or shuffled, on `threads` workers.
template <typename Fn>
void for_each_cell(std::size_t rows, std::size_t cols, const SweepOptions& options, Fn&& fn) {
  std::vector<std::size_t> order(rows * cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.shuffle_seed) {
    Rng rng(*options.shuffle_seed);
    for (std::size_t k = order.size(); k > 1; --k) {
      std::swap(order[k - 1], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(k) - 1))]);
    }
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < order.size(); k = next++) fn(order[k] / cols, order[k] % cols);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, order.size()));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

std::optional<std::size_t> plan_rank(std::size_t rank, std::size_t full) {
  if (rank == full) return std::nullopt;
  return rank;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DomainError("grid: bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t index_of(const std::vector<double>& axis, double v) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), v);
  return static_cast<std::size_t>(it - axis.begin());
}

}  // namespace

SweepGrid::SweepGrid(Axis a1, Axis a2, std::string metric_name)
    : axis1(std::move(a1)), axis2(std::move(a2)), metric(std::move(metric_name)) {
  check_axis(axis1);
  check_axis(axis2);
  values = Matrix(rows(), cols(), kMissing);
  cells.assign(rows() * cols(), CellInfo{});
}

bool SweepGrid::missing(std::size_t i, std::size_t j) const { return !std::isfinite(values(i, j)); }

std::size_t SweepGrid::failures() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) n += missing(i, j) ? 1 : 0;
  }
  return n;
}

void SweepGrid::validate() const {
  check_axis(axis1);
  check_axis(axis2);
  if (values.rows() != rows() || values.cols() != cols() || cells.size() != rows() * cols()) {
    throw DomainError("SweepGrid: value array does not match the axes");
  }
}

std::vector<std::size_t> rank_axis(std::size_t full, RankSpacing spacing, std::size_t step) {
  if (full == 0) throw DomainError("rank_axis: full rank must be positive");
  std::vector<std::size_t> out;
  if (spacing == RankSpacing::Geometric) {
    for (std::size_t r = 1; r < full; r *= 2) out.push_back(r);
  } else {
    if (step == 0) throw DomainError("rank_axis: step must be positive");
    if (step > 1) out.push_back(1);
    for (std::size_t r = step; r < full; r += step) out.push_back(r);
  }
  out.push_back(full);
  return out;
}

SweepGrid rank_sweep(const nn::Network& net, std::span<const std::size_t> forward_ranks,
                     std::span<const std::size_t> recurrent_ranks, const Evaluator& evaluator, std::string metric,
                     const SweepOptions& options) {
  SweepGrid grid({"forward_rank", to_doubles(forward_ranks)}, {"recurrent_rank", to_doubles(recurrent_ranks)},
                 std::move(metric));
  const RankLimits lim = rank_limits(net);
  const CompressionPlan widest{forward_ranks.empty() ? std::nullopt : std::optional(forward_ranks.back()),
                               recurrent_ranks.empty() ? std::nullopt : std::optional(recurrent_ranks.back())};
  validate_plan(net, widest);
  const ModelFactors factors = factorize(net);
  for_each_cell(grid.rows(), grid.cols(), options, [&](std::size_t i, std::size_t j) {
    CellInfo& info = grid.info(i, j);
    const CompressionPlan plan{plan_rank(forward_ranks[i], lim.forward), plan_rank(recurrent_ranks[j], lim.recurrent)};
    try {
      const CompressedModel cm = compress_model(net, plan, factors);
      const Evaluation e = evaluator(cm.view());
      grid.values(i, j) = e.metric;
      info.samples = e.samples;
      const auto report = compression_report(net, plan, factors);
      info.delta = report[1].delta;
    } catch (const std::exception& ex) {
      grid.values(i, j) = kMissing;
      info.error = ex.what();
    }
  });
  return grid;
}

SweepGrid temporal_sweep(const nn::Network& net, const TemporalSweepConfig& config, const SweepOptions& options) {
  std::vector<double> delays(config.delays.begin(), config.delays.end());
  SweepGrid grid({"recurrent_rank", to_doubles(config.ranks)}, {"delay", std::move(delays)}, "rms");
  const RankLimits lim = rank_limits(net);
  validate_plan(net, {std::nullopt, config.ranks.back()});
  const ModelFactors factors{SvdFactors{}, svd(net.recurrent_weights())};
  const Matrix& wr = net.recurrent_weights();
  for_each_cell(grid.rows(), grid.cols(), options, [&](std::size_t i, std::size_t j) {
    CellInfo& info = grid.info(i, j);
    try {
      const CompressedModel cm = compress_model(net, {std::nullopt, plan_rank(config.ranks[i], lim.recurrent)}, factors);
      const auto m = perturbation::measure_error(cm.view(), config.n_bits, config.delays[j], config.trials, config.seed);
      grid.values(i, j) = m.rms;
      info.samples = m.trials;
      info.delta = compression_delta(factors.recurrent, wr.rows(), wr.cols(), config.ranks[i]);
    } catch (const std::exception& ex) {
      grid.values(i, j) = kMissing;
      info.error = ex.what();
    }
  });
  return grid;
}

perturbation::ErrorSurface to_error_surface(const SweepGrid& temporal) {
  temporal.validate();
  std::vector<std::size_t> order(temporal.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto delta = [&](std::size_t i) { return temporal.info(i, 0).delta; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return delta(a) < delta(b); });
  perturbation::ErrorSurface s;
  for (double d : temporal.axis2.values) {
    if (d < 0.0 || d != std::floor(d)) throw DomainError("to_error_surface: delays must be non-negative integers");
    s.delays.push_back(static_cast<std::size_t>(d));
  }
  s.rms = Matrix(temporal.rows(), temporal.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    s.deltas.push_back(delta(order[k]));
    for (std::size_t j = 0; j < temporal.cols(); ++j) s.rms(k, j) = temporal.values(order[k], j);
  }
  s.validate();
  return s;
}

double perplexity_db(double p, double p_min) {
  if (!(p > 0.0) || !(p_min > 0.0)) throw DomainError("perplexity_db: perplexities must be positive");
  return 20.0 * std::log10(p / p_min);
}

SweepGrid to_perplexity_db(const SweepGrid& perplexity) {
  double p_min = std::numeric_limits<double>::infinity();
  for (double v : perplexity.values.values()) {
    if (std::isfinite(v)) p_min = std::min(p_min, v);
  }
  if (!std::isfinite(p_min)) throw DomainError("to_perplexity_db: grid has no finite cells");
  SweepGrid out = perplexity;
  out.metric = "perplexity_db";
  for (double& v : out.values.values()) {
    if (std::isfinite(v)) v = perplexity_db(v, p_min);
  }
  return out;
}

std::vector<std::pair<double, double>> extract_isoline(const SweepGrid& grid, const IsolineSpec& spec) {
  grid.validate();
  const double level = spec.level;
  std::vector<std::pair<double, double>> pts;
  auto on_level = [&](double v) { return std::abs(v - level) <= spec.tolerance; };
  // Crossing strictly inside the segment (a, va) -> (b, vb).
  auto crossing = [&](double a, double va, double b, double vb) -> std::optional<double> {
    if (on_level(va) || on_level(vb)) return std::nullopt;
    if ((va - level) * (vb - level) >= 0.0) return std::nullopt;
    return a + (level - va) * (b - a) / (vb - va);
  };
  const auto& x = grid.axis1.values;
  const auto& y = grid.axis2.values;
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      if (grid.missing(i, j)) continue;
      const double v = grid.values(i, j);
      if (on_level(v)) pts.emplace_back(x[i], y[j]);
      if (j + 1 < grid.cols() && !grid.missing(i, j + 1)) {
        if (auto c = crossing(y[j], v, y[j + 1], grid.values(i, j + 1))) pts.emplace_back(x[i], *c);
      }
      if (i + 1 < grid.rows() && !grid.missing(i + 1, j)) {
        if (auto c = crossing(x[i], v, x[i + 1], grid.values(i + 1, j))) pts.emplace_back(*c, y[j]);
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double threshold_crossing(std::span<const double> x, std::span<const double> y, double level, bool higher_is_worse) {
  if (x.empty() || x.size() != y.size()) throw DomainError("threshold_crossing: axis and values differ in length");
  auto worse = [&](double v) {
    if (!std::isfinite(v)) throw DomainError("threshold_crossing: missing value");
    return higher_is_worse ? v > level : v < level;
  };
  const std::size_t n = x.size();
  if (worse(y[n - 1])) return x[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    if (worse(y[k])) return x[k] + (level - y[k]) * (x[k + 1] - x[k]) / (y[k + 1] - y[k]);
  }
  return x.front();
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw DomainError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::string to_csv(const SweepGrid& grid, std::span<const std::string> comments) {
  grid.validate();
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += grid.axis1.name + "," + grid.axis2.name + "," + grid.metric + ",delta,n\n";
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      const CellInfo& info = grid.info(i, j);
      out += format_double(grid.axis1.values[i]) + "," + format_double(grid.axis2.values[j]) + ",";
      if (!grid.missing(i, j)) out += format_double(grid.values(i, j));
      out += "," + format_double(info.delta) + "," + std::to_string(info.samples) + "\n";
    }
  }
  return out;
}

SweepGrid from_csv(std::string_view text) {
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::string_view> header;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, ',');
    if (fields.size() != 5) throw DomainError("grid csv: expected 5 fields, got " + std::to_string(fields.size()));
    if (header.empty()) {
      header = fields;
    } else {
      rows.push_back(std::move(fields));
    }
  }
  if (header.empty() || rows.empty()) throw DomainError("grid csv: no data");
  std::vector<double> a1, a2;
  for (const auto& r : rows) {
    a1.push_back(parse_double(r[0]));
    a2.push_back(parse_double(r[1]));
  }
  for (auto* a : {&a1, &a2}) {
    std::sort(a->begin(), a->end());
    a->erase(std::unique(a->begin(), a->end()), a->end());
  }
  SweepGrid grid({std::string(header[0]), a1}, {std::string(header[1]), a2}, std::string(header[2]));
  if (rows.size() != grid.rows() * grid.cols()) throw DomainError("grid csv: cells do not form a full grid");
  for (const auto& r : rows) {
    const std::size_t i = index_of(grid.axis1.values, parse_double(r[0]));
    const std::size_t j = index_of(grid.axis2.values, parse_double(r[1]));
    grid.values(i, j) = r[2].empty() ? kMissing : parse_double(r[2]);
    grid.info(i, j).delta = parse_double(r[3]);
    grid.info(i, j).samples = static_cast<std::size_t>(parse_double(r[4]));
  }
  return grid;
}

nlohmann::json to_json(const SweepGrid& grid) {
  grid.validate();
  nlohmann::json j;
  j["metric"] = grid.metric;
  j["axes"] = nlohmann::json::array();
  for (const Axis* a : {&grid.axis1, &grid.axis2}) j["axes"].push_back({{"name", a->name}, {"values", a->values}});
  nlohmann::json values = nlohmann::json::array(), deltas = nlohmann::json::array(),
                 samples = nlohmann::json::array(), errors = nlohmann::json::array();
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    nlohmann::json vr = nlohmann::json::array(), dr = nlohmann::json::array(), sr = nlohmann::json::array();
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const CellInfo& info = grid.info(r, c);
      vr.push_back(grid.missing(r, c) ? nlohmann::json(nullptr) : nlohmann::json(grid.values(r, c)));
      dr.push_back(info.delta);
      sr.push_back(info.samples);
      if (!info.error.empty()) errors.push_back({{"row", r}, {"col", c}, {"error", info.error}});
    }
    values.push_back(std::move(vr));
    deltas.push_back(std::move(dr));
    samples.push_back(std::move(sr));
  }
  j["values"] = std::move(values);
  j["delta"] = std::move(deltas);
  j["samples"] = std::move(samples);
  j["failures"] = std::move(errors);
  return j;
}

SweepGrid from_json(const nlohmann::json& j) {
  try {
    const auto& axes = j.at("axes");
    if (axes.size() != 2) throw DomainError("grid json: expected two axes");
    SweepGrid grid({axes[0].at("name").get<std::string>(), axes[0].at("values").get<std::vector<double>>()},
                   {axes[1].at("name").get<std::string>(), axes[1].at("values").get<std::vector<double>>()},
                   j.at("metric").get<std::string>());
    const auto& values = j.at("values");
    const auto& deltas = j.at("delta");
    const auto& samples = j.at("samples");
    if (values.size() != grid.rows()) throw DomainError("grid json: row count mismatch");
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      if (values[r].size() != grid.cols()) throw DomainError("grid json: column count mismatch");
      for (std::size_t c = 0; c < grid.cols(); ++c) {
        grid.values(r, c) = values[r][c].is_null() ? kMissing : values[r][c].get<double>();
        grid.info(r, c).delta = deltas.at(r).at(c).get<double>();
        grid.info(r, c).samples = samples.at(r).at(c).get<std::size_t>();
      }
    }
    if (j.contains("failures")) {
      for (const auto& f : j["failures"]) {
        grid.info(f.at("row").get<std::size_t>(), f.at("col").get<std::size_t>()).error = f.at("error").get<std::string>();
      }
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("grid json: ") + e.what());
  }
}

}  // namespace rnncomp::sweep
