#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "rnncomp/errors.hpp"
#include "rnncomp/sweep.hpp"
#include "rnncomp/tasks.hpp"
#include "test_support.hpp"

using namespace rnncomp;
using namespace rnncomp::sweep;
using testing::random_vector;

namespace {

nn::Network classifier(std::uint64_t seed) {
  Rng rng(seed);
  nn::NetworkSpec spec;
  spec.cell = nn::CellKind::Mgru;
  spec.input_dim = 5;
  spec.hidden = 8;
  spec.output_dim = 3;
  spec.readout = nn::Readout::MeanPool;
  return initialize(spec, rng);
}

// Mean cross-entropy over a fixed synthetic set: deterministic and sensitive
// to every weight.
Evaluator fixed_set_loss(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<nn::Example> data;
  for (int k = 0; k < 6; ++k) {
    nn::Example ex;
    for (int t = 0; t < 5; ++t) ex.inputs.push_back(random_vector(5, rng));
    ex.labels = {k % 3};
    data.push_back(ex);
  }
  return [data](const nn::NetworkView& v) {
    double loss = 0.0;
    for (const auto& ex : data) loss += nn::example_loss(v, nn::forward_sequence(v, ex), ex).loss;
    return Evaluation{loss / static_cast<double>(data.size()), data.size()};
  };
}

SweepGrid synthetic(std::vector<double> a, std::vector<double> b, auto f) {
  SweepGrid g({"a", a}, {"b", b}, "m");
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) g.values(i, j) = f(a[i], b[j]);
  }
  return g;
}

}  // namespace

TEST_CASE("perplexity_db") {
  CHECK(perplexity_db(37.0, 37.0) == 0.0);
  CHECK(perplexity_db(1.122 * 80.0, 80.0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(perplexity_db(10.0, 1.0) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(perplexity_db(500.0, 50.0) == doctest::Approx(20.0).epsilon(1e-14));
  double prev = -1.0;
  for (double p = 10.0; p < 1000.0; p *= 1.07) {
    const double db = perplexity_db(p, 10.0);
    CHECK(db > prev);
    prev = db;
  }
  CHECK_THROWS_AS(perplexity_db(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(perplexity_db(2.0, -1.0), DomainError);
}

TEST_CASE("rank axes") {
  CHECK(rank_axis(28) == std::vector<std::size_t>{1, 2, 4, 8, 16, 28});
  CHECK(rank_axis(128) == std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64, 128});
  CHECK(rank_axis(1) == std::vector<std::size_t>{1});
  CHECK(rank_axis(12, RankSpacing::Linear, 5) == std::vector<std::size_t>{1, 5, 10, 12});
  CHECK(rank_axis(3, RankSpacing::Linear) == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(rank_axis(0), DomainError);
}

TEST_CASE("rank_sweep") {
  const nn::Network net = classifier(71);
  const Evaluator eval = fixed_set_loss(72);
  const double base = eval(nn::view(net)).metric;

  SUBCASE("single full-rank cell equals the uncompressed metric") {
    const std::size_t f[] = {5}, r[] = {8};
    const SweepGrid g = rank_sweep(net, f, r, eval, "loss");
    CHECK(g.values(0, 0) == base);
    CHECK(g.info(0, 0).delta == 0.0);
    CHECK(g.info(0, 0).samples == 6);
  }
  SUBCASE("forward row matches individual compressions") {
    const std::size_t f[] = {1, 2, 3, 5}, r[] = {8};
    const SweepGrid g = rank_sweep(net, f, r, eval, "loss");
    for (std::size_t i = 0; i < 3; ++i) {
      const CompressedModel cm = compress_model(net, {f[i], std::nullopt});
      CHECK(g.values(i, 0) == eval(cm.view()).metric);
    }
    CHECK(g.values(3, 0) == base);
  }
  SUBCASE("evaluation order and threading do not change the grid") {
    const auto f = rank_axis(5, RankSpacing::Linear);
    const auto r = rank_axis(8);
    const SweepGrid a = rank_sweep(net, f, r, eval, "loss");
    const SweepGrid b = rank_sweep(net, f, r, eval, "loss", {3, 1234});
    CHECK(to_csv(a) == to_csv(b));
    double prev = INFINITY;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      CHECK(a.info(0, j).delta <= prev);
      prev = a.info(0, j).delta;
    }
  }
  SUBCASE("failing cells are recorded as missing") {
    const std::size_t f[] = {1, 5}, r[] = {1, 8};
    Evaluator flaky = [&](const nn::NetworkView& v) {
      if (v.cell.recurrent.is_factored()) throw std::runtime_error("boom");
      return eval(v);
    };
    const SweepGrid g = rank_sweep(net, f, r, flaky, "loss");
    CHECK(g.failures() == 2);
    CHECK(g.missing(0, 0));
    CHECK(g.info(1, 0).error == "boom");
    CHECK(g.values(1, 1) == base);
  }
  SUBCASE("out-of-range axes are rejected up front") {
    const std::size_t f[] = {1, 6}, r[] = {8};
    CHECK_THROWS_AS(rank_sweep(net, f, r, eval, "loss"), DomainError);
  }
}

TEST_CASE("temporal_sweep") {
  Rng rng(73);
  nn::NetworkSpec spec;
  spec.cell = nn::CellKind::Rnn;
  spec.input_dim = tasks::kMemorizationChannels;
  spec.hidden = 6;
  spec.output_dim = 1;
  spec.loss = nn::LossKind::SigmoidCrossEntropy;
  const nn::Network net = initialize(spec, rng);

  TemporalSweepConfig cfg;
  cfg.ranks = {1, 3, 6};
  cfg.delays = {0, 2, 5};
  cfg.trials = 4;
  cfg.n_bits = 3;
  cfg.seed = 11;
  const SweepGrid g = temporal_sweep(net, cfg);
  CHECK(g.axis1.name == "recurrent_rank");
  CHECK(g.axis2.name == "delay");
  CHECK(g.info(2, 0).delta == 0.0);
  CHECK(g.info(0, 0).delta > g.info(1, 0).delta);
  CHECK(g.info(1, 1).delta == g.info(1, 0).delta);
  CHECK(g.values(2, 1) == perturbation::measure_error(nn::view(net), 3, 2, 4, 11).rms);
  const CompressedModel cm = compress_model(net, {std::nullopt, 3});
  CHECK(g.values(1, 2) == perturbation::measure_error(cm.view(), 3, 5, 4, 11).rms);

  const auto surface = to_error_surface(g);
  CHECK(surface.deltas.front() == 0.0);
  CHECK(surface.deltas.back() == g.info(0, 0).delta);
  CHECK(surface.rms(0, 1) == g.values(2, 1));
  CHECK(surface.delays == std::vector<std::size_t>{0, 2, 5});

  cfg.ranks = {1, 3};
  CHECK_THROWS_AS(to_error_surface(temporal_sweep(net, cfg)), DomainError);
}

TEST_CASE("extract_isoline") {
  SUBCASE("constant grid at the level returns every node") {
    const SweepGrid g = synthetic({1, 2, 3}, {10, 20}, [](double, double) { return 5.0; });
    const auto pts = extract_isoline(g, {5.0});
    CHECK(pts.size() == 6);
    CHECK(pts.front() == std::pair{1.0, 10.0});
  }
  SUBCASE("level never crossed") {
    const SweepGrid g = synthetic({1, 2}, {1, 2}, [](double a, double b) { return a + b; });
    CHECK(extract_isoline(g, {10.0}).empty());
  }
  SUBCASE("plane a + b") {
    const std::vector<double> a{1, 2, 4, 8, 16}, b{1, 3, 5, 7, 9, 11};
    const SweepGrid g = synthetic(a, b, [](double x, double y) { return x + y; });
    const auto pts = extract_isoline(g, {12.5});
    REQUIRE(!pts.empty());
    for (auto [x, y] : pts) CHECK(x + y == doctest::Approx(12.5).epsilon(1e-14));
    for (std::size_t k = 1; k < pts.size(); ++k) {
      CHECK(pts[k].first >= pts[k - 1].first);
      CHECK(pts[k].second <= pts[k - 1].second);
    }
  }
  SUBCASE("monotone grid gives a monotone isoline") {
    const std::vector<double> a{1, 2, 4, 8, 16, 28}, b{1, 2, 4, 8, 16, 32, 64};
    const SweepGrid g = synthetic(a, b, [](double x, double y) { return 100.0 - 40.0 / x - 60.0 / std::sqrt(y); });
    const auto pts = extract_isoline(g, {80.0});
    REQUIRE(pts.size() >= 3);
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].second <= pts[k - 1].second + 1e-12);
  }
  SUBCASE("missing cells are skipped") {
    SweepGrid g = synthetic({1, 2, 3}, {1, 2, 3}, [](double x, double y) { return x + y; });
    g.values(1, 1) = NAN;
    for (auto [x, y] : extract_isoline(g, {4.5})) CHECK(x + y == doctest::Approx(4.5));
  }
}

TEST_CASE("threshold_crossing") {
  const double x[] = {1, 2, 4, 8};
  const double db[] = {9.0, 3.0, 0.5, 0.0};
  CHECK(threshold_crossing(x, db, 1.0, true) == doctest::Approx(2.0 + (1.0 - 3.0) * 2.0 / (0.5 - 3.0)));
  CHECK(threshold_crossing(x, db, 20.0, true) == 1.0);
  CHECK(threshold_crossing(x, db, -1.0, true) == 8.0);
  const double acc[] = {0.2, 0.9, 0.97, 0.99};
  CHECK(threshold_crossing(x, acc, 0.95, false) == doctest::Approx(2.0 + (0.95 - 0.9) * 2.0 / 0.07));
}

TEST_CASE("grid serialization round trips") {
  SweepGrid g = synthetic({1, 2, 64}, {0, 5}, [](double a, double b) { return 0.1 * a + b / 3.0; });
  g.values(2, 1) = NAN;
  g.info(0, 1).delta = 0.0123456789;
  g.info(1, 0).samples = 1000;
  const std::string comments[] = {"config_digest=abc"};
  const std::string csv = to_csv(g, comments);
  CHECK(csv.rfind("# config_digest=abc\na,b,m,delta,n\n", 0) == 0);
  const SweepGrid back = from_csv(csv);
  CHECK(to_csv(back, comments) == csv);
  CHECK(back.missing(2, 1));
  CHECK(back.values(0, 1) == g.values(0, 1));

  const auto j = to_json(g);
  CHECK(to_json(from_json(j)).dump() == j.dump());
  CHECK(j["values"][2][1].is_null());

  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(64.0) == "64");
  CHECK_THROWS_AS(from_csv("a,b,m,delta,n\n1,1,2,0,1\n1,2,2,0,1\n2,1,2,0,1\n"), DomainError);
  CHECK_THROWS_AS(from_csv("a,b\n"), DomainError);
}
