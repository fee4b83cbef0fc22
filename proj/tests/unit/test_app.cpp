#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rnncomp/app/commands.hpp"
#include "rnncomp/errors.hpp"

using namespace rnncomp;
using namespace rnncomp::app;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rnncomp_app_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

RunConfig tiny_memorize(const fs::path& out) {
  RunConfig c = default_config(Experiment::Memorize);
  c.hidden = 6;
  c.training.epochs = 2;
  c.memorize.batches_per_epoch = 3;
  c.memorize.t_max = 4;
  c.memorize.eval_trials = 4;
  c.training.batch_size = 8;
  c.output_dir = out.string();
  return c;
}

// A small corpus with a vocabulary of exactly 40 words plus the specials.
fs::path write_corpus(const fs::path& dir) {
  std::string text;
  Rng rng(5);
  for (int line = 0; line < 400; ++line) {
    for (int w = 0; w < 10; ++w) text += "w" + std::to_string(rng.integer(0, 39)) + " ";
    text += "\n";
  }
  const fs::path p = dir / "corpus.txt";
  write_text(p, text);
  return p;
}

RunConfig tiny_lm(const fs::path& corpus, const fs::path& out) {
  RunConfig c = default_config(Experiment::Lm);
  c.hidden = 8;
  c.lm.corpus_path = corpus.string();
  c.lm.embed_dim = 6;
  c.training.epochs = 0;
  c.output_dir = out.string();
  return c;
}

void put_u32be(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

// Canonical-name IDX files with n random 28x28 images.
void write_mnist_fixture(const fs::path& dir, std::size_t n_train, std::size_t n_test) {
  Rng rng(17);
  auto images = [&](std::size_t n) {
    std::vector<std::uint8_t> b;
    put_u32be(b, 0x803);
    put_u32be(b, static_cast<std::uint32_t>(n));
    put_u32be(b, 28);
    put_u32be(b, 28);
    for (std::size_t k = 0; k < n * 784; ++k) b.push_back(static_cast<std::uint8_t>(rng.integer(0, 255)));
    return b;
  };
  auto labels = [&](std::size_t n) {
    std::vector<std::uint8_t> b;
    put_u32be(b, 0x801);
    put_u32be(b, static_cast<std::uint32_t>(n));
    for (std::size_t k = 0; k < n; ++k) b.push_back(static_cast<std::uint8_t>(rng.integer(0, 9)));
    return b;
  };
  auto put = [&](const char* name, const std::vector<std::uint8_t>& b) {
    std::ofstream out(dir / name, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  };
  put("train-images-idx3-ubyte", images(n_train));
  put("train-labels-idx1-ubyte", labels(n_train));
  put("t10k-images-idx3-ubyte", images(n_test));
  put("t10k-labels-idx1-ubyte", labels(n_test));
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rnncomp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("archive round trip is byte-exact") {
  Rng rng(3);
  SUBCASE("dense memorization model") {
    nn::NetworkSpec spec;
    spec.input_dim = 2;
    spec.hidden = 5;
    spec.loss = nn::LossKind::SigmoidCrossEntropy;
    ModelArchive a;
    a.experiment = "memorize";
    a.network = nn::initialize(spec, rng);
    a.metadata = {{"note", "x"}, {"epochs_completed", 3}};
    const auto bytes = serialize(a);
    const ModelArchive b = deserialize(bytes);
    CHECK(serialize(b) == bytes);
    CHECK(std::ranges::equal(b.network.recurrent_weights().values(), a.network.recurrent_weights().values()));
    CHECK(b.metadata == a.metadata);
    CHECK_FALSE(b.compressed());
  }
  SUBCASE("compressed language model with vocabulary") {
    nn::NetworkSpec spec;
    spec.cell = nn::CellKind::Mgru;
    spec.vocab_size = 7;
    spec.input_dim = 4;
    spec.hidden = 5;
    spec.output_dim = 7;
    ModelArchive a;
    a.experiment = "lm";
    a.network = nn::initialize(spec, rng);
    a.vocab = tasks::Vocab({"<unk>", "<eos>", "a", "b", "c", "d", "e"});
    const CompressedModel m = compress_model(a.network, {2, 3});
    const ModelArchive c = compressed_archive(a, m);
    const auto bytes = serialize(c);
    const ModelArchive d = deserialize(bytes);
    CHECK(serialize(d) == bytes);
    REQUIRE(d.compressed());
    CHECK(d.plan().forward_rank == 2);
    CHECK(d.plan().recurrent_rank == 3);
    CHECK(d.vocab->tokens() == a.vocab->tokens());

    nn::Example ex;
    ex.tokens = {2, 3, 4, 5};
    ex.labels = {3, 4, 5, 6};
    const auto want = nn::forward_sequence(m.view(), ex);
    const CompressedModel dm = d.model();
    const auto got = nn::forward_sequence(dm.view(), ex);
    CHECK(got.logits.back() == want.logits.back());
  }
  SUBCASE("file save and reload") {
    TempDir tmp("archive_file");
    nn::NetworkSpec spec;
    spec.hidden = 3;
    ModelArchive a;
    a.experiment = "memorize";
    a.network = nn::initialize(spec, rng);
    save_archive(a, tmp.path / "m.rnnc");
    const ModelArchive b = load_archive(tmp.path / "m.rnnc");
    save_archive(b, tmp.path / "n.rnnc");
    CHECK(slurp(tmp.path / "m.rnnc") == slurp(tmp.path / "n.rnnc"));
    CHECK_FALSE(fs::exists(tmp.path / "m.rnnc.tmp"));
  }
}

TEST_CASE("archive rejects foreign and damaged files") {
  Rng rng(4);
  nn::NetworkSpec spec;
  spec.hidden = 3;
  ModelArchive a;
  a.experiment = "memorize";
  a.network = nn::initialize(spec, rng);
  const auto bytes = serialize(a);

  auto version = bytes;
  version[8] = 2;
  try {
    deserialize(version, "v2.rnnc");
    FAIL("version 2 accepted");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
    CHECK(e.offset() == 8);
  }
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize(magic), IngestionError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize(truncated), IngestionError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize(trailing), IngestionError);
  CHECK_THROWS_AS(load_archive("/nonexistent/m.rnnc"), IngestionError);
}

TEST_CASE("run config round trip and digest") {
  for (Experiment e : {Experiment::Lm, Experiment::Mnist, Experiment::Memorize}) {
    RunConfig c = default_config(e);
    c.lm.corpus_path = "c.txt";
    c.mnist.data_dir = "mnist";
    c.sweep.forward_ranks = {1, 4, 9};
    c.sweep.isolines = {0.5, 1.0};
    c.training.clip_norm.reset();
    const RunConfig d = RunConfig::from_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK(d.digest() == c.digest());
    CHECK(c.digest().size() == 16);
  }
  RunConfig c = default_config(Experiment::Memorize);
  const std::string base = c.digest();
  c.output_dir = "elsewhere";
  c.sweep.threads = 4;
  CHECK(c.digest() == base);
  c.seed = 2;
  CHECK(c.digest() != base);

  // A constant schedule is not serialized, a cosine one is.
  CHECK(default_config(Experiment::Memorize).to_json()["training"]["lr_schedule"] == "cosine");
  CHECK_FALSE(default_config(Experiment::Mnist).to_json()["training"].contains("lr_schedule"));
  nlohmann::json j = default_config(Experiment::Memorize).to_json();
  j["training"]["lr_schedule"] = "step";
  CHECK_THROWS_AS(RunConfig::from_json(j), DomainError);

  CHECK(to_string(experiment_from_string("mnist")) == "mnist");
  CHECK_THROWS_AS(experiment_from_string("vision"), DomainError);
  RunConfig bad = default_config(Experiment::Lm);
  CHECK_THROWS_AS(bad.validate(), DomainError);  // no corpus
  bad = default_config(Experiment::Memorize);
  bad.memorize.t_min = 9;
  bad.memorize.t_max = 3;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = default_config(Experiment::Memorize);
  bad.sweep.recurrent_ranks = {4, 2};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(RunConfig::from_json({{"experiment", "lm"}}), DomainError);
}

TEST_CASE("output root") {
  ::setenv("RNNCOMP_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(resolve_output_dir("run") == fs::path("/tmp/root/run"));
  CHECK(resolve_output_dir("/abs/run") == fs::path("/abs/run"));
  ::unsetenv("RNNCOMP_OUTPUT_ROOT");
  CHECK(resolve_output_dir("run") == fs::path("run"));
}

TEST_CASE("train writes archive, log and sidecar") {
  TempDir tmp("train");
  const RunConfig c = tiny_memorize(tmp.path / "a");
  const TrainOutcome r = cmd_train(c);
  REQUIRE(r.log.size() == 2);
  for (const char* f : {kModelFile, kCheckpointFile, kBestFile, kTrainLogFile, kRunFile}) {
    CHECK(fs::exists(tmp.path / "a" / f));
  }
  const std::string log = slurp(tmp.path / "a" / kTrainLogFile);
  CHECK(log.find("# digest: " + c.digest()) != std::string::npos);
  CHECK(log.find("epoch,train_loss,rms,samples\n1,") != std::string::npos);

  const ModelArchive m = load_archive(tmp.path / "a" / kModelFile);
  CHECK(m.metadata["epochs_completed"] == 2);
  CHECK(archive_config(m).digest() == c.digest());
  const EvalReport e = cmd_eval(m, c);
  CHECK(e.metric == "rms");
  CHECK(e.value == r.log.back().metric);
  CHECK(e.samples == 5 * 4);

  SUBCASE("identical config reruns are byte-identical") {
    RunConfig c2 = c;
    c2.output_dir = (tmp.path / "b").string();
    cmd_train(c2);
    for (const char* f : {kModelFile, kTrainLogFile, kRunFile}) {
      CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
    }
  }
  SUBCASE("zero epochs gives a loadable initial archive") {
    RunConfig z = c;
    z.training.epochs = 0;
    z.output_dir = (tmp.path / "z").string();
    const TrainOutcome zr = cmd_train(z);
    CHECK(zr.log.empty());
    const ModelArchive za = load_archive(tmp.path / "z" / kModelFile);
    CHECK(za.metadata["epochs_completed"] == 0);
    CHECK(cmd_eval(za, z).value > 0.4);
  }
}

TEST_CASE("compress reports") {
  TempDir tmp("compress");
  Rng rng(8);
  SUBCASE("full plan leaves the model untouched") {
    nn::NetworkSpec spec;
    spec.input_dim = 2;
    spec.hidden = 6;
    spec.loss = nn::LossKind::SigmoidCrossEntropy;
    ModelArchive a;
    a.experiment = "memorize";
    a.network = nn::initialize(spec, rng);
    const CompressOutcome r = cmd_compress(a, CompressionPlan::full(), tmp.path);
    REQUIRE(r.report.size() == 2);
    for (const auto& m : r.report) {
      CHECK(m.ratio() == 1.0);
      CHECK(m.delta == 0.0);
    }
    CHECK(serialize(r.archive) == serialize(a));
    CHECK(fs::exists(tmp.path / kCompressReportFile));
  }
  SUBCASE("500x500 recurrent matrix at rank 100") {
    nn::NetworkSpec spec;
    spec.input_dim = 2;
    spec.hidden = 500;
    ModelArchive a;
    a.experiment = "memorize";
    a.network = nn::initialize(spec, rng);
    const CompressOutcome r = cmd_compress(a, {std::nullopt, 100}, tmp.path);
    const MatrixReport& rec = r.report[1];
    CHECK(rec.name == "cell.recurrent");
    CHECK(rec.stored_parameters == 100000);
    CHECK(rec.dense_parameters == 250000);
    CHECK(rec.ratio() == doctest::Approx(0.4));
    CHECK(rec.stored_multiply_adds == 100000 + 500);
    CHECK(rec.dense_multiply_adds == 250000 + 500);
    const std::string csv = slurp(tmp.path / kCompressReportFile);
    CHECK(csv.find("cell.recurrent,500,500,100,1,") != std::string::npos);
  }
  SUBCASE("MNIST forward rank above 28 is rejected with the valid range") {
    nn::NetworkSpec spec;
    spec.cell = nn::CellKind::Mgru;
    spec.input_dim = 28;
    spec.hidden = 32;
    spec.output_dim = 10;
    ModelArchive a;
    a.experiment = "mnist";
    a.network = nn::initialize(spec, rng);
    try {
      cmd_compress(a, {29, std::nullopt}, tmp.path);
      FAIL("rank 29 accepted");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("[1, 28]") != std::string::npos);
    }
    CHECK_NOTHROW(cmd_compress(a, {28, std::nullopt}, tmp.path));
  }
}

TEST_CASE("language-model eval and sweep") {
  TempDir tmp("lm");
  const fs::path corpus = write_corpus(tmp.path);
  const RunConfig c = tiny_lm(corpus, tmp.path / "run");
  const Dataset data = load_dataset(c);
  const std::size_t v = data.lm->vocab.size();
  CHECK(v == 42);
  const TrainOutcome t = cmd_train(c, data);

  // Near-uniform logits at initialization.
  const EvalReport e = cmd_eval(t.archive, c);
  CHECK(e.metric == "perplexity");
  CHECK(e.value == doctest::Approx(static_cast<double>(v)).epsilon(0.05));
  CHECK(cmd_eval(t.archive, c).value == e.value);

  const CompressOutcome full = cmd_compress(t.archive, CompressionPlan::full(), tmp.path / "full");
  CHECK(cmd_eval(full.archive, c).value == e.value);

  RunConfig one = c;
  const RankLimits lim = rank_limits(t.archive.network);
  one.sweep.forward_ranks = {lim.forward};
  one.sweep.recurrent_ranks = {lim.recurrent};
  const SweepOutcome s = cmd_sweep(t.archive, one, data, tmp.path / "one");
  REQUIRE(s.grid.rows() == 1);
  REQUIRE(s.grid.cols() == 1);
  CHECK(s.grid.values(0, 0) == e.value);
  REQUIRE(s.db_grid);
  CHECK(s.db_grid->values(0, 0) == 0.0);
  CHECK(fs::exists(tmp.path / "one" / "isoline_1.csv"));

  RunConfig other = c;
  other.experiment = Experiment::Memorize;
  CHECK_THROWS_AS(cmd_eval(t.archive, other), DomainError);
}

TEST_CASE("MNIST sweep writes requested isolines") {
  TempDir tmp("mnist");
  write_mnist_fixture(tmp.path, 12, 10);
  RunConfig c = default_config(Experiment::Mnist);
  c.hidden = 6;
  c.training.epochs = 1;
  c.training.batch_size = 4;
  c.mnist.data_dir = tmp.path.string();
  c.output_dir = (tmp.path / "run").string();
  c.sweep.isolines = {0.985};
  c.sweep.threads = 2;
  const TrainOutcome t = cmd_train(c);
  const SweepOutcome s = cmd_sweep(t.archive, c, tmp.path / "sweep");
  CHECK(s.grid.metric == "accuracy");
  CHECK(s.grid.axis1.values.back() == 12.0);  // MGRU stacks 2 x 6 rows, so min(12, 28)
  CHECK(s.grid.axis2.values.back() == 6.0);
  CHECK(s.failure_fraction == 0.0);
  for (const char* f : {kGridCsvFile, kGridJsonFile, "isoline_0.985.csv"}) CHECK(fs::exists(tmp.path / "sweep" / f));
  const std::string csv = slurp(tmp.path / "sweep" / kGridCsvFile);
  CHECK(csv.rfind("# rnncomp sweep\n# digest: " + c.digest(), 0) == 0);
  const sweep::SweepGrid back = read_grid(tmp.path / "sweep" / kGridJsonFile);
  CHECK(sweep::to_csv(back) == sweep::to_csv(s.grid));
}

TEST_CASE("beta over synthetic grids") {
  TempDir tmp("beta");
  SUBCASE("error = delta * T gives slope mean(delta) and a perfect fit") {
    sweep::SweepGrid g({"recurrent_rank", {2, 4, 8}}, {"delay", {0, 1, 2, 3, 4, 5}}, "rms");
    const double deltas[3] = {0.05, 0.02, 0.0};
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        g.values(i, j) = deltas[i] * static_cast<double>(j);
        g.info(i, j).delta = deltas[i];
        g.info(i, j).samples = 10;
      }
    }
    const BetaOutcome b = cmd_beta(g, 0.03, 0, 5, tmp.path, {"digest: 0123"});
    CHECK(b.curve.n_delta == 2);
    CHECK(b.fit.slope == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(b.fit.intercept == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b.fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    const std::string csv = slurp(tmp.path / kBetaFile);
    CHECK(csv.find("# digest: 0123\n") != std::string::npos);
    CHECK(csv.find("delay,beta\n0,0\n1,0.01\n") != std::string::npos);
    CHECK_THROWS_AS(cmd_beta(g, 0.5, 0, 5, tmp.path), DomainError);
  }
  SUBCASE("a single delta = 0 row gives a zero curve") {
    sweep::SweepGrid g({"recurrent_rank", {8}}, {"delay", {0, 1, 2, 3}}, "rms");
    for (std::size_t j = 0; j < 4; ++j) {
      g.values(0, j) = 0.0;
      g.info(0, j).samples = 1;
    }
    const BetaOutcome b = cmd_beta(g, 0.0, 0, 3, tmp.path);
    for (double v : b.curve.beta) CHECK(v == 0.0);
  }
}

TEST_CASE("command line") {
  TempDir tmp("cli");
  const std::string root = tmp.path.string();
  ::setenv("RNNCOMP_OUTPUT_ROOT", root.c_str(), 1);
  const std::vector<std::string> small = {"--hidden", "5", "--epochs", "1", "--batches-per-epoch", "2",
                                          "--t-max", "3", "--eval-trials", "3", "--batch-size", "4"};
  auto with = [&](std::vector<std::string> head) {
    head.insert(head.end(), small.begin(), small.end());
    return head;
  };

  CHECK(cli(with({"train", "--experiment", "memorize", "--out", "m"})) == kExitOk);
  const fs::path model = tmp.path / "m" / kModelFile;
  REQUIRE(fs::exists(model));

  SUBCASE("pipeline") {
    CHECK(cli({"compress", model.string(), "--recurrent-rank", "2"}) == kExitOk);
    CHECK(cli({"eval", (tmp.path / "m" / kCompressedFile).string(), "--out", "e"}) == kExitOk);
    CHECK(fs::exists(tmp.path / "e" / kEvalFile));
    CHECK(cli({"sweep", model.string(), "--trials", "5", "--recurrent-ranks", "1,2,5"}) == kExitOk);
    CHECK(cli({"beta", (tmp.path / "m" / kGridCsvFile).string(), "--delta-f", "0.05", "--fit-t-min", "0",
               "--fit-t-max", "3"}) == kExitOk);
    CHECK(fs::exists(tmp.path / "m" / kFitFile));
  }
  SUBCASE("config file then flags") {
    write_text(tmp.path / "cfg.json", R"({"hidden": 3, "seed": 11, "training": {"epochs": 1}})");
    CHECK(cli({"train", "--config", (tmp.path / "cfg.json").string(), "--seed", "12", "--out", "c",
               "--batches-per-epoch", "1", "--t-max", "2", "--eval-trials", "2"}) == kExitOk);
    const RunConfig got = archive_config(load_archive(tmp.path / "c" / kModelFile));
    CHECK(got.hidden == 3);
    CHECK(got.seed == 12);
  }
  SUBCASE("exit codes") {
    CHECK(cli({"train", "--bogus"}) == kExitConfig);
    CHECK(cli({"train", "--experiment", "lm"}) == kExitConfig);
    CHECK(cli({"train", "--experiment", "mnist", "--mnist-dir", root + "/missing"}) == kExitData);
    CHECK(cli({"compress", model.string(), "--forward-rank", "3"}) == kExitConfig);
    CHECK(cli({"eval", root + "/missing.rnnc"}) == kExitData);
    CHECK(cli(with({"train", "--out", "d", "--lr", "1e308", "--no-clip"})) == kExitDivergence);
  }
  ::unsetenv("RNNCOMP_OUTPUT_ROOT");
}
