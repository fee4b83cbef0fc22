#include "rnncomp/app/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "rnncomp/errors.hpp"

namespace rnncomp::app {

namespace {

constexpr char kMagic[8] = {'R', 'N', 'N', 'C', 'A', 'R', 'C', 'H'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, const std::string& source) : b_(b), source_(source) {}
  const std::uint8_t* bytes(std::size_t n) {
    if (n > b_.size() - pos_) throw IngestionError(source_, b_.size(), "truncated archive");
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T uint() {
    const std::uint8_t* p = bytes(sizeof(T));
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) v |= static_cast<T>(T{p[k]} << (8 * k));
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == b_.size(); }
  const std::string& source() const noexcept { return source_; }

 private:
  const std::vector<std::uint8_t>& b_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

void put_tensor(Writer& w, const std::string& name, std::vector<std::uint64_t> dims, std::span<const double> values) {
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.uint<std::uint64_t>(d);
  for (double v : values) w.f64(v);
}

void put_matrix(Writer& w, const std::string& name, const Matrix& m) { put_tensor(w, name, {m.rows(), m.cols()}, m.values()); }
void put_vector(Writer& w, const std::string& name, const Vector& v) { put_tensor(w, name, {v.size()}, v); }

std::string_view cell_name(nn::CellKind k) { return k == nn::CellKind::Mgru ? "mgru" : "rnn"; }
std::string_view readout_name(nn::Readout r) { return r == nn::Readout::MeanPool ? "mean_pool" : "per_step"; }
std::string_view loss_name(nn::LossKind l) { return l == nn::LossKind::SigmoidCrossEntropy ? "sigmoid" : "softmax"; }

}  // namespace

CompressionPlan ModelArchive::plan() const {
  CompressionPlan p;
  if (forward_factor) p.forward_rank = forward_factor->rank();
  if (recurrent_factor) p.recurrent_rank = recurrent_factor->rank();
  return p;
}

CompressedModel ModelArchive::model() const { return CompressedModel(network, plan(), forward_factor, recurrent_factor); }

nlohmann::json architecture_json(const nn::Network& net) {
  nlohmann::json a;
  a["cell"] = cell_name(net.cell_kind());
  a["cell_activation"] = nn::to_string(net.cell_activation());
  a["input_dim"] = net.cell_input_dim();
  a["hidden"] = net.hidden_dim();
  a["output_dim"] = net.output_dim();
  a["output_activation"] = nn::to_string(net.output.activation);
  a["readout"] = readout_name(net.readout);
  a["loss"] = loss_name(net.loss);
  if (net.embedding) a["vocab_size"] = net.embedding->vocab_size();
  return a;
}

std::vector<std::uint8_t> serialize(const ModelArchive& archive) {
  const nn::Network& net = archive.network;
  net.validate();
  nlohmann::json header;
  header["experiment"] = archive.experiment;
  header["architecture"] = architecture_json(net);
  header["metadata"] = archive.metadata;
  if (archive.vocab) header["vocab"] = archive.vocab->tokens();
  header["compression"] = {{"forward_rank", archive.forward_factor ? nlohmann::json(archive.forward_factor->rank()) : nlohmann::json(nullptr)},
                           {"recurrent_rank", archive.recurrent_factor ? nlohmann::json(archive.recurrent_factor->rank()) : nlohmann::json(nullptr)}};
  const std::string text = header.dump();

  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(ModelArchive::kVersion);
  w.uint<std::uint64_t>(text.size());
  w.bytes(text.data(), text.size());

  std::uint32_t count = 5 + (net.embedding ? 1 : 0) + (archive.forward_factor ? 1 : 0) + (archive.recurrent_factor ? 1 : 0);
  w.uint<std::uint32_t>(count);
  if (net.embedding) put_matrix(w, "embedding", net.embedding->table);
  if (archive.forward_factor) {
    put_matrix(w, "cell.forward.q", archive.forward_factor->q);
    put_matrix(w, "cell.forward.vt", archive.forward_factor->vt);
  } else {
    put_matrix(w, "cell.forward", net.forward_weights());
  }
  if (archive.recurrent_factor) {
    put_matrix(w, "cell.recurrent.q", archive.recurrent_factor->q);
    put_matrix(w, "cell.recurrent.vt", archive.recurrent_factor->vt);
  } else {
    put_matrix(w, "cell.recurrent", net.recurrent_weights());
  }
  put_vector(w, "cell.bias", net.cell_bias());
  put_matrix(w, "output.weight", net.output.w);
  put_vector(w, "output.bias", net.output.bias);
  return w.take();
}

ModelArchive deserialize(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (std::memcmp(r.bytes(sizeof kMagic), kMagic, sizeof kMagic) != 0) throw IngestionError(source, 0, "not a model archive");
  const auto version = r.uint<std::uint32_t>();
  if (version != ModelArchive::kVersion) {
    throw IngestionError(source, 8, "unsupported archive version " + std::to_string(version) + " (expected " +
                                        std::to_string(ModelArchive::kVersion) + ")");
  }
  const auto header_len = r.uint<std::uint64_t>();
  const std::size_t header_at = r.offset();
  const auto* hp = reinterpret_cast<const char*>(r.bytes(header_len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hp, hp + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(source, header_at, std::string("bad header: ") + e.what());
  }

  std::vector<Tensor> tensors;
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    Tensor t;
    const auto name_len = r.uint<std::uint32_t>();
    const auto* np = reinterpret_cast<const char*>(r.bytes(name_len));
    t.name.assign(np, name_len);
    const auto rank = r.uint<std::uint32_t>();
    if (rank < 1 || rank > 2) throw IngestionError(source, r.offset(), "tensor '" + t.name + "' has unsupported rank");
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.uint<std::uint64_t>());
      n *= t.dims.back();
    }
    if (n > (bytes.size() - r.offset()) / 8) throw IngestionError(source, bytes.size(), "truncated tensor '" + t.name + "'");
    t.values.resize(n);
    for (auto& v : t.values) v = r.f64();
    tensors.push_back(std::move(t));
  }
  if (!r.done()) throw IngestionError(source, r.offset(), "trailing bytes");

  auto find = [&](const std::string& name) -> const Tensor* {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  };
  auto need = [&](const std::string& name) -> const Tensor& {
    const Tensor* t = find(name);
    if (!t) throw IngestionError(source, 0, "missing tensor '" + name + "'");
    return *t;
  };
  auto matrix = [&](const Tensor& t) {
    if (t.dims.size() != 2) throw IngestionError(source, 0, "tensor '" + t.name + "' is not a matrix");
    return Matrix(t.dims[0], t.dims[1], t.values);
  };
  auto vec = [&](const Tensor& t) {
    if (t.dims.size() != 1) throw IngestionError(source, 0, "tensor '" + t.name + "' is not a vector");
    return t.values;
  };

  ModelArchive a;
  try {
    a.experiment = header.at("experiment").get<std::string>();
    a.metadata = header.at("metadata");
    const auto& arch = header.at("architecture");
    const std::string cell = arch.at("cell").get<std::string>();
    const nn::Activation act = nn::activation_from_string(arch.at("cell_activation").get<std::string>());
    Vector bias = vec(need("cell.bias"));

    std::optional<FactoredLinear> ff, rf;
    Matrix forward, recurrent;
    if (const Tensor* t = find("cell.forward")) {
      forward = matrix(*t);
    } else {
      ff = FactoredLinear{matrix(need("cell.forward.q")), matrix(need("cell.forward.vt")), bias};
      if (ff->q.cols() != ff->vt.rows()) throw IngestionError(source, 0, "forward factors disagree on rank");
      forward = ff->reconstruct();
    }
    if (const Tensor* t = find("cell.recurrent")) {
      recurrent = matrix(*t);
    } else {
      rf = FactoredLinear{matrix(need("cell.recurrent.q")), matrix(need("cell.recurrent.vt")), Vector(bias.size(), 0.0)};
      if (rf->q.cols() != rf->vt.rows()) throw IngestionError(source, 0, "recurrent factors disagree on rank");
      recurrent = rf->reconstruct();
    }
    if (cell == "rnn") {
      a.network.cell = nn::RnnLayer{std::move(forward), std::move(recurrent), std::move(bias), act};
    } else if (cell == "mgru") {
      a.network.cell = nn::MgruLayer{std::move(forward), std::move(recurrent), std::move(bias), act};
    } else {
      throw IngestionError(source, header_at, "unknown cell '" + cell + "'");
    }
    if (const Tensor* t = find("embedding")) a.network.embedding = nn::Embedding{matrix(*t)};
    a.network.output = nn::DenseLayer{matrix(need("output.weight")), vec(need("output.bias")),
                                      nn::activation_from_string(arch.at("output_activation").get<std::string>())};
    a.network.readout = arch.at("readout").get<std::string>() == "mean_pool" ? nn::Readout::MeanPool : nn::Readout::PerStep;
    a.network.loss = arch.at("loss").get<std::string>() == "sigmoid" ? nn::LossKind::SigmoidCrossEntropy
                                                                     : nn::LossKind::SoftmaxCrossEntropy;
    a.forward_factor = std::move(ff);
    a.recurrent_factor = std::move(rf);
    if (header.contains("vocab")) a.vocab = tasks::Vocab(header["vocab"].get<std::vector<std::string>>());
    a.network.validate();
    if (architecture_json(a.network) != arch) throw IngestionError(source, header_at, "architecture does not match tensors");
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(source, header_at, std::string("bad header: ") + e.what());
  } catch (const DomainError& e) {
    throw IngestionError(source, 0, e.what());
  }
  return a;
}

void save_archive(const ModelArchive& archive, const std::filesystem::path& path) {
  const auto bytes = serialize(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestionError(tmp, 0, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestionError(tmp, 0, "write failed");
  }
  std::filesystem::rename(tmp, path);
}

ModelArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open archive");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes, path.string());
}

ModelArchive compressed_archive(const ModelArchive& source, const CompressedModel& model) {
  ModelArchive a = source;
  a.network = model.reconstructed();
  a.forward_factor = model.forward();
  a.recurrent_factor = model.recurrent();
  return a;
}

}  // namespace rnncomp::app
