#include <fstream>
#include <iterator>

#include "rnncomp/errors.hpp"
#include "rnncomp/tasks.hpp"

namespace rnncomp::tasks {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const std::string& source) {
  if (offset + 4 > bytes.size()) throw IngestionError(source, bytes.size(), "truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_payload(std::span<const std::uint8_t> bytes, std::size_t header, std::size_t payload,
                   const std::string& source) {
  if (bytes.size() < header + payload) {
    throw IngestionError(source, bytes.size(),
                         "truncated payload: expected " + std::to_string(header + payload) + " bytes");
  }
  if (bytes.size() > header + payload) throw IngestionError(source, header + payload, "trailing bytes");
}

std::vector<std::uint8_t> read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(path.string(), 0, "cannot open file");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes, const std::string& source) {
  const std::uint32_t magic = read_be32(bytes, 0, source);
  if (magic != kImageMagic) throw IngestionError(source, 0, "bad image magic " + std::to_string(magic));
  IdxImages out;
  out.count = read_be32(bytes, 4, source);
  out.rows = read_be32(bytes, 8, source);
  out.cols = read_be32(bytes, 12, source);
  check_payload(bytes, 16, out.count * out.rows * out.cols, source);
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes, const std::string& source) {
  const std::uint32_t magic = read_be32(bytes, 0, source);
  if (magic != kLabelMagic) throw IngestionError(source, 0, "bad label magic " + std::to_string(magic));
  const std::size_t count = read_be32(bytes, 4, source);
  check_payload(bytes, 8, count, source);
  std::vector<std::uint8_t> labels(bytes.begin() + 8, bytes.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 9) throw IngestionError(source, 8 + i, "label " + std::to_string(labels[i]) + " out of range");
  }
  return labels;
}

Matrix MnistSplit::image(std::size_t index) const {
  if (index >= size()) throw DomainError("MnistSplit: image index out of range");
  Matrix m(rows, cols);
  const std::uint8_t* p = pixels.data() + index * rows * cols;
  for (std::size_t k = 0; k < rows * cols; ++k) m.values()[k] = p[k] / 255.0;
  return m;
}

MnistSplit load_mnist_split(const std::filesystem::path& images, const std::filesystem::path& labels) {
  IdxImages img = parse_idx_images(read_binary(images), images.string());
  MnistSplit split;
  split.labels = parse_idx_labels(read_binary(labels), labels.string());
  if (split.labels.size() != img.count) {
    throw IngestionError(labels.string(), 4,
                         "label count " + std::to_string(split.labels.size()) + " does not match image count " +
                             std::to_string(img.count));
  }
  split.rows = img.rows;
  split.cols = img.cols;
  split.pixels = std::move(img.pixels);
  return split;
}

MnistDataset load_mnist(const std::filesystem::path& dir) {
  return {load_mnist_split(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
          load_mnist_split(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte")};
}

std::vector<Vector> scanline_sequence(const Matrix& image) {
  if (image.rows() != 28 || image.cols() != 28) throw DomainError("scanline_sequence: image must be 28 x 28");
  std::vector<Vector> seq;
  seq.reserve(28);
  for (std::size_t r = 0; r < 28; ++r) {
    const auto row = image.row(r);
    seq.emplace_back(row.begin(), row.end());
  }
  return seq;
}

nn::Example mnist_example(const MnistSplit& split, std::size_t index) {
  nn::Example ex;
  ex.inputs = scanline_sequence(split.image(index));
  ex.labels = {split.label(index)};
  return ex;
}

}  // namespace rnncomp::tasks
