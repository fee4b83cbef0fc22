#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rnncomp/matrix.hpp"
#include "rnncomp/nn/network.hpp"
#include "rnncomp/random.hpp"

namespace rnncomp::tasks {

// ---------------------------------------------------------------------------
// Corpus

// Word tokenizer. Rules, applied left to right on ASCII-lowercased text:
//   \s+                              separator, dropped
//   [a-z0-9\x80-\xff]*(?=n't\b)     word before a "n't" clitic (dropped if empty)
//   n't\b | '(s|m|d|ll|re|ve)\b      clitic, one token
//   [a-z0-9\x80-\xff]+               word
//   .                                any other byte is a one-byte token
// where \b means "not followed by a word byte". Joining the result with
// spaces and tokenizing again returns the same list. Invalid UTF-8 raises
// IngestionError with the byte offset.
std::vector<std::string> tokenize_corpus(std::string_view text, const std::string& source = "<text>");

class Vocab {
 public:
  static constexpr std::string_view kUnknown = "<unk>";
  static constexpr std::string_view kEndOfText = "<eos>";
  static constexpr int kUnknownId = 0;
  static constexpr int kEndOfTextId = 1;

  Vocab();
  explicit Vocab(std::vector<std::string> tokens);  // specials must lead

  std::size_t size() const noexcept { return tokens_.size(); }
  int id(std::string_view token) const;  // unknown id when absent
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::vector<int> encode(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Ranked by descending count, ties by byte order; at most max_size regular
// tokens are kept after the two specials.
Vocab build_vocab(std::span<const std::string> tokens, std::optional<std::size_t> max_size = std::nullopt);

struct LmWindow {
  std::size_t stream = 0;
  std::vector<int> inputs;
  std::vector<int> targets;  // targets[t] = next token after inputs[t]
};

// The corpus is cut into `batch` contiguous streams (lengths differ by at
// most one) and each stream is read in consecutive windows, so the hidden
// state of a stream can be carried from one window to the next.
class LmBatchStream {
 public:
  LmBatchStream(std::vector<int> ids, std::size_t batch, std::size_t window);

  // Windows for the next position of every stream that still has input;
  // empty at end of epoch.
  std::vector<LmWindow> next();
  void reset() noexcept { cursor_ = 0; }
  std::size_t batch() const noexcept { return streams_.size(); }
  std::size_t window() const noexcept { return window_; }
  const std::vector<std::vector<int>>& streams() const noexcept { return streams_; }

 private:
  std::vector<std::vector<int>> streams_;
  std::size_t window_;
  std::size_t cursor_ = 0;
};

LmBatchStream lm_batches(std::vector<int> ids, std::size_t batch, std::size_t window);

std::string read_text_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// MNIST

struct MnistSplit {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count x rows x cols
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  // Pixels scaled to [0, 1].
  Matrix image(std::size_t index) const;
  int label(std::size_t index) const { return labels.at(index); }
};

struct MnistDataset {
  MnistSplit train;
  MnistSplit test;
};

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

// IDX parsers; `source` names the data in errors.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes, const std::string& source);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes, const std::string& source);

MnistSplit load_mnist_split(const std::filesystem::path& images, const std::filesystem::path& labels);
// Reads {train,t10k}-{images-idx3,labels-idx1}-ubyte from `dir`.
MnistDataset load_mnist(const std::filesystem::path& dir);

// One vector per image row, top to bottom.
std::vector<Vector> scanline_sequence(const Matrix& image);

nn::Example mnist_example(const MnistSplit& split, std::size_t index);

// ---------------------------------------------------------------------------
// Noiseless memorization

struct MemorizationSample {
  std::vector<int> bits;
  std::size_t delay = 0;
  // Channel 0 carries bits during presentation, channel 1 the stop bit at
  // step n_bits + delay. Recall runs over the last n_bits steps.
  std::vector<Vector> inputs;
  std::vector<double> targets;
  std::vector<double> mask;

  std::size_t recall_begin() const noexcept { return bits.size() + delay; }
  nn::Example to_example() const;
};

inline constexpr std::size_t kMemorizationChannels = 2;

MemorizationSample gen_memorization(std::size_t n_bits, std::size_t delay, Rng& rng);

// A batch sharing one delay.
std::vector<nn::Example> memorization_batch(std::size_t batch, std::size_t n_bits, std::size_t delay, Rng& rng);

}  // namespace rnncomp::tasks
