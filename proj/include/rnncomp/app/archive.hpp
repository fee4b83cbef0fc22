#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnncomp/compression.hpp"
#include "rnncomp/nn/network.hpp"
#include "rnncomp/tasks.hpp"

namespace rnncomp::app {

// Binary model file:
//   "RNNCARCH"                      8 bytes
//   u32 version
//   u64 n, n bytes                  JSON header: architecture, metadata, vocab
//   u32 tensor count
//   per tensor: u32 name length, name, u32 rank, u64 dims[rank],
//               f64 values[prod(dims)] row-major
// All integers and floats are little-endian.
struct ModelArchive {
  static constexpr std::uint32_t kVersion = 1;

  std::string experiment;  // "lm", "mnist" or "memorize"
  // Dense network. For compressed archives the compressed matrices hold
  // Q V^T and the factors below are authoritative.
  nn::Network network;
  std::optional<FactoredLinear> forward_factor;
  std::optional<FactoredLinear> recurrent_factor;
  nlohmann::json metadata = nlohmann::json::object();
  std::optional<tasks::Vocab> vocab;

  bool compressed() const noexcept { return forward_factor || recurrent_factor; }
  CompressionPlan plan() const;
  CompressedModel model() const;
};

std::vector<std::uint8_t> serialize(const ModelArchive& archive);
ModelArchive deserialize(const std::vector<std::uint8_t>& bytes, const std::string& source = "<archive>");

void save_archive(const ModelArchive& archive, const std::filesystem::path& path);
ModelArchive load_archive(const std::filesystem::path& path);

// Archive holding `model`'s factored matrices in place of the dense ones.
ModelArchive compressed_archive(const ModelArchive& source, const CompressedModel& model);

nlohmann::json architecture_json(const nn::Network& net);

}  // namespace rnncomp::app
