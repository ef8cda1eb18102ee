#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedraa/model.hpp"

namespace fedraa {

struct DatasetMeta {
  enum class Source { synthetic, idx_files };
  std::string name;
  std::size_t sample_count = 0;
  std::size_t input_dim = 0;
  std::size_t class_count = 0;
  Source source = Source::synthetic;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Sample> samples;
};

// Gaussian blobs with unit covariance; class means are placed on scaled axis
// directions so every pair of means is at least `separation` apart. Samples
// are emitted class-major and are deterministic under `seed`.
Dataset gen_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class,
                      double separation, std::uint64_t seed);

// Reads the canonical big-endian IDX pair (magic 0x803 images, 0x801 labels),
// scales pixels to [0,1], flattens rows x cols. Takes the first `limit`
// samples (clamped to the file count). Throws ParseError naming the byte
// offset on magic/truncation/count-mismatch failures; limit == 0 is a
// ConfigError.
Dataset read_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit);

// IDX writer for fixtures and round-trip tests; pixels must already be in
// [0,1] and are stored as bytes (value * 255 rounded).
void write_idx(const Dataset& data, const std::string& images_path,
               const std::string& labels_path);

// Seeded shuffle then contiguous equal splits, remainder to the last shard.
// Shards are disjoint and cover the dataset.
std::vector<std::vector<Sample>> shard_iid(const Dataset& data, std::size_t n_clients,
                                           std::uint64_t seed);

}  // namespace fedraa
