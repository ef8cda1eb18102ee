#include "fedraa/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>

#include "fedraa/error.hpp"
#include "fedraa/rng.hpp"

namespace fedraa {

Dataset gen_synthetic(std::size_t classes, std::size_t dim, std::size_t per_class,
                      double separation, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("synthetic: dim must be >= 1");
  if (classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  if (per_class < 1) throw ConfigError("synthetic: per_class must be >= 1");
  if (!(separation > 0.0)) throw ConfigError("synthetic: separation must be > 0");

  // Class mean c sits on axis (c mod dim) at offset (1 + c/dim) * separation;
  // any two means are then at least `separation` apart.
  Dataset out;
  out.meta.name = "synthetic";
  out.meta.input_dim = dim;
  out.meta.class_count = classes;
  out.meta.source = DatasetMeta::Source::synthetic;
  out.samples.reserve(classes * per_class);

  Rng rng(seed);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> mean(dim, 0.0);
    mean[c % dim] = separation * (1.0 + static_cast<double>(c / dim));
    for (std::size_t k = 0; k < per_class; ++k) {
      Sample s;
      s.label = static_cast<int>(c);
      s.features.resize(dim);
      for (std::size_t f = 0; f < dim; ++f) s.features[f] = mean[f] + rng.gaussian();
      out.samples.push_back(std::move(s));
    }
  }
  out.meta.sample_count = out.samples.size();
  return out;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ParseError(path + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset read_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit) {
  if (limit == 0) throw ConfigError("read_idx: limit must be >= 1");

  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw ParseError("cannot open images file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw ParseError("cannot open labels file: " + labels_path);

  if (read_be32(img, images_path, 0) != kImageMagic) {
    throw ParseError(images_path + ": bad image magic at byte offset 0");
  }
  const std::uint32_t img_count = read_be32(img, images_path, 4);
  const std::uint32_t rows = read_be32(img, images_path, 8);
  const std::uint32_t cols = read_be32(img, images_path, 12);

  if (read_be32(lab, labels_path, 0) != kLabelMagic) {
    throw ParseError(labels_path + ": bad label magic at byte offset 0");
  }
  const std::uint32_t lab_count = read_be32(lab, labels_path, 4);
  if (img_count != lab_count) {
    throw ParseError(images_path + ": image count " + std::to_string(img_count) +
                     " != label count " + std::to_string(lab_count) +
                     " (byte offset 4 of each header)");
  }

  const std::size_t take = std::min<std::size_t>(limit, img_count);
  const std::size_t pixels = std::size_t(rows) * cols;

  Dataset out;
  out.meta.name = "idx";
  out.meta.input_dim = pixels;
  out.meta.source = DatasetMeta::Source::idx_files;
  out.samples.resize(take);

  std::vector<unsigned char> buf(pixels);
  int max_label = 0;
  for (std::size_t i = 0; i < take; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw ParseError(images_path + ": truncated payload at byte offset " +
                       std::to_string(16 + i * pixels));
    }
    Sample& s = out.samples[i];
    s.features.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) s.features[p] = buf[p] / 255.0;
    char lb;
    if (!lab.read(&lb, 1)) {
      throw ParseError(labels_path + ": truncated payload at byte offset " +
                       std::to_string(8 + i));
    }
    s.label = static_cast<unsigned char>(lb);
    max_label = std::max(max_label, s.label);
  }
  out.meta.sample_count = take;
  out.meta.class_count = static_cast<std::size_t>(max_label) + 1;
  if (out.meta.class_count < 2) {
    throw ConfigError(labels_path + ": loaded subset contains fewer than 2 classes");
  }
  return out;
}

void write_idx(const Dataset& data, const std::string& images_path,
               const std::string& labels_path) {
  // square-ish image shape: rows x cols covering input_dim exactly
  std::uint32_t rows = 1, cols = static_cast<std::uint32_t>(data.meta.input_dim);
  for (std::uint32_t r = static_cast<std::uint32_t>(std::sqrt(double(data.meta.input_dim)));
       r >= 1; --r) {
    if (data.meta.input_dim % r == 0) {
      rows = r;
      cols = static_cast<std::uint32_t>(data.meta.input_dim) / r;
      break;
    }
  }
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw ParseError("cannot create " + images_path);
  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(data.samples.size()));
  write_be32(img, rows);
  write_be32(img, cols);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw ParseError("cannot create " + labels_path);
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(data.samples.size()));
  for (const Sample& s : data.samples) {
    for (double v : s.features) {
      const double clamped = std::min(1.0, std::max(0.0, v));
      img.put(static_cast<char>(std::lround(clamped * 255.0)));
    }
    lab.put(static_cast<char>(s.label));
  }
}

std::vector<std::vector<Sample>> shard_iid(const Dataset& data, std::size_t n_clients,
                                           std::uint64_t seed) {
  if (n_clients < 1) throw ConfigError("shard_iid: N must be >= 1");
  if (n_clients > data.samples.size()) {
    throw ConfigError("shard_iid: more clients (" + std::to_string(n_clients) +
                      ") than samples (" + std::to_string(data.samples.size()) + ")");
  }
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t base = data.samples.size() / n_clients;
  std::vector<std::vector<Sample>> shards(n_clients);
  std::size_t pos = 0;
  for (std::size_t n = 0; n < n_clients; ++n) {
    const std::size_t take = (n == n_clients - 1) ? data.samples.size() - pos : base;
    shards[n].reserve(take);
    for (std::size_t k = 0; k < take; ++k) {
      shards[n].push_back(data.samples[order[pos++]]);
    }
  }
  return shards;
}

}  // namespace fedraa
