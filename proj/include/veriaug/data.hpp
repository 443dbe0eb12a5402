#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "veriaug/nn.hpp"

namespace veriaug {

/// Malformed dataset file. `offset()` is the byte position at which decoding
/// failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  int input_dim = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Reads a whole file; names ending in ".gz" are decompressed transparently.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// IDX image/label pair (MNIST, fashion-MNIST). Pixels are scaled by 1/255 and
/// flattened row-major; ids are 0..n-1 in file order. num_classes is one past
/// the largest label.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);
Dataset decode_idx(const std::vector<std::uint8_t>& image_bytes,
                   const std::vector<std::uint8_t>& label_bytes);

/// Writes features quantized to round(255 * f). rows * cols must equal input_dim.
void write_idx(const Dataset& data, int rows, int cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// CIFAR-10 binary batches: 3073-byte records, label byte then 3072
/// channel-major pixels.
Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_paths);
Dataset decode_cifar10(const std::vector<std::uint8_t>& bytes, Dataset into = {});

/// Gaussian blobs around seeded class centers in [0.25, 0.75]^d, clamped to
/// [0, 1]. Sample i has label i % num_classes.
Dataset synthetic_blobs(std::uint64_t seed, int n, int input_dim, int num_classes, double spread);

/// Deterministic shuffle, then the first `first_count` samples go to the first
/// part and the next `second_count` to the second. Ids are renumbered 0..n-1
/// within each part.
std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t first_count,
                                  std::size_t second_count, std::uint64_t seed);

/// Seeded subset of `count` samples (all of them if count >= size), ids renumbered.
Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

}  // namespace veriaug
