#include "veriaug/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <zlib.h>

namespace veriaug {
namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr std::size_t kCifarRecord = 3073;
constexpr int kCifarPixels = 3072;

bool has_gzip_suffix(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".gz" || ext == ".gzip";
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const char* what) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(std::string("truncated ") + what + " header", bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex_magic(std::uint32_t magic) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << magic;
  return os.str();
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (has_gzip_suffix(path)) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw IoError("cannot open " + path.string() + " for writing");
    const int written = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    const int closed = gzclose(f);
    if ((written != static_cast<int>(bytes.size()) && !bytes.empty()) || closed != Z_OK) {
      throw IoError("failed writing " + path.string());
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  if (has_gzip_suffix(path)) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> chunk(1 << 16);
    int n = 0;
    while ((n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()))) > 0) {
      out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    }
    int err = Z_OK;
    const char* msg = gzerror(f, &err);
    gzclose(f);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) {
      throw IoError("gzip error in " + path.string() + ": " + msg);
    }
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset decode_idx(const std::vector<std::uint8_t>& image_bytes,
                   const std::vector<std::uint8_t>& label_bytes) {
  const std::uint32_t image_magic = read_be32(image_bytes, 0, "image");
  if (image_magic != kIdxImageMagic) {
    throw FormatError("image file has magic " + hex_magic(image_magic) + ", expected " +
                          hex_magic(kIdxImageMagic),
                      0);
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, "label");
  if (label_magic != kIdxLabelMagic) {
    throw FormatError("label file has magic " + hex_magic(label_magic) + ", expected " +
                          hex_magic(kIdxLabelMagic),
                      0);
  }
  const std::size_t n = read_be32(image_bytes, 4, "image");
  const std::size_t rows = read_be32(image_bytes, 8, "image");
  const std::size_t cols = read_be32(image_bytes, 12, "image");
  const std::size_t n_labels = read_be32(label_bytes, 4, "label");
  if (n != n_labels) {
    throw FormatError("image file holds " + std::to_string(n) + " items but label file holds " +
                          std::to_string(n_labels),
                      4);
  }
  const std::size_t dim = rows * cols;
  if (dim == 0) throw FormatError("image dimensions are zero", 8);
  const std::size_t image_need = 16 + n * dim;
  if (image_bytes.size() < image_need) {
    throw FormatError("image payload truncated: need " + std::to_string(image_need) + " bytes",
                      image_bytes.size());
  }
  if (label_bytes.size() < 8 + n) {
    throw FormatError("label payload truncated: need " + std::to_string(8 + n) + " bytes",
                      label_bytes.size());
  }

  Dataset out;
  out.input_dim = static_cast<int>(dim);
  out.samples.reserve(n);
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.features.resize(static_cast<Eigen::Index>(dim));
    const std::uint8_t* px = image_bytes.data() + 16 + i * dim;
    for (std::size_t j = 0; j < dim; ++j) s.features(static_cast<Eigen::Index>(j)) = px[j] / 255.0;
    s.label = label_bytes[8 + i];
    s.id = static_cast<std::int64_t>(i);
    max_label = std::max(max_label, s.label);
    out.samples.push_back(std::move(s));
  }
  out.num_classes = max_label + 1;
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  return decode_idx(read_file_bytes(images_path), read_file_bytes(labels_path));
}

void write_idx(const Dataset& data, int rows, int cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  if (rows <= 0 || cols <= 0 || rows * cols != data.input_dim) {
    throw std::invalid_argument("rows * cols must equal the dataset input dimension");
  }
  std::vector<std::uint8_t> images;
  std::vector<std::uint8_t> labels;
  put_be32(images, kIdxImageMagic);
  put_be32(images, static_cast<std::uint32_t>(data.size()));
  put_be32(images, static_cast<std::uint32_t>(rows));
  put_be32(images, static_cast<std::uint32_t>(cols));
  put_be32(labels, kIdxLabelMagic);
  put_be32(labels, static_cast<std::uint32_t>(data.size()));
  for (const Sample& s : data.samples) {
    for (Eigen::Index j = 0; j < s.features.size(); ++j) {
      const double v = std::clamp(s.features(j), 0.0, 1.0);
      images.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
    if (s.label < 0 || s.label > 255) throw std::invalid_argument("label does not fit in a byte");
    labels.push_back(static_cast<std::uint8_t>(s.label));
  }
  write_bytes(images_path, images);
  write_bytes(labels_path, labels);
}

Dataset decode_cifar10(const std::vector<std::uint8_t>& bytes, Dataset into) {
  if (bytes.size() % kCifarRecord != 0) {
    throw FormatError("CIFAR-10 batch length " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073",
                      bytes.size() - bytes.size() % kCifarRecord);
  }
  into.input_dim = kCifarPixels;
  into.num_classes = 10;
  const std::size_t records = bytes.size() / kCifarRecord;
  for (std::size_t r = 0; r < records; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kCifarRecord;
    if (rec[0] > 9) throw FormatError("CIFAR-10 label out of range", r * kCifarRecord);
    Sample s;
    s.label = rec[0];
    s.id = static_cast<std::int64_t>(into.samples.size());
    s.features.resize(kCifarPixels);
    for (int j = 0; j < kCifarPixels; ++j) s.features(j) = rec[1 + j] / 255.0;
    into.samples.push_back(std::move(s));
  }
  return into;
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_paths) {
  Dataset out;
  out.input_dim = kCifarPixels;
  out.num_classes = 10;
  for (const auto& p : batch_paths) out = decode_cifar10(read_file_bytes(p), std::move(out));
  return out;
}

Dataset synthetic_blobs(std::uint64_t seed, int n, int input_dim, int num_classes, double spread) {
  if (num_classes <= 0 || input_dim <= 0 || n < num_classes || !(spread > 0.0)) {
    throw std::invalid_argument("synthetic_blobs needs n >= num_classes > 0 and spread > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center_dist(0.25, 0.75);
  std::vector<Vector> centers;
  for (int c = 0; c < num_classes; ++c) {
    Vector center(input_dim);
    for (int j = 0; j < input_dim; ++j) center(j) = center_dist(rng);
    centers.push_back(std::move(center));
  }
  std::normal_distribution<double> noise(0.0, spread);
  Dataset out;
  out.input_dim = input_dim;
  out.num_classes = num_classes;
  out.samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.label = i % num_classes;
    s.id = i;
    s.features = centers[static_cast<std::size_t>(s.label)];
    for (int j = 0; j < input_dim; ++j) {
      s.features(j) = std::clamp(s.features(j) + noise(rng), 0.0, 1.0);
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Dataset take(const Dataset& data, const std::vector<std::size_t>& order, std::size_t begin,
             std::size_t end) {
  Dataset out;
  out.input_dim = data.input_dim;
  out.num_classes = data.num_classes;
  out.samples.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    Sample s = data.samples[order[i]];
    s.id = static_cast<std::int64_t>(i - begin);
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t first_count,
                                  std::size_t second_count, std::uint64_t seed) {
  if (first_count + second_count > data.size()) {
    throw std::invalid_argument("split asks for " + std::to_string(first_count + second_count) +
                                " samples but the dataset has " + std::to_string(data.size()));
  }
  const auto order = shuffled_indices(data.size(), seed);
  return {take(data, order, 0, first_count),
          take(data, order, first_count, first_count + second_count)};
}

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  const auto order = shuffled_indices(data.size(), seed);
  return take(data, order, 0, std::min(count, data.size()));
}

}  // namespace veriaug
