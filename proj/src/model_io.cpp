#include "veriaug/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "veriaug/data.hpp"

namespace veriaug {
namespace {

constexpr char kMagic[4] = {'V', 'A', 'M', 'M'};
constexpr std::size_t kHeaderSize = 4 + 1 + 3 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

double get_f64(const std::vector<std::uint8_t>& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const MlpModel& model) {
  model.validate();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.input_dim()));
  put_u32(out, static_cast<std::uint32_t>(model.hidden_dim()));
  put_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  for (Eigen::Index r = 0; r < model.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < model.w1.cols(); ++c) put_f64(out, model.w1(r, c));
  for (Eigen::Index i = 0; i < model.b1.size(); ++i) put_f64(out, model.b1(i));
  for (Eigen::Index r = 0; r < model.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < model.w2.cols(); ++c) put_f64(out, model.w2(r, c));
  for (Eigen::Index i = 0; i < model.b2.size(); ++i) put_f64(out, model.b2(i));
  return out;
}

MlpModel decode_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("model file too short", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad model magic", 0);
  if (bytes[4] != kModelFormatVersion) {
    throw FormatError("unsupported model version " + std::to_string(bytes[4]), 4);
  }
  const std::uint64_t in = get_u32(bytes, 5);
  const std::uint64_t hid = get_u32(bytes, 9);
  const std::uint64_t cls = get_u32(bytes, 13);
  if (in == 0 || hid == 0 || cls == 0) throw FormatError("zero model dimension", 5);
  const std::uint64_t params = hid * in + hid + cls * hid + cls;
  if (bytes.size() != kHeaderSize + 8 * params) {
    throw FormatError("model payload size does not match its dimensions", kHeaderSize);
  }
  MlpModel m = MlpModel::zeros(static_cast<int>(in), static_cast<int>(hid), static_cast<int>(cls));
  std::size_t at = kHeaderSize;
  auto next = [&] {
    const double v = get_f64(bytes, at);
    at += 8;
    return v;
  };
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) m.w1(r, c) = next();
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1(i) = next();
  for (Eigen::Index r = 0; r < m.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w2.cols(); ++c) m.w2(r, c) = next();
  for (Eigen::Index i = 0; i < m.b2.size(); ++i) m.b2(i) = next();
  return m;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  return decode_model(read_file_bytes(path));
}

}  // namespace veriaug
