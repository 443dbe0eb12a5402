#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "veriaug/nn.hpp"

namespace veriaug {

// Layout: "VAMM", version byte, three little-endian uint32 dims
// (input, hidden, classes), then w1 (row-major), b1, w2 (row-major), b2 as
// little-endian IEEE-754 doubles.
inline constexpr std::uint8_t kModelFormatVersion = 1;

std::vector<std::uint8_t> encode_model(const MlpModel& model);
MlpModel decode_model(const std::vector<std::uint8_t>& bytes);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace veriaug
