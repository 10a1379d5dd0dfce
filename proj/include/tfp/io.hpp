#pragma once

#include "tfp/network.hpp"
#include "tfp/preset.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace tfp {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

enum class FormatErrorKind {
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kShapeMismatch,
  kCorrupt,
  kIo,
};

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

using Bytes = std::vector<std::uint8_t>;

// Weight file (all integers little-endian):
//   "TFPW" | u32 version | u8 variant | u8 reserved | u16 downsample_factor
//   5 x { u32 layer_count | layer_count x 24-byte layer record }
//       layer record: u8 kind | u8 norm | u8 activation | u8 0 |
//                     u32 in | u32 out | u32 kernel | u32 stride | u32 factor
//   u32 tensor_count
//   tensor_count x { u16 name_len | name (UTF-8) | 4 x u32 dims | u64 offset }
//   u64 payload_bytes | payload of float32 values, offsets relative to payload start
Bytes encode_weights(const Network& net);
Network decode_weights(std::span<const std::uint8_t> bytes);

// Preset file:
//   "TFPP" | u32 version | u16 style_len | style_id | u64 seed |
//   u32 source_h | u32 source_w | f64 lambda_s | f64 lambda_d |
//   u64 weights_fingerprint | 4 x u32 dims | float32 payload
Bytes encode_preset(const Preset& preset);
Preset decode_preset(std::span<const std::uint8_t> bytes);

/// Writes through a temporary sibling file and renames, so a failed write
/// never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
Bytes read_file(const std::filesystem::path& path);

void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path);
void save_preset(const Preset& preset, const std::filesystem::path& path);
Preset load_preset(const std::filesystem::path& path);

}  // namespace tfp
