#pragma once

#include "tfp/network.hpp"

#include <cstdint>
#include <string>

namespace tfp {

inline constexpr std::uint32_t kPresetFormatVersion = 1;

/// A captured deep texture feature map, reusable for any content image.
struct Preset {
  Tensorf features;  // (1, C, H/4, W/4)
  std::string style_id;
  std::uint64_t seed = 0;
  Eigen::Index source_height = 0;
  Eigen::Index source_width = 0;
  FusionConfig recommended;
  /// weights_fingerprint() of the network that produced the features; 0 if unknown.
  std::uint64_t weights_fingerprint = 0;
  std::uint32_t format_version = kPresetFormatVersion;

  friend bool operator==(const Preset& a, const Preset& b) {
    return a.features == b.features && a.style_id == b.style_id && a.seed == b.seed &&
           a.source_height == b.source_height && a.source_width == b.source_width &&
           a.recommended.lambda_s == b.recommended.lambda_s &&
           a.recommended.lambda_d == b.recommended.lambda_d &&
           a.weights_fingerprint == b.weights_fingerprint &&
           a.format_version == b.format_version;
  }
};

class PresetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FNV-1a 64 over every parameter value as little-endian float32, in
/// Network::named_tensors() order.
std::uint64_t weights_fingerprint(const Network& net);

/// Encodes `noise` with the deep encoder. `noise` must be (1, 3, H, W).
Preset capture_preset(const Network& net, const Tensorf& noise, std::string style_id,
                      std::uint64_t seed, FusionConfig recommended = {});

/// sample_noise(seed, height, width) followed by capture_preset.
Preset capture_preset_from_seed(const Network& net, std::uint64_t seed, Eigen::Index height,
                                Eigen::Index width, std::string style_id,
                                FusionConfig recommended = {});

/// Periodic (wrap-around) tiling of the preset features to the target
/// spatial size. Returns the features unchanged when sizes already match.
Tensorf fit_preset(const Preset& preset, Eigen::Index target_h, Eigen::Index target_w);

/// Throws PresetError if the preset is malformed or was captured with other weights.
void check_preset(const Network& net, const Preset& preset);

/// Dec_f(lambda_s * Dae(Enc_s(content)) + lambda_d * fitted preset). The deep
/// encoder is never run. Content must be 3-channel with dims divisible by 4.
Tensorf stylize_with_preset(const Network& net, const Preset& preset, const Tensorf& content,
                            const FusionConfig& cfg);

}  // namespace tfp
