#include "tfp/preset.hpp"

#include "tfp/random.hpp"

#include <bit>

namespace tfp {

std::uint64_t weights_fingerprint(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : net.named_tensors()) {
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(t.value.data()[i]);
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

Preset capture_preset(const Network& net, const Tensorf& noise, std::string style_id,
                      std::uint64_t seed, FusionConfig recommended) {
  if (noise.batch() != 1) {
    throw ShapeError("capture_preset: expected a single noise image, got shape " +
                     noise.shape().str());
  }
  recommended.validate();
  Preset p;
  p.features = enc_deep(net, noise);
  p.style_id = std::move(style_id);
  p.seed = seed;
  p.source_height = noise.height();
  p.source_width = noise.width();
  p.recommended = recommended;
  p.weights_fingerprint = weights_fingerprint(net);
  return p;
}

Preset capture_preset_from_seed(const Network& net, std::uint64_t seed, Eigen::Index height,
                                Eigen::Index width, std::string style_id,
                                FusionConfig recommended) {
  return capture_preset(net, sample_noise(seed, height, width), std::move(style_id), seed,
                        recommended);
}

Tensorf fit_preset(const Preset& preset, Eigen::Index target_h, Eigen::Index target_w) {
  if (target_h < 1 || target_w < 1) {
    throw ShapeError("fit_preset: target size must be positive");
  }
  const Tensorf& src = preset.features;
  if (src.height() < 1 || src.width() < 1) throw PresetError("fit_preset: empty preset");
  if (src.height() == target_h && src.width() == target_w) return src;

  Tensorf out(src.batch(), src.channels(), target_h, target_w);
  for (Eigen::Index n = 0; n < src.batch(); ++n) {
    for (Eigen::Index c = 0; c < src.channels(); ++c) {
      const auto s = src.plane(n, c);
      auto d = out.plane(n, c);
      for (Eigen::Index y = 0; y < target_h; ++y) {
        const auto srow = s.row(y % src.height());
        for (Eigen::Index x = 0; x < target_w; ++x) d(y, x) = srow[x % src.width()];
      }
    }
  }
  return out;
}

void check_preset(const Network& net, const Preset& preset) {
  const Tensorf& f = preset.features;
  const int factor = net.spec().downsample_factor;
  if (preset.format_version != kPresetFormatVersion) {
    throw PresetError("preset format version " + std::to_string(preset.format_version) +
                      " is not supported");
  }
  if (f.batch() != 1 || f.channels() != net.spec().feature_channels()) {
    throw PresetError("preset features " + f.shape().str() + " do not match the network's " +
                      std::to_string(net.spec().feature_channels()) + " feature channels");
  }
  if (f.height() * factor != preset.source_height || f.width() * factor != preset.source_width ||
      f.height() < 1 || f.width() < 1) {
    throw PresetError("preset features " + f.shape().str() + " inconsistent with source noise " +
                      std::to_string(preset.source_height) + "x" +
                      std::to_string(preset.source_width));
  }
  if (!f.all_finite()) throw PresetError("preset features contain non-finite values");
  if (preset.weights_fingerprint != 0 && preset.weights_fingerprint != weights_fingerprint(net)) {
    throw PresetError("preset '" + preset.style_id + "' was captured with different weights");
  }
}

Tensorf stylize_with_preset(const Network& net, const Preset& preset, const Tensorf& content,
                            const FusionConfig& cfg) {
  check_preset(net, preset);
  if (content.batch() != 1) {
    throw ShapeError("stylize_with_preset: expected one content image, got shape " +
                     content.shape().str());
  }
  const Tensorf shallow = enc_shallow(net, content);
  return dec_fusion(net, shallow, fit_preset(preset, shallow.height(), shallow.width()), cfg);
}

}  // namespace tfp
