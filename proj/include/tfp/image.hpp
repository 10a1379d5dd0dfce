#pragma once

#include "tfp/io.hpp"
#include "tfp/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace tfp {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit RGB pixels, row-major.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  friend bool operator==(const Rgb8Image&, const Rgb8Image&) = default;
};

/// Decodes PNG or JPEG (sniffed from the signature); gray and alpha
/// channels are converted to RGB.
Rgb8Image decode_image(std::span<const std::uint8_t> bytes);
Rgb8Image read_image(const std::filesystem::path& path);

/// 8-bit RGB PNG with fixed encoder settings, so equal pixels give equal bytes.
Bytes encode_png(const Rgb8Image& image);
void write_png(const std::filesystem::path& path, const Rgb8Image& image);

/// (1, 3, H, W) tensor with value v/255 per channel.
Tensorf to_tensor(const Rgb8Image& image);

/// Clamps to [0, 1] and rounds v*255 to the nearest integer.
Rgb8Image to_image(const Tensorf& tensor);

/// Mirror padding (edge pixel not repeated) at the bottom/right so both dims
/// become multiples of `multiple`.
Tensorf reflect_pad_to_multiple(const Tensorf& image, Eigen::Index multiple);

/// Top-left (height, width) window.
Tensorf crop(const Tensorf& image, Eigen::Index height, Eigen::Index width);

}  // namespace tfp
