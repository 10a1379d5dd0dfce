#include "tfp/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>

namespace tfp {

namespace {

bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xff && b[1] == 0xd8 && b[2] == 0xff;
}

Rgb8Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ImageError(std::string("cannot decode PNG: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Rgb8Image out;
  out.width = static_cast<int>(img.width);
  out.height = static_cast<int>(img.height);
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  // Composite any alpha over black.
  png_color black{0, 0, 0};
  if (!png_image_finish_read(&img, &black, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw ImageError(std::string("cannot decode PNG: ") + img.message);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Rgb8Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  Rgb8Image out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageError(std::string("cannot decode JPEG: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

Eigen::Index mirror(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Rgb8Image decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  throw ImageError("unrecognized image format (expected PNG or JPEG)");
}

Rgb8Image read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const FormatError& e) {
    throw ImageError(e.what());
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

Bytes encode_png(const Rgb8Image& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw ImageError("encode_png: malformed image buffer");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.pixels.data(), 0, nullptr)) {
    throw ImageError(std::string("cannot encode PNG: ") + img.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw ImageError(std::string("cannot encode PNG: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Rgb8Image& image) {
  write_file_atomic(path, encode_png(image));
}

Tensorf to_tensor(const Rgb8Image& image) {
  Tensorf t(1, 3, image.height, image.width);
  for (Eigen::Index y = 0; y < image.height; ++y) {
    for (Eigen::Index x = 0; x < image.width; ++x) {
      const std::uint8_t* px = image.pixels.data() + (y * image.width + x) * 3;
      for (Eigen::Index c = 0; c < 3; ++c) t(0, c, y, x) = static_cast<float>(px[c]) / 255.0f;
    }
  }
  return t;
}

Rgb8Image to_image(const Tensorf& tensor) {
  if (tensor.batch() != 1 || tensor.channels() != 3) {
    throw ImageError("to_image: expected a (1, 3, H, W) tensor, got " + tensor.shape().str());
  }
  Rgb8Image img;
  img.width = static_cast<int>(tensor.width());
  img.height = static_cast<int>(tensor.height());
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (Eigen::Index y = 0; y < img.height; ++y) {
    for (Eigen::Index x = 0; x < img.width; ++x) {
      std::uint8_t* px = img.pixels.data() + (y * img.width + x) * 3;
      for (Eigen::Index c = 0; c < 3; ++c) {
        float v = tensor(0, c, y, x);
        v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
        px[c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return img;
}

Tensorf reflect_pad_to_multiple(const Tensorf& image, Eigen::Index multiple) {
  if (multiple < 1) throw ShapeError("reflect_pad_to_multiple: multiple must be positive");
  if (image.height() < 1 || image.width() < 1) throw ShapeError("reflect_pad: empty image");
  const Eigen::Index h = (image.height() + multiple - 1) / multiple * multiple;
  const Eigen::Index w = (image.width() + multiple - 1) / multiple * multiple;
  if (h == image.height() && w == image.width()) return image;
  Tensorf out(image.batch(), image.channels(), h, w);
  for (Eigen::Index n = 0; n < image.batch(); ++n) {
    for (Eigen::Index c = 0; c < image.channels(); ++c) {
      for (Eigen::Index y = 0; y < h; ++y) {
        const Eigen::Index sy = mirror(y, image.height());
        for (Eigen::Index x = 0; x < w; ++x) out(n, c, y, x) = image(n, c, sy, mirror(x, image.width()));
      }
    }
  }
  return out;
}

Tensorf crop(const Tensorf& image, Eigen::Index height, Eigen::Index width) {
  if (height > image.height() || width > image.width() || height < 0 || width < 0) {
    throw ShapeError("crop: window " + std::to_string(height) + "x" + std::to_string(width) +
                     " exceeds image " + image.shape().str());
  }
  if (height == image.height() && width == image.width()) return image;
  Tensorf out(image.batch(), image.channels(), height, width);
  for (Eigen::Index n = 0; n < image.batch(); ++n) {
    for (Eigen::Index c = 0; c < image.channels(); ++c) {
      out.plane(n, c) = image.plane(n, c).topLeftCorner(height, width);
    }
  }
  return out;
}

}  // namespace tfp
