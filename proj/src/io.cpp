#include "tfp/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <system_error>

namespace tfp {

namespace {

constexpr std::array<char, 4> kWeightMagic = {'T', 'F', 'P', 'W'};
constexpr std::array<char, 4> kPresetMagic = {'T', 'F', 'P', 'P'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void magic(const std::array<char, 4>& m) { raw(std::string_view(m.data(), m.size())); }
  void floats(const Tensorf& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) f32(t.data()[i]);
  }
  Bytes take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void magic(const std::array<char, 4>& m) {
    if (bytes_.size() < m.size()) {
      throw FormatError(FormatErrorKind::kTruncated,
                        std::string(what_) + " is truncated: shorter than its magic number");
    }
    if (std::memcmp(bytes_.data(), m.data(), m.size()) != 0) {
      throw FormatError(FormatErrorKind::kBadMagic, std::string(what_) + " has bad magic, expected '" +
                                                        std::string(m.data(), m.size()) + "'");
    }
    pos_ = m.size();
  }

  Tensorf floats(const Shape& shape, std::size_t at) {
    const std::size_t count = static_cast<std::size_t>(shape.numel());
    if (at > bytes_.size() || count * 4 > bytes_.size() - at) {
      throw FormatError(FormatErrorKind::kTruncated,
                        std::string(what_) + " is truncated inside its tensor payload");
    }
    Tensorf t(shape);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes_[at + 4 * i + b]} << (8 * b);
      t.data()[i] = std::bit_cast<float>(bits);
    }
    return t;
  }

  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) {
      throw FormatError(FormatErrorKind::kTruncated,
                        std::string(what_) + " is truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

void check_version(std::uint32_t got, std::uint32_t want, const char* what) {
  if (got != want) {
    throw FormatError(FormatErrorKind::kVersionMismatch,
                      std::string(what) + " version " + std::to_string(got) +
                          " is not supported (expected " + std::to_string(want) + ")");
  }
}

Shape read_dims(Reader& r) {
  Shape s;
  s.n = r.u32();
  s.c = r.u32();
  s.h = r.u32();
  s.w = r.u32();
  return s;
}

void write_dims(Writer& w, const Shape& s) {
  w.u32(static_cast<std::uint32_t>(s.n));
  w.u32(static_cast<std::uint32_t>(s.c));
  w.u32(static_cast<std::uint32_t>(s.h));
  w.u32(static_cast<std::uint32_t>(s.w));
}

}  // namespace

Bytes encode_weights(const Network& net) {
  const ArchSpec& spec = net.spec();
  Writer w;
  w.magic(kWeightMagic);
  w.u32(kWeightFormatVersion);
  w.u8(static_cast<std::uint8_t>(spec.variant));
  w.u8(0);
  w.u16(static_cast<std::uint16_t>(spec.downsample_factor));
  for (Subnet s : kAllSubnets) {
    const auto& ls = spec.layers(s);
    w.u32(static_cast<std::uint32_t>(ls.size()));
    for (const LayerSpec& l : ls) {
      w.u8(static_cast<std::uint8_t>(l.kind));
      w.u8(l.norm ? 1 : 0);
      w.u8(static_cast<std::uint8_t>(l.activation));
      w.u8(0);
      w.u32(static_cast<std::uint32_t>(l.in_channels));
      w.u32(static_cast<std::uint32_t>(l.out_channels));
      w.u32(static_cast<std::uint32_t>(l.kernel));
      w.u32(static_cast<std::uint32_t>(l.stride));
      w.u32(static_cast<std::uint32_t>(l.factor));
    }
  }
  const auto tensors = net.named_tensors();
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.raw(t.name);
    write_dims(w, t.value.shape());
    w.u64(offset);
    offset += static_cast<std::uint64_t>(t.value.size()) * 4;
  }
  w.u64(offset);
  for (const auto& t : tensors) w.floats(t.value);
  return w.take();
}

Network decode_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "weight file");
  r.magic(kWeightMagic);
  check_version(r.u32(), kWeightFormatVersion, "weight file");

  ArchSpec spec;
  const std::uint8_t variant = r.u8();
  if (variant > static_cast<std::uint8_t>(Variant::kTfpLite)) {
    throw FormatError(FormatErrorKind::kCorrupt, "weight file names unknown variant " +
                                                     std::to_string(variant));
  }
  spec.variant = static_cast<Variant>(variant);
  r.u8();
  spec.downsample_factor = r.u16();
  for (Subnet s : kAllSubnets) {
    const std::uint32_t count = r.u32();
    if (count > r.remaining() / 24) {
      throw FormatError(FormatErrorKind::kTruncated, "weight file is truncated in its layer table");
    }
    auto& ls = spec.layers(s);
    for (std::uint32_t i = 0; i < count; ++i) {
      LayerSpec l;
      const std::uint8_t kind = r.u8();
      const std::uint8_t norm = r.u8();
      const std::uint8_t act = r.u8();
      r.u8();
      if (kind > static_cast<std::uint8_t>(LayerKind::kUpsample) || norm > 1 ||
          act > static_cast<std::uint8_t>(Activation::kSigmoid)) {
        throw FormatError(FormatErrorKind::kCorrupt, "weight file has a malformed layer record");
      }
      l.kind = static_cast<LayerKind>(kind);
      l.norm = norm == 1;
      l.activation = static_cast<Activation>(act);
      l.in_channels = static_cast<int>(r.u32());
      l.out_channels = static_cast<int>(r.u32());
      l.kernel = static_cast<int>(r.u32());
      l.stride = static_cast<int>(r.u32());
      l.factor = static_cast<int>(r.u32());
      ls.push_back(l);
    }
  }
  try {
    spec.validate();
  } catch (const ArchError& e) {
    throw FormatError(FormatErrorKind::kCorrupt,
                      std::string("weight file embeds an invalid architecture: ") + e.what());
  }

  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  const std::uint32_t count = r.u32();
  std::vector<Entry> dir;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.str(r.u16());
    e.shape = read_dims(r);
    e.offset = r.u64();
    dir.push_back(std::move(e));
  }
  const std::uint64_t payload_bytes = r.u64();
  const std::size_t payload_start = r.pos();
  if (payload_bytes > r.remaining()) {
    throw FormatError(FormatErrorKind::kTruncated,
                      "weight file is truncated: payload declares " +
                          std::to_string(payload_bytes) + " bytes, " +
                          std::to_string(r.remaining()) + " present");
  }
  if (payload_bytes < r.remaining()) {
    throw FormatError(FormatErrorKind::kCorrupt, "weight file has trailing bytes after payload");
  }

  const auto layout = Network::tensor_layout(spec);
  if (layout.size() != dir.size()) {
    throw FormatError(FormatErrorKind::kShapeMismatch,
                      "weight file lists " + std::to_string(dir.size()) +
                          " tensors but its architecture needs " + std::to_string(layout.size()));
  }
  std::vector<NamedTensor> tensors;
  for (std::size_t i = 0; i < dir.size(); ++i) {
    const auto& [name, shape] = layout[i];
    if (dir[i].name != name || !(dir[i].shape == shape)) {
      throw FormatError(FormatErrorKind::kShapeMismatch,
                        "weight file tensor '" + dir[i].name + "' " + dir[i].shape.str() +
                            " does not match architecture slot '" + name + "' " + shape.str());
    }
    const std::uint64_t nbytes = static_cast<std::uint64_t>(shape.numel()) * 4;
    if (dir[i].offset > payload_bytes || nbytes > payload_bytes - dir[i].offset) {
      throw FormatError(FormatErrorKind::kCorrupt,
                        "weight file tensor '" + name + "' points outside the payload");
    }
    tensors.push_back({name, r.floats(shape, payload_start + dir[i].offset)});
  }
  try {
    return Network::from_tensors(spec, tensors);
  } catch (const ShapeError& e) {
    throw FormatError(FormatErrorKind::kCorrupt, e.what());
  }
}

Bytes encode_preset(const Preset& p) {
  Writer w;
  w.magic(kPresetMagic);
  w.u32(p.format_version);
  w.u16(static_cast<std::uint16_t>(p.style_id.size()));
  w.raw(p.style_id);
  w.u64(p.seed);
  w.u32(static_cast<std::uint32_t>(p.source_height));
  w.u32(static_cast<std::uint32_t>(p.source_width));
  w.f64(p.recommended.lambda_s);
  w.f64(p.recommended.lambda_d);
  w.u64(p.weights_fingerprint);
  write_dims(w, p.features.shape());
  w.floats(p.features);
  return w.take();
}

Preset decode_preset(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "preset file");
  r.magic(kPresetMagic);
  Preset p;
  p.format_version = r.u32();
  check_version(p.format_version, kPresetFormatVersion, "preset file");
  p.style_id = r.str(r.u16());
  p.seed = r.u64();
  p.source_height = r.u32();
  p.source_width = r.u32();
  p.recommended.lambda_s = r.f64();
  p.recommended.lambda_d = r.f64();
  p.weights_fingerprint = r.u64();
  const Shape shape = read_dims(r);
  if (shape.n != 1 || shape.h * 4 != p.source_height || shape.w * 4 != p.source_width ||
      shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw FormatError(FormatErrorKind::kShapeMismatch,
                      "preset features " + shape.str() + " inconsistent with source size " +
                          std::to_string(p.source_height) + "x" + std::to_string(p.source_width));
  }
  p.features = r.floats(shape, r.pos());
  r.skip(static_cast<std::size_t>(shape.numel()) * 4);
  if (r.remaining() != 0) {
    throw FormatError(FormatErrorKind::kCorrupt, "preset file has trailing bytes");
  }
  if (!p.features.all_finite()) {
    throw FormatError(FormatErrorKind::kCorrupt, "preset features contain non-finite values");
  }
  try {
    p.recommended.validate();
  } catch (const ShapeError& e) {
    throw FormatError(FormatErrorKind::kCorrupt, e.what());
  }
  return p;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw FormatError(FormatErrorKind::kIo, "cannot open '" + tmp.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw FormatError(FormatErrorKind::kIo, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FormatError(FormatErrorKind::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::kIo, "cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void save_weights(const Network& net, const std::filesystem::path& path) {
  write_file_atomic(path, encode_weights(net));
}

Network load_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

void save_preset(const Preset& preset, const std::filesystem::path& path) {
  write_file_atomic(path, encode_preset(preset));
}

Preset load_preset(const std::filesystem::path& path) { return decode_preset(read_file(path)); }

}  // namespace tfp
