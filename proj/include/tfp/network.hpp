#pragma once

#include "tfp/arch.hpp"
#include "tfp/kernels.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tfp {

/// One layer's parameters. Unused members stay empty for the layer kind.
struct Layer {
  LayerSpec spec;
  ConvParams<float> conv;
  DwSepParams<float> dwsep;
  Vector<float> gamma;
  Vector<float> beta;
};

/// Name-ordered parameter tensor, e.g. "enc_s.1.pw_weight". Vectors are
/// stored with shape (len, 1, 1, 1).
struct NamedTensor {
  std::string name;
  Tensorf value;
};

/// The four inference subnets plus the detail-attention gate. Immutable
/// after construction; all forward functions are const and thread-safe.
class Network {
 public:
  /// Random initialization, reproducible from `seed`. Throws ArchError if the
  /// spec is invalid or over budget.
  static Network build(const ArchSpec& spec, std::uint64_t seed);

  /// Assembles a network from named tensors; every tensor the spec needs must
  /// be present with the exact expected shape.
  static Network from_tensors(const ArchSpec& spec, const std::vector<NamedTensor>& tensors);

  const ArchSpec& spec() const { return spec_; }
  const std::vector<Layer>& layers(Subnet s) const {
    return subnets_[static_cast<std::size_t>(s)];
  }

  /// Parameter tensors in serialization order (subnet order, layer order,
  /// then weight/bias/gamma/beta).
  std::vector<NamedTensor> named_tensors() const;

  /// Expected name and shape of every parameter tensor for `spec`.
  static std::vector<std::pair<std::string, Shape>> tensor_layout(const ArchSpec& spec);

 private:
  explicit Network(ArchSpec spec) : spec_(std::move(spec)) {}

  ArchSpec spec_;
  std::array<std::vector<Layer>, 5> subnets_;
};

/// Applies one subnet's layers in order (conv/dwsep, norm, activation).
Tensorf run_subnet(const Network& net, Subnet s, const Tensorf& x);

/// f^c_s: (N, 3, H, W) -> (N, C, H/4, W/4). H and W must be multiples of 4.
Tensorf enc_shallow(const Network& net, const Tensorf& image);

/// Deep texture features; accepts noise or content images alike.
Tensorf enc_deep(const Network& net, const Tensorf& image);

/// f * sigmoid(conv1x1(f)).
Tensorf dae(const Network& net, const Tensorf& features);

/// Color-transfer output in [0, 1].
Tensorf dec_shallow(const Network& net, const Tensorf& shallow);

/// Dec_f(lambda_s * dae(shallow) + lambda_d * deep).
Tensorf dec_fusion(const Network& net, const Tensorf& shallow, const Tensorf& deep,
                   const FusionConfig& cfg);

/// Pure texture image Dec_f(lambda_d * deep); equals dec_fusion with lambda_s = 0.
Tensorf decode_texture(const Network& net, const Tensorf& deep, double lambda_d);

struct PipelineOutputs {
  Tensorf cs_color;        // Dec_s(f^c_s)
  Tensorf cs_tex_noise;    // Dec_f(ls*Dae(f^c_s) + ld*f^n_d)
  Tensorf cs_tex_content;  // Dec_f(ls*Dae(f^c_s) + ld*f^c_d)
};

/// All three training-time outputs, sharing one shallow encoding.
PipelineOutputs forward_full(const Network& net, const Tensorf& content, const Tensorf& noise,
                             const FusionConfig& cfg);

/// Exact count of trainable scalars across enc_s, dec_s, enc_d, dec_f, dae.
Eigen::Index count_params(const Network& net);

enum class FlopPath : std::uint8_t {
  kFull,    // enc_s + enc_d + dae + dec_f
  kPreset,  // enc_s + dae + dec_f
};

struct LayerFlops {
  Subnet subnet;
  std::size_t index;
  LayerKind kind;
  std::int64_t flops;  // 2 * multiply-adds
};

struct FlopReport {
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  FlopPath path = FlopPath::kFull;
  std::vector<LayerFlops> layers;
  std::map<Subnet, std::int64_t> per_subnet;
  std::int64_t total = 0;

  std::int64_t subnet_total(Subnet s) const {
    const auto it = per_subnet.find(s);
    return it == per_subnet.end() ? 0 : it->second;
  }
};

/// Convolution FLOPs (2 x multiply-adds) for one (1, 3, H, W) image. Norms,
/// activations, upsampling and the fusion sum are not counted.
FlopReport count_flops(const ArchSpec& spec, Eigen::Index height, Eigen::Index width,
                       FlopPath path);
inline FlopReport count_flops(const Network& net, Eigen::Index height, Eigen::Index width,
                              FlopPath path) {
  return count_flops(net.spec(), height, width, path);
}

}  // namespace tfp
