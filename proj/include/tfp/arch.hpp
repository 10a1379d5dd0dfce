#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tfp {

enum class Variant : std::uint8_t { kTfp = 0, kTfpLite = 1 };

enum class LayerKind : std::uint8_t { kConv = 0, kDwSep = 1, kUpsample = 2 };

enum class Activation : std::uint8_t { kNone = 0, kRelu = 1, kUnitTanh = 2, kSigmoid = 3 };

/// The five parameterized inference subnets, in serialization order.
enum class Subnet : std::uint8_t {
  kEncShallow = 0,
  kDecShallow = 1,
  kEncDeep = 2,
  kDecFusion = 3,
  kDae = 4,
};

inline constexpr std::array<Subnet, 5> kAllSubnets = {
    Subnet::kEncShallow, Subnet::kDecShallow, Subnet::kEncDeep, Subnet::kDecFusion, Subnet::kDae};

std::string_view subnet_name(Subnet s);
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  /// Upsample factor; only meaningful for kUpsample.
  int factor = 1;
  bool norm = false;
  Activation activation = Activation::kNone;

  Eigen::Index param_count() const;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Layer tables for every subnet plus the fixed spatial reduction factor.
struct ArchSpec {
  Variant variant = Variant::kTfp;
  int downsample_factor = 4;
  std::array<std::vector<LayerSpec>, 5> subnets;

  std::vector<LayerSpec>& layers(Subnet s) { return subnets[static_cast<std::size_t>(s)]; }
  const std::vector<LayerSpec>& layers(Subnet s) const {
    return subnets[static_cast<std::size_t>(s)];
  }

  /// Channel count of the fused feature maps (C_s == C_d).
  int feature_channels() const;
  Eigen::Index param_count() const;
  Eigen::Index param_count(Subnet s) const;

  /// Throws ArchError if any structural invariant or the parameter budget of
  /// the variant is violated.
  void validate() const;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

class ArchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Trainable-scalar ceilings: 0.01M and 0.007M with 5% slack.
inline constexpr Eigen::Index kTfpParamBudget = 10'500;
inline constexpr Eigen::Index kTfpLiteParamBudget = 7'300;

Eigen::Index param_budget(Variant v);

/// Shipped architecture for a variant.
ArchSpec default_spec(Variant v);

}  // namespace tfp
