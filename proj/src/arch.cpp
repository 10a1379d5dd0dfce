#include "tfp/arch.hpp"

#include <numeric>

namespace tfp {

std::string_view subnet_name(Subnet s) {
  switch (s) {
    case Subnet::kEncShallow: return "enc_s";
    case Subnet::kDecShallow: return "dec_s";
    case Subnet::kEncDeep: return "enc_d";
    case Subnet::kDecFusion: return "dec_f";
    case Subnet::kDae: return "dae";
  }
  return "?";
}

std::string_view variant_name(Variant v) { return v == Variant::kTfp ? "TFP" : "TFP-L"; }

Variant parse_variant(std::string_view name) {
  if (name == "TFP" || name == "tfp") return Variant::kTfp;
  if (name == "TFP-L" || name == "tfp-l" || name == "tfpl") return Variant::kTfpLite;
  throw ArchError("unknown variant '" + std::string(name) + "' (expected TFP or TFP-L)");
}

Eigen::Index LayerSpec::param_count() const {
  const Eigen::Index cin = in_channels;
  const Eigen::Index cout = out_channels;
  const Eigen::Index k = kernel;
  const Eigen::Index affine = norm ? 2 * cout : 0;
  switch (kind) {
    case LayerKind::kConv: return cin * cout * k * k + cout + affine;
    case LayerKind::kDwSep: return cin * k * k + cin + cin * cout + cout + affine;
    case LayerKind::kUpsample: return 0;
  }
  return 0;
}

int ArchSpec::feature_channels() const {
  const auto& enc = layers(Subnet::kEncShallow);
  return enc.empty() ? 0 : enc.back().out_channels;
}

Eigen::Index ArchSpec::param_count(Subnet s) const {
  const auto& ls = layers(s);
  return std::accumulate(ls.begin(), ls.end(), Eigen::Index{0},
                         [](Eigen::Index acc, const LayerSpec& l) { return acc + l.param_count(); });
}

Eigen::Index ArchSpec::param_count() const {
  Eigen::Index total = 0;
  for (Subnet s : kAllSubnets) total += param_count(s);
  return total;
}

Eigen::Index param_budget(Variant v) {
  return v == Variant::kTfp ? kTfpParamBudget : kTfpLiteParamBudget;
}

namespace {

std::string where(Subnet s, std::size_t i) {
  return std::string(subnet_name(s)) + "[" + std::to_string(i) + "]";
}

/// Checks channel chaining and per-layer sanity; returns (stride product, upsample product).
std::pair<int, int> check_chain(Subnet s, const std::vector<LayerSpec>& ls, int in_channels) {
  if (ls.empty()) throw ArchError(std::string(subnet_name(s)) + " has no layers");
  int channels = in_channels;
  int stride = 1;
  int upsample = 1;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const LayerSpec& l = ls[i];
    if (l.in_channels != channels) {
      throw ArchError(where(s, i) + " expects " + std::to_string(l.in_channels) +
                      " input channels but receives " + std::to_string(channels));
    }
    if (l.out_channels < 1) throw ArchError(where(s, i) + " has no output channels");
    if (l.kind == LayerKind::kUpsample) {
      if (l.factor < 1 || l.in_channels != l.out_channels) {
        throw ArchError(where(s, i) + " is a malformed upsample layer");
      }
      upsample *= l.factor;
    } else {
      if (l.kernel < 1 || l.kernel % 2 == 0) {
        throw ArchError(where(s, i) + " kernel must be odd, got " + std::to_string(l.kernel));
      }
      if (l.stride < 1) throw ArchError(where(s, i) + " stride must be >= 1");
      stride *= l.stride;
    }
    channels = l.out_channels;
  }
  return {stride, upsample};
}

void check_encoder(const ArchSpec& spec, Subnet s) {
  const auto& ls = spec.layers(s);
  const auto [stride, upsample] = check_chain(s, ls, 3);
  if (ls.front().kind != LayerKind::kConv || ls.back().kind != LayerKind::kConv) {
    throw ArchError(std::string(subnet_name(s)) + " must begin and end with a standard conv");
  }
  bool has_dwsep = false;
  for (std::size_t i = 1; i + 1 < ls.size(); ++i) has_dwsep |= ls[i].kind == LayerKind::kDwSep;
  if (!has_dwsep) {
    throw ArchError(std::string(subnet_name(s)) + " needs a depthwise-separable middle layer");
  }
  if (upsample != 1 || stride != spec.downsample_factor) {
    throw ArchError(std::string(subnet_name(s)) + " reduces spatial dims by " +
                    std::to_string(stride) + ", expected " +
                    std::to_string(spec.downsample_factor));
  }
}

void check_decoder(const ArchSpec& spec, Subnet s) {
  const auto& ls = spec.layers(s);
  const auto [stride, upsample] = check_chain(s, ls, spec.feature_channels());
  if (stride != 1 || upsample != spec.downsample_factor) {
    throw ArchError(std::string(subnet_name(s)) + " restores spatial dims by " +
                    std::to_string(upsample) + "/" + std::to_string(stride) + ", expected " +
                    std::to_string(spec.downsample_factor));
  }
  if (ls.back().out_channels != 3 || ls.back().activation != Activation::kUnitTanh) {
    throw ArchError(std::string(subnet_name(s)) +
                    " must end in a 3-channel layer with unit-range tanh output");
  }
}

}  // namespace

void ArchSpec::validate() const {
  if (downsample_factor < 1) throw ArchError("downsample_factor must be positive");
  check_encoder(*this, Subnet::kEncShallow);
  check_encoder(*this, Subnet::kEncDeep);
  const int features = feature_channels();
  if (layers(Subnet::kEncDeep).back().out_channels != features) {
    throw ArchError("enc_d emits " + std::to_string(layers(Subnet::kEncDeep).back().out_channels) +
                    " channels but enc_s emits " + std::to_string(features) +
                    "; fusion needs equal widths");
  }
  check_decoder(*this, Subnet::kDecShallow);
  check_decoder(*this, Subnet::kDecFusion);

  const auto& dae = layers(Subnet::kDae);
  const auto [stride, upsample] = check_chain(Subnet::kDae, dae, features);
  if (stride != 1 || upsample != 1 || dae.back().out_channels != features ||
      dae.back().activation != Activation::kSigmoid) {
    throw ArchError("dae must map the feature width onto itself and end in a sigmoid gate");
  }

  const Eigen::Index params = param_count();
  if (params > param_budget(variant)) {
    throw ArchError(std::string(variant_name(variant)) + " has " + std::to_string(params) +
                    " parameters, budget is " + std::to_string(param_budget(variant)));
  }
}

namespace {

LayerSpec conv(int cin, int cout, int k, int stride, Activation act = Activation::kRelu,
               bool norm = true) {
  return {LayerKind::kConv, cin, cout, k, stride, 1, norm, act};
}

LayerSpec dwsep(int cin, int cout, int stride) {
  return {LayerKind::kDwSep, cin, cout, 3, stride, 1, true, Activation::kRelu};
}

LayerSpec upsample(int channels) {
  return {LayerKind::kUpsample, channels, channels, 1, 1, 2, false, Activation::kNone};
}

std::vector<LayerSpec> decoder(int features, int stem) {
  return {dwsep(features, features, 1), upsample(features), dwsep(features, stem, 1),
          upsample(stem), conv(stem, 3, 3, 1, Activation::kUnitTanh, false)};
}

}  // namespace

ArchSpec default_spec(Variant v) {
  constexpr int kStem = 8;
  constexpr int kDeepMiddle = 6;
  const int features = v == Variant::kTfp ? 16 : 12;

  ArchSpec spec;
  spec.variant = v;
  spec.downsample_factor = 4;
  spec.layers(Subnet::kEncShallow) = {conv(3, kStem, 3, 2), dwsep(kStem, features, 2),
                                      dwsep(features, features, 1),
                                      conv(features, features, 1, 1)};

  auto& deep = spec.layers(Subnet::kEncDeep);
  deep = {conv(3, kStem, 3, 2), dwsep(kStem, features, 2)};
  for (int i = 0; i < kDeepMiddle; ++i) deep.push_back(dwsep(features, features, 1));
  deep.push_back(conv(features, features, 3, 1));

  spec.layers(Subnet::kDecShallow) = decoder(features, kStem);
  spec.layers(Subnet::kDecFusion) = decoder(features, kStem);
  spec.layers(Subnet::kDae) = {conv(features, features, 1, 1, Activation::kSigmoid, false)};
  return spec;
}

}  // namespace tfp
