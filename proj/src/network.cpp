#include "tfp/network.hpp"

#include "tfp/random.hpp"

#include <cmath>
#include <unordered_map>

namespace tfp {

namespace {

Shape vector_shape(Eigen::Index len) { return {len, 1, 1, 1}; }

std::string prefix(Subnet s, std::size_t i) {
  return std::string(subnet_name(s)) + "." + std::to_string(i) + ".";
}

void fill_uniform(Xoshiro256& rng, float* dst, Eigen::Index count, double bound) {
  for (Eigen::Index i = 0; i < count; ++i) {
    dst[i] = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
  }
}

Tensorf he_uniform(Xoshiro256& rng, const Shape& shape, Eigen::Index fan_in) {
  Tensorf t(shape);
  fill_uniform(rng, t.data(), t.size(), std::sqrt(6.0 / static_cast<double>(fan_in)));
  return t;
}

Vector<float> bias_uniform(Xoshiro256& rng, Eigen::Index len, Eigen::Index fan_in) {
  Vector<float> b(len);
  fill_uniform(rng, b.data(), len, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  return b;
}

Tensorf apply_activation(Tensorf x, Activation act) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kRelu: return relu(std::move(x));
    case Activation::kUnitTanh: return unit_tanh(std::move(x));
    case Activation::kSigmoid: return sigmoid(std::move(x));
  }
  return x;
}

void check_image(const Network& net, const Tensorf& image, const char* op) {
  const int factor = net.spec().downsample_factor;
  if (image.channels() != 3) {
    throw ShapeError(std::string(op) + ": expected a 3-channel image, got shape " +
                     image.shape().str());
  }
  if (image.height() < factor || image.width() < factor || image.height() % factor != 0 ||
      image.width() % factor != 0) {
    throw ShapeError(std::string(op) + ": image " + std::to_string(image.height()) + "x" +
                     std::to_string(image.width()) + " must be a positive multiple of " +
                     std::to_string(factor) + " on both axes; pad the image first");
  }
}

void check_features(const Network& net, const Tensorf& f, const char* op) {
  if (f.channels() != net.spec().feature_channels()) {
    throw ShapeError(std::string(op) + ": expected " +
                     std::to_string(net.spec().feature_channels()) +
                     " feature channels, got shape " + f.shape().str());
  }
}

}  // namespace

std::vector<std::pair<std::string, Shape>> Network::tensor_layout(const ArchSpec& spec) {
  std::vector<std::pair<std::string, Shape>> layout;
  for (Subnet s : kAllSubnets) {
    const auto& ls = spec.layers(s);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const LayerSpec& l = ls[i];
      const std::string p = prefix(s, i);
      if (l.kind == LayerKind::kConv) {
        layout.emplace_back(p + "weight", Shape{l.out_channels, l.in_channels, l.kernel, l.kernel});
        layout.emplace_back(p + "bias", vector_shape(l.out_channels));
      } else if (l.kind == LayerKind::kDwSep) {
        layout.emplace_back(p + "dw_weight", Shape{l.in_channels, 1, l.kernel, l.kernel});
        layout.emplace_back(p + "dw_bias", vector_shape(l.in_channels));
        layout.emplace_back(p + "pw_weight", Shape{l.out_channels, l.in_channels, 1, 1});
        layout.emplace_back(p + "pw_bias", vector_shape(l.out_channels));
      }
      if (l.kind != LayerKind::kUpsample && l.norm) {
        layout.emplace_back(p + "gamma", vector_shape(l.out_channels));
        layout.emplace_back(p + "beta", vector_shape(l.out_channels));
      }
    }
  }
  return layout;
}

Network Network::build(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net(spec);
  Xoshiro256 rng(seed);
  for (Subnet s : kAllSubnets) {
    for (const LayerSpec& l : spec.layers(s)) {
      Layer layer;
      layer.spec = l;
      const Eigen::Index k2 = static_cast<Eigen::Index>(l.kernel) * l.kernel;
      if (l.kind == LayerKind::kConv) {
        const Eigen::Index fan_in = l.in_channels * k2;
        layer.conv.weight = he_uniform(rng, {l.out_channels, l.in_channels, l.kernel, l.kernel}, fan_in);
        layer.conv.bias = bias_uniform(rng, l.out_channels, fan_in);
        layer.conv.stride = l.stride;
        layer.conv.padding = l.kernel / 2;
      } else if (l.kind == LayerKind::kDwSep) {
        layer.dwsep.dw_weight = he_uniform(rng, {l.in_channels, 1, l.kernel, l.kernel}, k2);
        layer.dwsep.dw_bias = bias_uniform(rng, l.in_channels, k2);
        layer.dwsep.pw_weight = he_uniform(rng, {l.out_channels, l.in_channels, 1, 1}, l.in_channels);
        layer.dwsep.pw_bias = bias_uniform(rng, l.out_channels, l.in_channels);
        layer.dwsep.stride = l.stride;
      }
      if (l.kind != LayerKind::kUpsample && l.norm) {
        layer.gamma = Vector<float>::Ones(l.out_channels);
        layer.beta = Vector<float>::Zero(l.out_channels);
      }
      net.subnets_[static_cast<std::size_t>(s)].push_back(std::move(layer));
    }
  }
  return net;
}

Network Network::from_tensors(const ArchSpec& spec, const std::vector<NamedTensor>& tensors) {
  spec.validate();
  std::unordered_map<std::string, const Tensorf*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;

  auto fetch = [&](const std::string& name, const Shape& shape) -> const Tensorf& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ShapeError("missing parameter tensor '" + name + "'");
    if (!(it->second->shape() == shape)) {
      throw ShapeError("parameter '" + name + "' has shape " + it->second->shape().str() +
                       ", expected " + shape.str());
    }
    if (!it->second->all_finite()) throw ShapeError("parameter '" + name + "' is not finite");
    return *it->second;
  };
  auto fetch_vec = [&](const std::string& name, Eigen::Index len) -> Vector<float> {
    return fetch(name, vector_shape(len)).array();
  };

  Network net(spec);
  for (Subnet s : kAllSubnets) {
    const auto& ls = spec.layers(s);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const LayerSpec& l = ls[i];
      const std::string p = prefix(s, i);
      Layer layer;
      layer.spec = l;
      if (l.kind == LayerKind::kConv) {
        layer.conv.weight = fetch(p + "weight", {l.out_channels, l.in_channels, l.kernel, l.kernel});
        layer.conv.bias = fetch_vec(p + "bias", l.out_channels);
        layer.conv.stride = l.stride;
        layer.conv.padding = l.kernel / 2;
      } else if (l.kind == LayerKind::kDwSep) {
        layer.dwsep.dw_weight = fetch(p + "dw_weight", {l.in_channels, 1, l.kernel, l.kernel});
        layer.dwsep.dw_bias = fetch_vec(p + "dw_bias", l.in_channels);
        layer.dwsep.pw_weight = fetch(p + "pw_weight", {l.out_channels, l.in_channels, 1, 1});
        layer.dwsep.pw_bias = fetch_vec(p + "pw_bias", l.out_channels);
        layer.dwsep.stride = l.stride;
      }
      if (l.kind != LayerKind::kUpsample && l.norm) {
        layer.gamma = fetch_vec(p + "gamma", l.out_channels);
        layer.beta = fetch_vec(p + "beta", l.out_channels);
      }
      net.subnets_[static_cast<std::size_t>(s)].push_back(std::move(layer));
    }
  }
  return net;
}

std::vector<NamedTensor> Network::named_tensors() const {
  auto as_tensor = [](const Vector<float>& v) {
    return Tensorf::from_storage(vector_shape(v.size()), v);
  };
  std::vector<NamedTensor> out;
  for (Subnet s : kAllSubnets) {
    const auto& ls = layers(s);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const Layer& l = ls[i];
      const std::string p = prefix(s, i);
      if (l.spec.kind == LayerKind::kConv) {
        out.push_back({p + "weight", l.conv.weight});
        out.push_back({p + "bias", as_tensor(l.conv.bias)});
      } else if (l.spec.kind == LayerKind::kDwSep) {
        out.push_back({p + "dw_weight", l.dwsep.dw_weight});
        out.push_back({p + "dw_bias", as_tensor(l.dwsep.dw_bias)});
        out.push_back({p + "pw_weight", l.dwsep.pw_weight});
        out.push_back({p + "pw_bias", as_tensor(l.dwsep.pw_bias)});
      }
      if (l.spec.kind != LayerKind::kUpsample && l.spec.norm) {
        out.push_back({p + "gamma", as_tensor(l.gamma)});
        out.push_back({p + "beta", as_tensor(l.beta)});
      }
    }
  }
  return out;
}

Tensorf run_subnet(const Network& net, Subnet s, const Tensorf& x) {
  Tensorf h = x;
  for (const Layer& l : net.layers(s)) {
    switch (l.spec.kind) {
      case LayerKind::kConv: h = conv2d(h, l.conv); break;
      case LayerKind::kDwSep: h = dw_separable(h, l.dwsep); break;
      case LayerKind::kUpsample: h = upsample_nearest(h, l.spec.factor); break;
    }
    if (l.spec.kind != LayerKind::kUpsample && l.spec.norm) {
      h = instance_norm(std::move(h), l.gamma, l.beta);
    }
    h = apply_activation(std::move(h), l.spec.activation);
  }
  return h;
}

Tensorf enc_shallow(const Network& net, const Tensorf& image) {
  check_image(net, image, "enc_shallow");
  return run_subnet(net, Subnet::kEncShallow, image);
}

Tensorf enc_deep(const Network& net, const Tensorf& image) {
  check_image(net, image, "enc_deep");
  return run_subnet(net, Subnet::kEncDeep, image);
}

Tensorf dae(const Network& net, const Tensorf& features) {
  check_features(net, features, "dae");
  return multiply(features, run_subnet(net, Subnet::kDae, features));
}

Tensorf dec_shallow(const Network& net, const Tensorf& shallow) {
  check_features(net, shallow, "dec_shallow");
  return run_subnet(net, Subnet::kDecShallow, shallow);
}

Tensorf dec_fusion(const Network& net, const Tensorf& shallow, const Tensorf& deep,
                   const FusionConfig& cfg) {
  cfg.validate();
  check_features(net, shallow, "dec_fusion");
  if (!(shallow.shape() == deep.shape())) {
    throw ShapeError("dec_fusion: shallow features " + shallow.shape().str() +
                     " and deep features " + deep.shape().str() + " differ");
  }
  return run_subnet(net, Subnet::kDecFusion, fuse(dae(net, shallow), deep, cfg));
}

Tensorf decode_texture(const Network& net, const Tensorf& deep, double lambda_d) {
  if (!(lambda_d > 0.0)) throw ShapeError("decode_texture: lambda_d must be positive");
  check_features(net, deep, "decode_texture");
  return run_subnet(net, Subnet::kDecFusion, fuse(deep, deep, FusionConfig{0.0, lambda_d}));
}

PipelineOutputs forward_full(const Network& net, const Tensorf& content, const Tensorf& noise,
                             const FusionConfig& cfg) {
  if (!(content.shape() == noise.shape())) {
    throw ShapeError("forward_full: content " + content.shape().str() + " and noise " +
                     noise.shape().str() + " must share a shape");
  }
  const Tensorf f_s = enc_shallow(net, content);
  const Tensorf f_n = enc_deep(net, noise);
  const Tensorf f_c = enc_deep(net, content);
  PipelineOutputs out;
  out.cs_color = dec_shallow(net, f_s);
  out.cs_tex_noise = dec_fusion(net, f_s, f_n, cfg);
  out.cs_tex_content = dec_fusion(net, f_s, f_c, cfg);
  return out;
}

Eigen::Index count_params(const Network& net) {
  Eigen::Index total = 0;
  for (const auto& t : net.named_tensors()) total += t.value.size();
  return total;
}

FlopReport count_flops(const ArchSpec& spec, Eigen::Index height, Eigen::Index width,
                       FlopPath path) {
  if (height < 1 || width < 1 || height % spec.downsample_factor != 0 ||
      width % spec.downsample_factor != 0) {
    throw ShapeError("count_flops: size must be a positive multiple of " +
                     std::to_string(spec.downsample_factor));
  }
  FlopReport report;
  report.height = height;
  report.width = width;
  report.path = path;

  auto walk = [&](Subnet s, Eigen::Index h, Eigen::Index w) {
    std::int64_t sum = 0;
    const auto& ls = spec.layers(s);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const LayerSpec& l = ls[i];
      std::int64_t macs = 0;
      if (l.kind == LayerKind::kUpsample) {
        h *= l.factor;
        w *= l.factor;
      } else {
        const int pad = l.kernel / 2;
        h = (h + 2 * pad - l.kernel) / l.stride + 1;
        w = (w + 2 * pad - l.kernel) / l.stride + 1;
        const std::int64_t pixels = h * w;
        const std::int64_t k2 = static_cast<std::int64_t>(l.kernel) * l.kernel;
        if (l.kind == LayerKind::kConv) {
          macs = pixels * l.out_channels * l.in_channels * k2;
        } else {
          macs = pixels * l.in_channels * k2 + pixels * l.in_channels * l.out_channels;
        }
      }
      report.layers.push_back({s, i, l.kind, 2 * macs});
      sum += 2 * macs;
    }
    report.per_subnet[s] = sum;
    report.total += sum;
  };

  const Eigen::Index fh = height / spec.downsample_factor;
  const Eigen::Index fw = width / spec.downsample_factor;
  walk(Subnet::kEncShallow, height, width);
  if (path == FlopPath::kFull) walk(Subnet::kEncDeep, height, width);
  walk(Subnet::kDae, fh, fw);
  walk(Subnet::kDecFusion, fh, fw);
  return report;
}

}  // namespace tfp
