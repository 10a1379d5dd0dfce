#pragma once

#include "tfp/parallel.hpp"
#include "tfp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace tfp {

template <typename Scalar>
using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Standard convolution. Weights are (Cout, Cin, K, K), square odd kernel.
template <typename Scalar>
struct ConvParams {
  Tensor<Scalar> weight;
  Vector<Scalar> bias;
  int stride = 1;
  int padding = 0;

  Eigen::Index in_channels() const { return weight.channels(); }
  Eigen::Index out_channels() const { return weight.batch(); }
  Eigen::Index kernel() const { return weight.height(); }
  Eigen::Index param_count() const { return weight.size() + bias.size(); }
};

/// Depthwise KxK (zero "same" padding K/2) followed by a 1x1 pointwise conv.
template <typename Scalar>
struct DwSepParams {
  Tensor<Scalar> dw_weight;  // (C, 1, K, K)
  Vector<Scalar> dw_bias;    // C
  Tensor<Scalar> pw_weight;  // (Cout, C, 1, 1)
  Vector<Scalar> pw_bias;    // Cout
  int stride = 1;

  Eigen::Index in_channels() const { return dw_weight.batch(); }
  Eigen::Index out_channels() const { return pw_weight.batch(); }
  Eigen::Index kernel() const { return dw_weight.height(); }
  Eigen::Index param_count() const {
    return dw_weight.size() + dw_bias.size() + pw_weight.size() + pw_bias.size();
  }
};

/// C*K*K + C + C*Cout + Cout.
constexpr Eigen::Index dw_separable_param_count(Eigen::Index channels, Eigen::Index kernel,
                                                Eigen::Index out_channels) {
  return channels * kernel * kernel + channels + channels * out_channels + out_channels;
}

/// Blending strengths of the shallow (content) and deep (texture) features.
struct FusionConfig {
  double lambda_s = 1.0;
  double lambda_d = 1.0;

  void validate() const {
    if (!(lambda_s >= 0.0) || !(lambda_d >= 0.0)) {
      throw ShapeError("fusion weights must be non-negative (lambda_s=" +
                       std::to_string(lambda_s) + ", lambda_d=" + std::to_string(lambda_d) +
                       ")");
    }
    if (lambda_s == 0.0 && lambda_d == 0.0) {
      throw ShapeError("fusion weights lambda_s and lambda_d are both zero");
    }
  }
};

inline constexpr double kInstanceNormEps = 1e-5;

namespace detail {

inline Eigen::Index conv_out_extent(Eigen::Index in, Eigen::Index k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

/// Zero-padded copy of channels of batch element `n`, with columns split into
/// `stride` phases: row(c, p, y)[j] == padded(c, y, j * stride + p). Every tap
/// of a strided correlation then reads a contiguous run.
template <typename Scalar>
class PhasedPlanes {
 public:
  PhasedPlanes(const Tensor<Scalar>& in, Eigen::Index n, int pad, int stride)
      : stride_(stride),
        hp_(in.height() + 2 * pad),
        wq_((in.width() + 2 * pad + stride - 1) / stride) {
    buf_ = Vector<Scalar>::Zero(in.channels() * stride_ * hp_ * wq_);
    for (Eigen::Index c = 0; c < in.channels(); ++c) {
      const auto src = in.plane(n, c);
      for (Eigen::Index iy = 0; iy < in.height(); ++iy) {
        for (int p = 0; p < stride_; ++p) {
          Scalar* dst = buf_.data() + ((c * stride_ + p) * hp_ + iy + pad) * wq_;
          for (Eigen::Index j = 0; j < wq_; ++j) {
            const Eigen::Index ix = j * stride_ + p - pad;
            if (ix >= 0 && ix < in.width()) dst[j] = src(iy, ix);
          }
        }
      }
    }
  }

  const Scalar* row(Eigen::Index c, Eigen::Index phase, Eigen::Index py) const {
    return buf_.data() + ((c * stride_ + phase) * hp_ + py) * wq_;
  }

 private:
  int stride_;
  Eigen::Index hp_;
  Eigen::Index wq_;
  Vector<Scalar> buf_;
};

/// Adds the KxK `taps` of one input channel into output row `oy`.
/// Stride 1 reads the unpadded plane directly and clips taps at the border.
template <typename Scalar, typename Row>
void accumulate_taps_stride1(Row&& out_row, Eigen::Index oy, const Scalar* src, Eigen::Index h,
                             Eigen::Index w, const Scalar* taps, Eigen::Index k, int pad) {
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  const Eigen::Index wo = out_row.size();
  for (Eigen::Index ky = 0; ky < k; ++ky) {
    const Eigen::Index iy = oy + ky - pad;
    if (iy < 0 || iy >= h) continue;
    const Scalar* src_row = src + iy * w;
    for (Eigen::Index kx = 0; kx < k; ++kx) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, pad - kx);
      const Eigen::Index hi = std::min<Eigen::Index>(wo, w + pad - kx);
      if (hi <= lo) continue;
      out_row.segment(lo, hi - lo) +=
          taps[ky * k + kx] * Eigen::Map<const RowVec>(src_row + lo + kx - pad, hi - lo);
    }
  }
}

template <typename Scalar, typename Row>
void accumulate_taps_phased(Row&& out_row, Eigen::Index oy, const PhasedPlanes<Scalar>& src,
                            Eigen::Index c, const Scalar* taps, Eigen::Index k, int stride) {
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  const Eigen::Index wo = out_row.size();
  for (Eigen::Index ky = 0; ky < k; ++ky) {
    const Eigen::Index py = oy * stride + ky;
    for (Eigen::Index kx = 0; kx < k; ++kx) {
      out_row += taps[ky * k + kx] *
                 Eigen::Map<const RowVec>(src.row(c, kx % stride, py) + kx / stride, wo);
    }
  }
}

}  // namespace detail

/// Direct 2-D cross-correlation with zero padding. Each output element is
/// bias + sum over (ci, ky, kx) in ascending order.
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const ConvParams<Scalar>& p) {
  const Eigen::Index cin = p.in_channels();
  const Eigen::Index cout = p.out_channels();
  const Eigen::Index k = p.kernel();
  if (p.weight.width() != k || k % 2 == 0) {
    throw ShapeError("conv2d: kernel must be square and odd, got " +
                     std::to_string(p.weight.height()) + "x" + std::to_string(p.weight.width()));
  }
  if (input.channels() != cin) {
    throw ShapeError("conv2d: input has C=" + std::to_string(input.channels()) +
                     " but weights expect Cin=" + std::to_string(cin));
  }
  if (p.bias.size() != cout) {
    throw ShapeError("conv2d: bias length " + std::to_string(p.bias.size()) +
                     " != Cout=" + std::to_string(cout));
  }
  if (p.stride < 1 || p.padding < 0) {
    throw ShapeError("conv2d: stride must be >= 1 and padding >= 0");
  }
  const Eigen::Index hp = input.height() + 2 * p.padding;
  const Eigen::Index wp = input.width() + 2 * p.padding;
  if (hp < k || wp < k) {
    throw ShapeError("conv2d: padded input " + std::to_string(hp) + "x" + std::to_string(wp) +
                     " smaller than kernel " + std::to_string(k));
  }
  const Eigen::Index ho = detail::conv_out_extent(input.height(), k, p.stride, p.padding);
  const Eigen::Index wo = detail::conv_out_extent(input.width(), k, p.stride, p.padding);
  auto out = Tensor<Scalar>::uninitialized({input.batch(), cout, ho, wo});

  using RowMatrix = typename Tensor<Scalar>::PlaneMatrix;
  if (k == 1 && p.stride == 1 && p.padding == 0) {
    // Pointwise: (Cout, Cin) x (Cin, HW) per batch element.
    const Eigen::Map<const RowMatrix> w(p.weight.data(), cout, cin);
    const Eigen::Index hw = ho * wo;
    for (Eigen::Index n = 0; n < input.batch(); ++n) {
      const Eigen::Map<const RowMatrix> x(input.data() + n * cin * hw, cin, hw);
      Eigen::Map<RowMatrix> y(out.data() + n * cout * hw, cout, hw);
      y.noalias() = w * x;
      y.colwise() += p.bias.matrix();
    }
    return out;
  }

  const Eigen::Index plane = input.height() * input.width();
  for (Eigen::Index n = 0; n < input.batch(); ++n) {
    std::optional<detail::PhasedPlanes<Scalar>> phased;
    if (p.stride > 1) phased.emplace(input, n, p.padding, p.stride);
    const Scalar* src = input.data() + n * cin * plane;
    parallel_for(0, cout, [&](Eigen::Index co) {
      auto y = out.plane(n, co);
      y.setConstant(p.bias[co]);
      const Scalar* wco = p.weight.data() + co * cin * k * k;
      for (Eigen::Index oy = 0; oy < ho; ++oy) {
        auto row = y.row(oy);
        for (Eigen::Index ci = 0; ci < cin; ++ci) {
          const Scalar* taps = wco + ci * k * k;
          if (phased) {
            detail::accumulate_taps_phased(row, oy, *phased, ci, taps, k, p.stride);
          } else {
            detail::accumulate_taps_stride1(row, oy, src + ci * plane, input.height(),
                                            input.width(), taps, k, p.padding);
          }
        }
      }
    });
  }
  return out;
}

/// Per-channel KxK convolution (groups == C) with "same" zero padding.
template <typename Scalar>
Tensor<Scalar> depthwise_conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                                const Vector<Scalar>& bias, int stride) {
  const Eigen::Index c = weight.batch();
  const Eigen::Index k = weight.height();
  if (weight.channels() != 1 || weight.width() != k || k % 2 == 0) {
    throw ShapeError("depthwise_conv2d: weights must be (C, 1, K, K) with odd K, got " +
                     weight.shape().str());
  }
  if (input.channels() != c || bias.size() != c) {
    throw ShapeError("depthwise_conv2d: input has C=" + std::to_string(input.channels()) +
                     ", weights have C=" + std::to_string(c) +
                     ", bias length=" + std::to_string(bias.size()));
  }
  if (stride < 1) throw ShapeError("depthwise_conv2d: stride must be >= 1");
  const int pad = static_cast<int>(k / 2);
  const Eigen::Index ho = detail::conv_out_extent(input.height(), k, stride, pad);
  const Eigen::Index wo = detail::conv_out_extent(input.width(), k, stride, pad);
  if (ho < 1 || wo < 1) throw ShapeError("depthwise_conv2d: input smaller than kernel");
  auto out = Tensor<Scalar>::uninitialized({input.batch(), c, ho, wo});

  const Eigen::Index plane = input.height() * input.width();
  for (Eigen::Index n = 0; n < input.batch(); ++n) {
    std::optional<detail::PhasedPlanes<Scalar>> phased;
    if (stride > 1) phased.emplace(input, n, pad, stride);
    parallel_for(0, c, [&](Eigen::Index ch) {
      auto y = out.plane(n, ch);
      y.setConstant(bias[ch]);
      const Scalar* taps = weight.data() + ch * k * k;
      const Scalar* src = input.data() + (n * c + ch) * plane;
      for (Eigen::Index oy = 0; oy < ho; ++oy) {
        if (phased) {
          detail::accumulate_taps_phased(y.row(oy), oy, *phased, ch, taps, k, stride);
        } else {
          detail::accumulate_taps_stride1(y.row(oy), oy, src, input.height(), input.width(),
                                          taps, k, pad);
        }
      }
    });
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> dw_separable(const Tensor<Scalar>& input, const DwSepParams<Scalar>& p) {
  if (input.channels() != p.in_channels()) {
    throw ShapeError("dw_separable: input has C=" + std::to_string(input.channels()) +
                     " but depthwise stage expects C=" + std::to_string(p.in_channels()));
  }
  if (p.pw_weight.channels() != p.in_channels() || p.pw_weight.height() != 1 ||
      p.pw_weight.width() != 1) {
    throw ShapeError("dw_separable: pointwise weights " + p.pw_weight.shape().str() +
                     " do not match depthwise channels " + std::to_string(p.in_channels()));
  }
  Tensor<Scalar> mid = depthwise_conv2d(input, p.dw_weight, p.dw_bias, p.stride);
  return conv2d(mid, ConvParams<Scalar>{p.pw_weight, p.pw_bias, 1, 0});
}

/// Per-(n, c) plane standardization with biased variance, then affine.
/// Takes the input by value and normalizes it in place.
template <typename Scalar>
Tensor<Scalar> instance_norm(Tensor<Scalar> t, const Vector<Scalar>& gamma,
                             const Vector<Scalar>& beta, double eps = kInstanceNormEps) {
  if (gamma.size() != t.channels() || beta.size() != t.channels()) {
    throw ShapeError("instance_norm: gamma/beta lengths " + std::to_string(gamma.size()) + "/" +
                     std::to_string(beta.size()) + " != C=" + std::to_string(t.channels()));
  }
  if (!(eps > 0.0)) throw ShapeError("instance_norm: eps must be positive");
  if (t.height() * t.width() == 0) return t;
  for (Eigen::Index n = 0; n < t.batch(); ++n) {
    for (Eigen::Index c = 0; c < t.channels(); ++c) {
      auto x = t.plane(n, c).array();
      const Scalar mean = x.mean();
      const Scalar var = (x - mean).square().mean();
      const Scalar inv_std = Scalar(1) / std::sqrt(var + static_cast<Scalar>(eps));
      x = (x - mean) * inv_std * gamma[c] + beta[c];
    }
  }
  return t;
}

template <typename Scalar>
Tensor<Scalar> upsample_nearest(const Tensor<Scalar>& input, Eigen::Index factor) {
  if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
  if (factor == 1) return input;
  auto out = Tensor<Scalar>::uninitialized(
      {input.batch(), input.channels(), input.height() * factor, input.width() * factor});
  for (Eigen::Index n = 0; n < input.batch(); ++n) {
    for (Eigen::Index c = 0; c < input.channels(); ++c) {
      const auto src = input.plane(n, c);
      auto dst = out.plane(n, c);
      for (Eigen::Index y = 0; y < dst.rows(); ++y) {
        const auto src_row = src.row(y / factor);
        auto dst_row = dst.row(y);
        for (Eigen::Index x = 0; x < dst.cols(); ++x) dst_row[x] = src_row[x / factor];
      }
    }
  }
  return out;
}

/// lambda_s * a + lambda_d * b. A zero weight drops its term entirely, so the
/// other operand passes through bit-exactly.
template <typename Scalar>
Tensor<Scalar> fuse(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const FusionConfig& cfg) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("fuse: shapes differ, a=" + a.shape().str() + " b=" + b.shape().str());
  }
  const auto ls = static_cast<Scalar>(cfg.lambda_s);
  const auto ld = static_cast<Scalar>(cfg.lambda_d);
  auto out = Tensor<Scalar>::uninitialized(a.shape());
  if (cfg.lambda_d == 0.0) {
    out.array() = ls * a.array();
  } else if (cfg.lambda_s == 0.0) {
    out.array() = ld * b.array();
  } else {
    out.array() = ls * a.array() + ld * b.array();
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(Tensor<Scalar> t) {
  t.array() = t.array().max(Scalar(0));
  return t;
}

template <typename Scalar>
Tensor<Scalar> tanh_out(Tensor<Scalar> t) {
  t.array() = t.array().tanh();
  return t;
}

/// 0.5 * tanh(x) + 0.5: the decoder output activation, range [0, 1].
template <typename Scalar>
Tensor<Scalar> unit_tanh(Tensor<Scalar> t) {
  t.array() = Scalar(0.5) * t.array().tanh() + Scalar(0.5);
  return t;
}

template <typename Scalar>
Tensor<Scalar> sigmoid(Tensor<Scalar> t) {
  t.array() = Scalar(1) / (Scalar(1) + (-t.array()).exp());
  return t;
}

/// Elementwise product of equally shaped tensors.
template <typename Scalar>
Tensor<Scalar> multiply(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("multiply: shapes differ, a=" + a.shape().str() + " b=" + b.shape().str());
  }
  auto out = Tensor<Scalar>::uninitialized(a.shape());
  out.array() = a.array() * b.array();
  return out;
}

}  // namespace tfp
