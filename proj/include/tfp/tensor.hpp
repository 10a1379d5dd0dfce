#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfp {

/// Raised for any tensor shape or argument precondition violation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NCHW extents.
struct Shape {
  Eigen::Index n = 0;
  Eigen::Index c = 0;
  Eigen::Index h = 0;
  Eigen::Index w = 0;

  Eigen::Index numel() const { return n * c * h * w; }
  Eigen::Index plane() const { return h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
           std::to_string(h) + ", " + std::to_string(w) + ")";
  }
};

/// Dense rank-4 NCHW tensor. Storage is a contiguous Eigen column vector in
/// row-major NCHW order, so `data()[((n*C + c)*H + y)*W + x]` addresses a
/// pixel. Planes are exposed as row-major Eigen maps.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using PlaneMap = Eigen::Map<PlaneMatrix>;
  using ConstPlaneMap = Eigen::Map<const PlaneMatrix>;

  Tensor() = default;

  explicit Tensor(const Shape& shape) : shape_(check(shape)), data_(shape.numel()) {
    data_.setZero();
  }

  /// Allocates without initializing the payload; callers must overwrite it.
  static Tensor uninitialized(const Shape& shape) {
    Tensor t;
    t.shape_ = check(shape);
    t.data_.resize(shape.numel());
    return t;
  }

  Tensor(const Shape& shape, Scalar fill) : shape_(check(shape)), data_(shape.numel()) {
    data_.setConstant(fill);
  }

  Tensor(Eigen::Index n, Eigen::Index c, Eigen::Index h, Eigen::Index w)
      : Tensor(Shape{n, c, h, w}) {}

  static Tensor from_storage(const Shape& shape, Storage data) {
    if (data.size() != check(shape).numel()) {
      throw ShapeError("tensor storage holds " + std::to_string(data.size()) +
                       " values but shape " + shape.str() + " needs " +
                       std::to_string(shape.numel()));
    }
    Tensor t;
    t.shape_ = shape;
    t.data_ = std::move(data);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Eigen::Index batch() const { return shape_.n; }
  Eigen::Index channels() const { return shape_.c; }
  Eigen::Index height() const { return shape_.h; }
  Eigen::Index width() const { return shape_.w; }
  Eigen::Index size() const { return data_.size(); }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator()(Eigen::Index n, Eigen::Index c, Eigen::Index y, Eigen::Index x) {
    return data_[offset(n, c, y, x)];
  }
  Scalar operator()(Eigen::Index n, Eigen::Index c, Eigen::Index y, Eigen::Index x) const {
    return data_[offset(n, c, y, x)];
  }

  PlaneMap plane(Eigen::Index n, Eigen::Index c) {
    return PlaneMap(data_.data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }
  ConstPlaneMap plane(Eigen::Index n, Eigen::Index c) const {
    return ConstPlaneMap(data_.data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }

  /// Copy of one batch element as an N=1 tensor.
  Tensor slice_batch(Eigen::Index n) const {
    const Shape s{1, shape_.c, shape_.h, shape_.w};
    const Eigen::Index len = s.numel();
    return from_storage(s, data_.segment(n * len, len));
  }

  bool all_finite() const { return data_.isFinite().all(); }

  /// Bitwise equality of shape and payload.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    if (!(a.shape_ == b.shape_)) return false;
    return a.data_.size() == 0 ||
           std::memcmp(a.data_.data(), b.data_.data(),
                       static_cast<std::size_t>(a.data_.size()) * sizeof(Scalar)) == 0;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>::from_storage(shape_, data_.template cast<Other>());
  }

 private:
  static const Shape& check(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw ShapeError("negative tensor extent " + s.str());
    }
    return s;
  }

  Eigen::Index offset(Eigen::Index n, Eigen::Index c, Eigen::Index y, Eigen::Index x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{};
  Storage data_{};
};

using Tensorf = Tensor<float>;

/// Concatenate along the batch axis. All inputs must agree on C, H, W.
template <typename Scalar>
Tensor<Scalar> concat_batch(const std::vector<Tensor<Scalar>>& parts) {
  if (parts.empty()) return {};
  Shape s = parts.front().shape();
  s.n = 0;
  for (const auto& p : parts) {
    if (p.channels() != s.c || p.height() != s.h || p.width() != s.w) {
      throw ShapeError("concat_batch: " + p.shape().str() + " does not match " +
                       parts.front().shape().str());
    }
    s.n += p.batch();
  }
  Tensor<Scalar> out(s);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.array().segment(at, p.size()) = p.array();
    at += p.size();
  }
  return out;
}

}  // namespace tfp
