#pragma once

#include "tfp/tensor.hpp"

#include <cstdint>

namespace tfp {

/// xoshiro256** seeded through splitmix64. The exact output stream is part
/// of the preset file contract: any implementation that seeds and draws the
/// same way reproduces the same noise.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_open_low() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

 private:
  std::uint64_t s_[4];
};

/// Standard-normal draws via the Box-Muller transform. Each pair of uniforms
/// (u1 in (0,1], u2 in [0,1)) yields r*cos(2*pi*u2) then r*sin(2*pi*u2) with
/// r = sqrt(-2 ln u1), computed in double and rounded to float.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  float next();

 private:
  Xoshiro256 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// A (1, 3, H, W) tensor of i.i.d. N(0, 1) samples in NCHW order.
/// H and W must be positive multiples of 4.
Tensorf sample_noise(std::uint64_t seed, Eigen::Index height, Eigen::Index width);

}  // namespace tfp
