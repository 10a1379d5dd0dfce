#include "tfp/random.hpp"

#include <cmath>
#include <numbers>

namespace tfp {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Xoshiro256::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

float NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return static_cast<float>(spare_);
  }
  const double u1 = rng_.uniform_open_low();
  const double u2 = rng_.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return static_cast<float>(r * std::cos(theta));
}

Tensorf sample_noise(std::uint64_t seed, Eigen::Index height, Eigen::Index width) {
  if (height < 1 || width < 1 || height % 4 != 0 || width % 4 != 0) {
    throw ShapeError("sample_noise: size " + std::to_string(height) + "x" +
                     std::to_string(width) + " must be positive multiples of 4");
  }
  Tensorf noise(1, 3, height, width);
  NormalStream normal(seed);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal.next();
  return noise;
}

}  // namespace tfp
