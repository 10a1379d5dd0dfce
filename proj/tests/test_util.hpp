#pragma once

// Shared helpers for the test suites: seeded generators and naive reference
// implementations. The references are written independently of the kernels
// (plain index loops, double accumulation) and must stay that way.

#include "tfp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tfp::testing {

inline Tensorf random_tensor(std::mt19937_64& rng, const Shape& shape, float lo = -1.0f,
                             float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  Tensorf t(shape);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
  return t;
}

inline Vector<float> random_vector(std::mt19937_64& rng, Eigen::Index n, float lo = -1.0f,
                                   float hi = 1.0f) {
  std::uniform_real_distribution<float> dist(lo, hi);
  Vector<float> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline double max_abs(const Tensorf& t) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) m = std::max(m, std::abs(double(t.data()[i])));
  return m;
}

/// Largest |a - b| relative to the reference's magnitude, ||b||_inf.
inline double rel_error(const Tensorf& a, const Tensorf& b) {
  if (!(a.shape() == b.shape())) return INFINITY;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(double(a.data()[i]) - double(b.data()[i])));
  }
  const double scale = max_abs(b);
  return scale > 0.0 ? worst / scale : worst;
}

/// Elementwise |a - b| <= rtol * ||b||_inf + atol.
inline bool close(const Tensorf& a, const Tensorf& b, double rtol = 1e-5, double atol = 1e-7) {
  if (!(a.shape() == b.shape())) return false;
  const double bound = rtol * max_abs(b) + atol;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(double(a.data()[i]) - double(b.data()[i])) > bound) return false;
  }
  return true;
}

inline Tensorf naive_conv2d(const Tensorf& x, const Tensorf& w, const Vector<float>& b, int stride,
                            int pad) {
  const int n_ = int(x.batch()), cin = int(x.channels()), h = int(x.height()), wd = int(x.width());
  const int cout = int(w.batch()), k = int(w.height());
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  Tensorf out(n_, cout, ho, wo);
  for (int n = 0; n < n_; ++n)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b[co];
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * stride + ky - pad;
                const int ix = ox * stride + kx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += double(w(co, ci, ky, kx)) * double(x(n, ci, iy, ix));
              }
          out(n, co, oy, ox) = float(acc);
        }
  return out;
}

inline Tensorf naive_dw_separable(const Tensorf& x, const DwSepParams<float>& p) {
  const int n_ = int(x.batch()), c_ = int(x.channels()), h = int(x.height()), wd = int(x.width());
  const int k = int(p.dw_weight.height()), pad = k / 2, s = p.stride;
  const int cout = int(p.pw_weight.batch());
  const int ho = (h + 2 * pad - k) / s + 1;
  const int wo = (wd + 2 * pad - k) / s + 1;
  Tensorf out(n_, cout, ho, wo);
  std::vector<double> mid(static_cast<std::size_t>(c_));
  for (int n = 0; n < n_; ++n)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        for (int c = 0; c < c_; ++c) {
          double acc = p.dw_bias[c];
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * s + ky - pad, ix = ox * s + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += double(p.dw_weight(c, 0, ky, kx)) * double(x(n, c, iy, ix));
            }
          // The depthwise result is materialized in float between the stages.
          mid[std::size_t(c)] = double(float(acc));
        }
        for (int co = 0; co < cout; ++co) {
          double acc = p.pw_bias[co];
          for (int c = 0; c < c_; ++c) acc += double(p.pw_weight(co, c, 0, 0)) * mid[std::size_t(c)];
          out(n, co, oy, ox) = float(acc);
        }
      }
  return out;
}

inline Tensorf naive_instance_norm(const Tensorf& x, const Vector<float>& gamma,
                                   const Vector<float>& beta, double eps) {
  Tensorf out(x.shape());
  const int hw = int(x.height() * x.width());
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < x.channels(); ++c) {
      double sum = 0.0;
      for (int y = 0; y < x.height(); ++y)
        for (int xx = 0; xx < x.width(); ++xx) sum += x(n, c, y, xx);
      const double mean = sum / hw;
      double sq = 0.0;
      for (int y = 0; y < x.height(); ++y)
        for (int xx = 0; xx < x.width(); ++xx) sq += (x(n, c, y, xx) - mean) * (x(n, c, y, xx) - mean);
      const double var = sq / hw;
      for (int y = 0; y < x.height(); ++y)
        for (int xx = 0; xx < x.width(); ++xx)
          out(n, c, y, xx) = float((x(n, c, y, xx) - mean) / std::sqrt(var + eps) * gamma[c] + beta[c]);
    }
  return out;
}

inline double l2_distance(const Tensorf& a, const Tensorf& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = double(a.data()[i]) - double(b.data()[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline double mean_abs_diff(const Tensorf& a, const Tensorf& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::abs(double(a.data()[i]) - double(b.data()[i]));
  return a.size() ? s / double(a.size()) : 0.0;
}

/// Mean over channels of each channel's spatial variance, for batch element 0.
inline double mean_spatial_variance(const Tensorf& t) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < t.channels(); ++c) {
    const auto p = t.plane(0, c).cast<double>().array();
    total += (p - p.mean()).square().mean();
  }
  return total / double(t.channels());
}

}  // namespace tfp::testing
