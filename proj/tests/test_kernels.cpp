#include "test_util.hpp"

#include "tfp/kernels.hpp"

#include <doctest.h>

using namespace tfp;
using namespace tfp::testing;

namespace {

ConvParams<float> random_conv(std::mt19937_64& rng, int cin, int cout, int k, int stride, int pad) {
  return {random_tensor(rng, {cout, cin, k, k}), random_vector(rng, cout), stride, pad};
}

DwSepParams<float> random_dwsep(std::mt19937_64& rng, int c, int cout, int k, int stride) {
  return {random_tensor(rng, {c, 1, k, k}), random_vector(rng, c),
          random_tensor(rng, {cout, c, 1, 1}), random_vector(rng, cout), stride};
}

}  // namespace

TEST_SUITE("conv2d") {
  TEST_CASE("1x1 unit kernel is the identity") {
    std::mt19937_64 rng(1);
    const Tensorf x = random_tensor(rng, {2, 1, 5, 6});
    ConvParams<float> p{Tensorf({1, 1, 1, 1}, 1.0f), Vector<float>::Zero(1), 1, 0};
    CHECK(conv2d(x, p) == x);
  }

  TEST_CASE("constant field through a 3x3 ones kernel") {
    const float v = 0.75f;
    const Tensorf x({1, 1, 6, 6}, v);
    ConvParams<float> p{Tensorf({1, 1, 3, 3}, 1.0f), Vector<float>::Zero(1), 1, 1};
    const Tensorf y = conv2d(x, p);
    REQUIRE(y.shape() == Shape{1, 1, 6, 6});
    for (int r = 1; r < 5; ++r)
      for (int c = 1; c < 5; ++c) CHECK(y(0, 0, r, c) == doctest::Approx(9 * v));
    CHECK(y(0, 0, 0, 0) == doctest::Approx(4 * v));
    CHECK(y(0, 0, 0, 3) == doctest::Approx(6 * v));
  }

  TEST_CASE("strided padded case matches the nested-loop reference") {
    std::mt19937_64 rng(7);
    const Tensorf x = random_tensor(rng, {1, 3, 7, 7});
    const auto p = random_conv(rng, 3, 4, 3, 2, 1);
    const Tensorf y = conv2d(x, p);
    CHECK(y.shape() == Shape{1, 4, 4, 4});
    CHECK(rel_error(y, naive_conv2d(x, p.weight, p.bias, 2, 1)) <= 1e-5);
  }

  TEST_CASE("randomized shapes match the reference") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 9), ch(1, 5), kidx(0, 2), st(1, 3);
    int cases = 0;
    while (cases < 150) {
      const int k = 2 * kidx(rng) + 1;
      const int stride = st(rng);
      const int pad = std::uniform_int_distribution<int>(0, k / 2 + 1)(rng);
      const Shape s{std::uniform_int_distribution<int>(1, 2)(rng), ch(rng), dim(rng), dim(rng)};
      if (s.h + 2 * pad < k || s.w + 2 * pad < k) continue;
      const auto p = random_conv(rng, int(s.c), ch(rng), k, stride, pad);
      const Tensorf x = random_tensor(rng, s);
      const Tensorf y = conv2d(x, p);
      INFO("case ", cases, " shape ", s.str(), " k=", k, " stride=", stride, " pad=", pad);
      REQUIRE(close(y, naive_conv2d(x, p.weight, p.bias, stride, pad)));
      ++cases;
    }
  }

  TEST_CASE("linear in the input when bias is zero") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_conv(rng, 3, 5, 3, 1 + trial % 2, 1);
      p.bias.setZero();
      const Tensorf a = random_tensor(rng, {1, 3, 8, 9});
      const Tensorf b = random_tensor(rng, {1, 3, 8, 9});
      const float alpha = 0.7f, beta = -1.3f;
      Tensorf mix(a.shape());
      mix.array() = alpha * a.array() + beta * b.array();
      Tensorf expect = conv2d(a, p);
      expect.array() = alpha * expect.array() + beta * conv2d(b, p).array();
      CHECK(close(conv2d(mix, p), expect));
    }
  }

  TEST_CASE("pure and independent of the worker count") {
    std::mt19937_64 rng(5);
    const Tensorf x = random_tensor(rng, {2, 4, 17, 13});
    const auto p = random_conv(rng, 4, 6, 3, 2, 1);
    const Tensorf first = conv2d(x, p);
    CHECK(conv2d(x, p) == first);
    set_num_threads(4);
    CHECK(conv2d(x, p) == first);
    set_num_threads(1);
    CHECK(first.all_finite());
  }

  TEST_CASE("shape errors name the offending dims") {
    std::mt19937_64 rng(2);
    const auto p = random_conv(rng, 3, 4, 3, 1, 1);
    const Tensorf wrong = random_tensor(rng, {1, 2, 5, 5});
    CHECK_THROWS_WITH_AS(conv2d(wrong, p), doctest::Contains("C=2"), ShapeError);
    ConvParams<float> even{Tensorf(1, 1, 2, 2), Vector<float>::Zero(1), 1, 0};
    CHECK_THROWS_AS(conv2d(Tensorf(1, 1, 4, 4), even), ShapeError);
    const auto big = random_conv(rng, 1, 1, 5, 1, 0);
    CHECK_THROWS_WITH_AS(conv2d(Tensorf(1, 1, 3, 3), big), doctest::Contains("smaller than kernel"),
                         ShapeError);
  }

  TEST_CASE("double instantiation agrees with float") {
    std::mt19937_64 rng(9);
    const Tensorf x = random_tensor(rng, {1, 3, 6, 6});
    const auto p = random_conv(rng, 3, 2, 3, 1, 1);
    ConvParams<double> pd{p.weight.cast<double>(), p.bias.cast<double>(), 1, 1};
    const Tensor<double> yd = conv2d(x.cast<double>(), pd);
    CHECK(close(conv2d(x, p), yd.cast<float>()));
  }
}

TEST_SUITE("dw_separable") {
  TEST_CASE("identity depthwise and pointwise kernels pass the input through") {
    std::mt19937_64 rng(4);
    const int c = 3;
    DwSepParams<float> p{Tensorf(c, 1, 3, 3), Vector<float>::Zero(c), Tensorf(c, c, 1, 1),
                         Vector<float>::Zero(c), 1};
    for (int i = 0; i < c; ++i) {
      p.dw_weight(i, 0, 1, 1) = 1.0f;
      p.pw_weight(i, i, 0, 0) = 1.0f;
    }
    const Tensorf x = random_tensor(rng, {2, c, 5, 7});
    CHECK(dw_separable(x, p) == x);
  }

  TEST_CASE("equals per-channel conv2d followed by a 1x1 conv2d") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 25; ++trial) {
      const int c = 1 + trial % 4, cout = 2 + trial % 3, stride = 1 + trial % 2;
      const auto p = random_dwsep(rng, c, cout, 3, stride);
      const Tensorf x = random_tensor(rng, {1, c, 6 + trial % 5, 5 + trial % 4});
      std::vector<Tensorf> per_channel;
      for (int ch = 0; ch < c; ++ch) {
        Tensorf xc(1, 1, x.height(), x.width());
        xc.plane(0, 0) = x.plane(0, ch);
        Tensorf wc(1, 1, 3, 3);
        wc.plane(0, 0) = p.dw_weight.plane(ch, 0);
        per_channel.push_back(conv2d(xc, ConvParams<float>{wc, p.dw_bias.segment(ch, 1), stride, 1}));
      }
      Tensorf mid(1, c, per_channel[0].height(), per_channel[0].width());
      for (int ch = 0; ch < c; ++ch) mid.plane(0, ch) = per_channel[std::size_t(ch)].plane(0, 0);
      const Tensorf expect = conv2d(mid, ConvParams<float>{p.pw_weight, p.pw_bias, 1, 0});
      CHECK(close(dw_separable(x, p), expect, 1e-6));
    }
  }

  TEST_CASE("randomized shapes match the reference") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 120; ++i) {
      const int c = 1 + i % 6, cout = 1 + (i * 7) % 9, k = (i % 3 == 2) ? 5 : 3, stride = 1 + i % 3;
      const auto p = random_dwsep(rng, c, cout, k, stride);
      const Tensorf x = random_tensor(rng, {1 + i % 2, c, 3 + i % 8, 4 + (i * 3) % 7});
      INFO("case ", i);
      REQUIRE(close(dw_separable(x, p), naive_dw_separable(x, p)));
    }
  }

  TEST_CASE("parameter count formula") {
    CHECK(dw_separable_param_count(8, 3, 16) == 8 * 9 + 8 + 8 * 16 + 16);
    CHECK(dw_separable_param_count(8, 3, 16) == 224);
    std::mt19937_64 rng(1);
    CHECK(random_dwsep(rng, 8, 16, 3, 1).param_count() == 224);
  }

  TEST_CASE("channel mismatch is rejected") {
    std::mt19937_64 rng(1);
    const auto p = random_dwsep(rng, 4, 8, 3, 1);
    CHECK_THROWS_AS(dw_separable(Tensorf(1, 3, 5, 5), p), ShapeError);
  }
}

TEST_SUITE("instance_norm") {
  TEST_CASE("constant plane normalizes to zero") {
    const Tensorf x({1, 2, 4, 4}, 3.5f);
    const Vector<float> ones = Vector<float>::Ones(2), zeros = Vector<float>::Zero(2);
    const Tensorf y = instance_norm(x, ones, zeros);
    CHECK(max_abs(y) == 0.0);
  }

  TEST_CASE("unit affine gives zero mean and unit variance per plane") {
    std::mt19937_64 rng(6);
    const Tensorf x = random_tensor(rng, {2, 3, 9, 11}, -4.0f, 10.0f);
    const Vector<float> ones = Vector<float>::Ones(3), zeros = Vector<float>::Zero(3);
    const Tensorf y = instance_norm(x, ones, zeros);
    for (int n = 0; n < 2; ++n)
      for (int c = 0; c < 3; ++c) {
        const auto p = y.plane(n, c).cast<double>().array();
        CHECK(std::abs(p.mean()) < 1e-4);
        CHECK(std::abs((p - p.mean()).square().mean() - 1.0) < 1e-4);
      }
  }

  TEST_CASE("matches the reference loop") {
    std::mt19937_64 rng(13);
    const Tensorf x = random_tensor(rng, {2, 3, 5, 5});
    const Vector<float> g = random_vector(rng, 3), b = random_vector(rng, 3);
    CHECK(close(instance_norm(x, g, b), naive_instance_norm(x, g, b, 1e-5)));
  }

  TEST_CASE("randomized shapes match the reference") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 120; ++i) {
      const Shape s{1 + i % 3, 1 + i % 5, 1 + (i * 5) % 13, 2 + (i * 3) % 11};
      const Tensorf x = random_tensor(rng, s, -3.0f, 3.0f);
      const Vector<float> g = random_vector(rng, s.c), b = random_vector(rng, s.c);
      INFO("case ", i, " shape ", s.str());
      REQUIRE(close(instance_norm(x, g, b), naive_instance_norm(x, g, b, 1e-5)));
    }
  }

  TEST_CASE("invariant to per-plane shifts") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
      const Tensorf x = random_tensor(rng, {1, 4, 8, 8});
      Tensorf shifted = x;
      for (int c = 0; c < 4; ++c) shifted.plane(0, c).array() += 0.5f * float(c + trial);
      const Vector<float> ones = Vector<float>::Ones(4), zeros = Vector<float>::Zero(4);
      const Tensorf a = instance_norm(x, ones, zeros), b = instance_norm(shifted, ones, zeros);
      CHECK(rel_error(b, a) * max_abs(a) <= 1e-4);
    }
  }

  TEST_CASE("gamma length must match channels") {
    const Vector<float> g = Vector<float>::Ones(2), b = Vector<float>::Zero(3);
    CHECK_THROWS_AS(instance_norm(Tensorf(1, 3, 2, 2), g, b), ShapeError);
  }
}

TEST_SUITE("upsample_nearest") {
  TEST_CASE("2x2 block replication") {
    Tensorf x(1, 1, 2, 2);
    x(0, 0, 0, 0) = 1;
    x(0, 0, 0, 1) = 2;
    x(0, 0, 1, 0) = 3;
    x(0, 0, 1, 1) = 4;
    const Tensorf y = upsample_nearest(x, 2);
    REQUIRE(y.shape() == Shape{1, 1, 4, 4});
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) CHECK(y(0, 0, r, c) == x(0, 0, r / 2, c / 2));
  }

  TEST_CASE("factor 1 is the identity and factor 0 is rejected") {
    std::mt19937_64 rng(1);
    const Tensorf x = random_tensor(rng, {1, 2, 3, 3});
    CHECK(upsample_nearest(x, 1) == x);
    CHECK_THROWS_AS(upsample_nearest(x, 0), ShapeError);
  }

  TEST_CASE("downsample then upsample of a constant image") {
    const Tensorf x({1, 3, 8, 8}, 0.25f);
    std::vector<Tensorf> planes;
    ConvParams<float> pick{Tensorf({1, 1, 1, 1}, 1.0f), Vector<float>::Zero(1), 2, 0};
    Tensorf down(1, 3, 4, 4);
    for (int c = 0; c < 3; ++c) {
      Tensorf xc(1, 1, 8, 8);
      xc.plane(0, 0) = x.plane(0, c);
      down.plane(0, c) = conv2d(xc, pick).plane(0, 0);
    }
    CHECK(upsample_nearest(down, 2) == x);
  }
}

TEST_SUITE("fuse") {
  TEST_CASE("zero deep weight returns the shallow operand exactly") {
    std::mt19937_64 rng(1);
    const Tensorf a = random_tensor(rng, {1, 4, 3, 3}), b = random_tensor(rng, {1, 4, 3, 3});
    CHECK(fuse(a, b, {1.0, 0.0}) == a);
  }

  TEST_CASE("equal halves of equal operands") {
    std::mt19937_64 rng(2);
    const Tensorf a = random_tensor(rng, {2, 3, 4, 5});
    CHECK(fuse(a, a, {0.5, 0.5}) == a);
  }

  TEST_CASE("unit weights equal the elementwise sum") {
    std::mt19937_64 rng(3);
    const Tensorf a = random_tensor(rng, {1, 2, 6, 6}), b = random_tensor(rng, {1, 2, 6, 6});
    const Tensorf y = fuse(a, b, {1.0, 1.0});
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(y.data()[i] == a.data()[i] + b.data()[i]);
  }

  TEST_CASE("shape mismatch lists both shapes") {
    CHECK_THROWS_WITH_AS(fuse(Tensorf(1, 2, 3, 3), Tensorf(1, 2, 4, 3), {1.0, 1.0}),
                         doctest::Contains("(1, 2, 3, 3)"), ShapeError);
    CHECK_THROWS_WITH_AS(fuse(Tensorf(1, 2, 3, 3), Tensorf(1, 2, 4, 3), {1.0, 1.0}),
                         doctest::Contains("(1, 2, 4, 3)"), ShapeError);
  }

  TEST_CASE("fusion config validation") {
    const FusionConfig ok{1.0, 0.0}, both_zero{0.0, 0.0}, negative{-0.1, 1.0};
    CHECK_NOTHROW(ok.validate());
    CHECK_THROWS_AS(both_zero.validate(), ShapeError);
    CHECK_THROWS_AS(negative.validate(), ShapeError);
  }
}

TEST_SUITE("activations") {
  TEST_CASE("relu and tanh examples") {
    Tensorf x(1, 1, 1, 3);
    x(0, 0, 0, 0) = -1.0f;
    x(0, 0, 0, 1) = 2.0f;
    x(0, 0, 0, 2) = 0.0f;
    const Tensorf r = relu(x);
    CHECK(r(0, 0, 0, 0) == 0.0f);
    CHECK(r(0, 0, 0, 1) == 2.0f);
    CHECK(tanh_out(x)(0, 0, 0, 2) == 0.0f);
    CHECK(unit_tanh(x)(0, 0, 0, 2) == 0.5f);
  }

  TEST_CASE("vectorized results equal a scalar loop") {
    std::mt19937_64 rng(4);
    const Tensorf x = random_tensor(rng, {2, 3, 17, 19}, -6.0f, 6.0f);
    const Tensorf r = relu(x), t = tanh_out(x), u = unit_tanh(x), s = sigmoid(x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double v = x.data()[i];
      CHECK(r.data()[i] == std::max(x.data()[i], 0.0f));
      CHECK(std::abs(t.data()[i] - std::tanh(v)) <= 1e-6);
      CHECK(std::abs(u.data()[i] - (0.5 * std::tanh(v) + 0.5)) <= 1e-6);
      CHECK(std::abs(s.data()[i] - 1.0 / (1.0 + std::exp(-v))) <= 1e-6);
      CHECK(u.data()[i] >= 0.0f);
      CHECK(u.data()[i] <= 1.0f);
    }
  }
}
