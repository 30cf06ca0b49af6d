#include <doctest.h>

#include <cmath>

#include "presstyle/ops.hpp"
#include "presstyle/rng.hpp"
#include "presstyle/tensor.hpp"

using namespace ptn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Direct six-nested-loop cross-correlation, rank-3 input.
Tensor conv2d_oracle(const Tensor& x, const Tensor& k, const Tensor& b, int stride,
                     int pad) {
  const int c_out = k.dim(0), c_in = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  const int h = x.dim(1), w = x.dim(2);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  Tensor y({c_out, oh, ow});
  for (int co = 0; co < c_out; ++co) {
    for (int i = 0; i < oh; ++i) {
      for (int j = 0; j < ow; ++j) {
        double acc = b[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < c_in; ++ci) {
          for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v) {
              const int r = i * stride + u - pad;
              const int c = j * stride + v - pad;
              if (r < 0 || r >= h || c < 0 || c >= w) continue;
              acc += x.at(ci, r, c) * k.at(co, ci, u, v);
            }
          }
        }
        y.at(co, i, j) = acc;
      }
    }
  }
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d identity kernel on a scalar cell") {
  Tensor x({1, 1, 1}, {5.0});
  Tensor k({1, 1, 1, 1}, {1.0});
  Tensor b({1}, {0.0});
  Tensor y = conv2d(x, k, b, 1, 0);
  CHECK(y.shape() == std::vector<int>{1, 1, 1});
  CHECK(y[0] == doctest::Approx(5.0));
}

TEST_CASE("conv2d sum kernel") {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  Tensor k({1, 1, 2, 2}, {1, 1, 1, 1});
  Tensor b({1}, {0.0});
  Tensor y = conv2d(x, k, b, 1, 0);
  CHECK(y.shape() == std::vector<int>{1, 1, 1});
  CHECK(y[0] == doctest::Approx(10.0));
}

TEST_CASE("conv2d matches the naive-loop oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = random_tensor({4, 10, 6}, rng);
    Tensor k = random_tensor({8, 4, 3, 3}, rng);
    Tensor b = random_tensor({8}, rng);
    Tensor got = conv2d(x, k, b, 1, 1);
    Tensor want = conv2d_oracle(x, k, b, 1, 1);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-6));
    }
  }
  // strided case
  Tensor x = random_tensor({3, 9, 7}, rng);
  Tensor k = random_tensor({5, 3, 3, 3}, rng);
  Tensor b = random_tensor({5}, rng);
  Tensor got = conv2d(x, k, b, 2, 1);
  Tensor want = conv2d_oracle(x, k, b, 2, 1);
  REQUIRE(got.shape() == want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-6));
  }
}

TEST_CASE("conv2d rejects mismatched channel counts") {
  Tensor x({2, 4, 4});
  Tensor k({1, 3, 3, 3});
  Tensor b({1});
  CHECK_THROWS_AS(conv2d(x, k, b, 1, 1), ShapeError);
}

TEST_CASE("conv2d_transpose scalar case") {
  Tensor x({1, 1, 1}, {3.0});
  Tensor k({1, 1, 1, 1}, {2.0});
  Tensor b({1}, {0.0});
  Tensor y = conv2d_transpose(x, k, b, 1, 0, 1, 1);
  CHECK(y[0] == doctest::Approx(6.0));
}

TEST_CASE("conv2d_transpose adjoint identity") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = random_tensor({3, 5, 4}, rng);
    Tensor k = random_tensor({2, 3, 3, 3}, rng);  // conv: 3->2 channels
    Tensor zero_out({2}), zero_in({3});
    Tensor cx = conv2d(x, k, zero_out, 1, 1);
    Tensor y = random_tensor(cx.shape(), rng);
    // transpose kernels are the same memory viewed as [C_in=2, C_out=3, 3, 3]
    Tensor kt = k.reshaped({2, 3, 3, 3});
    Tensor ty = conv2d_transpose(y, kt, zero_in, 1, 1, 5, 4);
    CHECK(std::fabs(dot(cx, y) - dot(x, ty)) < 1e-9);
  }
}

TEST_CASE("conv2d_transpose stride-2 declared output size") {
  Tensor x({1, 2, 2});
  x.fill(1.0);
  Tensor k({1, 1, 2, 2});
  k.fill(1.0);
  Tensor b({1});
  Tensor y = conv2d_transpose(x, k, b, 2, 0, 4, 4);
  CHECK(y.shape() == std::vector<int>{1, 4, 4});
  CHECK_THROWS_AS(conv2d_transpose(x, k, b, 2, 0, 9, 9), ShapeError);
}

TEST_CASE("max_pool2d 2x2 example with argmax record") {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  auto [y, rec] = max_pool2d(x);
  CHECK(y.shape() == std::vector<int>{1, 1, 1});
  CHECK(y[0] == doctest::Approx(4.0));
  CHECK(rec.argmax[0] == 1 * 2 + 1);  // flat position of (1,1)
}

TEST_CASE("max_pool2d grid geometry: 80x28 -> 40x14, 7x7 -> 3x3") {
  Tensor a({1, 80, 28});
  auto [ya, ra] = max_pool2d(a);
  CHECK(ya.shape() == std::vector<int>{1, 40, 14});
  Tensor b({2, 7, 7});
  auto [yb, rb] = max_pool2d(b);
  CHECK(yb.shape() == std::vector<int>{2, 3, 3});
  CHECK(rb.in_h == 7);
  CHECK(rb.in_w == 7);
}

TEST_CASE("max_unpool2d scatters to the recorded argmax") {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  auto [y, rec] = max_pool2d(x);
  Tensor up = max_unpool2d(y, rec);
  CHECK(up.shape() == std::vector<int>{1, 2, 2});
  CHECK(up[0] == 0.0);
  CHECK(up[1] == 0.0);
  CHECK(up[2] == 0.0);
  CHECK(up[3] == doctest::Approx(4.0));
}

TEST_CASE("unpool restores exact pre-pool shapes, odd sizes included") {
  Rng rng(3);
  for (auto shape : {std::vector<int>{2, 7, 7}, {1, 80, 28}, {3, 9, 5}}) {
    Tensor x = random_tensor(shape, rng);
    auto [y, rec] = max_pool2d(x);
    Tensor up = max_unpool2d(y, rec);
    CHECK(up.shape() == x.shape());
  }
}

TEST_CASE("pool of unpool is the identity on non-negative maps") {
  // the scattered value must win its 2x2 window against the zero fill, which
  // is the post-ReLU regime the decoder operates in
  Rng rng(5);
  Tensor x = random_tensor({2, 8, 6}, rng);
  auto [pooled, rec] = max_pool2d(x);
  Tensor y = random_tensor(pooled.shape(), rng, 0.0, 1.0);
  auto [again, rec2] = max_pool2d(max_unpool2d(y, rec));
  REQUIRE(again.shape() == y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(again[i] == doctest::Approx(y[i]).epsilon(1e-12));
  }
}

TEST_CASE("unpool rejects a mismatched record") {
  Tensor x({1, 4, 4});
  auto [y, rec] = max_pool2d(x);
  Tensor wrong({1, 3, 3});
  CHECK_THROWS_AS(max_unpool2d(wrong, rec), ShapeError);
}

TEST_CASE("batch_norm normalizes to zero mean unit variance") {
  Rng rng(11);
  Tensor x({8, 3, 4, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.gaussian(5.0, 2.0);
  Tensor scale({3});
  scale.fill(1.0);
  Tensor shift({3});
  BatchNormState st{Tensor({3}), Tensor({3})};
  st.running_var.fill(1.0);
  BatchNormCache cache;
  Tensor y = batch_norm(x, scale, shift, st, true, &cache);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    int n = 0;
    for (int b = 0; b < 8; ++b) {
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          mean += y.at(b, c, i, j);
          ++n;
        }
      }
    }
    mean /= n;
    for (int b = 0; b < 8; ++b) {
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          var += (y.at(b, c, i, j) - mean) * (y.at(b, c, i, j) - mean);
        }
      }
    }
    var /= n;
    CHECK(std::fabs(mean) < 1e-6);
    CHECK(std::fabs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("batch_norm affine contract: scale 2 shift 3") {
  Rng rng(13);
  Tensor x({16, 2});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.gaussian();
  Tensor scale({2}, {2.0, 2.0});
  Tensor shift({2}, {3.0, 3.0});
  BatchNormState st{Tensor({2}), Tensor({2})};
  st.running_var.fill(1.0);
  Tensor y = batch_norm(x, scale, shift, st, true, nullptr);
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    for (int b = 0; b < 16; ++b) mean += y.at(b, c);
    mean /= 16;
    for (int b = 0; b < 16; ++b) var += (y.at(b, c) - mean) * (y.at(b, c) - mean);
    var /= 16;
    CHECK(mean == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(var == doctest::Approx(4.0).epsilon(1e-3));
  }
}

TEST_CASE("batch_norm eval mode matches the hand formula") {
  Tensor x({2, 1, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor scale({1}, {1.5});
  Tensor shift({1}, {-0.25});
  BatchNormState st{Tensor({1}, {2.0}), Tensor({1}, {9.0})};
  Tensor y = batch_norm(x, scale, shift, st, false, nullptr);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double want = (x[i] - 2.0) / std::sqrt(9.0 + st.eps) * 1.5 - 0.25;
    CHECK(y[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("batch_norm rejects a single-sample training batch") {
  Tensor x({1, 2});
  Tensor scale({2}), shift({2});
  BatchNormState st{Tensor({2}), Tensor({2})};
  CHECK_THROWS_AS(batch_norm(x, scale, shift, st, true, nullptr), NumericError);
}

TEST_CASE("dense identity and small affine example") {
  Tensor x({1, 2}, {1.0, 2.0});
  Tensor wi({2, 2}, {1, 0, 0, 1});
  Tensor b0({2});
  Tensor y = dense(x, wi, b0);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(2.0));

  Tensor w({2, 1}, {1.0, 1.0});
  Tensor b({1}, {0.5});
  Tensor z = dense(x, w, b);
  CHECK(z[0] == doctest::Approx(3.5));
}

TEST_CASE("dense matches triple-loop oracle within 1e-9") {
  Rng rng(17);
  Tensor x = random_tensor({5, 7}, rng);
  Tensor w = random_tensor({7, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  Tensor y = dense(x, w, b);
  for (int n = 0; n < 5; ++n) {
    for (int o = 0; o < 3; ++o) {
      double acc = b[static_cast<std::size_t>(o)];
      for (int i = 0; i < 7; ++i) acc += x.at(n, i) * w.at(i, o);
      CHECK(std::fabs(y.at(n, o) - acc) < 1e-9);
    }
  }
}

TEST_CASE("relu clamps negatives and keeps positives") {
  Tensor x({4}, {-1.0, 0.0, 0.5, 2.0});
  Tensor y = relu(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == doctest::Approx(0.5));
  CHECK(y[3] == doctest::Approx(2.0));
}

TEST_CASE("concat_cols stacks along axis 1") {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {9, 8});
  Tensor y = concat_cols(a, b);
  CHECK(y.shape() == std::vector<int>{2, 3});
  CHECK(y.at(0, 2) == doctest::Approx(9.0));
  CHECK(y.at(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("forward ops are deterministic for identical inputs") {
  Rng rng(23);
  Tensor x = random_tensor({2, 6, 5}, rng);
  Tensor k = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  Tensor y1 = conv2d(x, k, b, 1, 1);
  Tensor y2 = conv2d(x, k, b, 1, 1);
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}
