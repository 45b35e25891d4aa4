#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pxp/image.hpp"
#include "pxp/rng.hpp"

using namespace pxp;

TEST_CASE("rng streams are deterministic per seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    double va = a.uniform01(), vb = b.uniform01(), vc = c.uniform01();
    all_equal = all_equal && va == vb;
    any_diff = any_diff || va != vc;
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("below stays in range and covers the range") {
  Rng rng(7);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 2000; ++i) {
    std::size_t v = rng.below(5);
    REQUIRE(v < 5);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 0);
  CHECK(Rng(1).below(1) == 0);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  std::vector<int> w = v;
  Rng(11).shuffle(v);
  Rng(11).shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(100);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
}

TEST_CASE("normal sampler has roughly standard moments") {
  Rng rng(123);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("derive_seed decorrelates streams") {
  std::uint64_t s0 = derive_seed(5, 0);
  std::uint64_t s1 = derive_seed(5, 1);
  CHECK(s0 != s1);
  CHECK(derive_seed(5, 0) == s0);
  CHECK(derive_seed(6, 0) != s0);
}

TEST_CASE("image layout is channel-planar row-major") {
  Image img(2, 3, 2);
  img.at(1, 2, 1) = 0.5;
  CHECK(img.data[2 * 3 + 1 * 3 + 2] == 0.5);
  img.plane(0)(0, 1) = 0.25;
  CHECK(img.at(0, 1, 0) == 0.25);
  CHECK(img.pixels() == 6);
  CHECK(img.size() == 12);
}

TEST_CASE("image constructor validates dimensions") {
  CHECK_THROWS_AS(Image(0, 4), ParamError);
  CHECK_THROWS_AS(Image(4, -1), ParamError);
  CHECK_THROWS_AS(Image(4, 4, 0), ParamError);
}

TEST_CASE("clip_unit clamps and is idempotent") {
  Image img(1, 3);
  img.at(0, 0) = -0.2;
  img.at(0, 1) = 0.5;
  img.at(0, 2) = 1.7;
  Image clipped = clip_unit(img);
  CHECK(clipped.at(0, 0) == 0.0);
  CHECK(clipped.at(0, 1) == 0.5);
  CHECK(clipped.at(0, 2) == 1.0);
  Image twice = clip_unit(clipped);
  CHECK(std::equal(twice.data.begin(), twice.data.end(), clipped.data.begin()));
}

TEST_CASE("require_same_shape names the mismatch") {
  Image a(2, 2), b(2, 3);
  CHECK_THROWS_AS(require_same_shape(a, b, "test"), ParamError);
}
