#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "fuseval/error.hpp"
#include "fuseval/preprocess.hpp"
#include "fuseval/rng.hpp"

using namespace fuseval;

namespace {

GrayImage image_of(std::size_t w, std::size_t h,
                   std::vector<std::uint8_t> pixels) {
  return {w, h, std::move(pixels)};
}

GrayImage random_image(Rng& rng, std::size_t max_side = 24) {
  GrayImage img;
  img.width = 1 + rng.below(max_side);
  img.height = 1 + rng.below(max_side);
  img.pixels.resize(img.width * img.height);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_CASE("equalization leaves single-intensity images unchanged") {
  const GrayImage img = image_of(3, 2, {90, 90, 90, 90, 90, 90});
  CHECK(equalize_histogram(img).pixels == img.pixels);
}

TEST_CASE("equalization stretches a two-level image to full range") {
  // 10x10, 50 pixels at 10 and 50 at 200: cdf(10)=50=cdf_min -> 0,
  // cdf(200)=100 -> 255.
  std::vector<std::uint8_t> pixels(100);
  for (std::size_t i = 0; i < 100; ++i) pixels[i] = i < 50 ? 10 : 200;
  const GrayImage out = equalize_histogram(image_of(10, 10, pixels));
  for (std::size_t i = 0; i < 100; ++i)
    CHECK(out.pixels[i] == (i < 50 ? 0 : 255));
}

TEST_CASE("equalization fixes the uniform ramp") {
  std::vector<std::uint8_t> pixels(256);
  std::iota(pixels.begin(), pixels.end(), 0);
  const GrayImage out = equalize_histogram(image_of(16, 16, pixels));
  CHECK(out.pixels == pixels);
}

TEST_CASE("equalization is monotone and preserves shape") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const GrayImage img = random_image(rng);
    const GrayImage out = equalize_histogram(img);
    CHECK(out.width == img.width);
    CHECK(out.height == img.height);
    // Map extracted from occupied intensities must be non-decreasing.
    std::vector<int> map(256, -1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      map[img.pixels[i]] = out.pixels[i];
    int prev = -1;
    for (int v = 0; v < 256; ++v) {
      if (map[v] < 0) continue;
      CHECK(map[v] >= prev);
      prev = map[v];
    }
  }
}

TEST_CASE("resize to identical dimensions is identity") {
  Rng rng(4);
  const GrayImage img = random_image(rng);
  const GrayImage out = resize_bilinear(img, img.width, img.height);
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("resize keeps constant images constant") {
  const GrayImage img = image_of(3, 3, std::vector<std::uint8_t>(9, 77));
  const GrayImage out = resize_bilinear(img, 7, 2);
  for (auto p : out.pixels) CHECK(p == 77);
}

TEST_CASE("resize 2-pixel gradient to 3 pixels hits the half-pixel trace") {
  // Half-pixel centers with clamping: [0, 255] -> [0, 128, 255].
  const GrayImage img = image_of(2, 1, {0, 255});
  const GrayImage out = resize_bilinear(img, 3, 1);
  CHECK(out.pixels == std::vector<std::uint8_t>{0, 128, 255});
}

TEST_CASE("resize output stays within input range") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const GrayImage img = random_image(rng);
    const auto [lo, hi] =
        std::minmax_element(img.pixels.begin(), img.pixels.end());
    const GrayImage out =
        resize_bilinear(img, 1 + rng.below(40), 1 + rng.below(40));
    for (auto p : out.pixels) {
      CHECK(p >= *lo);
      CHECK(p <= *hi);
    }
  }
}

TEST_CASE("resize rejects zero dimensions") {
  const GrayImage img = image_of(2, 2, {1, 2, 3, 4});
  CHECK_THROWS_AS(resize_bilinear(img, 0, 4), Error);
  CHECK_THROWS_AS(resize_bilinear(img, 4, 0), Error);
}

TEST_CASE("normalize maps the 8-bit range onto [0,1]") {
  const GrayImage img = image_of(3, 1, {0, 128, 255});
  const PixelMatrix out = normalize(img);
  CHECK(out.values[0] == doctest::Approx(0.0));
  CHECK(out.values[1] == doctest::Approx(128.0 / 255.0));
  CHECK(out.values[2] == doctest::Approx(1.0));
}

TEST_CASE("full chain lands in [0,1] at the target size") {
  Rng rng(13);
  const GrayImage img = random_image(rng);
  const PixelMatrix out = preprocess_chain(img, 32);
  CHECK(out.width == 32);
  CHECK(out.height == 32);
  for (double v : out.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
