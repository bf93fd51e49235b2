#pragma once

#include <cstddef>
#include <vector>

#include "fuseval/types.hpp"

namespace fuseval {

// Image values scaled into [0,1], row-major.
struct PixelMatrix {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double at(std::size_t x, std::size_t y) const {
    return values[y * width + x];
  }
};

// Global histogram equalization over the 8-bit range:
//   v' = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))
// with cdf(v) = count of intensities <= v and cdf_min the smallest nonzero
// cdf value. An image with a single distinct intensity is returned
// unchanged (the formula degenerates to 0/0).
GrayImage equalize_histogram(const GrayImage& img);

// Bilinear resampling with half-pixel centers:
//   src = (dst + 0.5) * src_size / dst_size - 0.5, clamped to [0, src_size-1]
// Blended values are rounded half-even back to 8 bits.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w,
                          std::size_t out_h);

// v -> v / 255.
PixelMatrix normalize(const GrayImage& img);

// The full chain in the fixed order equalize -> resize -> normalize.
PixelMatrix preprocess_chain(const GrayImage& img, std::size_t size = 256);

}  // namespace fuseval
