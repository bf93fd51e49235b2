#include "fuseval/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fuseval/error.hpp"

namespace fuseval {

GrayImage equalize_histogram(const GrayImage& img) {
  if (img.pixels.empty()) return img;

  std::array<std::size_t, 256> hist{};
  for (std::uint8_t v : img.pixels) ++hist[v];

  std::array<std::size_t, 256> cdf{};
  std::size_t running = 0;
  std::size_t cdf_min = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    running += hist[v];
    cdf[v] = running;
    if (cdf_min == 0 && running > 0) cdf_min = running;
  }

  const std::size_t n = img.pixels.size();
  if (cdf_min == n) return img;  // single distinct intensity

  std::array<std::uint8_t, 256> map{};
  const double denom = static_cast<double>(n - cdf_min);
  for (std::size_t v = 0; v < 256; ++v) {
    if (hist[v] == 0) continue;
    double mapped = 255.0 * (static_cast<double>(cdf[v]) - cdf_min) / denom;
    map[v] = static_cast<std::uint8_t>(std::lround(mapped));
  }

  GrayImage out = img;
  for (auto& v : out.pixels) v = map[v];
  return out;
}

namespace {

double source_coord(std::size_t dst, std::size_t dst_size,
                    std::size_t src_size) {
  double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_size) /
                 static_cast<double>(dst_size) -
             0.5;
  return std::clamp(s, 0.0, static_cast<double>(src_size - 1));
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w,
                          std::size_t out_h) {
  if (out_w == 0 || out_h == 0)
    raise(ErrorKind::Argument, "resize target dimensions must be >= 1");
  if (img.width == 0 || img.height == 0)
    raise(ErrorKind::Argument, "cannot resize an empty image");

  GrayImage out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(out_w * out_h);

  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = source_coord(y, out_h, img.height);
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double ty = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = source_coord(x, out_w, img.width);
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double tx = sx - static_cast<double>(x0);

      const double top = (1.0 - tx) * img.at(x0, y0) + tx * img.at(x1, y0);
      const double bot = (1.0 - tx) * img.at(x0, y1) + tx * img.at(x1, y1);
      const double blended = (1.0 - ty) * top + ty * bot;
      // nearbyint under the default FE_TONEAREST mode rounds half-even.
      out.pixels[y * out_w + x] =
          static_cast<std::uint8_t>(std::nearbyint(blended));
    }
  }
  return out;
}

PixelMatrix normalize(const GrayImage& img) {
  PixelMatrix out;
  out.width = img.width;
  out.height = img.height;
  out.values.reserve(img.pixels.size());
  for (std::uint8_t v : img.pixels) out.values.push_back(v / 255.0);
  return out;
}

PixelMatrix preprocess_chain(const GrayImage& img, std::size_t size) {
  return normalize(resize_bilinear(equalize_histogram(img), size, size));
}

}  // namespace fuseval
