#include "fuseval/pgm.hpp"

#include <cctype>

#include "fuseval/error.hpp"

namespace fuseval {

namespace {

// Reads the next unsigned decimal token from a PGM header, skipping
// whitespace and `#` comments.
long next_header_value(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    unsigned char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
    raise(ErrorKind::Format, "truncated or malformed PGM header");
  long value = 0;
  while (pos < bytes.size() &&
         std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000'000) raise(ErrorKind::Format, "PGM header value overflow");
    ++pos;
  }
  return value;
}

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    std::string magic = bytes.size() >= 2 ? std::string(bytes.substr(0, 2)) : "";
    raise(ErrorKind::Format, "unsupported magic `" + magic + "`, want P5");
  }
  std::size_t pos = 2;
  long width = next_header_value(bytes, pos);
  long height = next_header_value(bytes, pos);
  long maxval = next_header_value(bytes, pos);
  if (width <= 0 || height <= 0)
    raise(ErrorKind::Format, "non-positive PGM dimensions");
  if (maxval != 255)
    raise(ErrorKind::Format,
          "unsupported maxval " + std::to_string(maxval) + ", want 255");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos])))
    raise(ErrorKind::Format, "missing raster separator");
  ++pos;

  const std::size_t count =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count)
    raise(ErrorKind::Format, "truncated PGM payload: want " +
                                 std::to_string(count) + " bytes, have " +
                                 std::to_string(bytes.size() - pos));
  if (bytes.size() - pos > count)
    raise(ErrorKind::Format, "trailing bytes after PGM payload");

  GrayImage img;
  img.width = static_cast<std::size_t>(width);
  img.height = static_cast<std::size_t>(height);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.end());
  return img;
}

std::string write_pgm(const GrayImage& img) {
  if (img.pixels.size() != img.width * img.height)
    raise(ErrorKind::Argument, "pixel count does not match dimensions");
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

}  // namespace fuseval
