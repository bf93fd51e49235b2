#pragma once

#include <string>
#include <string_view>

#include "fuseval/types.hpp"

namespace fuseval {

// Binary PGM (magic `P5`), maxval 255 only. Comments (`#`) are accepted in
// the header per the netpbm spec.
GrayImage parse_pgm(std::string_view bytes);
std::string write_pgm(const GrayImage& img);

}  // namespace fuseval
