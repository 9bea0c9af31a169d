#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tseg {

/// Interleaved 8-bit image: channels==3 for RGB (PPM), channels==1 for gray (PGM).
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved

  static ImageU8 create(int width, int height, int channels);
  std::size_t index(int y, int x, int c = 0) const {
    return (std::size_t(y) * width + x) * channels + c;
  }
};

/// Binary P6, maxval 255.
void write_ppm(const std::string& path, const ImageU8& image);
/// Binary P5, maxval 255.
void write_pgm(const std::string& path, const ImageU8& image);
/// Reads binary P5 or P6 with maxval 255; anything else is an io error.
ImageU8 read_netpbm(const std::string& path);

}  // namespace tseg
