#include "tseg/netpbm.hpp"

#include <fstream>

#include "tseg/error.hpp"

namespace tseg {

ImageU8 ImageU8::create(int width, int height, int channels) {
  require(width >= 1 && height >= 1, ErrorCode::precondition, "image: dims must be positive");
  require(channels == 1 || channels == 3, ErrorCode::precondition,
          "image: channels must be 1 or 3");
  ImageU8 img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.assign(std::size_t(width) * height * channels, 0);
  return img;
}

namespace {

void write_binary(const std::string& path, const ImageU8& image, const char* magic,
                  int channels) {
  require(image.channels == channels, ErrorCode::precondition, "netpbm: wrong channel count");
  require(std::size_t(image.width) * image.height * channels == image.pixels.size(),
          ErrorCode::precondition, "netpbm: pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "netpbm: cannot open for writing: " + path);
  out << magic << "\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            std::streamsize(image.pixels.size()));
  if (!out) fail(ErrorCode::io, "netpbm: write failed: " + path);
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(char(ch));
  }
  return tok;
}

}  // namespace

void write_ppm(const std::string& path, const ImageU8& image) {
  write_binary(path, image, "P6", 3);
}

void write_pgm(const std::string& path, const ImageU8& image) {
  write_binary(path, image, "P5", 1);
}

ImageU8 read_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "netpbm: cannot open: " + path);
  const std::string magic = next_token(in);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    fail(ErrorCode::io, "netpbm: unsupported magic in " + path);
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::io, "netpbm: malformed header in " + path);
  }
  if (width < 1 || height < 1) fail(ErrorCode::io, "netpbm: bad dimensions in " + path);
  if (maxval != 255) fail(ErrorCode::io, "netpbm: only maxval 255 supported: " + path);
  ImageU8 img = ImageU8::create(width, height, channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
  if (std::size_t(in.gcount()) != img.pixels.size()) {
    fail(ErrorCode::io, "netpbm: truncated pixel data in " + path);
  }
  return img;
}

}  // namespace tseg
