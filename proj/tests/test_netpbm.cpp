#include <doctest.h>

#include <fstream>

#include "support/util.hpp"
#include "tseg/netpbm.hpp"

using namespace tseg;
using tseg::test::TempDir;

TEST_CASE("ppm round trip is byte-exact") {
  TempDir dir("ppm");
  ImageU8 img = ImageU8::create(5, 3, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = std::uint8_t(i * 7 % 256);
  const std::string path = dir.file("x.ppm");
  write_ppm(path, img);
  const ImageU8 back = read_netpbm(path);
  CHECK(back.width == 5);
  CHECK(back.height == 3);
  CHECK(back.channels == 3);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("pgm round trip is byte-exact") {
  TempDir dir("pgm");
  ImageU8 img = ImageU8::create(4, 6, 1);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = std::uint8_t(255 - i);
  const std::string path = dir.file("x.pgm");
  write_pgm(path, img);
  const ImageU8 back = read_netpbm(path);
  CHECK(back.channels == 1);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("netpbm reader accepts comments and flexible whitespace") {
  TempDir dir("hdr");
  const std::string path = dir.file("c.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment\n 2 # trailing\n2\n255\n";
    const char data[4] = {1, 2, 3, 4};
    out.write(data, 4);
  }
  const ImageU8 img = read_netpbm(path);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.pixels[3] == 4);
}

TEST_CASE("netpbm reader rejects malformed files") {
  TempDir dir("bad");
  {
    std::ofstream out(dir.file("magic.pgm"), std::ios::binary);
    out << "P4\n2 2\n255\n1234";
  }
  CHECK_THROWS_AS(read_netpbm(dir.file("magic.pgm")), Error);

  {
    std::ofstream out(dir.file("trunc.pgm"), std::ios::binary);
    out << "P5\n4 4\n255\n";
    out << "ab";  // 2 of 16 payload bytes
  }
  CHECK_THROWS_AS(read_netpbm(dir.file("trunc.pgm")), Error);

  {
    std::ofstream out(dir.file("maxval.pgm"), std::ios::binary);
    out << "P5\n1 1\n65535\n";
    out << "xx";
  }
  CHECK_THROWS_AS(read_netpbm(dir.file("maxval.pgm")), Error);

  CHECK_THROWS_AS(read_netpbm(dir.file("missing.pgm")), Error);
}

TEST_CASE("writer validates geometry") {
  ImageU8 img = ImageU8::create(2, 2, 3);
  CHECK_THROWS_AS(write_pgm("/tmp/unused.pgm", img), Error);  // 3 channels into P5
  img.pixels.pop_back();
  CHECK_THROWS_AS(write_ppm("/tmp/unused.ppm", img), Error);  // buffer size mismatch
}
