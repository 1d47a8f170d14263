#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace acgan {

/// 8-bit raster, interleaved channels (1 = gray, 3 = RGB).
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

void write_png(const std::filesystem::path& path, const Image8& img);
Image8 read_png(const std::filesystem::path& path);

/// 16-bit gray raster stored as binary PGM (P5, maxval 65535, big-endian).
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

void write_pgm16(const std::filesystem::path& path, const Image16& img);
Image16 read_pgm16(const std::filesystem::path& path);

}  // namespace acgan
