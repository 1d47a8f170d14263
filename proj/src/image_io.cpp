#include "acgan/image_io.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

#include <png.h>

namespace acgan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open(const std::filesystem::path& p, const char* mode) {
  FilePtr f(std::fopen(p.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + p.string());
  return f;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png: 1 or 3 channels");
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
    throw std::invalid_argument("write_png: pixel buffer size mismatch");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr f = open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image8 read_png(const std::filesystem::path& path) {
  FilePtr f = open(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  Image8 img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const auto type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) != 8 ||
      (type != PNG_COLOR_TYPE_RGB && type != PNG_COLOR_TYPE_GRAY)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported png layout: " + path.string());
  }
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  img.pixels.resize(stride * img.height);
  for (int y = 0; y < img.height; ++y) png_read_row(png, img.pixels.data() + y * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_pgm16(const std::filesystem::path& path, const Image16& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw std::invalid_argument("write_pgm16: pixel buffer size mismatch");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (auto v : img.pixels) {
    const char b[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(b, 2);
  }
  if (!out) throw std::runtime_error("short write to " + path.string());
}

Image16 read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  Image16 img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 65535 || img.width <= 0 || img.height <= 0)
    throw std::runtime_error("not a 16-bit binary pgm: " + path.string());
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (auto& v : img.pixels) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2))
      throw std::runtime_error("pgm truncated: " + path.string());
    v = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  return img;
}

}  // namespace acgan
