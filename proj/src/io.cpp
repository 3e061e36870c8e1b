#include "analogy/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace analogy {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

std::uint8_t to_byte(double v) {
  const double p = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
  return static_cast<std::uint8_t>(p);
}

double from_byte(std::uint8_t p) { return 2.0 * p / 255.0 - 1.0; }

Image load_image(const fs::path& file) {
  FilePtr fp(std::fopen(file.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image " + file.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw std::runtime_error(file.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unexpected pixel layout in " + file.string());
  }
  pixels.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = from_byte(pixels[stride * y + 3 * x + c]);
    }
  }
  return img;
}

void save_image(const fs::path& file, const Image& img) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  FilePtr fp(std::fopen(file.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write image " + file.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialization failed");
  }
  const int w = img.width(), h = img.height();
  std::vector<png_byte> pixels(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] = to_byte(img.at(c, y, x));
      }
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image make_grid(const std::vector<std::vector<Image>>& rows, int pad, double background) {
  int cell_h = 1, cell_w = 1;
  std::size_t cols = 1;
  for (const auto& r : rows) {
    cols = std::max(cols, r.size());
    for (const auto& im : r) {
      cell_h = std::max(cell_h, im.height());
      cell_w = std::max(cell_w, im.width());
    }
  }
  const int nr = std::max<int>(1, static_cast<int>(rows.size()));
  const int nc = static_cast<int>(cols);
  Image grid({nr * cell_h + (nr + 1) * pad, nc * cell_w + (nc + 1) * pad}, background);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    for (int j = 0; j < static_cast<int>(rows[i].size()); ++j) {
      const Image& im = rows[i][j];
      const int y0 = pad + i * (cell_h + pad);
      const int x0 = pad + j * (cell_w + pad);
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < im.height(); ++y) {
          for (int x = 0; x < im.width(); ++x) grid.at(c, y0 + y, x0 + x) = im.at(c, y, x);
        }
      }
    }
  }
  return grid;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace analogy
