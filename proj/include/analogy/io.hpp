#pragma once

#include <filesystem>
#include <cstdint>
#include <string>
#include <vector>

#include "analogy/image.hpp"

namespace analogy {

/// 8-bit PNG -> [-1, 1] via 2p/255 - 1. Gray and palette inputs are expanded
/// to RGB, alpha is dropped, 16-bit input is reduced to 8 bits.
Image load_image(const std::filesystem::path& file);

/// [-1, 1] -> 8-bit RGB PNG (values are clamped, then rounded).
void save_image(const std::filesystem::path& file, const Image& img);

std::uint8_t to_byte(double v);
double from_byte(std::uint8_t p);

/// Images laid out row-major in a grid with `pad` pixels of `background`
/// between cells; each cell is as large as the largest image.
Image make_grid(const std::vector<std::vector<Image>>& rows, int pad = 2,
                double background = 1.0);

/// Files with a .png extension in `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace analogy
