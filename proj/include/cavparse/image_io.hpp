#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cavparse/image.hpp"

namespace cavparse::io {

// PNG (any color type, converted to 8-bit RGB) or binary PPM (P6, maxval <= 255),
// chosen by file signature.
RasterImage read_image(const std::filesystem::path& path);

void write_png_rgb(const std::filesystem::path& path, const RasterImage& image);
void write_ppm(const std::filesystem::path& path, const RasterImage& image);

// 8-bit single-channel (gray or palette-indexed) PNG; values are taken verbatim.
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

// 16-bit grayscale PNG, row-major values.
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& values);
std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int& width,
                                           int& height);

}  // namespace cavparse::io
