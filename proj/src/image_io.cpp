#include "cavparse/image_io.hpp"

#include <png.h>

#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

namespace cavparse::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw FormatError("cannot open '" + path.string() + "'");
  return f;
}

// Undecoded channel data as stored in the file (after bit-depth unpacking).
struct RawPng {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int channels = 0;
  std::vector<unsigned char> bytes;
  char error[256] = {};
};

void raw_error(png_structp png, png_const_charp msg) {
  auto* raw = static_cast<RawPng*>(png_get_error_ptr(png));
  std::snprintf(raw->error, sizeof(raw->error), "%s", msg);
  png_longjmp(png, 1);
}

void raw_warning(png_structp, png_const_charp) {}

// Returns false on libpng failure; raw->error carries the message.
bool read_raw(std::FILE* file, RawPng* raw) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, raw, raw_error, raw_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  raw->width = static_cast<int>(png_get_image_width(png, info));
  raw->height = static_cast<int>(png_get_image_height(png, info));
  raw->color_type = png_get_color_type(png, info);
  raw->bit_depth = png_get_bit_depth(png, info);
  if (raw->bit_depth < 8) png_set_packing(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  raw->channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw->bytes.resize(rowbytes * static_cast<std::size_t>(raw->height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(raw->height));
  for (int y = 0; y < raw->height; ++y) rows[y] = raw->bytes.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng load_raw(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  RawPng raw;
  if (!read_raw(file.get(), &raw)) {
    throw FormatError("'" + path.string() + "': PNG decode failed: " + raw.error);
  }
  return raw;
}

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

RasterImage read_png_rgb(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("'" + path.string() + "': " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("'" + path.string() + "': " + msg);
  }
  RasterImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Rgb{buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  }
  return out;
}

int skip_ppm_space(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  return c;
}

int read_ppm_int(std::istream& in, const std::filesystem::path& path) {
  int c = skip_ppm_space(in);
  if (c == EOF || !std::isdigit(c)) throw FormatError("'" + path.string() + "': bad PPM header");
  long value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > (1 << 24)) throw FormatError("'" + path.string() + "': PPM header value too large");
    c = in.get();
  }
  if (c != EOF) in.unget();
  return static_cast<int>(value);
}

RasterImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6') {
    throw FormatError("'" + path.string() + "': not a binary PPM (P6)");
  }
  const int width = read_ppm_int(in, path);
  const int height = read_ppm_int(in, path);
  const int maxval = read_ppm_int(in, path);
  if (width < 1 || height < 1) throw FormatError("'" + path.string() + "': empty PPM");
  if (maxval < 1 || maxval > 255) {
    throw FormatError("'" + path.string() + "': only 8-bit PPM supported (maxval " +
                      std::to_string(maxval) + ")");
  }
  in.get();  // single whitespace after maxval
  RasterImage out(width, height);
  std::vector<unsigned char> buffer(out.size() * 3);
  in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::size_t>(in.gcount()) != buffer.size()) {
    throw FormatError("'" + path.string() + "': truncated PPM pixel data");
  }
  auto scale = [maxval](unsigned char v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Rgb{scale(buffer[3 * i]), scale(buffer[3 * i + 1]), scale(buffer[3 * i + 2])};
  }
  return out;
}

struct WriteFailure {
  char error[256] = {};
};

void write_error(png_structp png, png_const_charp msg) {
  auto* failure = static_cast<WriteFailure*>(png_get_error_ptr(png));
  std::snprintf(failure->error, sizeof(failure->error), "%s", msg);
  png_longjmp(png, 1);
}

bool write_raw(std::FILE* file, int width, int height, int bit_depth, int color_type,
               const unsigned char* data, std::size_t rowbytes, WriteFailure* failure) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, failure, write_error, raw_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + rowbytes * y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               int color_type, const std::vector<unsigned char>& data, std::size_t rowbytes) {
  auto file = open_file(path, "wb");
  WriteFailure failure;
  if (!write_raw(file.get(), width, height, bit_depth, color_type, data.data(), rowbytes, &failure)) {
    throw FormatError("'" + path.string() + "': PNG encode failed: " + failure.error);
  }
  if (std::fflush(file.get()) != 0) throw FormatError("'" + path.string() + "': write failed");
}

}  // namespace

RasterImage read_image(const std::filesystem::path& path) {
  if (has_png_signature(path)) return read_png_rgb(path);
  return read_ppm(path);
}

void write_png_rgb(const std::filesystem::path& path, const RasterImage& image) {
  std::vector<unsigned char> data(image.size() * 3);
  for (std::size_t i = 0; i < image.size(); ++i) {
    data[3 * i] = image[i].r;
    data[3 * i + 1] = image[i].g;
    data[3 * i + 2] = image[i].b;
  }
  write_png(path, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, data,
            static_cast<std::size_t>(image.width()) * 3);
}

void write_ppm(const std::filesystem::path& path, const RasterImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (const Rgb& p : image.pixels()) {
    const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(px, 3);
  }
  if (!out) throw FormatError("'" + path.string() + "': write failed");
}

LabelMap read_label_png(const std::filesystem::path& path) {
  if (!has_png_signature(path)) throw FormatError("'" + path.string() + "': not a PNG file");
  RawPng raw = load_raw(path);
  const bool single = raw.color_type == PNG_COLOR_TYPE_GRAY || raw.color_type == PNG_COLOR_TYPE_PALETTE;
  if (!single || raw.bit_depth > 8 || raw.channels != 1) {
    throw FormatError("'" + path.string() + "': label PNG must be 8-bit gray or palette-indexed");
  }
  LabelMap out(raw.width, raw.height);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = raw.bytes[i];
  return out;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  write_png(path, labels.width(), labels.height(), 8, PNG_COLOR_TYPE_GRAY, labels.labels(),
            static_cast<std::size_t>(labels.width()));
}

void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& values) {
  if (width < 1 || height < 1 || values.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInput("write_png_gray16: value count does not match dimensions");
  }
  std::vector<unsigned char> data(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    data[2 * i] = static_cast<unsigned char>(values[i] >> 8);
    data[2 * i + 1] = static_cast<unsigned char>(values[i] & 0xFF);
  }
  write_png(path, width, height, 16, PNG_COLOR_TYPE_GRAY, data, static_cast<std::size_t>(width) * 2);
}

std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int& width,
                                           int& height) {
  RawPng raw = load_raw(path);
  if (raw.color_type != PNG_COLOR_TYPE_GRAY || raw.bit_depth != 16) {
    throw FormatError("'" + path.string() + "': expected 16-bit grayscale PNG");
  }
  width = raw.width;
  height = raw.height;
  std::vector<std::uint16_t> out(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>((raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1]);
  }
  return out;
}

}  // namespace cavparse::io
