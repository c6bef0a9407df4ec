#include "curigs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "curigs/error.hpp"

namespace curigs::io {

double srgb_encode(double linear) noexcept {
  const double c = std::clamp(linear, 0.0, 1.0);
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double encoded) noexcept {
  const double c = std::clamp(encoded, 0.0, 1.0);
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

std::vector<std::uint8_t> encode_srgb8(const Image& linear) {
  std::vector<std::uint8_t> out(linear.size());
  for (std::size_t i = 0; i < linear.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(srgb_encode(linear[i]) * 255.0));
  }
  return out;
}

namespace {

// Decoding table so every code value maps to one exact double.
const std::array<double, 256>& decode_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_decode(i / 255.0);
    return t;
  }();
  return table;
}

}  // namespace

Image quantize_srgb8(const Image& linear) {
  const auto codes = encode_srgb8(linear);
  Image out(linear.width(), linear.height(), linear.channels());
  const auto& table = decode_table();
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = table[codes[i]];
  return out;
}

namespace {

void write_png_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes,
                     int width, int height, int channels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    raise(Errc::Io, "cannot write " + path.string() + ": " + msg);
  }
}

std::vector<std::uint8_t> read_png_bytes(const std::filesystem::path& path, png_uint_32 format,
                                         int& width, int& height) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    raise(Errc::Io, "cannot read " + path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    raise(Errc::Io, "cannot decode " + path.string() + ": " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return bytes;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& linear) {
  if (linear.channels() != 1 && linear.channels() != 3) {
    raise(Errc::InvalidArgument, "PNG output supports 1 or 3 channels");
  }
  write_png_bytes(path, encode_srgb8(linear), linear.width(), linear.height(), linear.channels());
}

Image read_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_png_bytes(path, PNG_FORMAT_RGB, w, h);
  Image out(w, h, 3);
  const auto& table = decode_table();
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = table[bytes[i]];
  return out;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.pixel_count());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
  write_png_bytes(path, bytes, mask.width(), mask.height(), 1);
}

Mask read_mask_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const auto bytes = read_png_bytes(path, PNG_FORMAT_GRAY, w, h);
  Mask out(w, h);
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] >= 128 ? 1 : 0;
  return out;
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    raise(Errc::InvalidArgument, "PFM supports 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::Io, "cannot write " + path.string());
  out << (img.channels() == 3 ? "PF" : "Pf") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << "-1.0\n";
  // Rows are stored bottom to top.
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes little-endian host");
  std::vector<float> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        row[static_cast<std::size_t>(x) * img.channels() + c] = static_cast<float>(img.at(x, y, c));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) raise(Errc::Io, "short write to " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::Io, "cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (!in || (magic != "PF" && magic != "Pf") || w <= 0 || h <= 0) {
    raise(Errc::Io, "malformed PFM header in " + path.string());
  }
  if (scale > 0.0) raise(Errc::Io, "big-endian PFM not supported: " + path.string());
  const int channels = magic == "PF" ? 3 : 1;
  Image img(w, h, channels);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) raise(Errc::Io, "truncated PFM data in " + path.string());
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) img.at(x, y, c) = row[static_cast<std::size_t>(x) * channels + c];
    }
  }
  return img;
}

}  // namespace curigs::io
