#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "curigs/image.hpp"

namespace curigs::io {

double srgb_encode(double linear) noexcept;
double srgb_decode(double encoded) noexcept;

/// 8-bit sRGB encoding of a linear image in [0,1] (values clamped).
std::vector<std::uint8_t> encode_srgb8(const Image& linear);
/// Round trip through the 8-bit sRGB code values that a PNG stores.
Image quantize_srgb8(const Image& linear);

/// Writes a 1- or 3-channel linear image as 8-bit sRGB PNG.
void write_png(const std::filesystem::path& path, const Image& linear);
/// Reads a PNG as a linear RGB image (gray files are expanded to RGB).
Image read_png(const std::filesystem::path& path);

/// Masks are stored as 8-bit gray PNG, 0 or 255.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_png(const std::filesystem::path& path);

/// Portable float map, little-endian float32. 1 or 3 channels.
void write_pfm(const std::filesystem::path& path, const Image& img);
Image read_pfm(const std::filesystem::path& path);

}  // namespace curigs::io
