#include "curigs/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "curigs/error.hpp"

namespace curigs {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1) {
    raise(Errc::InvalidArgument, "image dimensions must be non-negative with at least one channel");
  }
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

void Image::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Mask::Mask(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) raise(Errc::InvalidArgument, "mask dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](auto v) { return v != 0; }));
}

bool Mask::subset_of(const Mask& other) const noexcept {
  if (width_ != other.width_ || height_ != other.height_) return false;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] && !other.data_[i]) return false;
  }
  return true;
}

Mask Mask::inverted() const {
  Mask out(width_, height_);
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = data_[i] ? 0 : 1;
  return out;
}

Image to_gray(const Image& img) {
  Image gray(img.width(), img.height(), 1);
  const int c = img.channels();
  const double inv = 1.0 / c;
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    double s = 0.0;
    for (int k = 0; k < c; ++k) s += img[p * c + k];
    gray[p] = s * inv;
  }
  return gray;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (auto& k : kernel) k /= total;

  const int w = img.width(), h = img.height(), c = img.channels();
  Image tmp(w, h, c), out(w, h, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          s += kernel[i + radius] * img.at(xx, y, ch);
        }
        tmp.at(x, y, ch) = s;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          s += kernel[i + radius] * tmp.at(x, yy, ch);
        }
        out.at(x, y, ch) = s;
      }
    }
  }
  return out;
}

namespace {
constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}
}  // namespace

std::uint64_t content_hash(const Image& img) {
  std::uint64_t h = kFnvOffset;
  const int dims[3] = {img.width(), img.height(), img.channels()};
  fnv_mix(h, dims, sizeof(dims));
  fnv_mix(h, img.data(), img.size() * sizeof(double));
  return h;
}

}  // namespace curigs
