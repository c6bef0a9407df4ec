#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace curigs {

/// Interleaved row-major floating-point image. Channel count 3 for color,
/// 1 for depth and transmittance maps.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  bool same_extent(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }

  void fill(double value);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Binary per-pixel map (0 or 1).
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t& at(int x, int y) noexcept { return data_[index(x, y)]; }
  std::uint8_t at(int x, int y) const noexcept { return data_[index(x, y)]; }
  std::uint8_t& operator[](std::size_t i) noexcept { return data_[i]; }
  std::uint8_t operator[](std::size_t i) const noexcept { return data_[i]; }

  const std::vector<std::uint8_t>& values() const noexcept { return data_; }

  std::size_t count() const noexcept;
  bool same_extent(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  /// Every set pixel here is also set in `other`.
  bool subset_of(const Mask& other) const noexcept;
  Mask inverted() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Channel mean, used wherever a metric works on luminance-like input.
Image to_gray(const Image& img);

/// Separable Gaussian blur with edge clamping.
Image gaussian_blur(const Image& img, double sigma);

/// FNV-1a over the raw bytes of the pixel buffer and its shape.
std::uint64_t content_hash(const Image& img);

}  // namespace curigs
