#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace photostyle {

// Byte image: row-major, channel-interleaved, 1 (gray) or 3 (RGB) channels.
class PixelGrid {
 public:
  PixelGrid() = default;
  PixelGrid(int width, int height, int channels, std::uint8_t fill = 0);
  PixelGrid(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[index(x, y, c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Dense real array, row-major. Elements are required to be finite.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_volume(std::span<const std::size_t> shape);
std::string shape_string(std::span<const std::size_t> shape);

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  long area() const { return static_cast<long>(w) * h; }
  friend bool operator==(const Rect&, const Rect&) = default;
  friend auto operator<=>(const Rect&, const Rect&) = default;
};

// Throws BoundsError unless r has positive size and fits in width x height.
void check_rect(const Rect& r, int width, int height);

// Intersection over union; 0 for disjoint rects.
double iou(const Rect& a, const Rect& b);

// --- codec ---

// Decodes PNG or JPEG content, detected by signature. 8-bit gray/RGB output;
// alpha is dropped, palettes are expanded, 16-bit samples are narrowed.
PixelGrid decode_image(std::span<const std::uint8_t> bytes);
PixelGrid load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const PixelGrid& img);
std::vector<std::uint8_t> encode_jpeg(const PixelGrid& img, int quality = 90);
void save_png(const PixelGrid& img, const std::filesystem::path& path);

// --- preprocessing ---

// BT.601 luma, rounded half away from zero. Gray input is returned as is.
PixelGrid to_grayscale(const PixelGrid& img);

PixelGrid crop(const PixelGrid& img, const Rect& r);

// Bilinear with half-pixel centers, edge samples clamped.
PixelGrid resize(const PixelGrid& img, int w, int h);

// [C, H, W] layout, values byte / 255.
Tensor to_tensor(const PixelGrid& img);

// Inverse of to_tensor: value * 255, rounded and clamped to a byte.
PixelGrid from_tensor(const Tensor& t);

}  // namespace photostyle
