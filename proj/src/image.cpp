#include "photostyle/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "photostyle/error.hpp"

namespace photostyle {

namespace {

void check_dims(int width, int height, int channels) {
  if (width <= 0 || height <= 0) {
    throw ValidationError("image dimensions must be positive, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw ChannelError("image must have 1 or 3 channels, got " +
                       std::to_string(channels));
  }
}

}  // namespace

PixelGrid::PixelGrid(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

PixelGrid::PixelGrid(int width, int height, int channels,
                     std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ValidationError("pixel buffer holds " + std::to_string(data_.size()) +
                          " bytes, expected " +
                          std::to_string(static_cast<std::size_t>(width) * height * channels));
  }
}

std::size_t shape_volume(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  if (!std::isfinite(fill)) throw ValidationError("tensor fill value is not finite");
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor shape " + shape_string(shape_) + " has a zero extent");
  }
  data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor shape " + shape_string(shape_) + " has a zero extent");
  }
  if (data_.size() != shape_volume(shape_)) {
    throw ShapeError("tensor of shape " + shape_string(shape_) + " given " +
                     std::to_string(data_.size()) + " values");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw ValidationError("tensor contains a non-finite value");
  }
}

void check_rect(const Rect& r, int width, int height) {
  if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.right() > width ||
      r.bottom() > height) {
    std::ostringstream os;
    os << "rect (x=" << r.x << ", y=" << r.y << ", w=" << r.w << ", h=" << r.h
       << ") is outside the " << width << "x" << height << " image";
    throw BoundsError(os.str());
  }
}

double iou(const Rect& a, const Rect& b) {
  const int ix = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  const int iy = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  const double inter = static_cast<double>(ix) * iy;
  if (inter == 0.0) return 0.0;
  return inter / (static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter);
}

PixelGrid to_grayscale(const PixelGrid& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw ChannelError("to_grayscale expects 1 or 3 channels");
  PixelGrid out(img.width(), img.height(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    // Integer form of 0.299 R + 0.587 G + 0.114 B; the +500 rounds halves up,
    // which is away from zero for non-negative values.
    const int sum = 299 * src[3 * i] + 587 * src[3 * i + 1] + 114 * src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((sum + 500) / 1000);
  }
  return out;
}

PixelGrid crop(const PixelGrid& img, const Rect& r) {
  check_rect(r, img.width(), img.height());
  const int c = img.channels();
  PixelGrid out(r.w, r.h, c);
  auto src = img.data();
  auto dst = out.data();
  const std::size_t row_bytes = static_cast<std::size_t>(r.w) * c;
  for (int j = 0; j < r.h; ++j) {
    const auto* from = src.data() + (static_cast<std::size_t>(r.y + j) * img.width() + r.x) * c;
    std::copy(from, from + row_bytes, dst.data() + j * row_bytes);
  }
  return out;
}

PixelGrid resize(const PixelGrid& img, int w, int h) {
  if (w < 1 || h < 1) throw ValidationError("resize target must be at least 1x1");
  if (w == img.width() && h == img.height()) return img;
  const int c = img.channels();
  PixelGrid out(w, h, c);
  const double sx = static_cast<double>(img.width()) / w;
  const double sy = static_cast<double>(img.height()) / h;

  struct Tap {
    int lo, hi;
    double t;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> v(n_out);
    for (int i = 0; i < n_out; ++i) {
      double s = (i + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
      const int lo = static_cast<int>(std::floor(s));
      const int hi = std::min(lo + 1, n_in - 1);
      v[i] = {lo, hi, s - lo};
    }
    return v;
  };
  const auto xt = taps(w, img.width(), sx);
  const auto yt = taps(h, img.height(), sy);

  for (int y = 0; y < h; ++y) {
    const auto& ty = yt[y];
    for (int x = 0; x < w; ++x) {
      const auto& tx = xt[x];
      for (int k = 0; k < c; ++k) {
        const double top = img.at(tx.lo, ty.lo, k) * (1.0 - tx.t) + img.at(tx.hi, ty.lo, k) * tx.t;
        const double bot = img.at(tx.lo, ty.hi, k) * (1.0 - tx.t) + img.at(tx.hi, ty.hi, k) * tx.t;
        const double v = top * (1.0 - ty.t) + bot * ty.t;
        out.at(x, y, k) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

Tensor to_tensor(const PixelGrid& img) {
  const auto c = static_cast<std::size_t>(img.channels());
  const auto h = static_cast<std::size_t>(img.height());
  const auto w = static_cast<std::size_t>(img.width());
  std::vector<double> values(c * h * w);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        values[(k * h + y) * w + x] =
            img.at(static_cast<int>(x), static_cast<int>(y), static_cast<int>(k)) / 255.0;
      }
    }
  }
  return Tensor({c, h, w}, std::move(values));
}

PixelGrid from_tensor(const Tensor& t) {
  const auto& s = t.shape();
  if (s.size() != 3 || (s[0] != 1 && s[0] != 3)) {
    throw ShapeError("from_tensor expects shape [1|3,H,W], got " + shape_string(s));
  }
  const int c = static_cast<int>(s[0]);
  const int h = static_cast<int>(s[1]);
  const int w = static_cast<int>(s[2]);
  PixelGrid out(w, h, c);
  for (int k = 0; k < c; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = t[(static_cast<std::size_t>(k) * h + y) * w + x] * 255.0;
        out.at(x, y, k) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace photostyle
