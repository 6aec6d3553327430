#include <gtest/gtest.h>

#include <random>

#include "photostyle/error.hpp"
#include "photostyle/image.hpp"

using namespace photostyle;

namespace {

PixelGrid random_image(int w, int h, int c, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 255);
  PixelGrid img(w, h, c);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

}  // namespace

TEST(PixelGrid, RejectsBadBuffers) {
  EXPECT_THROW(PixelGrid(2, 2, 3, std::vector<std::uint8_t>(11)), ValidationError);
  EXPECT_THROW(PixelGrid(2, 2, 2), ChannelError);
  EXPECT_THROW(PixelGrid(0, 2, 1), ValidationError);
}

TEST(Tensor, RejectsNonFinite) {
  EXPECT_THROW(Tensor({2}, std::vector<double>{1.0, std::nan("")}), ValidationError);
  EXPECT_THROW(Tensor({3}, std::vector<double>{1.0, 2.0}), ShapeError);
}

TEST(Decode, SolidRedPngRoundTrip) {
  PixelGrid red(2, 2, 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) red.at(x, y, 0) = 255;
  const auto img = decode_image(encode_png(red));
  ASSERT_EQ(img.width(), 2);
  ASSERT_EQ(img.height(), 2);
  ASSERT_EQ(img.channels(), 3);
  for (std::size_t i = 0; i < img.data().size(); i += 3) {
    EXPECT_EQ(img.data()[i], 255);
    EXPECT_EQ(img.data()[i + 1], 0);
    EXPECT_EQ(img.data()[i + 2], 0);
  }
}

TEST(Decode, GrayPngKeepsOneChannel) {
  std::mt19937_64 rng(3);
  const auto gray = random_image(7, 5, 1, rng);
  EXPECT_EQ(decode_image(encode_png(gray)), gray);
}

TEST(Decode, ColorJpegDimensions) {
  std::mt19937_64 rng(1);
  const auto img = random_image(640, 412, 3, rng);
  const auto decoded = decode_image(encode_jpeg(img));
  EXPECT_EQ(decoded.width(), 640);
  EXPECT_EQ(decoded.height(), 412);
  EXPECT_EQ(decoded.channels(), 3);
}

TEST(Decode, TruncatedJpegFails) {
  std::mt19937_64 rng(2);
  auto bytes = encode_jpeg(random_image(64, 48, 3, rng));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_image(bytes), DecodeError);
}

TEST(Decode, TruncatedPngFails) {
  std::mt19937_64 rng(2);
  auto bytes = encode_png(random_image(64, 48, 3, rng));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_image(bytes), DecodeError);
}

TEST(Decode, UnknownSignature) {
  const std::vector<std::uint8_t> gif = {'G', 'I', 'F', '8', '9', 'a', 0, 0};
  EXPECT_THROW(decode_image(gif), UnsupportedFormatError);
}

TEST(Grayscale, KnownPixels) {
  PixelGrid img(3, 1, 3);
  const std::uint8_t px[3][3] = {{100, 100, 100}, {255, 0, 0}, {0, 0, 255}};
  for (int x = 0; x < 3; ++x)
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = px[x][c];
  const auto g = to_grayscale(img);
  EXPECT_EQ(g.channels(), 1);
  EXPECT_EQ(g.at(0, 0), 100);
  EXPECT_EQ(g.at(1, 0), 76);  // round(0.299 * 255) = round(76.245)
  EXPECT_EQ(g.at(2, 0), 29);  // round(0.114 * 255) = round(29.07)
}

TEST(Grayscale, RoundsHalfAwayFromZero) {
  // 0.114 * 250 = 28.5 exactly.
  PixelGrid img(1, 1, 3);
  img.at(0, 0, 2) = 250;
  EXPECT_EQ(to_grayscale(img).at(0, 0), 29);
}

TEST(Grayscale, IdempotentAndBounded) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = random_image(9, 7, 3, rng);
    const auto g = to_grayscale(img);
    EXPECT_EQ(to_grayscale(g), g);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const auto lo = std::min({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
        const auto hi = std::max({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)});
        EXPECT_GE(g.at(x, y), lo);
        EXPECT_LE(g.at(x, y), hi);
      }
    }
  }
}

TEST(Crop, IdentityAndCorner) {
  std::mt19937_64 rng(7);
  const auto img = random_image(12, 9, 3, rng);
  EXPECT_EQ(crop(img, {0, 0, 12, 9}), img);
  const auto px = crop(img, {0, 0, 1, 1});
  for (int c = 0; c < 3; ++c) EXPECT_EQ(px.at(0, 0, c), img.at(0, 0, c));
}

TEST(Crop, MatchesManualIndexing) {
  std::mt19937_64 rng(8);
  const auto img = random_image(32, 24, 3, rng);
  const Rect r{7, 5, 10, 10};
  const auto out = crop(img, r);
  ASSERT_EQ(out.width(), 10);
  ASSERT_EQ(out.height(), 10);
  const auto raw = img.data();
  for (int j = 0; j < 10; ++j)
    for (int i = 0; i < 10; ++i)
      for (int c = 0; c < 3; ++c)
        EXPECT_EQ(out.at(i, j, c), raw[((r.y + j) * 32 + (r.x + i)) * 3 + c]);
}

TEST(Crop, OutOfBoundsNamesCoordinates) {
  PixelGrid img(10, 10, 1);
  try {
    crop(img, {5, 5, 6, 2});
    FAIL();
  } catch (const BoundsError& e) {
    EXPECT_NE(std::string(e.what()).find("x=5"), std::string::npos);
  }
}

TEST(Crop, CompositionLaw) {
  std::mt19937_64 rng(9);
  const auto img = random_image(40, 30, 1, rng);
  std::uniform_int_distribution<int> d(0, 1000);
  for (int trial = 0; trial < 50; ++trial) {
    const int aw = 2 + d(rng) % 38, ah = 2 + d(rng) % 28;
    const Rect a{d(rng) % (40 - aw + 1), d(rng) % (30 - ah + 1), aw, ah};
    const int bw = 1 + d(rng) % aw, bh = 1 + d(rng) % ah;
    const Rect b{d(rng) % (aw - bw + 1), d(rng) % (ah - bh + 1), bw, bh};
    EXPECT_EQ(crop(crop(img, a), b), crop(img, {a.x + b.x, a.y + b.y, b.w, b.h}));
  }
}

TEST(Resize, IdentityAndConstant) {
  std::mt19937_64 rng(10);
  const auto img = random_image(13, 11, 3, rng);
  EXPECT_EQ(resize(img, 13, 11), img);
  const PixelGrid flat(17, 9, 1, 128);
  for (auto [w, h] : {std::pair{1, 1}, {5, 40}, {64, 3}, {17, 9}}) {
    const auto out = resize(flat, w, h);
    for (auto v : out.data()) EXPECT_EQ(v, 128);
  }
}

TEST(Resize, TwoPixelUpsampleIsMonotone) {
  PixelGrid img(2, 1, 1, std::vector<std::uint8_t>{0, 255});
  const auto out = resize(img, 4, 1);
  // Half-pixel centers sample source x = -0.25, 0.25, 0.75, 1.25 (clamped).
  EXPECT_EQ(out.at(0, 0), 0);
  EXPECT_EQ(out.at(1, 0), 64);
  EXPECT_EQ(out.at(2, 0), 191);
  EXPECT_EQ(out.at(3, 0), 255);
}

TEST(ToTensor, ShapeAndRange) {
  const PixelGrid big(640, 412, 3, 17);
  const auto t = to_tensor(big);
  EXPECT_EQ(t.size(), 791040u);
  EXPECT_EQ(t.shape(), (std::vector<std::size_t>{3, 412, 640}));

  PixelGrid ends(2, 1, 1, std::vector<std::uint8_t>{255, 0});
  const auto te = to_tensor(ends);
  EXPECT_EQ(te[0], 1.0);
  EXPECT_EQ(te[1], 0.0);

  const auto small = to_tensor(PixelGrid(28, 28, 1));
  EXPECT_EQ(small.shape(), (std::vector<std::size_t>{1, 28, 28}));
  EXPECT_EQ(small.size(), 784u);
}

TEST(ToTensor, ChannelMajorLayout) {
  PixelGrid img(2, 1, 3, std::vector<std::uint8_t>{10, 20, 30, 40, 50, 60});
  const auto t = to_tensor(img);
  const double expect[] = {10, 40, 20, 50, 30, 60};
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(t[i] * 255.0, expect[i]);
}

TEST(ToTensor, ByteRoundTripIsExact) {
  std::mt19937_64 rng(11);
  for (int c : {1, 3}) {
    const auto img = random_image(31, 17, c, rng);
    EXPECT_EQ(from_tensor(to_tensor(img)), img);
  }
}
