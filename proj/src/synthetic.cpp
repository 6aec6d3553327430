#include "photostyle/synthetic.hpp"

#include <algorithm>

#include "photostyle/error.hpp"

namespace photostyle::synthetic {

namespace {

std::uint8_t jitter(int base, int amount, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(-amount, amount);
  return static_cast<std::uint8_t>(std::clamp(base + d(rng), 0, 255));
}

int texture_value(RaceLabel pattern, int x, int y) {
  switch (pattern) {
    case RaceLabel::White: return (y / 2) % 2 ? 230 : 80;
    case RaceLabel::AfricanAmerican: return (x / 2) % 2 ? 230 : 80;
    case RaceLabel::Asian: return ((x / 2) + (y / 2)) % 2 ? 230 : 80;
    case RaceLabel::Hispanic: return 110;
  }
  return 110;
}

}  // namespace

PixelGrid render_face(int size, RaceLabel pattern, std::mt19937_64& rng) {
  PixelGrid base(kFaceBase, kFaceBase, 1);
  for (int y = 0; y < kFaceBase; ++y) {
    for (int x = 0; x < kFaceBase; ++x) {
      int v = 200;
      const bool eye_row = y >= 7 && y <= 11;
      if (eye_row && ((x >= 3 && x <= 9) || (x >= 14 && x <= 20))) v = 40;
      if (y >= 14 && y <= 21 && x >= 5 && x <= 18) v = texture_value(pattern, x - 5, y - 14);
      base.at(x, y) = jitter(v, 6, rng);
    }
  }
  return size == kFaceBase ? base : resize(base, size, size);
}

PixelGrid background(int width, int height, std::mt19937_64& rng) {
  PixelGrid img(width, height, 1);
  std::uniform_int_distribution<int> level(110, 150);
  // Blocky low-frequency shading with per-pixel noise on top.
  constexpr int kBlock = 8;
  const int bw = (width + kBlock - 1) / kBlock;
  const int bh = (height + kBlock - 1) / kBlock;
  std::vector<int> blocks(static_cast<std::size_t>(bw) * bh);
  for (auto& b : blocks) b = level(rng);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y) = jitter(blocks[(y / kBlock) * bw + x / kBlock], 12, rng);
    }
  }
  return img;
}

void plant_face(PixelGrid& canvas, const Rect& r, RaceLabel pattern, std::mt19937_64& rng) {
  if (canvas.channels() != 1) throw ChannelError("plant_face draws on gray canvases");
  if (r.w != r.h) throw ValidationError("synthetic faces are square");
  check_rect(r, canvas.width(), canvas.height());
  const PixelGrid face = render_face(r.w, pattern, rng);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) canvas.at(r.x + x, r.y + y) = face.at(x, y);
  }
}

Portrait portrait(int width, int height, RaceLabel pattern, std::mt19937_64& rng, int min_face,
                  int max_face) {
  max_face = std::min({max_face, width, height});
  if (min_face > max_face) throw ValidationError("portrait canvas too small for the face");
  std::uniform_int_distribution<int> size_dist(min_face, max_face);
  const int size = size_dist(rng);
  std::uniform_int_distribution<int> xd(0, width - size), yd(0, height - size);
  Portrait p{background(width, height, rng), {xd(rng), yd(rng), size, size}};
  plant_face(p.image, p.face, pattern, rng);
  return p;
}

}  // namespace photostyle::synthetic
