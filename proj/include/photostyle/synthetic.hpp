#pragma once

#include <cstdint>
#include <random>

#include "photostyle/image.hpp"
#include "photostyle/race.hpp"

// Synthetic portraits for fixtures and tests. A face is a light square with a
// dark eye band split by a light nose bridge (what demo_cascade() looks for)
// and a class-specific texture patch below the eyes.
namespace photostyle::synthetic {

inline constexpr int kFaceBase = 24;

// Gray face of size x size pixels carrying the texture for `pattern`.
PixelGrid render_face(int size, RaceLabel pattern, std::mt19937_64& rng);

// Mid-gray noise, no face structure.
PixelGrid background(int width, int height, std::mt19937_64& rng);

// Draws a face into a gray canvas at r (square, inside the canvas).
void plant_face(PixelGrid& canvas, const Rect& r, RaceLabel pattern, std::mt19937_64& rng);

// Background with one face of random size and position.
struct Portrait {
  PixelGrid image;
  Rect face;
};
Portrait portrait(int width, int height, RaceLabel pattern, std::mt19937_64& rng,
                  int min_face = 28, int max_face = 44);

}  // namespace photostyle::synthetic
