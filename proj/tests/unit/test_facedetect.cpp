#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "photostyle/error.hpp"
#include "photostyle/facedetect.hpp"
#include "photostyle/synthetic.hpp"

using namespace photostyle;

namespace {

PixelGrid random_gray(int w, int h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 255);
  PixelGrid img(w, h, 1);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

std::int64_t brute_sum(const PixelGrid& img, const Rect& r) {
  std::int64_t s = 0;
  for (int y = r.y; y < r.bottom(); ++y)
    for (int x = r.x; x < r.right(); ++x) s += img.at(x, y);
  return s;
}

WeakClassifier two_rect(Rect a, double wa, Rect b, double wb, double thr, double left, double right) {
  WeakClassifier w;
  w.feature.rects = {{a, wa}, {b, wb}};
  w.feature.kind = infer_feature_kind(w.feature.rects);
  w.threshold = thr;
  w.left_value = left;
  w.right_value = right;
  return w;
}

// Dark top half over a light bottom half.
CascadeModel dark_over_light_cascade() {
  CascadeModel c;
  c.stages.push_back({{two_rect({0, 0, 24, 12}, -1.0, {0, 12, 24, 12}, 1.0, 1.5, -1.0, 1.0)}, 0.5});
  return c;
}

void plant_dark_over_light(PixelGrid& img, const Rect& r) {
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) img.at(r.x + x, r.y + y) = y < r.h / 2 ? 40 : 220;
}

}  // namespace

TEST(IntegralImage, AllOnes) {
  const IntegralImage ii(PixelGrid(4, 4, 1, 1));
  EXPECT_EQ(ii.sum_at(4, 4), 16);
  EXPECT_EQ(ii.sum_at(0, 3), 0);
  EXPECT_EQ(ii.sum_at(2, 0), 0);
}

TEST(IntegralImage, RectSumsMatchBruteForce) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> d(0, 31);
  for (int img_i = 0; img_i < 100; ++img_i) {
    const auto img = random_gray(32, 32, rng);
    const IntegralImage ii(img);
    for (int k = 0; k < 300; ++k) {
      int x0 = d(rng), x1 = d(rng), y0 = d(rng), y1 = d(rng);
      if (x0 > x1) std::swap(x0, x1);
      if (y0 > y1) std::swap(y0, y1);
      const Rect r{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      ASSERT_EQ(ii.rect_sum(r), brute_sum(img, r));
    }
  }
}

TEST(IntegralImage, DegenerateRectAndChannels) {
  const IntegralImage ii(PixelGrid(4, 4, 1, 1));
  EXPECT_THROW(ii.rect_sum({1, 1, 0, 2}), BoundsError);
  EXPECT_THROW(ii.rect_sum({3, 3, 2, 2}), BoundsError);
  EXPECT_THROW(IntegralImage(PixelGrid(4, 4, 3)), ChannelError);
}

TEST(EvalWindow, VacuousStagePassesStructuredWindows) {
  CascadeModel c;
  c.stages.push_back({{two_rect({0, 0, 12, 24}, 1, {12, 0, 12, 24}, -1, 0, 0, 0)},
                      -std::numeric_limits<double>::infinity()});
  std::mt19937_64 rng(1);
  const auto img = random_gray(60, 40, rng);
  const IntegralImage ii(img);
  for (int y = 0; y + 24 <= 40; y += 5)
    for (int x = 0; x + 24 <= 60; x += 5) EXPECT_TRUE(eval_window(c, ii, {x, y, 24, 24}).pass);
}

TEST(EvalWindow, UniformWindowRejected) {
  CascadeModel c;
  c.stages.push_back({{two_rect({0, 0, 12, 24}, 1, {12, 0, 12, 24}, -1, 0, 0, 0)},
                      -std::numeric_limits<double>::infinity()});
  const IntegralImage ii(PixelGrid(30, 30, 1, 77));
  EXPECT_FALSE(eval_window(c, ii, {0, 0, 24, 24}).pass);
}

TEST(EvalWindow, TwoRectFeatureSign) {
  // Top half 50, bottom half 150: mean 100, std 50, so
  // (mean(top) - mean(bottom)) / std = -2.
  PixelGrid img(24, 24, 1);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) img.at(x, y) = y < 12 ? 50 : 150;
  const IntegralImage ii(img);
  auto cascade_with = [](double thr) {
    CascadeModel c;
    c.stages.push_back({{two_rect({0, 0, 24, 12}, 1, {0, 12, 24, 12}, -1, thr, -1.0, 1.0)}, 0.0});
    return c;
  };
  EXPECT_TRUE(eval_window(cascade_with(-2.001), ii, {0, 0, 24, 24}).pass);
  EXPECT_FALSE(eval_window(cascade_with(-1.999), ii, {0, 0, 24, 24}).pass);
  // Same window at double size: feature rects scale with it.
  const auto big = resize(img, 48, 48);
  const IntegralImage ii2(big);
  EXPECT_TRUE(eval_window(cascade_with(-2.001), ii2, {0, 0, 48, 48}).pass);
}

TEST(Detect, BlankImageFindsNothing) {
  EXPECT_TRUE(detect_faces(PixelGrid(96, 96, 1, 128), demo_cascade()).empty());
  EXPECT_TRUE(detect_faces(PixelGrid(96, 96, 1, 128), dark_over_light_cascade()).empty());
}

TEST(Detect, PlantedDarkOverLightPattern) {
  std::mt19937_64 rng(4);
  auto img = synthetic::background(96, 80, rng);
  const Rect planted{40, 30, 24, 24};
  plant_dark_over_light(img, planted);
  const auto boxes = detect_faces(img, dark_over_light_cascade());
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_GE(iou(boxes[0].rect, planted), 0.5);

  DetectParams big;
  big.min_size = 40;
  EXPECT_TRUE(detect_faces(img, dark_over_light_cascade(), big).empty());
}

TEST(Detect, SyntheticFacesWithDemoCascade) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = synthetic::portrait(96, 96, race_from_index(trial % 4), rng);
    const auto boxes = detect_faces(p.image, demo_cascade());
    ASSERT_EQ(boxes.size(), 1u) << "trial " << trial;
    EXPECT_GE(iou(boxes[0].rect, p.face), 0.6) << "trial " << trial;
  }
}

TEST(Detect, TwoFacesTwoBoxes) {
  std::mt19937_64 rng(6);
  auto img = synthetic::background(128, 64, rng);
  synthetic::plant_face(img, {4, 10, 32, 32}, RaceLabel::Asian, rng);
  synthetic::plant_face(img, {80, 20, 40, 40}, RaceLabel::White, rng);
  const auto boxes = detect_faces(img, demo_cascade());
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_LT(boxes[0].rect.y, boxes[1].rect.y);
}

TEST(Detect, ColorInputIsConvertedToGray) {
  std::mt19937_64 rng(7);
  const auto p = synthetic::portrait(80, 80, RaceLabel::Hispanic, rng);
  PixelGrid color(80, 80, 3);
  for (int y = 0; y < 80; ++y)
    for (int x = 0; x < 80; ++x)
      for (int c = 0; c < 3; ++c) color.at(x, y, c) = p.image.at(x, y);
  EXPECT_EQ(detect_faces(color, demo_cascade()), detect_faces(p.image, demo_cascade()));
}

TEST(Detect, MinSizeLargerThanImage) {
  DetectParams params;
  params.min_size = 500;
  std::mt19937_64 rng(8);
  EXPECT_TRUE(detect_faces(synthetic::portrait(64, 64, RaceLabel::White, rng).image, demo_cascade(), params)
                  .empty());
}

TEST(Detect, InvariantUnderAffineIntensity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = synthetic::portrait(90, 90, race_from_index(trial % 4), rng);
    // Halve into even values so p -> p/2 + 60 stays integral and in range.
    PixelGrid base = p.image, scaled = p.image;
    for (auto& v : base.data()) v = static_cast<std::uint8_t>(v & ~1);
    for (std::size_t i = 0; i < base.data().size(); ++i)
      scaled.data()[i] = static_cast<std::uint8_t>(base.data()[i] / 2 + 60);
    const auto a = scan_windows(base, demo_cascade(), {});
    const auto b = scan_windows(scaled, demo_cascade(), {});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].rect, b[i].rect);
      EXPECT_NEAR(a[i].score, b[i].score, 1e-9);
    }
  }
}

TEST(Detect, Deterministic) {
  std::mt19937_64 rng(10);
  const auto p = synthetic::portrait(100, 90, RaceLabel::AfricanAmerican, rng);
  EXPECT_EQ(detect_faces(p.image, demo_cascade()), detect_faces(p.image, demo_cascade()));
}

TEST(Merge, EmptyIdenticalDisjoint) {
  EXPECT_TRUE(merge_detections({}, 0.3, 1).empty());
  const FaceBox b{{10, 10, 20, 20}, 1.5, 1.0};
  const auto m = merge_detections({b, b, b}, 0.3, 2);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0], b);
  const FaceBox c{{50, 50, 20, 20}, 0.5, 1.0};
  const auto two = merge_detections({c, b}, 0.3, 1);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], b);
  EXPECT_EQ(two[1], c);
}

TEST(Merge, MinNeighborsDiscardsSmallClusters) {
  const FaceBox a{{10, 10, 20, 20}, 1.0, 1.0};
  const FaceBox b{{11, 10, 20, 20}, 2.0, 1.0};
  const FaceBox lone{{60, 60, 20, 20}, 3.0, 1.0};
  const auto m = merge_detections({a, b, lone}, 0.3, 2);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].rect, (Rect{11, 10, 20, 20}));  // mean x 10.5 rounds away from zero
  EXPECT_EQ(m[0].score, 2.0);
}

TEST(Merge, IdempotentOnRandomBoxes) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pos(0, 80), size(10, 30);
  std::uniform_real_distribution<double> score(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FaceBox> boxes;
    for (int i = 0; i < 25; ++i) boxes.push_back({{pos(rng), pos(rng), size(rng), size(rng)}, score(rng), 1.0});
    const auto once = merge_detections(boxes, 0.3, 2);
    EXPECT_EQ(merge_detections(once, 0.3, 1), once);
  }
}

TEST(CascadeFile, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "photostyle_cascade_rt.txt";
  auto c = demo_cascade();
  c.stages[0].stage_threshold = -std::numeric_limits<double>::infinity();
  c.stages[1].classifiers[0].threshold = 0.1 + 0.2;
  save_cascade(c, path);
  EXPECT_EQ(load_cascade(path), c);
  std::filesystem::remove(path);
}

TEST(CascadeFile, CommentsAndValidation) {
  const std::string ok =
      "# demo\ncascade 24 24 1\nstage 1 0.5  # one weak\nweak 1 -1 1 2\nrect 0 0 24 12 -1\n"
      "rect 0 12 24 12 1\n";
  EXPECT_EQ(parse_cascade(ok).stages.size(), 1u);

  const std::string outside =
      "cascade 24 24 1\nstage 1 0.5\nweak 1 -1 1 2\nrect 0 0 24 12 -1\nrect 0 12 25 12 1\n";
  EXPECT_THROW(parse_cascade(outside), ValidationError);
  EXPECT_THROW(parse_cascade("cascade 24 24 0\n"), ValidationError);
  const std::string unbalanced =
      "cascade 24 24 1\nstage 1 0.5\nweak 1 -1 1 2\nrect 0 0 24 12 -1\nrect 0 12 24 12 2\n";
  EXPECT_THROW(parse_cascade(unbalanced), ValidationError);
}

TEST(CascadeFile, ParseErrorCarriesLineNumber) {
  const std::string bad = "cascade 24 24 1\n\nstage 1 0.5\nweak 1 -1 x 2\n";
  try {
    parse_cascade(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(CascadeFile, ShippedDemoCascadeMatchesBuiltin) {
  EXPECT_EQ(load_cascade(PHOTOSTYLE_DATA_DIR "/demo_cascade.txt"), demo_cascade());
}
