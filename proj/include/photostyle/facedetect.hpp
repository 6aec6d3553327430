#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "photostyle/image.hpp"

namespace photostyle {

// Summed-area tables of width+1 by height+1 entries. Entry (x, y) holds the
// sum of all pixels strictly above and to the left; row 0 and column 0 are 0.
class IntegralImage {
 public:
  explicit IntegralImage(const PixelGrid& gray);

  int width() const { return width_; }
  int height() const { return height_; }

  std::int64_t sum_at(int x, int y) const { return sum_[index(x, y)]; }
  std::int64_t rect_sum(const Rect& r) const;
  std::int64_t rect_sq_sum(const Rect& r) const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * (width_ + 1) + x;
  }

  int width_;
  int height_;
  std::vector<std::int64_t> sum_;
  std::vector<std::int64_t> sq_sum_;
};

enum class FeatureKind { TwoRectHorizontal, TwoRectVertical, ThreeRect, FourRect };

struct WeightedRect {
  Rect rect;
  double weight = 0.0;
  friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

struct HaarFeature {
  FeatureKind kind = FeatureKind::TwoRectVertical;
  std::vector<WeightedRect> rects;  // base-window coordinates
  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

struct WeakClassifier {
  HaarFeature feature;
  double threshold = 0.0;
  double left_value = 0.0;   // feature < threshold
  double right_value = 0.0;  // feature >= threshold
  friend bool operator==(const WeakClassifier&, const WeakClassifier&) = default;
};

struct CascadeStage {
  std::vector<WeakClassifier> classifiers;
  double stage_threshold = 0.0;
  friend bool operator==(const CascadeStage&, const CascadeStage&) = default;
};

struct CascadeModel {
  int base_width = 24;
  int base_height = 24;
  std::vector<CascadeStage> stages;
  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

// Throws ValidationError on any structural problem (window below 8x8, no
// stages, empty stage, rect outside window, weights not summing to zero).
void validate_cascade(const CascadeModel& cascade);

// Kind is inferred from the rect count and layout.
FeatureKind infer_feature_kind(const std::vector<WeightedRect>& rects);

struct FaceBox {
  Rect rect;
  double score = 0.0;
  double scale = 1.0;
  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

struct WindowResult {
  bool pass = false;
  double score = 0.0;
};

inline constexpr double kVarianceFloor = 1e-6;

// Evaluates the cascade on one window; the window may be any multiple of the
// base window, feature rects are scaled to it.
WindowResult eval_window(const CascadeModel& cascade, const IntegralImage& ii, const Rect& window);

struct DetectParams {
  double scale_factor = 1.1;
  double step_fraction = 0.05;
  int min_size = 24;
  double overlap_threshold = 0.3;
  int min_neighbors = 3;
};

// Raw passing windows over the scale pyramid, in canonical order.
std::vector<FaceBox> scan_windows(const PixelGrid& img, const CascadeModel& cascade,
                                  const DetectParams& params);

std::vector<FaceBox> detect_faces(const PixelGrid& img, const CascadeModel& cascade,
                                  const DetectParams& params = {});

std::vector<FaceBox> merge_detections(const std::vector<FaceBox>& boxes,
                                      double overlap_threshold, int min_neighbors);

// Sorts by y, then x, then scale.
void sort_canonical(std::vector<FaceBox>& boxes);

CascadeModel parse_cascade(const std::string& text);
std::string format_cascade(const CascadeModel& cascade);
CascadeModel load_cascade(const std::filesystem::path& path);
void save_cascade(const CascadeModel& cascade, const std::filesystem::path& path);

// Small hand-built cascade for the synthetic face pattern used by the
// fixtures: light forehead, dark eye band split by a light nose bridge.
CascadeModel demo_cascade();

}  // namespace photostyle
