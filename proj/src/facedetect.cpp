#include "photostyle/facedetect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "photostyle/error.hpp"

namespace photostyle {

IntegralImage::IntegralImage(const PixelGrid& gray)
    : width_(gray.width()), height_(gray.height()) {
  if (gray.channels() != 1) {
    throw ChannelError("integral image needs a 1-channel image, got " +
                       std::to_string(gray.channels()) + " channels");
  }
  const std::size_t n = static_cast<std::size_t>(width_ + 1) * (height_ + 1);
  sum_.assign(n, 0);
  sq_sum_.assign(n, 0);
  for (int y = 0; y < height_; ++y) {
    std::int64_t row = 0;
    std::int64_t row_sq = 0;
    for (int x = 0; x < width_; ++x) {
      const std::int64_t p = gray.at(x, y);
      row += p;
      row_sq += p * p;
      sum_[index(x + 1, y + 1)] = sum_[index(x + 1, y)] + row;
      sq_sum_[index(x + 1, y + 1)] = sq_sum_[index(x + 1, y)] + row_sq;
    }
  }
}

std::int64_t IntegralImage::rect_sum(const Rect& r) const {
  check_rect(r, width_, height_);
  return sum_[index(r.right(), r.bottom())] - sum_[index(r.x, r.bottom())] -
         sum_[index(r.right(), r.y)] + sum_[index(r.x, r.y)];
}

std::int64_t IntegralImage::rect_sq_sum(const Rect& r) const {
  check_rect(r, width_, height_);
  return sq_sum_[index(r.right(), r.bottom())] - sq_sum_[index(r.x, r.bottom())] -
         sq_sum_[index(r.right(), r.y)] + sq_sum_[index(r.x, r.y)];
}

FeatureKind infer_feature_kind(const std::vector<WeightedRect>& rects) {
  switch (rects.size()) {
    case 2:
      return rects[0].rect.y == rects[1].rect.y && rects[0].rect.h == rects[1].rect.h
                 ? FeatureKind::TwoRectHorizontal
                 : FeatureKind::TwoRectVertical;
    case 3:
      return FeatureKind::ThreeRect;
    case 4:
      return FeatureKind::FourRect;
    default:
      throw ValidationError("haar feature must have 2, 3 or 4 rects, got " +
                            std::to_string(rects.size()));
  }
}

void validate_cascade(const CascadeModel& cascade) {
  if (cascade.base_width < 8 || cascade.base_height < 8) {
    throw ValidationError("cascade base window must be at least 8x8");
  }
  if (cascade.stages.empty()) throw ValidationError("cascade has no stages");
  for (std::size_t s = 0; s < cascade.stages.size(); ++s) {
    const auto& stage = cascade.stages[s];
    const std::string where = "stage " + std::to_string(s);
    if (stage.classifiers.empty()) throw ValidationError(where + " has no weak classifiers");
    if (std::isnan(stage.stage_threshold)) throw ValidationError(where + " threshold is NaN");
    for (std::size_t k = 0; k < stage.classifiers.size(); ++k) {
      const auto& weak = stage.classifiers[k];
      const std::string wwhere = where + " weak " + std::to_string(k);
      if (!std::isfinite(weak.threshold) || !std::isfinite(weak.left_value) ||
          !std::isfinite(weak.right_value)) {
        throw ValidationError(wwhere + " has a non-finite value");
      }
      if (infer_feature_kind(weak.feature.rects) != weak.feature.kind) {
        throw ValidationError(wwhere + " rect layout does not match its feature kind");
      }
      double weight_sum = 0.0;
      double weight_mag = 0.0;
      for (const auto& wr : weak.feature.rects) {
        const auto& r = wr.rect;
        if (r.w <= 0 || r.h <= 0 || r.x < 0 || r.y < 0 || r.right() > cascade.base_width ||
            r.bottom() > cascade.base_height) {
          throw ValidationError(wwhere + " has a rect outside the " +
                                std::to_string(cascade.base_width) + "x" +
                                std::to_string(cascade.base_height) + " base window");
        }
        weight_sum += wr.weight;
        weight_mag += std::abs(wr.weight);
      }
      if (std::abs(weight_sum) > 1e-9 * std::max(1.0, weight_mag)) {
        throw ValidationError(wwhere + " rect weights do not sum to zero");
      }
    }
  }
}

namespace {

struct ScaledRect {
  Rect rect;
  double weight_per_pixel;
};

struct ScaledWeak {
  std::vector<ScaledRect> rects;
  const WeakClassifier* source;
};

using ScaledStage = std::vector<ScaledWeak>;

std::vector<ScaledStage> scale_cascade(const CascadeModel& cascade, int win_w, int win_h) {
  const double fx = static_cast<double>(win_w) / cascade.base_width;
  const double fy = static_cast<double>(win_h) / cascade.base_height;
  std::vector<ScaledStage> out;
  out.reserve(cascade.stages.size());
  for (const auto& stage : cascade.stages) {
    ScaledStage ss;
    for (const auto& weak : stage.classifiers) {
      ScaledWeak sw{{}, &weak};
      for (const auto& wr : weak.feature.rects) {
        Rect r;
        r.x = static_cast<int>(std::lround(wr.rect.x * fx));
        r.y = static_cast<int>(std::lround(wr.rect.y * fy));
        r.w = std::max(1, static_cast<int>(std::lround(wr.rect.w * fx)));
        r.h = std::max(1, static_cast<int>(std::lround(wr.rect.h * fy)));
        r.x = std::min(r.x, win_w - 1);
        r.y = std::min(r.y, win_h - 1);
        r.w = std::min(r.w, win_w - r.x);
        r.h = std::min(r.h, win_h - r.y);
        sw.rects.push_back({r, wr.weight / static_cast<double>(r.area())});
      }
      ss.push_back(std::move(sw));
    }
    out.push_back(std::move(ss));
  }
  return out;
}

WindowResult eval_scaled(const std::vector<ScaledStage>& stages,
                         const std::vector<CascadeStage>& source, const IntegralImage& ii,
                         const Rect& window) {
  const double n = static_cast<double>(window.area());
  const double mean = static_cast<double>(ii.rect_sum(window)) / n;
  const double var = static_cast<double>(ii.rect_sq_sum(window)) / n - mean * mean;
  if (!(var >= kVarianceFloor)) return {};
  const double inv_std = 1.0 / std::sqrt(var);

  double score = 0.0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    double stage_sum = 0.0;
    for (const auto& weak : stages[s]) {
      double f = 0.0;
      for (const auto& sr : weak.rects) {
        const Rect r{window.x + sr.rect.x, window.y + sr.rect.y, sr.rect.w, sr.rect.h};
        f += sr.weight_per_pixel * static_cast<double>(ii.rect_sum(r));
      }
      f *= inv_std;
      stage_sum += f < weak.source->threshold ? weak.source->left_value : weak.source->right_value;
    }
    if (stage_sum < source[s].stage_threshold) return {};
    score = stage_sum;
  }
  return {true, score};
}

}  // namespace

WindowResult eval_window(const CascadeModel& cascade, const IntegralImage& ii, const Rect& window) {
  check_rect(window, ii.width(), ii.height());
  return eval_scaled(scale_cascade(cascade, window.w, window.h), cascade.stages, ii, window);
}

void sort_canonical(std::vector<FaceBox>& boxes) {
  std::stable_sort(boxes.begin(), boxes.end(), [](const FaceBox& a, const FaceBox& b) {
    if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
    if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
    if (a.scale != b.scale) return a.scale < b.scale;
    return std::tie(a.rect.w, a.rect.h) < std::tie(b.rect.w, b.rect.h);
  });
}

std::vector<FaceBox> scan_windows(const PixelGrid& img, const CascadeModel& cascade,
                                  const DetectParams& params) {
  if (!(params.scale_factor > 1.0)) throw ValidationError("scale_factor must exceed 1");
  if (!(params.step_fraction > 0.0)) throw ValidationError("step_fraction must be positive");
  const PixelGrid gray = to_grayscale(img);
  const IntegralImage ii(gray);
  std::vector<FaceBox> hits;
  for (double scale = 1.0;; scale *= params.scale_factor) {
    const int win_w = static_cast<int>(std::lround(cascade.base_width * scale));
    const int win_h = static_cast<int>(std::lround(cascade.base_height * scale));
    if (win_w > gray.width() || win_h > gray.height()) break;
    if (std::min(win_w, win_h) < params.min_size) continue;
    const auto stages = scale_cascade(cascade, win_w, win_h);
    const int step_x = std::max(1, static_cast<int>(std::lround(params.step_fraction * win_w)));
    const int step_y = std::max(1, static_cast<int>(std::lround(params.step_fraction * win_h)));
    for (int y = 0; y + win_h <= gray.height(); y += step_y) {
      for (int x = 0; x + win_w <= gray.width(); x += step_x) {
        const Rect window{x, y, win_w, win_h};
        const auto res = eval_scaled(stages, cascade.stages, ii, window);
        if (res.pass) hits.push_back({window, res.score, scale});
      }
    }
  }
  sort_canonical(hits);
  return hits;
}

std::vector<FaceBox> detect_faces(const PixelGrid& img, const CascadeModel& cascade,
                                  const DetectParams& params) {
  return merge_detections(scan_windows(img, cascade, params), params.overlap_threshold,
                          params.min_neighbors);
}

namespace {

std::vector<std::vector<std::size_t>> overlap_clusters(const std::vector<FaceBox>& boxes,
                                                       double threshold) {
  std::vector<std::size_t> parent(boxes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (iou(boxes[i].rect, boxes[j].rect) >= threshold) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> slot(boxes.size(), SIZE_MAX);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto root = find(i);
    if (slot[root] == SIZE_MAX) {
      slot[root] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[root]].push_back(i);
  }
  return clusters;
}

FaceBox cluster_mean(const std::vector<FaceBox>& boxes, const std::vector<std::size_t>& members) {
  if (members.size() == 1) return boxes[members[0]];
  double x = 0, y = 0, w = 0, h = 0, scale = 0;
  double score = -std::numeric_limits<double>::infinity();
  for (auto i : members) {
    const auto& b = boxes[i];
    x += b.rect.x;
    y += b.rect.y;
    w += b.rect.w;
    h += b.rect.h;
    scale += b.scale;
    score = std::max(score, b.score);
  }
  const double n = static_cast<double>(members.size());
  FaceBox out;
  out.rect = {static_cast<int>(std::lround(x / n)), static_cast<int>(std::lround(y / n)),
              static_cast<int>(std::lround(w / n)), static_cast<int>(std::lround(h / n))};
  out.score = score;
  out.scale = scale / n;
  return out;
}

}  // namespace

std::vector<FaceBox> merge_detections(const std::vector<FaceBox>& boxes, double overlap_threshold,
                                      int min_neighbors) {
  std::vector<FaceBox> current;
  for (const auto& members : overlap_clusters(boxes, overlap_threshold)) {
    if (static_cast<int>(members.size()) < min_neighbors) continue;
    current.push_back(cluster_mean(boxes, members));
  }
  // Averaged boxes can overlap each other; merge until none do.
  for (;;) {
    const auto clusters = overlap_clusters(current, overlap_threshold);
    if (clusters.size() == current.size()) break;
    std::vector<FaceBox> next;
    for (const auto& members : clusters) next.push_back(cluster_mean(current, members));
    current = std::move(next);
  }
  sort_canonical(current);
  return current;
}

CascadeModel demo_cascade() {
  auto weak = [](std::vector<WeightedRect> rects, double thr, double left, double right) {
    WeakClassifier w;
    w.feature.kind = infer_feature_kind(rects);
    w.feature.rects = std::move(rects);
    w.threshold = thr;
    w.left_value = left;
    w.right_value = right;
    return w;
  };
  CascadeModel c;
  c.base_width = 24;
  c.base_height = 24;
  // Forehead brighter than the eye band.
  c.stages.push_back({{weak({{{3, 2, 18, 4}, 1.0}, {{3, 7, 18, 4}, -1.0}}, 1.0, -1.0, 1.0)}, 0.5});
  // Eyes darker than the nose bridge between them.
  c.stages.push_back(
      {{weak({{{4, 7, 5, 4}, 1.0}, {{10, 7, 4, 4}, -2.0}, {{15, 7, 5, 4}, 1.0}}, -2.0, 1.0, -1.0)},
       0.5});
  // Temples brighter than the eyes beside them.
  c.stages.push_back({{weak({{{0, 7, 3, 4}, 1.0}, {{4, 7, 3, 4}, -1.0}}, 1.0, -1.0, 1.0),
                       weak({{{17, 7, 3, 4}, -1.0}, {{21, 7, 3, 4}, 1.0}}, 1.0, -1.0, 1.0)},
                      1.5});
  return c;
}

}  // namespace photostyle
