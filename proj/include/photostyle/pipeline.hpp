#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "photostyle/corpus.hpp"
#include "photostyle/csv.hpp"
#include "photostyle/facedetect.hpp"
#include "photostyle/nn.hpp"
#include "photostyle/race.hpp"

namespace photostyle {

struct FineTuneConfig {
  std::filesystem::path base_model_path;  // empty: start from a fresh compact network
  std::size_t freeze_prefix = 0;
  std::size_t head_classes = kRaceCount;
  std::size_t initial_iterations = 100000;
  std::size_t bootstrap_iterations = 20000;
  double confidence_threshold = 0.9;
  nn::TrainConfig train;

  void validate() const;
};

struct ClassifiedFace {
  std::string photo_id;
  std::string member_id;
  FaceBox box;
  RaceLabel label = RaceLabel::White;
  double confidence = 0.0;

  friend bool operator==(const ClassifiedFace&, const ClassifiedFace&) = default;
};

struct SplitSpec {
  double train_fraction = 61.0 / 78.0;
  std::uint64_t seed = 1;
};

// Crop, grayscale, resize to size x size, scale to [0, 1].
Tensor face_tensor(const PixelGrid& img, const Rect& box, int input_size);

// Highest-score detection (first in canonical order on ties), or nothing.
std::optional<Tensor> preprocess_portrait(const PixelGrid& img, const CascadeModel& cascade, int input_size,
                                          const DetectParams& params = {});

std::pair<nn::Dataset, nn::Dataset> split_dataset(const nn::Dataset& data, const SplitSpec& spec);

// Replaces the terminal dense layer with a fresh head_classes-way head and
// trains initial_iterations steps with the first freeze_prefix layers fixed.
nn::TrainResult finetune(const nn::NetworkModel& base, const nn::Dataset& train, const FineTuneConfig& cfg);

// Index of the last dense layer.
std::size_t head_layer(const nn::NetworkModel& model);

struct UnlabeledFace {
  std::string photo_id;
  Rect box;
  Tensor input;
};

struct ReviewEntry {
  std::string photo_id;
  Rect box;
  RaceLabel predicted = RaceLabel::White;
  double confidence = 0.0;
  std::optional<RaceLabel> reviewer_label;
  Tensor input;
};

struct ReviewQueue {
  std::vector<ReviewEntry> entries;  // descending confidence
};

ReviewQueue select_high_confidence(const nn::NetworkModel& model, const std::vector<UnlabeledFace>& faces,
                                   double threshold);

inline const std::vector<std::string> kReviewColumns = {"photo_id", "box_x",      "box_y",  "box_w",
                                                        "box_h",    "predicted", "confidence", "verdict"};

// Review file skeleton with an empty verdict column.
Table review_to_table(const ReviewQueue& queue);

// Verdicts: confirm, reject, relabel:<Label>. Entries not listed in the file
// are left out of the result.
std::vector<nn::Example> apply_review(const ReviewQueue& queue, const Table& review);

struct BootstrapResult {
  nn::NetworkModel model;
  nn::Dataset augmented;
  std::vector<double> loss_history;
};

BootstrapResult bootstrap_round(const nn::NetworkModel& model, const nn::Dataset& train,
                                const std::vector<nn::Example>& reviewed, const FineTuneConfig& cfg);

struct ClassAccuracy {
  RaceLabel label = RaceLabel::White;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> accuracy;  // empty when the class never occurs
};

// folds == 1 scores the whole set; folds >= 2 averages per-class accuracy
// over seeded folds in which the class occurs.
std::vector<ClassAccuracy> evaluate_per_class(const nn::NetworkModel& model, const nn::Dataset& validation,
                                              std::size_t folds, std::uint64_t seed = 1);

std::vector<ClassAccuracy> accuracy_from_counts(const std::array<std::size_t, kRaceCount>& correct,
                                                const std::array<std::size_t, kRaceCount>& total);

// ceil(fraction * n) photos per member, seeded per member.
CorpusManifest sample_per_member(const CorpusManifest& corpus, double fraction, std::uint64_t seed);

struct ClassifyResult {
  std::vector<ClassifiedFace> faces;  // by member_id, photo_id, canonical box order
  std::vector<std::string> skipped;   // one message per unreadable file
};

ClassifyResult classify_corpus(const nn::NetworkModel& model, const CascadeModel& cascade,
                               const CorpusManifest& corpus, const DetectParams& params = {},
                               std::size_t jobs = 1);

inline const std::vector<std::string> kClassificationColumns = {"member_id", "photo_id", "box_x", "box_y",
                                                                "box_w",     "box_h",    "label", "confidence"};
Table classifications_to_table(const std::vector<ClassifiedFace>& faces);
std::vector<ClassifiedFace> classifications_from_table(const Table& table);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace photostyle
