#include "photostyle/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "photostyle/error.hpp"

namespace photostyle {

void FineTuneConfig::validate() const {
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
    throw ValidationError("confidence_threshold must lie in (0, 1)");
  }
  if (head_classes != kRaceCount) throw ValidationError("head_classes must be 4");
  train.validate();
}

Tensor face_tensor(const PixelGrid& img, const Rect& box, int input_size) {
  return to_tensor(resize(to_grayscale(crop(img, box)), input_size, input_size));
}

std::optional<Tensor> preprocess_portrait(const PixelGrid& img, const CascadeModel& cascade, int input_size,
                                          const DetectParams& params) {
  auto boxes = detect_faces(img, cascade, params);
  if (boxes.empty()) return std::nullopt;
  sort_canonical(boxes);
  const FaceBox* best = &boxes.front();
  for (const auto& b : boxes) {
    if (b.score > best->score) best = &b;
  }
  return face_tensor(img, best->rect, input_size);
}

std::pair<nn::Dataset, nn::Dataset> split_dataset(const nn::Dataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw SplitError("train_fraction must lie in (0, 1)");
  }
  if (data.empty()) throw SplitError("cannot split an empty dataset");
  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
  if (n_train == 0 || n_train == n) {
    throw SplitError("fraction " + format_real(spec.train_fraction) + " of " + std::to_string(n) +
                     " examples leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

  nn::Dataset train, validation;
  train.class_labels = validation.class_labels = data.class_labels;
  train.examples.reserve(n_train);
  validation.examples.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? train : validation).examples.push_back(data.examples[i]);
  }
  return {std::move(train), std::move(validation)};
}

std::size_t head_layer(const nn::NetworkModel& model) {
  const auto& layers = model.layers();
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (layers[i].kind == nn::LayerKind::Dense) return i;
  }
  throw ValidationError("model has no dense layer to replace");
}

nn::TrainResult finetune(const nn::NetworkModel& base, const nn::Dataset& train, const FineTuneConfig& cfg) {
  cfg.validate();
  const std::size_t head = head_layer(base);
  if (cfg.freeze_prefix > head) {
    throw ValidationError("freeze_prefix " + std::to_string(cfg.freeze_prefix) + " would freeze the head (layer " +
                          std::to_string(head) + ")");
  }
  auto layers = base.layers();
  layers[head].out_units = static_cast<int>(cfg.head_classes);
  auto params = base.params();
  params[head].assign(layers[head].param_count(), 0.0);
  nn::NetworkModel model(base.input_shape(), layers, params, race_class_labels());
  nn::reinitialize_layer(model, head, cfg.train.seed);
  model.validate();

  if (cfg.initial_iterations == 0) return {std::move(model), {}};
  nn::TrainConfig tc = cfg.train;
  tc.iterations = cfg.initial_iterations;
  return nn::train(std::move(model), train, tc, cfg.freeze_prefix);
}

ReviewQueue select_high_confidence(const nn::NetworkModel& model, const std::vector<UnlabeledFace>& faces,
                                   double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in (0, 1]");
  ReviewQueue q;
  for (const auto& f : faces) {
    const auto p = nn::predict(model, f.input);
    if (p.confidence >= threshold) {
      q.entries.push_back({f.photo_id, f.box, race_from_index(p.label), p.confidence, std::nullopt, f.input});
    }
  }
  std::stable_sort(q.entries.begin(), q.entries.end(),
                   [](const ReviewEntry& a, const ReviewEntry& b) { return a.confidence > b.confidence; });
  return q;
}

Table review_to_table(const ReviewQueue& queue) {
  Table t;
  t.columns = kReviewColumns;
  for (const auto& e : queue.entries) {
    t.add_row({e.photo_id, std::to_string(e.box.x), std::to_string(e.box.y), std::to_string(e.box.w),
               std::to_string(e.box.h), std::string(to_string(e.predicted)), format_real(e.confidence),
               e.reviewer_label ? "relabel:" + std::string(to_string(*e.reviewer_label)) : ""});
  }
  return t;
}

namespace {

using BoxKey = std::tuple<std::string, int, int, int, int>;

BoxKey key_of(const std::string& photo_id, const Rect& r) { return {photo_id, r.x, r.y, r.w, r.h}; }

}  // namespace

std::vector<nn::Example> apply_review(const ReviewQueue& queue, const Table& raw) {
  const Table review = conform_table(raw, kReviewColumns);
  std::map<BoxKey, const ReviewEntry*> index;
  for (const auto& e : queue.entries) index[key_of(e.photo_id, e.box)] = &e;

  std::vector<nn::Example> out;
  std::map<BoxKey, std::size_t> seen;
  for (std::size_t r = 0; r < review.rows.size(); ++r) {
    const auto& row = review.rows[r];
    const std::string where = "review row " + std::to_string(r + 2);
    const Rect box{static_cast<int>(parse_int(row[1], "box_x")), static_cast<int>(parse_int(row[2], "box_y")),
                   static_cast<int>(parse_int(row[3], "box_w")), static_cast<int>(parse_int(row[4], "box_h"))};
    const auto key = key_of(row[0], box);
    const auto it = index.find(key);
    if (it == index.end()) throw ReferenceError(where + ": no queued face for photo " + row[0] + " at that box");
    if (!seen.emplace(key, r).second) throw DuplicationError(where + ": face reviewed twice");

    const std::string& verdict = row[7];
    std::optional<RaceLabel> label;
    if (verdict == "confirm") {
      label = it->second->predicted;
    } else if (verdict == "reject") {
      continue;
    } else if (verdict.starts_with("relabel:")) {
      label = parse_race(std::string_view(verdict).substr(8));
      if (!label) throw ParseError(where + ": unknown label in verdict '" + verdict + "'");
    } else {
      throw ParseError(where + ": verdict must be confirm, reject or relabel:<Label>, got '" + verdict + "'");
    }
    out.push_back({it->second->input, static_cast<std::size_t>(*label)});
  }
  return out;
}

BootstrapResult bootstrap_round(const nn::NetworkModel& model, const nn::Dataset& train,
                                const std::vector<nn::Example>& reviewed, const FineTuneConfig& cfg) {
  if (reviewed.empty()) throw PreconditionError("bootstrap needs at least one reviewed example");
  cfg.validate();
  BootstrapResult result{model, train, {}};
  result.augmented.examples.insert(result.augmented.examples.end(), reviewed.begin(), reviewed.end());
  result.augmented.validate();
  if (cfg.bootstrap_iterations == 0) return result;
  nn::TrainConfig tc = cfg.train;
  tc.iterations = cfg.bootstrap_iterations;
  auto trained = nn::train(model, result.augmented, tc, cfg.freeze_prefix);
  result.model = std::move(trained.model);
  result.loss_history = std::move(trained.loss_history);
  return result;
}

std::vector<ClassAccuracy> accuracy_from_counts(const std::array<std::size_t, kRaceCount>& correct,
                                                const std::array<std::size_t, kRaceCount>& total) {
  std::vector<ClassAccuracy> out;
  for (std::size_t c = 0; c < kRaceCount; ++c) {
    ClassAccuracy a{race_from_index(c), correct[c], total[c], std::nullopt};
    if (total[c] > 0) a.accuracy = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    out.push_back(a);
  }
  return out;
}

std::vector<ClassAccuracy> evaluate_per_class(const nn::NetworkModel& model, const nn::Dataset& validation,
                                              std::size_t folds, std::uint64_t seed) {
  if (validation.empty()) throw EvaluationError("validation set is empty");
  if (folds == 0) throw ValidationError("folds must be at least 1");
  validation.validate();
  const std::size_t n = validation.size();
  std::vector<char> hit(n);
  std::array<std::size_t, kRaceCount> correct{}, total{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = validation.examples[i];
    if (ex.label >= kRaceCount) throw LabelError("label index out of range for race classes");
    hit[i] = nn::predict(model, ex.input).label == ex.label;
    ++total[ex.label];
    correct[ex.label] += hit[i];
  }
  auto result = accuracy_from_counts(correct, total);
  if (folds == 1) return result;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::array<double, kRaceCount> sum{};
  std::array<std::size_t, kRaceCount> present{};
  for (std::size_t f = 0; f < folds; ++f) {
    std::array<std::size_t, kRaceCount> c{}, t{};
    for (std::size_t pos = f; pos < n; pos += folds) {
      const auto i = order[pos];
      const auto label = validation.examples[i].label;
      ++t[label];
      c[label] += hit[i];
    }
    for (std::size_t k = 0; k < kRaceCount; ++k) {
      if (t[k] == 0) continue;
      sum[k] += static_cast<double>(c[k]) / static_cast<double>(t[k]);
      ++present[k];
    }
  }
  for (std::size_t k = 0; k < kRaceCount; ++k) {
    result[k].accuracy = present[k] ? std::optional(sum[k] / static_cast<double>(present[k])) : std::nullopt;
  }
  return result;
}

CorpusManifest sample_per_member(const CorpusManifest& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("sample fraction must lie in (0, 1]");
  std::map<std::string, std::vector<std::size_t>> by_member;
  for (std::size_t i = 0; i < corpus.photos.size(); ++i) by_member[corpus.photos[i].member_id].push_back(i);

  std::vector<char> keep(corpus.photos.size(), 0);
  for (auto& [member, idx] : by_member) {
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size()) - 1e-9));
    const std::uint64_t member_seed = seed ^ std::stoull(sha256_hex(member).substr(0, 16), nullptr, 16);
    std::mt19937_64 rng(member_seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < k && j < idx.size(); ++j) keep[idx[j]] = 1;
  }
  CorpusManifest out;
  out.legislators = corpus.legislators;
  out.orphans = corpus.orphans;
  for (std::size_t i = 0; i < corpus.photos.size(); ++i) {
    if (keep[i]) out.photos.push_back(corpus.photos[i]);
  }
  out.recount();
  return out;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < jobs; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

ClassifyResult classify_corpus(const nn::NetworkModel& model, const CascadeModel& cascade,
                               const CorpusManifest& corpus, const DetectParams& params, std::size_t jobs) {
  const auto& shape = model.input_shape();
  if (shape.size() != 3 || shape[0] != 1 || shape[1] != shape[2]) {
    throw ShapeError("classifier must take a square single-channel input, got " + shape_string(shape));
  }
  if (model.num_classes() != kRaceCount) throw ValidationError("classifier must have 4 classes");
  const int size = static_cast<int>(shape[1]);

  std::vector<const PhotoRecord*> photos;
  for (const auto& p : corpus.photos) photos.push_back(&p);
  std::stable_sort(photos.begin(), photos.end(), [](const PhotoRecord* a, const PhotoRecord* b) {
    return std::tie(a->member_id, a->photo_id) < std::tie(b->member_id, b->photo_id);
  });

  std::vector<std::vector<ClassifiedFace>> per_photo(photos.size());
  std::vector<std::string> errors(photos.size());
  parallel_for(photos.size(), jobs, [&](std::size_t i) {
    const auto& photo = *photos[i];
    PixelGrid img;
    try {
      img = load_image(photo.file_path);
    } catch (const Error& e) {
      errors[i] = photo.file_path.string() + ": " + e.what();
      return;
    }
    auto boxes = detect_faces(img, cascade, params);
    sort_canonical(boxes);
    for (const auto& b : boxes) {
      const auto p = nn::predict(model, face_tensor(img, b.rect, size));
      per_photo[i].push_back({photo.photo_id, photo.member_id, b, race_from_index(p.label), p.confidence});
    }
  });

  ClassifyResult result;
  for (std::size_t i = 0; i < photos.size(); ++i) {
    for (auto& f : per_photo[i]) result.faces.push_back(std::move(f));
    if (!errors[i].empty()) result.skipped.push_back(std::move(errors[i]));
  }
  return result;
}

Table classifications_to_table(const std::vector<ClassifiedFace>& faces) {
  Table t;
  t.columns = kClassificationColumns;
  for (const auto& f : faces) {
    t.add_row({f.member_id, f.photo_id, std::to_string(f.box.rect.x), std::to_string(f.box.rect.y),
               std::to_string(f.box.rect.w), std::to_string(f.box.rect.h), std::string(to_string(f.label)),
               format_real(f.confidence)});
  }
  return t;
}

std::vector<ClassifiedFace> classifications_from_table(const Table& raw) {
  const Table t = conform_table(raw, kClassificationColumns);
  std::vector<ClassifiedFace> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    ClassifiedFace f;
    f.member_id = row[0];
    f.photo_id = row[1];
    f.box.rect = {static_cast<int>(parse_int(row[2], "box_x")), static_cast<int>(parse_int(row[3], "box_y")),
                  static_cast<int>(parse_int(row[4], "box_w")), static_cast<int>(parse_int(row[5], "box_h"))};
    const auto label = parse_race(row[6]);
    if (!label) throw ParseError("classification row " + std::to_string(r + 2) + ": unknown label '" + row[6] + "'");
    f.label = *label;
    f.confidence = parse_real(row[7], "confidence");
    if (!(f.confidence >= 0.25 - 1e-9 && f.confidence <= 1.0)) {
      throw ValidationError("classification row " + std::to_string(r + 2) + ": confidence outside [0.25, 1]");
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace photostyle
