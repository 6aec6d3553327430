#include "photostyle/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "photostyle/analytics.hpp"
#include "photostyle/config.hpp"
#include "photostyle/corpus.hpp"
#include "photostyle/error.hpp"
#include "photostyle/facedetect.hpp"
#include "photostyle/nn.hpp"
#include "photostyle/pipeline.hpp"
#include "photostyle/plot.hpp"

namespace photostyle {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string> kProducers = {
    {"roster.csv", "ingest"},           {"photos.csv", "ingest"},         {"detections.csv", "detect"},
    {"sample.csv", "detect"},           {"base_model.bin", "train"},      {"model.bin", "finetune"},
    {"classifications.csv", "classify"}, {"demographics.csv", "aggregate"}, {"joined.csv", "compare"},
    {"regressions.csv", "compare"},     {"experiment.csv", "experiment"}};

const std::vector<std::string> kDetectionColumns = {"member_id", "photo_id", "box_x", "box_y",
                                                    "box_w",     "box_h",    "score"};
const std::vector<std::string> kLabelColumns = {"path", "label"};
const std::vector<std::string> kAccuracyColumns = {"label", "correct", "total", "accuracy"};

struct Context {
  RunConfig cfg;
  std::string command;
  fs::path out;
  bool dry_run = false;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::ostream* log = nullptr;
  std::vector<std::string> report;

  void note(const std::string& line) {
    report.push_back(line);
    *log << line << "\n";
  }

  void write(const Table& t, const std::string& name) {
    if (dry_run) return;
    persist_table(t, out / name);
    note("wrote " + name + " (" + std::to_string(t.rows.size()) + " rows)");
  }

  void write_text(const std::string& text, const fs::path& rel) {
    if (dry_run) return;
    fs::create_directories((out / rel).parent_path());
    std::ofstream f(out / rel, std::ios::binary);
    f << text;
    if (!f) throw IoError("cannot write " + (out / rel).string());
    note("wrote " + rel.generic_string());
  }

  fs::path upstream(const std::string& name) const {
    const fs::path p = out / name;
    if (!fs::exists(p)) {
      throw MissingArtifactError(p.string() + " not found; run `photostyle " + kProducers.at(name) + "` first");
    }
    return p;
  }

  fs::path input(const std::string& key) const {
    const fs::path p = cfg.path(key);
    if (p.empty()) throw UsageError("config key '" + key + "' is not set (use --" + key + " or the config file)");
    if (!fs::exists(p)) throw IoError(key + " file " + p.string() + " not found");
    return p;
  }

  // model key, else <out>/model.bin from finetune.
  fs::path model_path() const { return cfg.path("model").empty() ? upstream("model.bin") : input("model"); }
};

DetectParams detect_params(const RunConfig& c) {
  DetectParams p;
  p.scale_factor = c.real("detect.scale_factor");
  p.step_fraction = c.real("detect.step_fraction");
  p.min_size = static_cast<int>(c.integer("detect.min_size"));
  p.overlap_threshold = c.real("detect.overlap");
  p.min_neighbors = static_cast<int>(c.integer("detect.min_neighbors"));
  return p;
}

nn::TrainConfig train_config(const Context& ctx) {
  nn::TrainConfig t;
  t.learning_rate = ctx.cfg.real("train.learning_rate");
  t.momentum = ctx.cfg.real("train.momentum");
  t.batch_size = ctx.cfg.count("train.batch_size");
  t.weight_decay = ctx.cfg.real("train.weight_decay");
  t.iterations = ctx.cfg.count("train.iterations");
  t.seed = ctx.seed;
  t.validate();
  return t;
}

FineTuneConfig finetune_config(const Context& ctx) {
  FineTuneConfig f;
  f.base_model_path = ctx.cfg.path("base_model");
  f.freeze_prefix = ctx.cfg.count("train.freeze_prefix");
  f.initial_iterations = ctx.cfg.count("train.initial_iterations");
  f.bootstrap_iterations = ctx.cfg.count("train.bootstrap_iterations");
  f.confidence_threshold = ctx.cfg.real("train.confidence_threshold");
  f.train = train_config(ctx);
  f.validate();
  return f;
}

int input_size(const Context& ctx) {
  const long s = ctx.cfg.integer("train.input_size");
  if (s < 12) throw ValidationError("train.input_size must be at least 12");
  return static_cast<int>(s);
}

CascadeModel cascade_for(const Context& ctx) {
  if (ctx.cfg.path("cascade").empty()) return demo_cascade();
  return load_cascade(ctx.input("cascade"));
}

std::vector<LegislatorRecord> ingested_roster(const Context& ctx) {
  return roster_from_table(load_table(ctx.upstream("roster.csv"), kRosterColumns));
}

struct Detection {
  std::string member_id;
  std::string photo_id;
  FaceBox box;
};

std::vector<Detection> load_detections(const Context& ctx) {
  const Table t = load_table(ctx.upstream("detections.csv"), kDetectionColumns);
  std::vector<Detection> out;
  for (const auto& r : t.rows) {
    FaceBox b;
    b.rect = {static_cast<int>(parse_int(r[2], "box_x")), static_cast<int>(parse_int(r[3], "box_y")),
              static_cast<int>(parse_int(r[4], "box_w")), static_cast<int>(parse_int(r[5], "box_h"))};
    b.score = parse_real(r[6], "score");
    out.push_back({r[0], r[1], b});
  }
  return out;
}

CorpusManifest sampled_corpus(const Context& ctx) {
  CorpusManifest m;
  m.legislators = ingested_roster(ctx);
  m.photos = photos_from_table(load_table(ctx.upstream("sample.csv"), kPhotoColumns));
  m.recount();
  m.validate();
  return m;
}

struct LabeledSet {
  nn::Dataset data;
  std::size_t rows = 0;
  std::size_t without_face = 0;
};

LabeledSet load_labeled(Context& ctx, const CascadeModel& cascade, int size) {
  const fs::path labels = ctx.input("labels");
  const Table t = load_table(labels, kLabelColumns);
  LabeledSet set;
  set.rows = t.rows.size();
  set.data.class_labels = race_class_labels();
  std::vector<std::optional<nn::Example>> slots(t.rows.size());
  std::vector<RaceLabel> races;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto race = parse_race(t.rows[r][1]);
    if (!race) throw ParseError(labels.string() + " row " + std::to_string(r + 2) + ": unknown label '" + t.rows[r][1] + "'");
    races.push_back(*race);
  }
  if (ctx.dry_run) return set;
  const auto params = detect_params(ctx.cfg);
  parallel_for(t.rows.size(), ctx.jobs, [&](std::size_t r) {
    const auto img = load_image(labels.parent_path() / t.rows[r][0]);
    if (auto tensor = preprocess_portrait(img, cascade, size, params)) {
      slots[r] = nn::Example{std::move(*tensor), static_cast<std::size_t>(races[r])};
    }
  });
  for (auto& s : slots) {
    if (s) {
      set.data.examples.push_back(std::move(*s));
    } else {
      ++set.without_face;
    }
  }
  if (set.data.empty()) throw PreconditionError("no labeled portrait yielded a face");
  return set;
}

Table accuracy_table(const std::vector<ClassAccuracy>& acc) {
  Table t;
  t.columns = kAccuracyColumns;
  for (const auto& a : acc) {
    t.add_row({std::string(to_string(a.label)), std::to_string(a.correct), std::to_string(a.total),
               a.accuracy ? format_real(*a.accuracy) : "n/a"});
  }
  return t;
}

Table loss_table(const std::vector<double>& history) {
  Table t;
  t.columns = {"iteration", "loss"};
  for (std::size_t i = 0; i < history.size(); ++i) t.add_row({std::to_string(i + 1), format_real(history[i])});
  return t;
}

void note_accuracy(Context& ctx, const std::vector<ClassAccuracy>& acc) {
  for (const auto& a : acc) {
    ctx.note("accuracy " + std::string(to_string(a.label)) + ": " +
             (a.accuracy ? format_real(*a.accuracy) : "n/a") + " (" + std::to_string(a.correct) + "/" +
             std::to_string(a.total) + ")");
  }
}

void save_model_artifact(Context& ctx, const nn::NetworkModel& model, const std::string& name) {
  if (ctx.dry_run) return;
  fs::create_directories(ctx.out);
  nn::save_model(model, ctx.out / name);
  ctx.note("wrote " + name + " (" + std::to_string(model.param_count()) + " parameters)");
}

// ---- subcommands ----

int cmd_ingest(Context& ctx) {
  auto roster = load_roster(ctx.input("roster"));
  if (!ctx.cfg.path("manifest").empty()) {
    std::ifstream in(ctx.input("manifest"), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto manifest = parse_legislator_manifest(ss.str());
    attach_social(roster, manifest);
    ctx.note("manifest entries: " + std::to_string(manifest.size()));
  }
  const fs::path root = ctx.cfg.path("corpus_root");
  if (root.empty()) throw UsageError("config key 'corpus_root' is not set");

  std::map<std::string, PhotoRecord> fetched;
  const std::string url = ctx.cfg.get("fetch.url_template");
  if (!url.empty() && !ctx.dry_run) {
    FetchLimits limits;
    limits.max_photos = ctx.cfg.count("fetch.max_photos");
    limits.rate_per_second = ctx.cfg.real("fetch.rate_per_second");
    limits.max_retries = static_cast<int>(ctx.cfg.count("fetch.max_retries"));
    limits.timeout = std::chrono::seconds(ctx.cfg.count("fetch.timeout_seconds"));
    std::size_t downloaded = 0;
    for (const auto& m : roster) {
      const auto r = fetch_photos(m, url, root, limits);
      downloaded += r.downloaded;
      for (const auto& f : r.failures) ctx.note("fetch failure: " + f);
      for (const auto& w : r.warnings) ctx.note("fetch warning: " + w);
      for (const auto& p : r.records) {
        if (p.source_url) fetched[p.photo_id] = p;
      }
    }
    ctx.note("downloaded: " + std::to_string(downloaded));
  }
  if (!fs::is_directory(root)) throw IoError("corpus root " + root.string() + " is not a directory");
  auto manifest = scan_local_corpus(root, roster);
  // Keep provenance of photos fetched in this run and of earlier ingests.
  if (fs::exists(ctx.out / "photos.csv")) {
    for (const auto& p : photos_from_table(load_table(ctx.out / "photos.csv", kPhotoColumns))) {
      if (p.source_url && !fetched.count(p.photo_id)) fetched[p.photo_id] = p;
    }
  }
  for (auto& p : manifest.photos) {
    if (const auto it = fetched.find(p.photo_id); it != fetched.end()) {
      p.source_url = it->second.source_url;
      p.fetched_at = it->second.fetched_at;
    }
  }
  ctx.note("legislators: " + std::to_string(manifest.legislators.size()));
  ctx.note("photos: " + std::to_string(manifest.photos.size()));
  for (const auto& [member, n] : manifest.counts) ctx.note("photos for " + member + ": " + std::to_string(n));
  for (const auto& o : manifest.orphans) ctx.note("orphan directory: " + o);
  ctx.write(roster_to_table(roster), "roster.csv");
  ctx.write(photos_to_table(manifest.photos), "photos.csv");
  return kExitOk;
}

int cmd_detect(Context& ctx) {
  const auto roster = ingested_roster(ctx);
  CorpusManifest corpus;
  corpus.legislators = roster;
  corpus.photos = photos_from_table(load_table(ctx.upstream("photos.csv"), kPhotoColumns));
  corpus.validate();
  const auto cascade = cascade_for(ctx);
  const auto params = detect_params(ctx.cfg);
  const double fraction = ctx.cfg.real("analyze.sample_fraction");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("analyze.sample_fraction must lie in (0, 1]");
  if (ctx.dry_run) return kExitOk;

  std::vector<std::vector<FaceBox>> boxes(corpus.photos.size());
  std::vector<std::string> errors(corpus.photos.size());
  parallel_for(corpus.photos.size(), ctx.jobs, [&](std::size_t i) {
    try {
      boxes[i] = detect_faces(load_image(corpus.photos[i].file_path), cascade, params);
      sort_canonical(boxes[i]);
    } catch (const Error& e) {
      errors[i] = corpus.photos[i].file_path.string() + ": " + e.what();
    }
  });
  Table det;
  det.columns = kDetectionColumns;
  CorpusManifest with_faces;
  with_faces.legislators = roster;
  std::size_t n_faces = 0, unreadable = 0;
  for (std::size_t i = 0; i < corpus.photos.size(); ++i) {
    const auto& p = corpus.photos[i];
    if (!errors[i].empty()) {
      ++unreadable;
      ctx.note("skipped " + errors[i]);
      continue;
    }
    for (const auto& b : boxes[i]) {
      det.add_row({p.member_id, p.photo_id, std::to_string(b.rect.x), std::to_string(b.rect.y),
                   std::to_string(b.rect.w), std::to_string(b.rect.h), format_real(b.score)});
    }
    n_faces += boxes[i].size();
    if (!boxes[i].empty()) with_faces.photos.push_back(p);
  }
  with_faces.recount();
  const auto sample = sample_per_member(with_faces, fraction, ctx.seed);
  ctx.note("photos scanned: " + std::to_string(corpus.photos.size()));
  ctx.note("photos with faces: " + std::to_string(with_faces.photos.size()));
  ctx.note("faces detected: " + std::to_string(n_faces));
  ctx.note("unreadable photos: " + std::to_string(unreadable));
  ctx.note("sampled photos: " + std::to_string(sample.photos.size()));
  ctx.write(det, "detections.csv");
  ctx.write(photos_to_table(sample.photos), "sample.csv");
  return kExitOk;
}

int cmd_train(Context& ctx) {
  const auto cascade = cascade_for(ctx);
  const int size = input_size(ctx);
  auto tc = train_config(ctx);
  auto labeled = load_labeled(ctx, cascade, size);
  if (ctx.dry_run) return kExitOk;
  const auto [train, val] = split_dataset(labeled.data, {ctx.cfg.real("train.train_fraction"), ctx.seed});
  auto init = nn::make_network({1, static_cast<std::size_t>(size), static_cast<std::size_t>(size)},
                               nn::compact_architecture(size, static_cast<int>(kRaceCount)), race_class_labels(),
                               ctx.seed);
  const auto result = nn::train(std::move(init), train, tc);
  ctx.note("labeled rows: " + std::to_string(labeled.rows) + ", without face: " + std::to_string(labeled.without_face));
  ctx.note("train/validation: " + std::to_string(train.size()) + "/" + std::to_string(val.size()));
  const auto acc = evaluate_per_class(result.model, val, ctx.cfg.count("train.folds"), ctx.seed);
  note_accuracy(ctx, acc);
  save_model_artifact(ctx, result.model, "base_model.bin");
  ctx.write(loss_table(result.loss_history), "train_loss.csv");
  ctx.write(accuracy_table(acc), "train_accuracy.csv");
  return kExitOk;
}

int cmd_finetune(Context& ctx) {
  const auto cascade = cascade_for(ctx);
  const int size = input_size(ctx);
  const auto fc = finetune_config(ctx);
  nn::NetworkModel base;
  if (!fc.base_model_path.empty()) {
    base = nn::load_model(ctx.input("base_model"));
  }
  auto labeled = load_labeled(ctx, cascade, size);
  if (ctx.dry_run) return kExitOk;
  if (fc.base_model_path.empty()) {
    base = nn::make_network({1, static_cast<std::size_t>(size), static_cast<std::size_t>(size)},
                            nn::compact_architecture(size, static_cast<int>(kRaceCount)), race_class_labels(),
                            ctx.seed);
    ctx.note("base model: fresh compact network");
  } else {
    ctx.note("base model: " + fc.base_model_path.string());
  }
  const auto [train, val] = split_dataset(labeled.data, {ctx.cfg.real("train.train_fraction"), ctx.seed});
  const auto result = finetune(base, train, fc);
  ctx.note("labeled rows: " + std::to_string(labeled.rows) + ", without face: " + std::to_string(labeled.without_face));
  ctx.note("train/validation: " + std::to_string(train.size()) + "/" + std::to_string(val.size()));
  ctx.note("frozen layers: " + std::to_string(fc.freeze_prefix));
  const auto acc = evaluate_per_class(result.model, val, ctx.cfg.count("train.folds"), ctx.seed);
  note_accuracy(ctx, acc);
  save_model_artifact(ctx, result.model, "model.bin");
  ctx.write(loss_table(result.loss_history), "finetune_loss.csv");
  ctx.write(accuracy_table(acc), "accuracy.csv");
  return kExitOk;
}

int cmd_bootstrap(Context& ctx) {
  const auto model = nn::load_model(ctx.model_path());
  const auto corpus = sampled_corpus(ctx);
  const auto detections = load_detections(ctx);
  const auto cascade = cascade_for(ctx);
  const auto fc = finetune_config(ctx);
  const int size = static_cast<int>(model.input_shape().at(1));

  std::set<std::string> sampled;
  std::map<std::string, const PhotoRecord*> by_id;
  for (const auto& p : corpus.photos) {
    sampled.insert(p.photo_id);
    by_id[p.photo_id] = &p;
  }
  std::vector<std::string> photo_order;
  std::map<std::string, std::vector<Rect>> boxes;
  for (const auto& d : detections) {
    if (!sampled.count(d.photo_id)) continue;
    if (!boxes.count(d.photo_id)) photo_order.push_back(d.photo_id);
    boxes[d.photo_id].push_back(d.box.rect);
  }
  if (ctx.dry_run) return kExitOk;

  std::vector<std::vector<UnlabeledFace>> per_photo(photo_order.size());
  parallel_for(photo_order.size(), ctx.jobs, [&](std::size_t i) {
    const auto& id = photo_order[i];
    const auto img = load_image(by_id.at(id)->file_path);
    for (const auto& r : boxes.at(id)) per_photo[i].push_back({id, r, face_tensor(img, r, size)});
  });
  std::vector<UnlabeledFace> faces;
  for (auto& v : per_photo)
    for (auto& f : v) faces.push_back(std::move(f));
  const auto queue = select_high_confidence(model, faces, fc.confidence_threshold);
  ctx.note("candidate faces: " + std::to_string(faces.size()));
  ctx.note("queued at confidence >= " + format_real(fc.confidence_threshold) + ": " + std::to_string(queue.entries.size()));

  if (ctx.cfg.path("review").empty()) {
    ctx.write(review_to_table(queue), "review_queue.csv");
    ctx.note("fill the verdict column (confirm, reject, relabel:<Label>) and rerun with --review <file>");
    return kExitOk;
  }
  const auto reviewed = apply_review(queue, load_table(ctx.input("review"), kReviewColumns));
  ctx.note("reviewed examples kept: " + std::to_string(reviewed.size()));
  auto labeled = load_labeled(ctx, cascade, size);
  const auto [train, val] = split_dataset(labeled.data, {ctx.cfg.real("train.train_fraction"), ctx.seed});
  const auto result = bootstrap_round(model, train, reviewed, fc);
  ctx.note("augmented training set: " + std::to_string(train.size()) + " -> " + std::to_string(result.augmented.size()));
  const auto acc = evaluate_per_class(result.model, val, ctx.cfg.count("train.folds"), ctx.seed);
  note_accuracy(ctx, acc);
  save_model_artifact(ctx, result.model, "model_bootstrap.bin");
  ctx.write(loss_table(result.loss_history), "bootstrap_loss.csv");
  ctx.write(accuracy_table(acc), "bootstrap_accuracy.csv");
  return kExitOk;
}

int cmd_classify(Context& ctx) {
  const auto model_file = ctx.model_path();
  const auto corpus = sampled_corpus(ctx);
  const auto model = nn::load_model(model_file);
  const auto cascade = cascade_for(ctx);
  if (ctx.dry_run) return kExitOk;
  const auto result = classify_corpus(model, cascade, corpus, detect_params(ctx.cfg), ctx.jobs);
  ctx.note("model: " + model_file.string());
  ctx.note("photos: " + std::to_string(corpus.photos.size()));
  ctx.note("faces classified: " + std::to_string(result.faces.size()));
  ctx.note("unreadable photos: " + std::to_string(result.skipped.size()));
  for (const auto& s : result.skipped) ctx.note("skipped " + s);
  ctx.write(classifications_to_table(result.faces), "classifications.csv");
  return kExitOk;
}

int cmd_aggregate(Context& ctx) {
  const auto faces = classifications_from_table(load_table(ctx.upstream("classifications.csv"), kClassificationColumns));
  const auto roster = ingested_roster(ctx);
  const bool exclude_self = ctx.cfg.boolean("analyze.exclude_self");
  const auto result = aggregate_demographics(faces, roster, exclude_self);
  std::size_t insufficient = 0;
  for (const auto& r : result.rows) insufficient += r.insufficient;
  ctx.note("faces: " + std::to_string(faces.size()));
  ctx.note("members: " + std::to_string(result.rows.size()) + ", without faces: " + std::to_string(insufficient));
  ctx.note(std::string("exclude_self: ") + (exclude_self ? "true" : "false") +
           ", faces removed: " + std::to_string(result.self_faces_removed));
  ctx.write(demographics_to_table(result.rows), "demographics.csv");
  return kExitOk;
}

int cmd_compare(Context& ctx) {
  const auto demo = demographics_from_table(load_table(ctx.upstream("demographics.csv"), kDemographicsColumns));
  const auto roster = ingested_roster(ctx);
  const auto acs = acs_from_table(load_table(ctx.input("acs"), kAcsColumns));
  const auto joined = join_acs(demo, acs, roster);
  const auto models = compare_demographics(joined);
  ctx.note("joined members: " + std::to_string(joined.size()));
  for (const auto& m : models) {
    if (!m.fit) {
      ctx.note(m.model + ": skipped (" + m.skipped + ")");
      continue;
    }
    const auto& f = *m.fit;
    const std::size_t slope = f.fixed_effects.empty() ? 1 : 0;
    ctx.note(m.model + ": slope " + format_real(f.coefficients[slope]) + " (se " + format_real(f.std_errors[slope]) +
             ", n " + std::to_string(f.n_obs) + ")");
  }
  ctx.write(joined_to_table(joined), "joined.csv");
  ctx.write(regressions_to_table(models), "regressions.csv");
  return kExitOk;
}

int cmd_experiment(Context& ctx) {
  const auto rows = experiment_table(load_table(ctx.input("responses")));
  for (const auto& g : rows) {
    ctx.note(g.outcome + " " + g.arm + ": " + format_real(g.mean) + " [" + format_real(g.ci_low) + ", " +
             format_real(g.ci_high) + "]" + (g.wilcoxon_p ? " p=" + format_real(*g.wilcoxon_p) : ""));
  }
  ctx.write(comparisons_to_table(rows), "experiment.csv");
  return kExitOk;
}

// ---- plot ----

struct PlotArgs {
  std::string kind;
  std::string x;
  std::vector<std::string> y;
  std::string by = "party";
  std::string input;
  std::string name;
  std::vector<std::string> where;
};

Table filter_rows(const Table& t, const std::vector<std::string>& where) {
  Table out;
  out.columns = t.columns;
  std::vector<std::pair<std::size_t, std::string>> conds;
  for (const auto& w : where) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) throw UsageError("--where expects column=value, got '" + w + "'");
    conds.emplace_back(t.column_index(w.substr(0, eq)), w.substr(eq + 1));
  }
  for (const auto& r : t.rows) {
    bool keep = true;
    for (const auto& [c, v] : conds) keep = keep && r[c] == v;
    if (keep) out.rows.push_back(r);
  }
  return out;
}

std::vector<std::string> series_keys(const Table& t, std::size_t by) {
  std::vector<std::string> keys;
  for (const auto& r : t.rows) {
    if (std::find(keys.begin(), keys.end(), r[by]) == keys.end()) keys.push_back(r[by]);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string series_name(const std::string& key) {
  if (key == "D") return "Democrat";
  if (key == "R") return "Republican";
  if (key == "I") return "Independent";
  return key;
}

PlotSpec scatter_spec(const Table& t, const std::string& x, const std::string& y, const std::string& by,
                      const std::string& title) {
  PlotSpec spec;
  spec.kind = PlotKind::ScatterWithFit;
  spec.title = title;
  spec.x_label = x;
  spec.y_label = y;
  const auto xi = t.column_index(x), yi = t.column_index(y), bi = t.column_index(by);
  for (const auto& key : series_keys(t, bi)) {
    ScatterSeries s{series_name(key), std::string(party_color(key)), {}};
    for (const auto& r : t.rows) {
      if (r[bi] == key) s.points.push_back({parse_real(r[xi], x), parse_real(r[yi], y)});
    }
    spec.scatter.push_back(std::move(s));
  }
  if (spec.scatter.empty()) throw PlotError("no rows to plot for " + y + " against " + x);
  return spec;
}

PlotSpec boxplot_spec(const Table& t, const std::vector<std::string>& ys, const std::string& by,
                      const std::string& title) {
  PlotSpec spec;
  spec.kind = PlotKind::BoxplotGrid;
  spec.title = title;
  spec.y_label = "proportion";
  const auto bi = t.column_index(by);
  for (const auto& key : series_keys(t, bi)) {
    BoxSeries s{series_name(key), std::string(party_color(key)), {}};
    for (const auto& y : ys) {
      const auto yi = t.column_index(y);
      NamedGroup g{y, {}};
      for (const auto& r : t.rows) {
        if (r[bi] == key) g.values.push_back(parse_real(r[yi], y));
      }
      s.groups.push_back(std::move(g));
    }
    spec.boxes.push_back(std::move(s));
  }
  if (spec.boxes.empty()) throw PlotError("no rows to plot");
  return spec;
}

// Slope rows of fitted models; the series is the party token of the model name.
PlotSpec coefficient_spec(const Table& raw, const std::string& title) {
  const Table t = conform_table(raw, kRegressionColumns);
  PlotSpec spec;
  spec.kind = PlotKind::CoefficientDotplot;
  spec.title = title;
  spec.y_label = "coefficient (95% CI)";
  const double z = normal_quantile(0.975);
  for (const auto& r : t.rows) {
    if (!r[6].empty() || r[1].empty() || r[1] == "(intercept)" || r[1].starts_with("fe:")) continue;
    const double est = parse_real(r[2], "estimate"), se = parse_real(r[3], "std_error");
    const auto a = r[0].find('_'), b = r[0].find('_', a + 1);
    const std::string party = a == std::string::npos ? "" : r[0].substr(a + 1, b - a - 1);
    std::string label = r[0];
    if (b != std::string::npos) label = r[0].substr(0, a) + "_" + r[0].substr(b + 1);
    spec.estimates.push_back({label, party, est, est - z * se, est + z * se});
  }
  if (spec.estimates.empty()) throw PlotError("no fitted coefficients to plot");
  return spec;
}

PlotSpec bar_spec(const Table& raw, const std::string& outcome, const std::string& title) {
  const Table t = conform_table(raw, kComparisonColumns);
  PlotSpec spec;
  spec.kind = PlotKind::BarWithCi;
  spec.title = title;
  spec.y_label = outcome;
  for (const auto& r : t.rows) {
    if (r[0] != outcome) continue;
    spec.estimates.push_back({r[1], "", parse_real(r[3], "mean"), parse_real(r[4], "ci_low"), parse_real(r[5], "ci_high")});
  }
  if (spec.estimates.empty()) throw PlotError("experiment table has no rows for outcome '" + outcome + "'");
  return spec;
}

void emit_plot(Context& ctx, const PlotSpec& spec, const std::string& name) {
  const std::string svg = render_svg(spec);
  ctx.write_text(svg, fs::path("plots") / (name + ".svg"));
  for (const auto& s : spec.scatter) {
    if (const auto f = fit_line(s.points)) ctx.note("  " + s.name + " fit slope " + format_real(f->slope));
  }
}

int cmd_plot(Context& ctx, const PlotArgs& a) {
  if (a.kind.empty()) {
    const Table joined = load_table(ctx.upstream("joined.csv"), kJoinedColumns);
    const Table white = filter_rows(joined, {"is_white=true"});
    for (const std::string chamber : {"house", "senate"}) {
      const Table rows = filter_rows(white, {"chamber=" + chamber});
      if (rows.rows.empty()) continue;
      for (const std::string race : {"black", "white"}) {
        emit_plot(ctx,
                  scatter_spec(rows, "acs_pct_" + race, "fb_prop_" + race, "party",
                               "% " + race + " in " + (chamber == "house" ? "House district" : "state") +
                                   " v. Facebook photos"),
                  chamber + "_" + race + "_scatter");
      }
      emit_plot(ctx,
                boxplot_spec(rows, {"fb_prop_black", "fb_prop_hispanic", "fb_prop_asian"}, "party",
                             "Proportion African-American, Hispanic and Asian in Facebook photos (" + chamber + ")"),
                chamber + "_minority_boxplot");
    }
    if (fs::exists(ctx.out / "regressions.csv")) {
      const Table reg = load_table(ctx.out / "regressions.csv", kRegressionColumns);
      Table fe;
      fe.columns = reg.columns;
      for (const auto& r : reg.rows) {
        if (r[0].ends_with("_state_fe")) fe.rows.push_back(r);
      }
      try {
        emit_plot(ctx, coefficient_spec(fe, "State fixed effects coefficients"), "state_fe_coefficients");
      } catch (const PlotError& e) {
        ctx.note(std::string("state_fe_coefficients not drawn: ") + e.what());
      }
    }
    if (fs::exists(ctx.out / "experiment.csv")) {
      const Table exp = load_table(ctx.out / "experiment.csv", kComparisonColumns);
      std::vector<std::string> outcomes;
      for (const auto& r : exp.rows) {
        if (std::find(outcomes.begin(), outcomes.end(), r[0]) == outcomes.end()) outcomes.push_back(r[0]);
      }
      for (const auto& o : outcomes) emit_plot(ctx, bar_spec(exp, o, o + " by treatment arm"), "experiment_" + o);
    }
    return kExitOk;
  }

  PlotKind kind;
  try {
    kind = parse_plot_kind(a.kind);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto default_input = [&]() -> fs::path {
    switch (kind) {
      case PlotKind::CoefficientDotplot: return ctx.upstream("regressions.csv");
      case PlotKind::BarWithCi: return ctx.upstream("experiment.csv");
      default: return ctx.upstream("joined.csv");
    }
  };
  const fs::path input = a.input.empty() ? default_input() : fs::path(a.input);
  const Table t = filter_rows(load_table(input), a.where);
  PlotSpec spec;
  std::string name = a.name;
  switch (kind) {
    case PlotKind::ScatterWithFit:
      if (a.x.empty() || a.y.size() != 1) throw UsageError("scatter needs --x and one --y column");
      spec = scatter_spec(t, a.x, a.y[0], a.by, a.y[0] + " v. " + a.x);
      if (name.empty()) name = "scatter_" + a.y[0] + "_vs_" + a.x;
      break;
    case PlotKind::BoxplotGrid:
      if (a.y.empty()) throw UsageError("boxplot needs at least one --y column");
      spec = boxplot_spec(t, a.y, a.by, "Box plots by " + a.by);
      if (name.empty()) name = "boxplot_by_" + a.by;
      break;
    case PlotKind::CoefficientDotplot:
      spec = coefficient_spec(t, "Regression coefficients");
      if (name.empty()) name = "coefficients";
      break;
    case PlotKind::BarWithCi: {
      const std::string outcome = a.y.empty() ? "party_guess_democrat" : a.y[0];
      spec = bar_spec(t, outcome, outcome + " by treatment arm");
      if (name.empty()) name = "bar_" + outcome;
      break;
    }
  }
  if (ctx.dry_run) return kExitOk;
  emit_plot(ctx, spec, name);
  return kExitOk;
}

void write_report(const Context& ctx) {
  std::string text = "command: " + ctx.command + "\n";
  text += "seed: " + std::to_string(ctx.seed) + "\n";
  text += "jobs: " + std::to_string(ctx.jobs) + "\n\n";
  for (const auto& line : ctx.report) text += line + "\n";
  text += "\n[effective config]\n" + ctx.cfg.echo();
  fs::create_directories(ctx.out / "reports");
  std::ofstream f(ctx.out / "reports" / (ctx.command + ".txt"), std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write run report");
}

bool is_root_key(const ConfigKey& k) { return k.name.find('.') == std::string::npos; }

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  // --section.key[=value] flags are taken out before CLI11 sees the rest.
  std::vector<std::pair<std::string, std::string>> dotted;
  std::vector<std::string> args;
  for (std::size_t i = 0; i < raw_args.size(); ++i) {
    const auto& a = raw_args[i];
    if (a.starts_with("--") && a.find('.') != std::string::npos && a.find('.') < a.find('=')) {
      const auto eq = a.find('=');
      if (eq != std::string::npos) {
        dotted.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
      } else if (i + 1 < raw_args.size()) {
        dotted.emplace_back(a.substr(2), raw_args[++i]);
      } else {
        err << "error: " << a << " needs a value\n";
        return kExitUsage;
      }
      continue;
    }
    args.push_back(a);
  }

  CLI::App app{"Photo demographics pipeline: detect, classify, aggregate and compare."};
  app.name("photostyle");
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Config keys can also be given as --section.key VALUE (e.g. --detect.scale_factor 1.2).");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string output_dir;
  bool dry_run = false;
  app.add_option("--config", config_path, "config file (default: $PHOTOSTYLE_CONFIG)");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", output_dir, "artifact directory");
  app.add_flag("--dry-run", dry_run, "validate inputs without writing");
  std::map<std::string, std::string> root_values;
  for (const auto& k : config_keys()) {
    if (!is_root_key(k) || k.name == "seed" || k.name == "jobs" || k.name == "output_dir") continue;
    app.add_option("--" + k.name, root_values[k.name], k.help);
  }

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "read the roster/manifest, optionally fetch photos, and index the corpus"},
      {"detect", "detect faces and draw the per-member photo sample"},
      {"train", "train a base network on the labeled portraits"},
      {"finetune", "replace the head of a base network and train it on the labeled portraits"},
      {"bootstrap", "queue high-confidence faces for review, or retrain with a completed review"},
      {"classify", "classify every face in the sampled photos"},
      {"aggregate", "per-member photo demographics"},
      {"compare", "join with ACS data and run the regressions"},
      {"experiment", "summarize the survey experiment"},
      {"plot", "render SVG figures"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) subs[name] = app.add_subcommand(name, help);
  PlotArgs plot;
  auto* p = subs["plot"];
  p->add_option("--kind", plot.kind, "scatter, boxplot, coef or bar; omit for the standard figure set");
  p->add_option("--x", plot.x, "x column (scatter)");
  p->add_option("--y", plot.y, "y column(s)")->delimiter(',');
  p->add_option("--by", plot.by, "series column (default party)");
  p->add_option("--input", plot.input, "input CSV (default by kind)");
  p->add_option("--name", plot.name, "output file stem");
  p->add_option("--where", plot.where, "row filter column=value (repeatable)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  Context ctx;
  ctx.log = &out;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) ctx.command = name;
  }
  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("PHOTOSTYLE_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config file " + config_path + " not found");
      ctx.cfg.merge_file(config_path);
    }
    for (const auto& [key, value] : root_values) {
      if (!value.empty()) ctx.cfg.set(key, value);
    }
    for (const auto& [key, value] : dotted) {
      try {
        ctx.cfg.set(key, value);
      } catch (const ValidationError& e) {
        throw UsageError(e.what());
      }
    }
    if (seed) ctx.cfg.set("seed", std::to_string(*seed));
    if (jobs) ctx.cfg.set("jobs", std::to_string(*jobs));
    if (!output_dir.empty()) ctx.cfg.set("output_dir", output_dir);
    ctx.seed = static_cast<std::uint64_t>(ctx.cfg.integer("seed"));
    ctx.jobs = std::max<std::size_t>(1, ctx.cfg.count("jobs"));
    ctx.out = ctx.cfg.path("output_dir");
    ctx.dry_run = dry_run;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    int code = kExitOk;
    if (ctx.command == "ingest") code = cmd_ingest(ctx);
    else if (ctx.command == "detect") code = cmd_detect(ctx);
    else if (ctx.command == "train") code = cmd_train(ctx);
    else if (ctx.command == "finetune") code = cmd_finetune(ctx);
    else if (ctx.command == "bootstrap") code = cmd_bootstrap(ctx);
    else if (ctx.command == "classify") code = cmd_classify(ctx);
    else if (ctx.command == "aggregate") code = cmd_aggregate(ctx);
    else if (ctx.command == "compare") code = cmd_compare(ctx);
    else if (ctx.command == "experiment") code = cmd_experiment(ctx);
    else if (ctx.command == "plot") code = cmd_plot(ctx, plot);
    if (ctx.dry_run) {
      out << "dry run: inputs for " << ctx.command << " are valid\n";
    } else {
      write_report(ctx);
    }
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitOperational;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitOperational;
  }
}

}  // namespace photostyle
