#include "ltl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ltl/annotate.hpp"
#include "ltl/segmentation.hpp"
#include "ltl/tracker.hpp"

namespace ltl {

EvalReport evaluate(const OnlineRandomForest& model, const LabelledFeatures& test) {
  if (test.features.empty()) throw ContractError("evaluate: empty test set");
  std::vector<std::size_t> truth, predicted;
  truth.reserve(test.features.size());
  predicted.reserve(test.features.size());
  for (std::size_t i = 0; i < test.features.size(); ++i) {
    truth.push_back(index_of(test.labels[i]));
    predicted.push_back(model.predict_label(test.features[i]));
  }
  EvalReport r;
  r.confusion = confusion_matrix(truth, predicted);
  const Scores s = score(r.confusion);
  r.micro_f1 = s.micro_f1;
  r.macro_f1 = s.macro_f1;
  r.samples = truth.size();
  return r;
}

UnderSampler::UnderSampler(std::size_t window, std::array<std::size_t, kNumClasses> caps)
    : window_(window), caps_(caps) {
  if (window_ == 0) throw ContractError("under-sampling window must be >= 1");
}

bool UnderSampler::admit(ObjectClass c) {
  const bool pass = passed_[index_of(c)] < caps_[index_of(c)];
  if (pass) ++passed_[index_of(c)];
  recent_.push_back(pass ? std::optional<ObjectClass>(c) : std::nullopt);
  if (recent_.size() > window_ - 1) {
    if (recent_.front()) --passed_[index_of(*recent_.front())];
    recent_.pop_front();
  }
  return pass;
}

std::vector<LabelledSample> undersample(std::span<const LabelledSample> stream,
                                        std::array<std::size_t, kNumClasses> caps, std::size_t window) {
  UnderSampler sampler(window, caps);
  std::vector<LabelledSample> out;
  for (const auto& s : stream)
    if (sampler.admit(s.label)) out.push_back(s);
  return out;
}

std::optional<ObjectClass> volumetric_template(const Box3D& box) {
  const double a = box.extent_x(), b = box.extent_y(), h = box.extent_z();
  const double short_side = std::min(a, b), long_side = std::max(a, b);
  if (h < 1.2 || h > 2.0) return std::nullopt;
  if (short_side <= 0.8 && long_side <= 0.8) return ObjectClass::Pedestrian;
  if (short_side <= 0.8 && long_side <= 2.2) return ObjectClass::Cyclist;
  if (short_side >= 1.4 && short_side <= 2.2 && long_side >= 3.2 && long_side <= 5.0) return ObjectClass::Car;
  return std::nullopt;
}

LabelledFeatures read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  LabelledFeatures out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream row(line);
    FeatureVector f{};
    std::string cell;
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      if (!std::getline(row, cell, ',')) throw FormatError(path.filename().string() + ":" + std::to_string(line_no) + ": too few columns");
      try {
        std::size_t used = 0;
        f[k] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw FormatError(path.filename().string() + ":" + std::to_string(line_no) + ": bad number");
      }
    }
    if (!std::getline(row, cell)) throw FormatError(path.filename().string() + ":" + std::to_string(line_no) + ": missing label");
    auto label = parse_class(cell);
    if (!label) throw FormatError(path.filename().string() + ":" + std::to_string(line_no) + ": unknown class " + cell);
    out.features.push_back(f);
    out.labels.push_back(*label);
  }
  return out;
}

void write_features_csv(const std::filesystem::path& path, const LabelledFeatures& data) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t k = 0; k < kFeatureDim; ++k) out << 'f' << k << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    for (double v : data.features[i]) out << v << ',';
    out << to_string(data.labels[i]) << '\n';
  }
}

std::vector<FrameBundle> load_sequence(const RunConfig& config) {
  const auto& dir = config.train_dir;
  if (!std::filesystem::is_directory(dir / "velodyne"))
    throw FormatError("dataset " + dir.string() + " has no velodyne/ directory");

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "velodyne"))
    if (entry.path().extension() == ".bin") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<double> stamps;
  if (std::ifstream ts(dir / "timestamps.txt"); ts) {
    double t = 0.0;
    while (ts >> t) stamps.push_back(t);
  }

  std::vector<PointCloud> clouds;
  clouds.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    PointCloud c = read_cloud(files[i]);
    c.timestamp = i < stamps.size() ? stamps[i] : static_cast<double>(i) * config.frame_period;
    clouds.push_back(std::move(c));
  }

  DetectionMap detections;
  if (config.detection_format == DetectionFormat::JsonLines) {
    if (std::filesystem::exists(dir / "detections.jsonl"))
      detections = read_detections_jsonl(dir / "detections.jsonl", config.detections);
  } else if (std::filesystem::exists(dir / "detections.csv")) {
    detections = read_detections(dir / "detections.csv", config.detections);
  }
  return synchronize(std::move(clouds), detections, read_calibration(dir / "calib.txt"));
}

namespace {

class StageClock {
 public:
  explicit StageClock(StageTiming& t) : timing_(t), start_(std::chrono::steady_clock::now()) {}
  ~StageClock() {
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    ++timing_.calls;
    timing_.total_ms += ms;
    const std::size_t bin = ms < 1 ? 0 : ms < 5 ? 1 : ms < 20 ? 2 : ms < 100 ? 3 : 4;
    ++timing_.histogram[bin];
  }

 private:
  StageTiming& timing_;
  std::chrono::steady_clock::time_point start_;
};

struct PendingSample {
  LabelledSample sample;
  std::vector<Point> points;
};

// Samples flow discriminator -> under-sampler -> descriptor -> forest, with checkpoints
// at exact multiples of the checkpoint interval.
class Learner {
 public:
  Learner(const RunConfig& config, const LabelledFeatures* test, RunReport& report)
      : config_(config),
        test_(test),
        report_(report),
        sampler_(config.undersample_window, config.undersample_caps),
        model_(config.forest) {
    if (!config.feature_dump.empty()) {
      dump_.open(config.feature_dump);
      if (!dump_) throw FormatError("cannot write " + config.feature_dump.string());
      dump_ << std::setprecision(17);
      for (std::size_t k = 0; k < kFeatureDim; ++k) dump_ << 'f' << k << ',';
      dump_ << "label\n";
    }
  }

  void offer(std::vector<PendingSample> samples, StageTiming& describe, StageTiming& learn) {
    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels;
    {
      StageClock clock(describe);
      for (auto& s : samples) {
        ++report_.counters.samples_emitted;
        if (!sampler_.admit(s.sample.label)) {
          ++report_.counters.samples_undersampled;
          continue;
        }
        const FeatureVector f = extract(s.points);
        if (dump_.is_open()) {
          for (double v : f) dump_ << v << ',';
          dump_ << to_string(s.sample.label) << '\n';
        }
        features.emplace_back(f.begin(), f.end());
        labels.push_back(index_of(s.sample.label));
      }
    }
    StageClock clock(learn);
    learn_features(features, labels);
  }

  void learn_features(const std::vector<std::vector<double>>& features, const std::vector<std::size_t>& labels) {
    std::size_t pos = 0;
    while (pos < features.size()) {
      const std::size_t room = config_.checkpoint_interval - learned_ % config_.checkpoint_interval;
      const std::size_t take = std::min(room, features.size() - pos);
      model_.update_batch(std::span(features).subspan(pos, take), std::span(labels).subspan(pos, take));
      pos += take;
      learned_ += take;
      report_.counters.samples_learned += take;
      if (learned_ % config_.checkpoint_interval == 0) checkpoint();
    }
  }

  void checkpoint() {
    CheckpointRecord rec;
    rec.learned = learned_;
    if (!config_.checkpoint_dir.empty()) {
      std::filesystem::create_directories(config_.checkpoint_dir);
      std::ostringstream name;
      name << "model_" << std::setw(6) << std::setfill('0') << learned_ << ".orf";
      rec.file = config_.checkpoint_dir / name.str();
      model_.save(rec.file);
    }
    if (test_ && !test_->features.empty()) rec.eval = evaluate(model_, *test_);
    report_.series.push_back(std::move(rec));
  }

  OnlineRandomForest take_model() { return std::move(model_); }
  const OnlineRandomForest& model() const { return model_; }

 private:
  const RunConfig& config_;
  const LabelledFeatures* test_;
  RunReport& report_;
  UnderSampler sampler_;
  OnlineRandomForest model_;
  std::ofstream dump_;
  std::size_t learned_ = 0;
};

std::vector<Point> gather(const PointCloud& cloud, const Cluster& c) {
  std::vector<Point> pts;
  pts.reserve(c.point_indices.size());
  for (auto i : c.point_indices) pts.push_back(cloud.points[i]);
  return pts;
}

}  // namespace

RunResult run_sequence(const std::vector<FrameBundle>& frames, const LabelledFeatures* test, const RunConfig& config) {
  config.validate();
  RunReport report;
  report.mode = config.mode;
  report.timing = {{"segment"}, {"annotate"}, {"track"}, {"discriminate"}, {"describe"}, {"learn"}};
  auto& t_segment = report.timing[0];
  auto& t_annotate = report.timing[1];
  auto& t_track = report.timing[2];
  auto& t_disc = report.timing[3];
  auto& t_describe = report.timing[4];
  auto& t_learn = report.timing[5];

  Learner learner(config, test, report);
  Tracker tracker(config.tracker_params());
  Discriminator disc(config.discriminator);
  // Member points of every tracked observation not yet emitted: track -> frame -> points.
  std::map<std::int64_t, std::map<std::int64_t, std::vector<Point>>> cache;
  const int confirm_hits = config.confirm_hits;

  auto emit = [&](const std::vector<LabelledSample>& samples) {
    std::vector<PendingSample> pending;
    for (const auto& s : samples) {
      auto track_it = cache.find(s.track_id);
      if (track_it == cache.end()) continue;
      auto frame_it = track_it->second.find(s.frame_id);
      if (frame_it == track_it->second.end()) continue;
      pending.push_back(PendingSample{s, std::move(frame_it->second)});
      track_it->second.erase(frame_it);
    }
    learner.offer(std::move(pending), t_describe, t_learn);
  };

  double last_stamp = 0.0;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const auto& bundle = frames[fi];
    ++report.counters.frames;
    try {
      std::vector<Cluster> clusters;
      {
        StageClock clock(t_segment);
        clusters = volumetric_filter(euclidean_cluster(bundle.cloud, config.cluster), config.filter);
      }
      report.counters.clusters += clusters.size();

      std::vector<std::optional<PreLabel>> prelabels(clusters.size());
      {
        StageClock clock(t_annotate);
        if (config.mode == RunMode::VolumetricOnly) {
          for (std::size_t c = 0; c < clusters.size(); ++c)
            if (auto cls = volumetric_template(clusters[c].bbox))
              prelabels[c] = PreLabel{*cls, config.template_score, 0};
        } else if (!bundle.detections.empty()) {
          std::vector<std::optional<Box2D>> boxes;
          boxes.reserve(clusters.size());
          for (const auto& c : clusters) boxes.push_back(project_bbox(c, bundle.calib));
          prelabels = match(clusters, boxes, bundle.detections, config.match);
        }
      }
      for (const auto& p : prelabels) report.counters.prelabels += p.has_value();

      if (config.mode == RunMode::NoTracker) {
        std::vector<PendingSample> pending;
        {
          StageClock clock(t_disc);
          for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (!prelabels[c]) continue;
            TrackEvidence single;
            accumulate(single, *prelabels[c], config.discriminator);
            const double p = track_probability(single, prelabels[c]->class_label);
            if (p < config.discriminator.threshold) continue;
            pending.push_back(PendingSample{
                LabelledSample{-1, bundle.cloud.frame_id, clusters[c].id, prelabels[c]->class_label, p},
                gather(bundle.cloud, clusters[c])});
          }
        }
        learner.offer(std::move(pending), t_describe, t_learn);
        continue;
      }

      std::vector<Measurement> measurements;
      measurements.reserve(clusters.size());
      for (const auto& c : clusters)
        measurements.push_back(Measurement{Eigen::Vector2d(c.centroid.x, c.centroid.y), c.id, bundle.cloud.frame_id});

      double dt = bundle.cloud.timestamp - last_stamp;
      if (fi == 0 || !(dt > 0.0)) dt = config.frame_period;
      last_stamp = bundle.cloud.timestamp;

      StepReport step;
      {
        StageClock clock(t_track);
        step = tracker.step(measurements, dt);
      }
      report.counters.numerical_failures += step.numerical_failures;

      StageClock clock(t_disc);
      std::map<int, std::size_t> position_of;
      for (std::size_t c = 0; c < clusters.size(); ++c) position_of[clusters[c].id] = c;
      for (const auto& track : tracker.tracks()) {
        if (track.history.empty() || track.history.back().frame_id != bundle.cloud.frame_id) continue;
        const std::size_t c = position_of.at(track.history.back().cluster_id);
        disc.observe(track.id, prelabels[c]);
        cache[track.id][bundle.cloud.frame_id] = gather(bundle.cloud, clusters[c]);
      }

      std::vector<LabelledSample> emitted;
      for (const auto& dead : step.died) {
        if (dead.hits >= confirm_hits) {
          ++report.counters.tracks_confirmed;
          auto samples = disc.finalize(dead, true);
          emitted.insert(emitted.end(), samples.begin(), samples.end());
        } else {
          disc.finalize(dead, true);
        }
      }
      if ((fi + 1) % static_cast<std::size_t>(config.discriminator.flush_interval) == 0) {
        for (const auto& track : tracker.tracks()) {
          if (track.status != TrackStatus::Confirmed) continue;
          auto samples = disc.finalize(track, false);
          emitted.insert(emitted.end(), samples.begin(), samples.end());
        }
      }
      emit(emitted);
      for (const auto& dead : step.died) cache.erase(dead.id);
    } catch (const NumericalError&) {
      ++report.counters.skipped_frames;
    }
  }

  if (config.mode != RunMode::NoTracker) {
    std::vector<LabelledSample> emitted;
    for (const auto& track : tracker.flush()) {
      if (track.hits < confirm_hits) continue;
      ++report.counters.tracks_confirmed;
      auto samples = disc.finalize(track, true);
      emitted.insert(emitted.end(), samples.begin(), samples.end());
    }
    emit(emitted);
  }

  if (test && !test->features.empty()) report.final_eval = evaluate(learner.model(), *test);
  return RunResult{std::move(report), learner.take_model()};
}

namespace {

RunResult run_orf_only(const RunConfig& config, const LabelledFeatures* test) {
  if (config.train_features.empty()) throw ContractError("orf-only mode needs data.train_features");
  const LabelledFeatures train = read_features_csv(config.train_features);
  RunReport report;
  report.mode = RunMode::OrfOnly;
  Learner learner(config, test, report);
  std::vector<std::vector<double>> features;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < train.features.size(); ++i) {
    features.emplace_back(train.features[i].begin(), train.features[i].end());
    labels.push_back(index_of(train.labels[i]));
  }
  report.counters.samples_emitted = features.size();
  learner.learn_features(features, labels);
  if (test && !test->features.empty()) report.final_eval = evaluate(learner.model(), *test);
  return RunResult{std::move(report), learner.take_model()};
}

}  // namespace

RunResult run_online(const RunConfig& config) {
  config.validate();
  std::optional<LabelledFeatures> test;
  if (!config.test_features.empty()) test = read_features_csv(config.test_features);
  const LabelledFeatures* test_ptr = test ? &*test : nullptr;
  if (config.mode == RunMode::OrfOnly) return run_orf_only(config, test_ptr);
  return run_sequence(load_sequence(config), test_ptr, config);
}

RunResult run_ablation(RunConfig config, RunMode mode) {
  config.mode = mode;
  return run_online(config);
}

void write_report_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(9);
  out << "mode,iteration,learned,acc,maf1";
  for (auto t : kAllClasses)
    for (auto p : kAllClasses) out << ",cm_" << to_string(t) << "_" << to_string(p);
  out << '\n';
  auto row = [&](const std::string& iteration, std::size_t learned, const EvalReport& e) {
    out << to_string(report.mode) << ',' << iteration << ',' << learned << ',' << e.micro_f1 << ',' << e.macro_f1;
    for (const auto& r : e.confusion)
      for (auto v : r) out << ',' << v;
    out << '\n';
  };
  for (std::size_t i = 0; i < report.series.size(); ++i)
    if (report.series[i].eval) row(std::to_string(i + 1), report.series[i].learned, *report.series[i].eval);
  if (report.final_eval) row("final", report.counters.samples_learned, *report.final_eval);
}

void write_timing_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(6);
  out << "stage,calls,total_ms,lt1ms,lt5ms,lt20ms,lt100ms,ge100ms\n";
  for (const auto& t : report.timing) {
    out << t.stage << ',' << t.calls << ',' << t.total_ms;
    for (auto c : t.histogram) out << ',' << c;
    out << '\n';
  }
}

}  // namespace ltl
