#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltl/config.hpp"
#include "ltl/descriptor.hpp"
#include "ltl/discriminator.hpp"
#include "ltl/metrics.hpp"
#include "ltl/orf.hpp"
#include "ltl/synth.hpp"

namespace ltl {

struct EvalReport {
  ConfusionMatrix confusion{};
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::size_t samples = 0;
};

EvalReport evaluate(const OnlineRandomForest& model, const LabelledFeatures& test);

// Sliding-window class caps over the stream of emitted samples: a sample passes when fewer than
// cap samples of its class passed among the previous window-1 emissions.
class UnderSampler {
 public:
  UnderSampler(std::size_t window, std::array<std::size_t, kNumClasses> caps);
  bool admit(ObjectClass c);

 private:
  std::size_t window_;
  std::array<std::size_t, kNumClasses> caps_;
  std::deque<std::optional<ObjectClass>> recent_;  // passed class, or nothing if dropped
  std::array<std::size_t, kNumClasses> passed_{};
};

std::vector<LabelledSample> undersample(std::span<const LabelledSample> stream,
                                        std::array<std::size_t, kNumClasses> caps, std::size_t window = 100);

// Per-class volumetric templates used by the volumetric-only ablation.
std::optional<ObjectClass> volumetric_template(const Box3D& box);

// Feature CSV: header f0..f60,label; one row per sample.
LabelledFeatures read_features_csv(const std::filesystem::path& path);
void write_features_csv(const std::filesystem::path& path, const LabelledFeatures& data);

std::vector<FrameBundle> load_sequence(const RunConfig& config);

struct CheckpointRecord {
  std::size_t learned = 0;
  std::optional<EvalReport> eval;
  std::filesystem::path file;
};

struct RunCounters {
  std::size_t frames = 0;
  std::size_t skipped_frames = 0;
  std::size_t clusters = 0;
  std::size_t prelabels = 0;
  std::size_t tracks_confirmed = 0;
  std::size_t samples_emitted = 0;
  std::size_t samples_learned = 0;
  std::size_t samples_undersampled = 0;
  std::size_t numerical_failures = 0;
};

struct StageTiming {
  std::string stage;
  std::size_t calls = 0;
  double total_ms = 0.0;
  // Call counts with duration below 1, 5, 20, 100 ms and the rest.
  std::array<std::size_t, 5> histogram{};
};

struct RunReport {
  RunMode mode = RunMode::Full;
  std::optional<EvalReport> final_eval;
  std::vector<CheckpointRecord> series;
  RunCounters counters;
  std::vector<StageTiming> timing;
};

struct RunResult {
  RunReport report;
  OnlineRandomForest model;
};

// Frame loop over an in-memory sequence. `test` may be null.
RunResult run_sequence(const std::vector<FrameBundle>& frames, const LabelledFeatures* test, const RunConfig& config);

// Loads data per config and runs config.mode.
RunResult run_online(const RunConfig& config);
RunResult run_ablation(RunConfig config, RunMode mode);

void write_report_csv(const std::filesystem::path& path, const RunReport& report);
void write_timing_csv(const std::filesystem::path& path, const RunReport& report);

}  // namespace ltl
