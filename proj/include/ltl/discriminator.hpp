#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "ltl/annotate.hpp"
#include "ltl/tracker.hpp"
#include "ltl/types.hpp"

namespace ltl {

struct DiscriminatorParams {
  double threshold = 0.7;
  double score_floor = 0.01;
  double score_ceiling = 0.99;
  int flush_interval = 10;  // frames between periodic finalization of confirmed tracks
};

// Cumulative per-class log-odds of one track. Only the visual detector contributes evidence.
struct TrackEvidence {
  std::int64_t track_id = 0;
  std::array<double, kNumClasses> log_odds{};
  std::size_t observation_count = 0;
  std::size_t labelled_observation_count = 0;
};

struct LabelledSample {
  std::int64_t track_id = 0;
  std::int64_t frame_id = 0;
  int cluster_id = 0;
  ObjectClass label = ObjectClass::Car;
  double track_probability = 0.0;
};

// Adds the log-odds of a clamped detector score to the pre-label's class.
void accumulate(TrackEvidence& evidence, const PreLabel& prelabel, const DiscriminatorParams& params = {});

// odds / (1 + odds) evaluated from the cumulative log-odds.
double track_probability(const TrackEvidence& evidence, ObjectClass c);

// All observations of the track under its most probable class, or nothing if that class
// stays below the threshold.
std::vector<LabelledSample> finalize(std::int64_t track_id, std::span<const Observation> history,
                                     const TrackEvidence& evidence, double threshold = 0.7);

// Evidence bookkeeping for the frame loop, with duplicate suppression across repeated
// finalization of the same track.
class Discriminator {
 public:
  explicit Discriminator(DiscriminatorParams params = {}) : params_(params) {}

  const DiscriminatorParams& params() const { return params_; }

  void observe(std::int64_t track_id, const std::optional<PreLabel>& prelabel);
  const TrackEvidence* evidence(std::int64_t track_id) const;

  // Emits samples not previously emitted for this track. `forget` drops the evidence afterwards.
  std::vector<LabelledSample> finalize(const TrackState& track, bool forget);

 private:
  DiscriminatorParams params_;
  std::map<std::int64_t, TrackEvidence> evidence_;
  std::set<std::pair<std::int64_t, std::int64_t>> emitted_;  // (track, frame)
};

}  // namespace ltl
