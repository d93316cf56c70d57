#include "ltl/discriminator.hpp"

#include <algorithm>
#include <cmath>

namespace ltl {

void accumulate(TrackEvidence& evidence, const PreLabel& prelabel, const DiscriminatorParams& params) {
  if (!(prelabel.score >= 0.0 && prelabel.score <= 1.0))
    throw ContractError("accumulate: score outside [0,1]");
  const double p = std::clamp(prelabel.score, params.score_floor, params.score_ceiling);
  evidence.log_odds[index_of(prelabel.class_label)] += std::log(p / (1.0 - p));
  ++evidence.labelled_observation_count;
}

double track_probability(const TrackEvidence& evidence, ObjectClass c) {
  const double l = evidence.log_odds[index_of(c)];
  // Logistic function, arranged so exp never overflows.
  if (l >= 0.0) return 1.0 / (1.0 + std::exp(-l));
  const double e = std::exp(l);
  return e / (1.0 + e);
}

std::vector<LabelledSample> finalize(std::int64_t track_id, std::span<const Observation> history,
                                     const TrackEvidence& evidence, double threshold) {
  ObjectClass best = ObjectClass::Car;
  double best_p = -1.0;
  for (auto c : kAllClasses) {
    const double p = track_probability(evidence, c);
    if (p > best_p) {
      best_p = p;
      best = c;
    }
  }
  std::vector<LabelledSample> out;
  if (best_p < threshold) return out;
  out.reserve(history.size());
  for (const auto& obs : history)
    out.push_back(LabelledSample{track_id, obs.frame_id, obs.cluster_id, best, best_p});
  return out;
}

void Discriminator::observe(std::int64_t track_id, const std::optional<PreLabel>& prelabel) {
  auto& ev = evidence_[track_id];
  ev.track_id = track_id;
  ++ev.observation_count;
  if (prelabel) accumulate(ev, *prelabel, params_);
}

const TrackEvidence* Discriminator::evidence(std::int64_t track_id) const {
  auto it = evidence_.find(track_id);
  return it == evidence_.end() ? nullptr : &it->second;
}

std::vector<LabelledSample> Discriminator::finalize(const TrackState& track, bool forget) {
  std::vector<LabelledSample> fresh;
  auto it = evidence_.find(track.id);
  if (it != evidence_.end()) {
    for (auto& s : ltl::finalize(track.id, track.history, it->second, params_.threshold))
      if (emitted_.emplace(s.track_id, s.frame_id).second) fresh.push_back(s);
  }
  if (forget) {
    if (it != evidence_.end()) evidence_.erase(it);
    emitted_.erase(emitted_.lower_bound({track.id, INT64_MIN}), emitted_.upper_bound({track.id, INT64_MAX}));
  }
  return fresh;
}

}  // namespace ltl
