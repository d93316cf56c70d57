#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ltl/ukf.hpp"

namespace ltl {

enum class TrackStatus : std::uint8_t { Tentative, Confirmed, Dead };

std::string_view to_string(TrackStatus s);

struct Measurement {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  int cluster_id = 0;
  std::int64_t frame_id = 0;
};

struct Observation {
  std::int64_t frame_id = 0;
  int cluster_id = 0;
};

// Markov model-switching structure. transition(j, i) = P(model i at k | model j at k-1).
struct MotionModelSet {
  std::vector<std::shared_ptr<const MotionModel>> models;
  MatrixXd transition;

  std::size_t size() const { return models.size(); }
  // Throws ContractError unless every row of `transition` sums to one with non-negative entries.
  void validate() const;

  static MotionModelSet cv_ctrv(MotionNoise noise = {}, double stay_probability = 0.9);
  static MotionModelSet cv_only(MotionNoise noise = {});
};

struct TrackState {
  std::int64_t id = 0;
  TrackStatus status = TrackStatus::Tentative;
  int hits = 0;
  int misses = 0;  // consecutive
  std::vector<Gaussian> models;
  VectorXd mu;  // model probabilities
  Gaussian fused;  // (x, y, vx, vy)
  std::vector<Observation> history;

  // Filled by prediction, consumed by association and update.
  std::vector<Gaussian> predicted;
  VectorXd predicted_mu;
  Eigen::Vector2d predicted_z = Eigen::Vector2d::Zero();
  Eigen::Matrix2d innovation_cov = Eigen::Matrix2d::Identity();
};

struct MixResult {
  MatrixXd weights;  // weights(j, i) = mu_{j|i}; every column sums to one
  VectorXd normalizers;  // c_i = sum_j pi_ji mu_j
  std::vector<Gaussian> mixed;
};

// Input interaction of the IMM cycle. A target model whose normalizer vanishes keeps its own
// estimate unmixed.
MixResult imm_mix(const MotionModelSet& set, const std::vector<Gaussian>& states, const VectorXd& mu);

struct ModelProbabilityUpdate {
  VectorXd mu;
  bool degenerate = false;  // all likelihoods zero; prior kept
};

ModelProbabilityUpdate update_model_probabilities(const VectorXd& mu, const MatrixXd& transition,
                                                  const VectorXd& likelihoods);

struct PdaParams {
  double detection_probability = 0.9;
  double gate_probability = 0.99;
  double clutter_density = 1e-3;  // per m^2
};

struct PdaResult {
  Gaussian posterior;
  double likelihood = 0.0;      // model likelihood for the mu update
  std::vector<double> beta;     // beta[0]: no measurement correct; beta[k+1]: measurement k
};

// Probabilistic data association update of one model estimate with linear position measurement.
PdaResult pda_update(const Gaussian& predicted, std::span<const Eigen::Vector2d> measurements,
                     const Eigen::Matrix2d& measurement_noise, const PdaParams& params);

struct Association {
  std::vector<std::vector<std::size_t>> gated;  // per track, indices into measurements
  std::vector<std::size_t> unassigned;
};

// Gating by squared Mahalanobis distance against each track's predicted measurement.
Association associate(std::span<const TrackState> tracks, std::span<const Measurement> measurements,
                      double gate_threshold);

struct TrackerParams {
  MotionModelSet model_set = MotionModelSet::cv_ctrv();
  SigmaParams sigma;
  Eigen::Matrix2d measurement_noise = Eigen::Matrix2d::Identity() * 0.04;
  double detection_probability = 0.9;
  double clutter_density = 1e-3;
  double gate_threshold = 9.21;  // chi-square 99%, 2 dof
  int confirm_hits = 3;
  int max_misses = 5;
};

struct StepReport {
  std::vector<TrackState> died;       // removed this step, in id order
  std::vector<std::int64_t> born;
  std::size_t numerical_failures = 0; // tracks killed by a failed factorization
  std::size_t degenerate_mu_updates = 0;
};

// IMM-UKF-PDA multi-target tracker over ground-plane cluster centroids.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {});

  const TrackerParams& params() const { return params_; }
  const std::vector<TrackState>& tracks() const { return tracks_; }

  // dt is ignored when no tracks exist yet.
  StepReport step(std::span<const Measurement> measurements, double dt);

  // Removes every live track, marking it dead (end of sequence).
  std::vector<TrackState> flush();

 private:
  void predict(TrackState& track, double dt);
  void update(TrackState& track, std::span<const Measurement> measurements,
              const std::vector<std::size_t>& gated, StepReport& report);
  void fuse(TrackState& track) const;
  TrackState spawn(const Measurement& m);

  TrackerParams params_;
  std::vector<TrackState> tracks_;
  std::int64_t next_id_ = 0;
};

}  // namespace ltl
