#include "ltl/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace ltl {

std::string_view to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::Tentative: return "tentative";
    case TrackStatus::Confirmed: return "confirmed";
    case TrackStatus::Dead: return "dead";
  }
  return "?";
}

namespace {

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

void check_probability_vector(const VectorXd& mu, std::size_t n, const char* who) {
  if (static_cast<std::size_t>(mu.size()) != n)
    throw ContractError(std::string(who) + ": model probability vector has wrong size");
  for (int i = 0; i < mu.size(); ++i)
    if (!(mu(i) >= 0.0) || !std::isfinite(mu(i)))
      throw ContractError(std::string(who) + ": model probabilities must be finite and non-negative");
  if (std::abs(mu.sum() - 1.0) > 1e-6) throw ContractError(std::string(who) + ": model probabilities must sum to 1");
}

// Estimate of model `from` expressed in the state space of model `to`.
Gaussian convert(const MotionModelSet& set, std::size_t from, std::size_t to, const Gaussian& g) {
  if (from == to) return g;
  return set.models[to]->from_common(set.models[from]->to_common(g));
}

}  // namespace

void MotionModelSet::validate() const {
  const auto n = static_cast<Eigen::Index>(models.size());
  if (n == 0) throw ContractError("motion model set is empty");
  if (transition.rows() != n || transition.cols() != n)
    throw ContractError("transition matrix must be n x n for n models");
  for (Eigen::Index j = 0; j < n; ++j) {
    if ((transition.row(j).array() < 0.0).any())
      throw ContractError("transition matrix has a negative entry");
    if (std::abs(transition.row(j).sum() - 1.0) > 1e-9)
      throw ContractError("transition matrix row " + std::to_string(j) + " does not sum to 1");
  }
}

MotionModelSet MotionModelSet::cv_ctrv(MotionNoise noise, double stay_probability) {
  MotionModelSet set;
  set.models = {std::make_shared<ConstantVelocity>(noise), std::make_shared<ConstantTurnRate>(noise)};
  set.transition.resize(2, 2);
  set.transition << stay_probability, 1.0 - stay_probability, 1.0 - stay_probability, stay_probability;
  return set;
}

MotionModelSet MotionModelSet::cv_only(MotionNoise noise) {
  MotionModelSet set;
  set.models = {std::make_shared<ConstantVelocity>(noise)};
  set.transition = MatrixXd::Ones(1, 1);
  return set;
}

MixResult imm_mix(const MotionModelSet& set, const std::vector<Gaussian>& states, const VectorXd& mu) {
  const std::size_t n = set.size();
  if (states.size() != n) throw ContractError("imm_mix: one estimate per model required");
  check_probability_vector(mu, n, "imm_mix");

  MixResult out;
  const auto ni = static_cast<Eigen::Index>(n);
  out.normalizers = set.transition.transpose() * mu;
  out.weights = MatrixXd::Zero(ni, ni);
  out.mixed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double c = out.normalizers(ii);
    if (!(c > 0.0)) {
      out.weights(ii, ii) = 1.0;
      out.mixed[i] = states[i];
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out.weights(jj, ii) = set.transition(jj, ii) * mu(jj) / c;
    }

    const auto angles = set.models[i]->angle_indices();
    const VectorXd& anchor = states[i].mean;
    std::vector<Gaussian> converted(n);
    VectorXd mean = VectorXd::Zero(anchor.size());
    for (std::size_t j = 0; j < n; ++j) {
      const double w = out.weights(static_cast<Eigen::Index>(j), ii);
      if (w == 0.0) continue;
      converted[j] = convert(set, j, i, states[j]);
      VectorXd d = converted[j].mean - anchor;
      for (int k : angles) d(k) = wrap_angle(d(k));
      mean += w * d;
    }
    mean += anchor;
    for (int k : angles) mean(k) = wrap_angle(mean(k));

    MatrixXd cov = MatrixXd::Zero(anchor.size(), anchor.size());
    for (std::size_t j = 0; j < n; ++j) {
      const double w = out.weights(static_cast<Eigen::Index>(j), ii);
      if (w == 0.0) continue;
      VectorXd d = converted[j].mean - mean;
      for (int k : angles) d(k) = wrap_angle(d(k));
      cov += w * (converted[j].cov + d * d.transpose());
    }
    symmetrize(cov);
    out.mixed[i] = Gaussian{mean, cov};
  }
  return out;
}

ModelProbabilityUpdate update_model_probabilities(const VectorXd& mu, const MatrixXd& transition,
                                                  const VectorXd& likelihoods) {
  check_probability_vector(mu, static_cast<std::size_t>(transition.rows()), "update_model_probabilities");
  if (likelihoods.size() != mu.size()) throw ContractError("update_model_probabilities: size mismatch");
  for (int i = 0; i < likelihoods.size(); ++i)
    if (!(likelihoods(i) >= 0.0)) throw ContractError("update_model_probabilities: negative likelihood");

  const VectorXd predicted = transition.transpose() * mu;
  const VectorXd unnormalized = predicted.cwiseProduct(likelihoods);
  const double total = unnormalized.sum();
  if (!(total > 0.0) || !std::isfinite(total)) return {mu, true};
  return {unnormalized / total, false};
}

PdaResult pda_update(const Gaussian& predicted, std::span<const Eigen::Vector2d> measurements,
                     const Eigen::Matrix2d& measurement_noise, const PdaParams& params) {
  PdaResult out;
  const double pd_pg = params.detection_probability * params.gate_probability;
  if (measurements.empty()) {
    out.posterior = predicted;
    out.likelihood = 1.0 - pd_pg;
    out.beta = {1.0};
    return out;
  }

  const Eigen::Vector2d z_pred = predicted.mean.head<2>();
  const Eigen::Matrix2d s = predicted.cov.topLeftCorner<2, 2>() + measurement_noise;
  const Eigen::Matrix2d s_inv = s.inverse();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(s.determinant()));

  std::vector<Eigen::Vector2d> innovations;
  std::vector<double> weights;
  weights.push_back(params.clutter_density * (1.0 - pd_pg));
  for (const auto& z : measurements) {
    const Eigen::Vector2d nu = z - z_pred;
    innovations.push_back(nu);
    weights.push_back(params.detection_probability * norm * std::exp(-0.5 * nu.dot(s_inv * nu)));
  }
  double total = 0.0;
  for (double w : weights) total += w;
  out.likelihood = total;
  if (!(total > 0.0)) {
    out.posterior = predicted;
    out.beta.assign(weights.size(), 0.0);
    out.beta[0] = 1.0;
    return out;
  }
  out.beta.resize(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) out.beta[k] = weights[k] / total;

  Eigen::Vector2d nu = Eigen::Vector2d::Zero();
  Eigen::Matrix2d spread = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < innovations.size(); ++k) {
    nu += out.beta[k + 1] * innovations[k];
    spread += out.beta[k + 1] * innovations[k] * innovations[k].transpose();
  }
  spread -= nu * nu.transpose();

  const MatrixXd gain = predicted.cov.leftCols<2>() * s_inv;
  out.posterior.mean = predicted.mean + gain * nu;
  out.posterior.cov = predicted.cov - (1.0 - out.beta[0]) * gain * s * gain.transpose() +
                      gain * spread * gain.transpose();
  symmetrize(out.posterior.cov);
  return out;
}

Association associate(std::span<const TrackState> tracks, std::span<const Measurement> measurements,
                      double gate_threshold) {
  Association out;
  out.gated.resize(tracks.size());
  std::vector<bool> taken(measurements.size(), false);
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const auto& track = tracks[t];
    if (track.status == TrackStatus::Dead) continue;
    const Eigen::LDLT<Eigen::Matrix2d> solver(track.innovation_cov);
    for (std::size_t m = 0; m < measurements.size(); ++m) {
      const Eigen::Vector2d nu = measurements[m].position - track.predicted_z;
      if (nu.dot(solver.solve(nu)) <= gate_threshold) {
        out.gated[t].push_back(m);
        taken[m] = true;
      }
    }
  }
  for (std::size_t m = 0; m < measurements.size(); ++m)
    if (!taken[m]) out.unassigned.push_back(m);
  return out;
}

Tracker::Tracker(TrackerParams params) : params_(std::move(params)) { params_.model_set.validate(); }

TrackState Tracker::spawn(const Measurement& m) {
  TrackState t;
  t.id = next_id_++;
  const auto n = params_.model_set.size();
  for (const auto& model : params_.model_set.models) t.models.push_back(model->initial(m.position.x(), m.position.y()));
  t.mu = VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
  t.hits = 1;
  t.history.push_back(Observation{m.frame_id, m.cluster_id});
  if (t.hits >= params_.confirm_hits) t.status = TrackStatus::Confirmed;
  fuse(t);
  return t;
}

void Tracker::fuse(TrackState& track) const {
  const auto& models = params_.model_set.models;
  std::vector<Gaussian> outputs;
  outputs.reserve(models.size());
  VectorXd mean = VectorXd::Zero(kOutputDim);
  for (std::size_t i = 0; i < models.size(); ++i) {
    outputs.push_back(models[i]->to_output(track.models[i]));
    mean += track.mu(static_cast<Eigen::Index>(i)) * outputs.back().mean;
  }
  MatrixXd cov = MatrixXd::Zero(kOutputDim, kOutputDim);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const VectorXd d = outputs[i].mean - mean;
    cov += track.mu(static_cast<Eigen::Index>(i)) * (outputs[i].cov + d * d.transpose());
  }
  symmetrize(cov);
  track.fused = Gaussian{mean, cov};
}

void Tracker::predict(TrackState& track, double dt) {
  const auto& set = params_.model_set;
  const MixResult mix = imm_mix(set, track.models, track.mu);
  track.predicted.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    track.predicted[i] = ukf_predict(*set.models[i], mix.mixed[i], dt, params_.sigma);
  track.predicted_mu = mix.normalizers;

  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < set.size(); ++i)
    z += track.predicted_mu(static_cast<Eigen::Index>(i)) * track.predicted[i].mean.head<2>();
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Eigen::Vector2d d = track.predicted[i].mean.head<2>() - z;
    s += track.predicted_mu(static_cast<Eigen::Index>(i)) *
         (track.predicted[i].cov.topLeftCorner<2, 2>() + params_.measurement_noise + d * d.transpose());
  }
  track.predicted_z = z;
  track.innovation_cov = 0.5 * (s + s.transpose());
}

void Tracker::update(TrackState& track, std::span<const Measurement> measurements,
                     const std::vector<std::size_t>& gated, StepReport& report) {
  std::vector<Eigen::Vector2d> zs;
  zs.reserve(gated.size());
  for (auto m : gated) zs.push_back(measurements[m].position);

  PdaParams pda;
  pda.detection_probability = params_.detection_probability;
  pda.clutter_density = params_.clutter_density;
  // Exact gate mass of a 2-dof chi-square.
  pda.gate_probability = 1.0 - std::exp(-0.5 * params_.gate_threshold);

  const auto n = params_.model_set.size();
  VectorXd likelihoods(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    PdaResult r = pda_update(track.predicted[i], zs, params_.measurement_noise, pda);
    track.models[i] = std::move(r.posterior);
    likelihoods(static_cast<Eigen::Index>(i)) = r.likelihood;
  }
  auto mu = update_model_probabilities(track.mu, params_.model_set.transition, likelihoods);
  if (mu.degenerate) ++report.degenerate_mu_updates;
  track.mu = mu.mu;
  fuse(track);

  if (gated.empty()) {
    ++track.misses;
  } else {
    ++track.hits;
    track.misses = 0;
    const Eigen::LDLT<Eigen::Matrix2d> solver(track.innovation_cov);
    std::size_t best = gated.front();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (auto m : gated) {
      const Eigen::Vector2d nu = measurements[m].position - track.predicted_z;
      const double d2 = nu.dot(solver.solve(nu));
      if (d2 < best_d2) {
        best_d2 = d2;
        best = m;
      }
    }
    track.history.push_back(Observation{measurements[best].frame_id, measurements[best].cluster_id});
  }
  if (track.status == TrackStatus::Tentative && track.hits >= params_.confirm_hits)
    track.status = TrackStatus::Confirmed;
  if (track.misses >= params_.max_misses) track.status = TrackStatus::Dead;
}

StepReport Tracker::step(std::span<const Measurement> measurements, double dt) {
  StepReport report;
  for (auto& track : tracks_) {
    try {
      predict(track, dt);
    } catch (const NumericalError&) {
      track.status = TrackStatus::Dead;
      ++report.numerical_failures;
    }
  }

  const Association assoc = associate(tracks_, measurements, params_.gate_threshold);
  for (std::size_t t = 0; t < tracks_.size(); ++t) {
    if (tracks_[t].status == TrackStatus::Dead) continue;
    update(tracks_[t], measurements, assoc.gated[t], report);
  }

  std::vector<TrackState> alive;
  alive.reserve(tracks_.size() + assoc.unassigned.size());
  for (auto& t : tracks_) {
    t.predicted.clear();
    (t.status == TrackStatus::Dead ? report.died : alive).push_back(std::move(t));
  }
  for (auto m : assoc.unassigned) {
    alive.push_back(spawn(measurements[m]));
    report.born.push_back(alive.back().id);
  }
  tracks_ = std::move(alive);
  return report;
}

std::vector<TrackState> Tracker::flush() {
  std::vector<TrackState> out = std::move(tracks_);
  tracks_.clear();
  for (auto& t : out) t.status = TrackStatus::Dead;
  return out;
}

}  // namespace ltl
