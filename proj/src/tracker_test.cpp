#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "ltl/tracker.hpp"

using namespace ltl;

namespace {
Measurement at(double x, double y, int cluster = 0, std::int64_t frame = 0) {
  return Measurement{Eigen::Vector2d(x, y), cluster, frame};
}
}  // namespace

TEST_CASE("IMM mixing weights are column-stochastic") {
  const auto set = MotionModelSet::cv_ctrv();
  std::vector<Gaussian> states{set.models[0]->initial(0, 0), set.models[1]->initial(0, 0)};
  Eigen::VectorXd mu(2);
  mu << 0.3, 0.7;
  const auto mix = imm_mix(set, states, mu);
  CHECK(mix.weights.colwise().sum().isApprox(Eigen::RowVectorXd::Ones(2)));
  CHECK(mix.normalizers.sum() == doctest::Approx(1.0));

  mu << 0.5, 0.6;
  CHECK_THROWS_AS(imm_mix(set, states, mu), ContractError);
}

TEST_CASE("identity switching with a dead model keeps that model unmixed") {
  auto set = MotionModelSet::cv_ctrv();
  set.transition = Eigen::Matrix2d::Identity();
  std::vector<Gaussian> states{set.models[0]->initial(1, 2), set.models[1]->initial(5, 6)};
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.0;
  const auto mix = imm_mix(set, states, mu);
  CHECK(mix.normalizers(1) == 0.0);
  CHECK((mix.mixed[1].mean - states[1].mean).norm() == 0.0);
}

TEST_CASE("model probability update") {
  Eigen::VectorXd mu(2), lik(2);
  mu << 0.5, 0.5;
  Eigen::Matrix2d pi;
  pi << 0.9, 0.1, 0.1, 0.9;
  lik << 3.0, 1.0;
  const auto u = update_model_probabilities(mu, pi, lik);
  CHECK(u.mu(0) == doctest::Approx(0.75));
  CHECK_FALSE(u.degenerate);
  lik.setZero();
  const auto d = update_model_probabilities(mu, pi, lik);
  CHECK(d.degenerate);
  CHECK(d.mu.sum() == doctest::Approx(1.0));
}

TEST_CASE("PDA with one measurement, certain detection and no clutter is a Kalman update") {
  Gaussian g{Eigen::Vector4d(0, 0, 1, 0), Eigen::Matrix4d::Identity()};
  const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * 0.04;
  PdaParams p;
  p.detection_probability = 1.0;
  p.clutter_density = 0.0;
  const std::vector<Eigen::Vector2d> z{Eigen::Vector2d(0.3, -0.2)};
  const auto r = pda_update(g, z, R, p);
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = H(1, 1) = 1;
  const Eigen::Matrix2d S = H * g.cov * H.transpose() + R;
  const Eigen::Matrix<double, 4, 2> K = g.cov * H.transpose() * S.inverse();
  CHECK((r.posterior.mean - (g.mean + K * (z[0] - H * g.mean))).norm() < 1e-9);
  CHECK((r.posterior.cov - (Eigen::Matrix4d::Identity() - K * H) * g.cov).norm() < 1e-9);
  CHECK(r.beta[0] == 0.0);
}

TEST_CASE("PDA without measurements returns the prediction") {
  Gaussian g{Eigen::Vector4d(1, 2, 3, 4), Eigen::Matrix4d::Identity()};
  const auto r = pda_update(g, {}, Eigen::Matrix2d::Identity(), PdaParams{});
  CHECK(r.posterior.mean == g.mean);
  CHECK(r.posterior.cov == g.cov);
  CHECK(r.beta.size() == 1);
}

TEST_CASE("gating agrees with a direct Mahalanobis check") {
  Tracker tracker;
  const std::vector<Measurement> first{at(0, 0, 0), at(10, 0, 1), at(0, 10, 2)};
  tracker.step(first, 0.1);
  // Advance one step so tracks have predictions.
  const std::vector<Measurement> second{at(0.1, 0, 0), at(10, 0.1, 1), at(0, 10, 2), at(50, 50, 3)};
  tracker.step(second, 0.1);
  const std::vector<Measurement> probe{at(0.2, 0, 0), at(10.5, 0, 1), at(3, 10, 2), at(5, 5, 3)};
  // Predict by stepping a copy, then associate against its predicted state.
  Tracker copy = tracker;
  copy.step({}, 0.1);
  // Independent oracle over the copy's fields.
  const auto assoc = associate(copy.tracks(), probe, 9.21);
  for (std::size_t t = 0; t < copy.tracks().size(); ++t) {
    const auto& tr = copy.tracks()[t];
    std::vector<std::size_t> expected;
    for (std::size_t m = 0; m < probe.size(); ++m) {
      const Eigen::Vector2d v = probe[m].position - tr.predicted_z;
      if (v.dot(tr.innovation_cov.inverse() * v) <= 9.21) expected.push_back(m);
    }
    CHECK(assoc.gated[t] == expected);
  }
  for (auto m : assoc.unassigned)
    for (const auto& g : assoc.gated) CHECK(std::find(g.begin(), g.end(), m) == g.end());
}

TEST_CASE("lifecycle: three hits confirm, five misses kill") {
  Tracker tracker;
  for (int k = 0; k < 3; ++k) {
    const std::vector<Measurement> m{at(0.5 * k, 0, 0, k)};
    tracker.step(m, 0.1);
  }
  REQUIRE(tracker.tracks().size() == 1);
  CHECK(tracker.tracks()[0].status == TrackStatus::Confirmed);
  std::size_t died = 0;
  for (int k = 0; k < 5; ++k) died += tracker.step({}, 0.1).died.size();
  CHECK(died == 1);
  CHECK(tracker.tracks().empty());
}

TEST_CASE("a new far measurement starts a tentative track") {
  Tracker tracker;
  const std::vector<Measurement> m{at(0, 0)};
  auto r = tracker.step(m, 0.1);
  CHECK(r.born.size() == 1);
  CHECK(tracker.tracks()[0].status == TrackStatus::Tentative);
  CHECK(tracker.tracks()[0].hits == 1);
}
