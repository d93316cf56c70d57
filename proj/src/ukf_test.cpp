#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ltl/ukf.hpp"

using namespace ltl;

TEST_CASE("unscented transform is exact for linear maps") {
  Gaussian g{Eigen::Vector3d(1, 2, 3), Eigen::Matrix3d::Identity() * 0.5};
  g.cov(0, 1) = g.cov(1, 0) = 0.1;
  Eigen::Matrix3d A;
  A << 1, 2, 0, 0, 1, -1, 3, 0, 1;
  const auto out = unscented_transform(g, [&](const VectorXd& v) -> VectorXd { return A * v; }, SigmaParams{});
  CHECK((out.mean - A * g.mean).norm() < 1e-9);
  CHECK((out.cov - A * g.cov * A.transpose()).norm() < 1e-6);
}

TEST_CASE("CV prediction equals the linear Kalman prediction") {
  const ConstantVelocity cv;
  const auto g = cv.initial(4.0, -1.0);
  Gaussian moving = g;
  moving.mean(2) = 3.0;
  const auto pred = ukf_predict(cv, moving, 0.1);
  const MatrixXd F = ConstantVelocity::transition(0.1);
  CHECK((pred.mean - F * moving.mean).norm() < 1e-9);
  CHECK((pred.cov - (F * moving.cov * F.transpose() + cv.process_noise(moving.mean, 0.1))).norm() < 1e-6);
  CHECK_THROWS_AS(ukf_predict(cv, moving, 0.0), ContractError);
}

TEST_CASE("CTRV turns on the expected arc") {
  const ConstantTurnRate ctrv;
  VectorXd s(5);
  const double w = std::numbers::pi / 2;  // quarter turn in one second
  s << 0, 0, 0, 1, w;
  const VectorXd out = ctrv.propagate(s, 1.0);
  const double r = 1.0 / w;
  CHECK(out(0) == doctest::Approx(r));
  CHECK(out(1) == doctest::Approx(r));
  CHECK(out(2) == doctest::Approx(w));
}

TEST_CASE("wrap_angle stays in (-pi, pi]") {
  CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(0.5) == 0.5);
}

TEST_CASE("robust_cholesky handles semidefinite input and rejects indefinite") {
  Eigen::Matrix2d psd;
  psd << 1, 1, 1, 1;
  const MatrixXd L = robust_cholesky(psd);
  CHECK((L * L.transpose() - psd).norm() < 1e-6);
  Eigen::Matrix2d bad;
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(robust_cholesky(bad), NumericalError);
}

TEST_CASE("model conversions preserve position and velocity") {
  const ConstantVelocity cv;
  const ConstantTurnRate ctrv;
  Gaussian g{Eigen::Vector4d(2, 3, 4, -3), Eigen::Matrix4d::Identity() * 0.01};
  const auto through = cv.from_common(ctrv.to_common(ctrv.from_common(cv.to_common(g))));
  CHECK((through.mean - g.mean).norm() < 1e-3);
  VectorXd s = ctrv.from_common(cv.to_common(g)).mean;
  CHECK(s(3) == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(s(2) == doctest::Approx(std::atan2(-3.0, 4.0)).epsilon(1e-3));
}
