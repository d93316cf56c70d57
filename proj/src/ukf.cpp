#include "ltl/ukf.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

namespace ltl {

namespace {

// Conversions between parameterisations are strongly nonlinear near zero speed, so they
// use unit-alpha sigma points (all weights positive) instead of the tight predict spread.
const SigmaParams kConversionSigma{1.0, 2.0, 0.0};

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

MatrixXd robust_cholesky(const MatrixXd& cov) {
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::LLT<MatrixXd> retry(cov + 1e-9 * MatrixXd::Identity(cov.rows(), cov.cols()));
  if (retry.info() == Eigen::Success) return retry.matrixL();
  throw NumericalError("covariance is not positive definite (min diagonal " +
                       std::to_string(cov.diagonal().minCoeff()) + ")");
}

Gaussian unscented_transform(const Gaussian& g, const std::function<VectorXd(const VectorXd&)>& f,
                             const SigmaParams& sigma, const std::vector<int>& output_angles) {
  const int n = static_cast<int>(g.mean.size());
  const double lambda = sigma.alpha * sigma.alpha * (n + sigma.kappa) - n;
  const double spread = n + lambda;
  const MatrixXd root = robust_cholesky(spread * g.cov);

  const double wm0 = lambda / spread;
  const double wc0 = wm0 + (1.0 - sigma.alpha * sigma.alpha + sigma.beta);
  const double wi = 0.5 / spread;

  std::vector<VectorXd> ys;
  ys.reserve(static_cast<std::size_t>(2 * n + 1));
  ys.push_back(f(g.mean));
  for (int i = 0; i < n; ++i) {
    ys.push_back(f(g.mean + root.col(i)));
    ys.push_back(f(g.mean - root.col(i)));
  }

  auto diff = [&](const VectorXd& a, const VectorXd& b) {
    VectorXd d = a - b;
    for (int k : output_angles) d(k) = wrap_angle(d(k));
    return d;
  };

  // Mean relative to the central point: weights sum to one, and the large negative
  // central weight never multiplies an absolute coordinate.
  VectorXd mean = ys[0];
  {
    VectorXd acc = VectorXd::Zero(ys[0].size());
    for (std::size_t i = 1; i < ys.size(); ++i) acc += wi * diff(ys[i], ys[0]);
    mean += acc;
    for (int k : output_angles) mean(k) = wrap_angle(mean(k));
  }

  MatrixXd cov = MatrixXd::Zero(mean.size(), mean.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const VectorXd d = diff(ys[i], mean);
    cov += (i == 0 ? wc0 : wi) * d * d.transpose();
  }
  symmetrize(cov);
  return Gaussian{mean, cov};
}

Gaussian ukf_predict(const MotionModel& model, const Gaussian& prior, double dt, const SigmaParams& sigma) {
  if (!(dt > 0.0)) throw ContractError("ukf_predict: dt must be positive");
  Gaussian out = unscented_transform(
      prior, [&](const VectorXd& x) { return model.propagate(x, dt); }, sigma, model.angle_indices());
  out.cov += model.process_noise(prior.mean, dt);
  symmetrize(out.cov);
  return out;
}

Gaussian MotionModel::to_output(const Gaussian& g) const {
  const Gaussian common = to_common(g);
  return Gaussian{common.mean.head(kOutputDim), common.cov.topLeftCorner(kOutputDim, kOutputDim)};
}

// ---- constant velocity ----------------------------------------------------

MatrixXd ConstantVelocity::transition(double dt) {
  MatrixXd f = MatrixXd::Identity(4, 4);
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

VectorXd ConstantVelocity::propagate(const VectorXd& s, double dt) const {
  VectorXd out = s;
  out(0) += dt * s(2);
  out(1) += dt * s(3);
  return out;
}

MatrixXd ConstantVelocity::process_noise(const VectorXd&, double dt) const {
  const double q = noise_.accel_std * noise_.accel_std;
  const double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
  MatrixXd m = MatrixXd::Zero(4, 4);
  m(0, 0) = m(1, 1) = dt4 / 4.0 * q;
  m(0, 2) = m(2, 0) = m(1, 3) = m(3, 1) = dt3 / 2.0 * q;
  m(2, 2) = m(3, 3) = dt2 * q;
  return m;
}

Gaussian ConstantVelocity::initial(double x, double y) const {
  Gaussian g{VectorXd::Zero(4), MatrixXd::Zero(4, 4)};
  g.mean << x, y, 0.0, 0.0;
  g.cov.diagonal() << noise_.init_position_var, noise_.init_position_var, noise_.init_velocity_var,
      noise_.init_velocity_var;
  return g;
}

Gaussian ConstantVelocity::to_common(const Gaussian& g) const {
  Gaussian out{VectorXd::Zero(kCommonDim), MatrixXd::Zero(kCommonDim, kCommonDim)};
  out.mean.head(4) = g.mean;
  out.cov.topLeftCorner(4, 4) = g.cov;
  out.cov(4, 4) = noise_.init_yaw_rate_var;
  return out;
}

Gaussian ConstantVelocity::from_common(const Gaussian& g) const {
  return Gaussian{g.mean.head(4), g.cov.topLeftCorner(4, 4)};
}

// ---- constant turn rate and velocity --------------------------------------

VectorXd ConstantTurnRate::propagate(const VectorXd& s, double dt) const {
  const double yaw = s(2), v = s(3), w = s(4);
  VectorXd out = s;
  if (std::abs(w) > 1e-6) {
    out(0) += v / w * (std::sin(yaw + w * dt) - std::sin(yaw));
    out(1) += v / w * (std::cos(yaw) - std::cos(yaw + w * dt));
  } else {
    // Second-order series in w; exact straight-line motion at w = 0.
    const double dt2 = dt * dt;
    out(0) += v * (dt * std::cos(yaw) - 0.5 * w * dt2 * std::sin(yaw));
    out(1) += v * (dt * std::sin(yaw) + 0.5 * w * dt2 * std::cos(yaw));
  }
  out(2) = wrap_angle(yaw + w * dt);
  return out;
}

MatrixXd ConstantTurnRate::process_noise(const VectorXd& s, double dt) const {
  const double yaw = s(2);
  MatrixXd g = MatrixXd::Zero(5, 2);
  g(0, 0) = 0.5 * dt * dt * std::cos(yaw);
  g(1, 0) = 0.5 * dt * dt * std::sin(yaw);
  g(2, 1) = 0.5 * dt * dt;
  g(3, 0) = dt;
  g(4, 1) = dt;
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  q(0, 0) = noise_.accel_std * noise_.accel_std;
  q(1, 1) = noise_.yaw_accel_std * noise_.yaw_accel_std;
  return g * q * g.transpose();
}

Gaussian ConstantTurnRate::initial(double x, double y) const {
  Gaussian g{VectorXd::Zero(5), MatrixXd::Zero(5, 5)};
  g.mean << x, y, 0.0, 0.0, 0.0;
  g.cov.diagonal() << noise_.init_position_var, noise_.init_position_var, noise_.init_yaw_var,
      noise_.init_velocity_var, noise_.init_yaw_rate_var;
  return g;
}

Gaussian ConstantTurnRate::to_common(const Gaussian& g) const {
  return unscented_transform(
      g,
      [](const VectorXd& s) {
        VectorXd c(kCommonDim);
        c << s(0), s(1), s(3) * std::cos(s(2)), s(3) * std::sin(s(2)), s(4);
        return c;
      },
      kConversionSigma);
}

Gaussian ConstantTurnRate::from_common(const Gaussian& g) const {
  // Heading of a near-stationary estimate is undefined; anchor it at the mean velocity direction.
  const double ref = std::atan2(g.mean(3), g.mean(2));
  Gaussian out = unscented_transform(
      g,
      [ref](const VectorXd& c) {
        VectorXd s(5);
        const double speed = std::hypot(c(2), c(3));
        const double yaw = speed > 1e-9 ? std::atan2(c(3), c(2)) : ref;
        s << c(0), c(1), yaw, speed, c(4);
        return s;
      },
      kConversionSigma, {2});
  return out;
}

}  // namespace ltl
