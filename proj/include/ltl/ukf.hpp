#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ltl/types.hpp"

namespace ltl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Gaussian {
  VectorXd mean;
  MatrixXd cov;
};

// Merwe-scaled sigma point parameters.
struct SigmaParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
};

// Common state used to move estimates between models:
// (x, y, vx, vy, yaw_rate).
inline constexpr int kCommonDim = 5;

// Output space for fused track reports: (x, y, vx, vy).
inline constexpr int kOutputDim = 4;

class MotionModel {
 public:
  virtual ~MotionModel() = default;

  virtual std::string_view name() const = 0;
  virtual int dim() const = 0;
  // State indices holding angles; differences on them are wrapped to (-pi, pi].
  virtual std::vector<int> angle_indices() const { return {}; }

  virtual VectorXd propagate(const VectorXd& state, double dt) const = 0;
  virtual MatrixXd process_noise(const VectorXd& state, double dt) const = 0;

  // New track at ground position (x, y).
  virtual Gaussian initial(double x, double y) const = 0;

  virtual Gaussian to_common(const Gaussian& g) const = 0;
  virtual Gaussian from_common(const Gaussian& g) const = 0;
  Gaussian to_output(const Gaussian& g) const;
};

struct MotionNoise {
  double accel_std = 1.5;          // m/s^2, longitudinal / white acceleration
  double yaw_accel_std = 0.8;      // rad/s^2
  double init_position_var = 0.1;  // m^2
  double init_velocity_var = 25.0; // (m/s)^2
  double init_yaw_var = 1.0;       // rad^2
  double init_yaw_rate_var = 0.25; // (rad/s)^2
};

// Constant velocity, state (x, y, vx, vy). Linear.
class ConstantVelocity final : public MotionModel {
 public:
  explicit ConstantVelocity(MotionNoise noise = {}) : noise_(noise) {}

  std::string_view name() const override { return "cv"; }
  int dim() const override { return 4; }
  VectorXd propagate(const VectorXd& state, double dt) const override;
  MatrixXd process_noise(const VectorXd& state, double dt) const override;
  Gaussian initial(double x, double y) const override;
  Gaussian to_common(const Gaussian& g) const override;
  Gaussian from_common(const Gaussian& g) const override;

  static MatrixXd transition(double dt);

 private:
  MotionNoise noise_;
};

// Constant turn rate and velocity, state (x, y, yaw, speed, yaw_rate).
class ConstantTurnRate final : public MotionModel {
 public:
  explicit ConstantTurnRate(MotionNoise noise = {}) : noise_(noise) {}

  std::string_view name() const override { return "ctrv"; }
  int dim() const override { return 5; }
  std::vector<int> angle_indices() const override { return {2}; }
  VectorXd propagate(const VectorXd& state, double dt) const override;
  MatrixXd process_noise(const VectorXd& state, double dt) const override;
  Gaussian initial(double x, double y) const override;
  Gaussian to_common(const Gaussian& g) const override;
  Gaussian from_common(const Gaussian& g) const override;

 private:
  MotionNoise noise_;
};

double wrap_angle(double a);

// Lower-triangular factor of `cov`; retries once with 1e-9 jitter, then throws NumericalError.
MatrixXd robust_cholesky(const MatrixXd& cov);

// Unscented transform of `g` through `f`. Angle indices of the output are wrapped.
Gaussian unscented_transform(const Gaussian& g, const std::function<VectorXd(const VectorXd&)>& f,
                             const SigmaParams& sigma, const std::vector<int>& output_angles = {});

// Propagates through the model and adds its process noise.
Gaussian ukf_predict(const MotionModel& model, const Gaussian& prior, double dt, const SigmaParams& sigma = {});

}  // namespace ltl
