/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/calibration.hpp"

#include <cmath>
#include <string>

#include "imucal/error.hpp"
#include "imucal/levmar.hpp"

namespace imucal {

namespace {

LmOptions lm_options(const SolverConfig& config) {
  LmOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.gradient_tolerance = config.gradient_tolerance;
  opts.parameter_tolerance = config.parameter_tolerance;
  opts.initial_damping = config.initial_damping;
  return opts;
}

AccelParams accel_from_vector(const Eigen::VectorXd& x) {
  AccelParams p;
  p.misalignment = x.segment<3>(0);
  p.scale = x.segment<3>(3);
  p.bias = x.segment<3>(6);
  return p;
}

Eigen::VectorXd accel_to_vector(const AccelParams& p) {
  Eigen::VectorXd x(9);
  x << p.misalignment, p.scale, p.bias;
  return x;
}

GyroParams gyro_from_vector(const Eigen::VectorXd& x, const Vec3& bias) {
  GyroParams p;
  p.misalignment = x.segment<6>(0);
  p.scale = x.segment<3>(6);
  p.bias = bias;
  return p;
}

Eigen::VectorXd gyro_to_vector(const GyroParams& p) {
  Eigen::VectorXd x(9);
  x << p.misalignment, p.scale;
  return x;
}

// Quaternion kinematics q_dot = 0.5 * q * (0, w), as a coefficient vector in
// Eigen's (x, y, z, w) storage order.
Eigen::Vector4d quat_derivative(const Eigen::Vector4d& q, const Vec3& rate) {
  const Quat qq(q(3), q(0), q(1), q(2));
  const Quat omega(0.0, rate.x(), rate.y(), rate.z());
  return 0.5 * (qq * omega).coeffs();
}

}  // namespace

std::pair<AccelParams, double> calibrate_accel(std::span<const StaticSegment> segments,
                                               const AccelParams& init,
                                               const SolverConfig& config) {
  if (segments.size() < 9)
    raise(Errc::underdetermined, "accel stage needs at least 9 static segments, got " +
                                     std::to_string(segments.size()));

  const double g_sq = config.gravity_magnitude * config.gravity_magnitude;
  ResidualFn residual = [&](const Eigen::VectorXd& x) {
    const AccelParams p = accel_from_vector(x);
    Eigen::VectorXd r(static_cast<Eigen::Index>(segments.size()));
    for (std::size_t i = 0; i < segments.size(); ++i)
      r(static_cast<Eigen::Index>(i)) =
          g_sq - correct_accel(segments[i].mean_accel, p).squaredNorm();
    return r;
  };

  const LmResult fit = lm_minimize(residual, accel_to_vector(init), lm_options(config));
  AccelParams result = accel_from_vector(fit.x);
  try {
    validate(result);
  } catch (const Error& e) {
    raise(Errc::diverged, std::string("accel fit left the valid parameter range: ") + e.what());
  }
  return {result, fit.cost};
}

Vec3 estimate_gyro_bias(const SampleStream& stream, const StaticSegment& init_segment) {
  if (init_segment.duration < 10.0)
    raise(Errc::insufficient_data, "gyro bias estimation needs a static segment of >= 10 s");
  Vec3 sum = Vec3::Zero();
  for (Eigen::Index i = init_segment.start_index; i < init_segment.end_index; ++i)
    sum += stream.records[static_cast<std::size_t>(i)].gyro;
  return sum / static_cast<double>(init_segment.end_index - init_segment.start_index);
}

Quat angular_rate_step(const Vec3& rate, double dt) {
  const double angle = rate.norm() * dt;
  const double half = 0.5 * angle;
  // sin(half)/half via its series for small angles; exact identity at zero
  // rate instead of a 0/0 axis normalization.
  double sinc_half;
  if (half < 1e-4) {
    const double h2 = half * half;
    sinc_half = 1.0 - h2 / 6.0 + h2 * h2 / 120.0;
  } else {
    sinc_half = std::sin(half) / half;
  }
  const Vec3 vec = 0.5 * dt * sinc_half * rate;
  return Quat(std::cos(half), vec.x(), vec.y(), vec.z());
}

Quat integrate_orientation(std::span<const Vec3> raw_gyro, const GyroParams& params, double dt,
                           IntegrationMethod method) {
  if (dt <= 0.0) raise(Errc::bad_config, "integration step must be positive");
  Quat q = Quat::Identity();
  if (raw_gyro.size() < 2) return q;

  if (method == IntegrationMethod::euler) {
    for (std::size_t i = 0; i + 1 < raw_gyro.size(); ++i) {
      q = q * angular_rate_step(correct_gyro(raw_gyro[i], params), dt);
      q.normalize();
    }
    return q;
  }

  Vec3 rate0 = correct_gyro(raw_gyro[0], params);
  for (std::size_t i = 0; i + 1 < raw_gyro.size(); ++i) {
    const Vec3 rate1 = correct_gyro(raw_gyro[i + 1], params);
    const Vec3 rate_mid = 0.5 * (rate0 + rate1);

    const Eigen::Vector4d y = q.coeffs();
    const Eigen::Vector4d k1 = quat_derivative(y, rate0);
    const Eigen::Vector4d k2 = quat_derivative(y + 0.5 * dt * k1, rate_mid);
    const Eigen::Vector4d k3 = quat_derivative(y + 0.5 * dt * k2, rate_mid);
    const Eigen::Vector4d k4 = quat_derivative(y + dt * k3, rate1);
    q.coeffs() = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    q.normalize();
    rate0 = rate1;
  }
  return q;
}

std::pair<GyroParams, double> calibrate_gyro(const SampleStream& stream,
                                             std::span<const StaticSegment> segments,
                                             const AccelParams& accel_params,
                                             const Vec3& gyro_bias, const GyroParams& init,
                                             const SolverConfig& config) {
  if (segments.size() < 9)
    raise(Errc::underdetermined, "gyro stage needs at least 9 static segments, got " +
                                     std::to_string(segments.size()));

  std::vector<Vec3> gravity_dirs(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    gravity_dirs[i] = correct_accel(segments[i].mean_accel, accel_params).normalized();

  // Motion windows span from the last sample inside one segment to the first
  // sample of the next; the trimmed guard samples carry real rotation.
  std::vector<std::vector<Vec3>> motions(segments.size() - 1);
  const double dt = 1.0 / stream.sample_rate;
  for (std::size_t k = 1; k < segments.size(); ++k) {
    const Eigen::Index a = segments[k - 1].end_index - 1;
    const Eigen::Index b = segments[k].start_index;
    std::vector<Vec3>& window = motions[k - 1];
    window.reserve(static_cast<std::size_t>(b - a + 1));
    for (Eigen::Index i = a; i <= b; ++i) {
      if (i > a) {
        const std::int64_t jump = stream.records[static_cast<std::size_t>(i)].packet_index -
                                  stream.records[static_cast<std::size_t>(i - 1)].packet_index;
        if (jump != 1)
          raise(Errc::missing_motion_data,
                "lost gyro packets between segments " + std::to_string(k - 1) + " and " +
                    std::to_string(k) + " (packet " +
                    std::to_string(
                        stream.records[static_cast<std::size_t>(i - 1)].packet_index + 1) +
                    ")");
      }
      window.push_back(stream.records[static_cast<std::size_t>(i)].gyro);
    }
  }

  ResidualFn residual = [&](const Eigen::VectorXd& x) {
    const GyroParams p = gyro_from_vector(x, gyro_bias);
    Eigen::VectorXd r(3 * static_cast<Eigen::Index>(motions.size()));
    for (std::size_t k = 0; k < motions.size(); ++k) {
      const Quat q = integrate_orientation(motions[k], p, dt, config.integration_method);
      // q maps end-frame to start-frame coordinates, so its conjugate carries
      // the previous gravity direction onto the next segment.
      const Vec3 predicted = q.conjugate() * gravity_dirs[k];
      r.segment<3>(3 * static_cast<Eigen::Index>(k)) = gravity_dirs[k + 1] - predicted;
    }
    return r;
  };

  const LmResult fit = lm_minimize(residual, gyro_to_vector(init), lm_options(config));
  GyroParams result = gyro_from_vector(fit.x, gyro_bias);
  try {
    validate(result);
  } catch (const Error& e) {
    raise(Errc::diverged, std::string("gyro fit left the valid parameter range: ") + e.what());
  }
  return {result, fit.cost};
}

CalibrationResult calibrate(const SampleStream& stream, const DetectorConfig& detector_config,
                            const SolverConfig& solver_config) {
  AccelParams accel_init;
  accel_init.scale.setConstant(solver_config.initial_accel_scale);
  GyroParams gyro_init;
  gyro_init.scale.setConstant(solver_config.initial_gyro_scale);

  auto stage = [](const char* name, const Error& e) -> void {
    raise(e.code(), std::string(name) + " stage: " + e.what());
  };

  ThresholdSelection selection;
  try {
    selection = select_threshold(stream, detector_config,
                                 [&](const std::vector<StaticSegment>& segs) {
                                   return calibrate_accel(segs, accel_init, solver_config).second;
                                 });
  } catch (const Error& e) {
    stage("detector", e);
  }

  CalibrationResult result;
  result.k_selected = selection.k;
  result.segments_used = static_cast<int>(selection.segments.size());
  result.segments = selection.segments;

  try {
    auto [accel, accel_cost] = calibrate_accel(selection.segments, accel_init, solver_config);
    result.params.accel = accel;
    result.accel_residual = accel_cost;
    result.accel_converged = true;
  } catch (const Error& e) {
    stage("accel", e);
  }

  try {
    const Vec3 bias = estimate_gyro_bias(stream, selection.segments.front());
    auto [gyro, gyro_cost] = calibrate_gyro(stream, selection.segments, result.params.accel,
                                            bias, gyro_init, solver_config);
    result.params.gyro = gyro;
    result.gyro_residual = gyro_cost;
    result.gyro_converged = true;
  } catch (const Error& e) {
    stage("gyro", e);
  }

  return result;
}

}  // namespace imucal
