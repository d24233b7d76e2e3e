/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "imucal/model.hpp"
#include "imucal/static_detector.hpp"
#include "imucal/types.hpp"

namespace imucal {

enum class IntegrationMethod { rk4, euler };

struct SolverConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-12;
  double parameter_tolerance = 1e-10;
  double initial_damping = 1e-3;
  double gravity_magnitude = standard_gravity;
  IntegrationMethod integration_method = IntegrationMethod::rk4;
  // Datasheet sensitivities used to seed the solvers; absorb raw-LSB streams.
  double initial_accel_scale = 1.0;
  double initial_gyro_scale = 1.0;
};

struct CalibrationResult {
  CalibrationParams params;
  double accel_residual = 0.0;
  double gyro_residual = 0.0;
  int segments_used = 0;
  int k_selected = 0;
  bool accel_converged = false;
  bool gyro_converged = false;
  std::vector<StaticSegment> segments;
};

/// Fit the 9 accelerometer parameters so every segment's corrected gravity
/// magnitude matches |g|: minimize sum_k (g^2 - |correct(mean_k)|^2)^2.
/// Returns the parameters and the final cost.
std::pair<AccelParams, double> calibrate_accel(std::span<const StaticSegment> segments,
                                               const AccelParams& init,
                                               const SolverConfig& config);

/// Average raw gyro rates over the long opening static segment.
Vec3 estimate_gyro_bias(const SampleStream& stream, const StaticSegment& init_segment);

/// Per-sample angular rate to a quaternion step, safe at exactly zero rate.
Quat angular_rate_step(const Vec3& rate, double dt);

/// Compose corrected gyro rates into the relative attitude of the last body
/// frame expressed in the first: q maps end-frame coordinates to start-frame
/// coordinates. N samples make N-1 integration steps of length dt. The
/// result is renormalized every step.
Quat integrate_orientation(std::span<const Vec3> raw_gyro, const GyroParams& params, double dt,
                           IntegrationMethod method);

/// Fit the 9 gyroscope parameters (bias held fixed) so that integrating the
/// rotation between consecutive static segments carries the measured gravity
/// direction of one segment onto the next.
std::pair<GyroParams, double> calibrate_gyro(const SampleStream& stream,
                                             std::span<const StaticSegment> segments,
                                             const AccelParams& accel_params,
                                             const Vec3& gyro_bias, const GyroParams& init,
                                             const SolverConfig& config);

/// Full pipeline: baseline, threshold selection (accelerometer residual as
/// the tie-break), accelerometer fit, gyro bias, gyroscope fit.
CalibrationResult calibrate(const SampleStream& stream, const DetectorConfig& detector_config,
                            const SolverConfig& solver_config);

}  // namespace imucal
