/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include "imucal/types.hpp"

namespace imucal {

/// Accelerometer intrinsics: three misalignment angles, per-axis scale,
/// per-axis bias. The body frame is tied to the accelerometer x axis, so only
/// the upper triangle of the misalignment matrix carries free parameters:
///
///   T_a = | 1  -yz   zy |
///         | 0   1   -zx |
///         | 0   0    1  |
///
/// Correction order is fixed: corrected = T_a * K_a * (raw - bias), with
/// K_a = diag(scale). Bias is expressed in raw units.
struct AccelParams {
  Vec3 misalignment = Vec3::Zero();  // (yz, zy, zx)
  Vec3 scale = Vec3::Ones();
  Vec3 bias = Vec3::Zero();

  Mat3 misalignment_matrix() const;
};

/// Gyroscope intrinsics. The gyro frame must be rotated fully into the
/// accelerometer-defined body frame, so all six off-diagonal entries are free:
///
///   T_g = |  1   -yz   zy |
///         |  xz   1   -zx |
///         | -xy   yx   1  |
///
/// The bias is not part of the optimized vector; it is averaged from the
/// initial static phase and then held fixed.
struct GyroParams {
  Vec6 misalignment = Vec6::Zero();  // (yz, zy, xz, zx, xy, yx)
  Vec3 scale = Vec3::Ones();
  Vec3 bias = Vec3::Zero();

  Mat3 misalignment_matrix() const;
};

/// The 18 optimized intrinsics (9 accel + 9 gyro) plus the gyro bias.
struct CalibrationParams {
  AccelParams accel;
  GyroParams gyro;
};

Vec3 correct_accel(const Vec3& raw, const AccelParams& p);
Vec3 uncorrect_accel(const Vec3& value, const AccelParams& p);
Vec3 correct_gyro(const Vec3& raw, const GyroParams& p);
Vec3 uncorrect_gyro(const Vec3& value, const GyroParams& p);

/// Throw bad_config if scales are not strictly positive or misalignment
/// angles exceed the 0.2 rad sanity bound.
void validate(const AccelParams& p);
void validate(const GyroParams& p);

/// Reporting constant: 1 mg of acceleration in m/s^2.
inline constexpr double mg_to_mps2 = 9.807e-3;

/// Default gravity magnitude used by solvers and the generator.
inline constexpr double standard_gravity = 9.80665;

}  // namespace imucal
