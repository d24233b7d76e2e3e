/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "imucal/model.hpp"
#include "imucal/types.hpp"

namespace imucal {

/// Ground truth driving the generator. Raw samples are produced by pushing
/// the true physical values through the inverse sensor model and adding
/// white noise, so a calibration run against the output should recover
/// `params`. Noise sigmas are per axis, per sample, in output units.
struct GroundTruth {
  CalibrationParams params;
  double gravity = standard_gravity;
  double sample_rate = 100.0;
  double accel_noise_sigma = 200e-6 * standard_gravity;  // ADXL355 class, 200 ug rms
  double gyro_noise_sigma = 1e-3;                        // BMI160 class, rad/s
  double accel_secondary_noise_sigma = 2e-3 * standard_gravity;  // IMU-chip accel
};

/// Angular speed shape of a transition. Both start and end at zero rate.
/// smoothstep is the hand-motion default; triangle is piecewise linear in
/// rate, which 100 Hz samples capture without quadrature error, so strict
/// round-trip oracles use it.
enum class TransitionProfile { smoothstep, triangle };

/// A pose sequence: hold each attitude, move smoothly to the next. The first
/// attitude is additionally held for `initial_hold` seconds, producing the
/// long opening static phase the detector baselines on.
struct OrientationSchedule {
  std::vector<Quat> orientations;
  std::vector<double> hold_durations;
  double transition_duration = 1.5;
  double initial_hold = 40.0;
  TransitionProfile profile = TransitionProfile::smoothstep;
  double min_consecutive_angle_deg = 0.0;  // enforced by validate() when > 0

  double total_duration() const;
};

/// Throws bad_config on size mismatch, non-unit quaternions, non-positive
/// durations, or consecutive attitudes closer than the configured minimum.
void validate(const OrientationSchedule& schedule);

/// Attitude (body to world) and body-frame angular rate at time t.
struct MotionState {
  Quat attitude = Quat::Identity();
  Vec3 angular_rate = Vec3::Zero();
};

MotionState schedule_state(const OrientationSchedule& schedule, double t);

/// Outward unit normals of a regular icosahedron's 20 faces, ordered so that
/// consecutive entries are as far apart as possible (like the numbering of a
/// d20 die). The order is fixed; tests and sequences depend on it.
std::array<Vec3, 20> icosahedron_face_normals();

/// Resting attitudes: the shortest-arc rotation taking each face normal to
/// straight down, i.e. the device sits on that face.
std::array<Quat, 20> icosahedron_orientations();

/// Sample the schedule at the ground truth's rate and emit raw records.
/// Deterministic for a fixed seed.
SampleStream generate(const OrientationSchedule& schedule, const GroundTruth& truth,
                      std::uint64_t seed);

/// The capture protocol at desk scale: first min(n, 20) poses walk the
/// ordered icosahedron faces, the rest are random faces with no immediate
/// repeats. Holds are 3 s, the opening hold 40 s.
SampleStream make_protocol_sequence(int n, const GroundTruth& truth, std::uint64_t seed);

/// The schedule make_protocol_sequence() samples, for callers that need the
/// underlying attitudes.
OrientationSchedule make_protocol_schedule(int n, std::uint64_t seed);

}  // namespace imucal
