/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "imucal/error.hpp"

namespace imucal {

double OrientationSchedule::total_duration() const {
  double total = initial_hold;
  total += std::accumulate(hold_durations.begin(), hold_durations.end(), 0.0);
  if (orientations.size() > 1)
    total += transition_duration * static_cast<double>(orientations.size() - 1);
  return total;
}

void validate(const OrientationSchedule& schedule) {
  if (schedule.orientations.empty())
    raise(Errc::bad_config, "schedule has no orientations");
  if (schedule.orientations.size() != schedule.hold_durations.size())
    raise(Errc::bad_config, "schedule orientation/hold count mismatch");
  if (schedule.transition_duration <= 0.0 || schedule.initial_hold < 0.0)
    raise(Errc::bad_config, "schedule durations must be positive");
  for (double h : schedule.hold_durations)
    if (h <= 0.0) raise(Errc::bad_config, "hold durations must be positive");
  for (const Quat& q : schedule.orientations)
    if (std::abs(q.norm() - 1.0) > 1e-9)
      raise(Errc::bad_config, "schedule orientations must be unit quaternions");
  if (schedule.min_consecutive_angle_deg > 0.0) {
    for (std::size_t i = 1; i < schedule.orientations.size(); ++i) {
      const double angle =
          schedule.orientations[i - 1].angularDistance(schedule.orientations[i]) * 180.0 / M_PI;
      if (angle < schedule.min_consecutive_angle_deg)
        raise(Errc::bad_config, "consecutive orientations " + std::to_string(i - 1) + " and " +
                                    std::to_string(i) + " differ by only " +
                                    std::to_string(angle) + " deg");
    }
  }
}

namespace {

// Shortest-path relative rotation from a to b as an angle/axis pair, axis
// expressed in the body frame of a.
struct RelativeRotation {
  double angle;
  Vec3 axis;
};

RelativeRotation relative_rotation(const Quat& a, const Quat& b) {
  Quat rel = a.conjugate() * b;
  if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
  const Eigen::AngleAxisd aa(rel);
  return {aa.angle(), aa.axis()};
}

// Fraction of the transition angle covered at normalized time tau, and its
// derivative. Both profiles start and end at zero angular speed.
double angle_fraction(TransitionProfile profile, double tau) {
  if (profile == TransitionProfile::smoothstep) return tau * tau * (3.0 - 2.0 * tau);
  return tau <= 0.5 ? 2.0 * tau * tau : 1.0 - 2.0 * (1.0 - tau) * (1.0 - tau);
}

double rate_fraction(TransitionProfile profile, double tau) {
  if (profile == TransitionProfile::smoothstep) return 6.0 * tau * (1.0 - tau);
  return tau <= 0.5 ? 4.0 * tau : 4.0 * (1.0 - tau);
}

}  // namespace

MotionState schedule_state(const OrientationSchedule& schedule, double t) {
  const std::size_t n = schedule.orientations.size();
  MotionState state;
  state.attitude = schedule.orientations.front();

  double phase_end = schedule.initial_hold + schedule.hold_durations.front();
  if (t < phase_end || n == 1) return state;

  for (std::size_t i = 1; i < n; ++i) {
    const double transition_end = phase_end + schedule.transition_duration;
    if (t < transition_end) {
      const double tau = (t - phase_end) / schedule.transition_duration;
      const RelativeRotation rel =
          relative_rotation(schedule.orientations[i - 1], schedule.orientations[i]);
      const Quat step(
          Eigen::AngleAxisd(rel.angle * angle_fraction(schedule.profile, tau), rel.axis));
      state.attitude = (schedule.orientations[i - 1] * step).normalized();
      state.angular_rate = rel.axis * (rel.angle * rate_fraction(schedule.profile, tau) /
                                       schedule.transition_duration);
      return state;
    }
    phase_end = transition_end + schedule.hold_durations[i];
    if (t < phase_end) {
      state.attitude = schedule.orientations[i];
      return state;
    }
  }
  state.attitude = schedule.orientations.back();
  return state;
}

std::array<Vec3, 20> icosahedron_face_normals() {
  // Vertices (0, +-1, +-phi) and cyclic permutations; edge length is 2.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::array<Vec3, 12> v;
  int idx = 0;
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0}) {
      v[static_cast<std::size_t>(idx++)] = Vec3(0.0, s1, s2 * phi);
      v[static_cast<std::size_t>(idx++)] = Vec3(s1, s2 * phi, 0.0);
      v[static_cast<std::size_t>(idx++)] = Vec3(s1 * phi, 0.0, s2);
    }

  // Faces are exactly the triples of mutually adjacent vertices.
  std::array<Vec3, 20> normals;
  std::size_t face = 0;
  auto adjacent = [&](int a, int b) {
    return std::abs((v[static_cast<std::size_t>(a)] - v[static_cast<std::size_t>(b)]).norm() -
                    2.0) < 1e-9;
  };
  for (int a = 0; a < 12; ++a)
    for (int b = a + 1; b < 12; ++b)
      for (int c = b + 1; c < 12; ++c)
        if (adjacent(a, b) && adjacent(b, c) && adjacent(a, c))
          normals[face++] = (v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)] +
                             v[static_cast<std::size_t>(c)])
                                .normalized();

  // Number the faces like a d20 die: opposite faces sit ten apart, so the
  // first ten faces cover ten distinct gravity lines (good conditioning for
  // short sequences) and consecutive faces are always far apart.
  std::array<int, 20> antipode{};
  for (int f = 0; f < 20; ++f)
    for (int g = 0; g < 20; ++g)
      if ((normals[static_cast<std::size_t>(f)] + normals[static_cast<std::size_t>(g)]).norm() <
          1e-9)
        antipode[static_cast<std::size_t>(f)] = g;

  std::array<int, 20> order{};
  std::array<bool, 20> pair_used{};
  order[0] = 0;
  pair_used[0] = pair_used[static_cast<std::size_t>(antipode[0])] = true;
  for (int slot = 1; slot < 10; ++slot) {
    int best = -1;
    double best_dot = 2.0;
    for (int f = 0; f < 20; ++f) {
      if (pair_used[static_cast<std::size_t>(f)]) continue;
      const double d = normals[static_cast<std::size_t>(order[static_cast<std::size_t>(slot - 1)])]
                           .dot(normals[static_cast<std::size_t>(f)]);
      if (d < best_dot) {
        best_dot = d;
        best = f;
      }
    }
    order[static_cast<std::size_t>(slot)] = best;
    pair_used[static_cast<std::size_t>(best)] =
        pair_used[static_cast<std::size_t>(antipode[static_cast<std::size_t>(best)])] = true;
  }
  // Rotate the representative cycle by one: the nine lines left after
  // dropping the greedy seed's line give a full-rank gravity-magnitude fit,
  // so nine-pose sequences are well posed (checked by test).
  std::rotate(order.begin(), order.begin() + 1, order.begin() + 10);

  for (int slot = 10; slot < 20; ++slot)
    order[static_cast<std::size_t>(slot)] =
        antipode[static_cast<std::size_t>(order[static_cast<std::size_t>(19 - slot)])];

  std::array<Vec3, 20> ordered;
  for (int slot = 0; slot < 20; ++slot)
    ordered[static_cast<std::size_t>(slot)] = normals[static_cast<std::size_t>(order[static_cast<std::size_t>(slot)])];
  return ordered;
}

std::array<Quat, 20> icosahedron_orientations() {
  const std::array<Vec3, 20> normals = icosahedron_face_normals();
  std::array<Quat, 20> attitudes;
  const Vec3 down(0.0, 0.0, -1.0);
  // A resting pose leaves the facing free; spread it deterministically by
  // the golden angle. Gravity directions are untouched, but transitions gain
  // yaw content, which the gyroscope z axis needs.
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < 20; ++i) {
    const Quat rest = Quat::FromTwoVectors(normals[i], down);
    const Quat facing(Eigen::AngleAxisd(golden_angle * static_cast<double>(i), Vec3::UnitZ()));
    attitudes[i] = (facing * rest).normalized();
  }
  return attitudes;
}

SampleStream generate(const OrientationSchedule& schedule, const GroundTruth& truth,
                      std::uint64_t seed) {
  validate(schedule);
  if (truth.sample_rate <= 0.0) raise(Errc::bad_config, "sample rate must be positive");
  if (truth.accel_noise_sigma < 0.0 || truth.gyro_noise_sigma < 0.0 ||
      truth.accel_secondary_noise_sigma < 0.0)
    raise(Errc::bad_config, "noise sigmas must be non-negative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise3 = [&](double sigma) {
    return Vec3(sigma * gauss(rng), sigma * gauss(rng), sigma * gauss(rng));
  };

  const double dt = 1.0 / truth.sample_rate;
  const auto total = static_cast<std::int64_t>(std::llround(schedule.total_duration() / dt));
  const Vec3 gravity_up(0.0, 0.0, truth.gravity);

  SampleStream stream;
  stream.sample_rate = truth.sample_rate;
  stream.records.reserve(static_cast<std::size_t>(total));
  for (std::int64_t j = 0; j < total; ++j) {
    const double t = static_cast<double>(j) * dt;
    const MotionState state = schedule_state(schedule, t);
    const Vec3 specific_force = state.attitude.conjugate() * gravity_up;

    Record rec;
    rec.packet_index = j;
    rec.timestamp = t;
    rec.accel_primary =
        uncorrect_accel(specific_force, truth.params.accel) + noise3(truth.accel_noise_sigma);
    rec.accel_secondary = uncorrect_accel(specific_force, truth.params.accel) +
                          noise3(truth.accel_secondary_noise_sigma);
    rec.gyro =
        uncorrect_gyro(state.angular_rate, truth.params.gyro) + noise3(truth.gyro_noise_sigma);
    stream.records.push_back(rec);
  }
  return stream;
}

OrientationSchedule make_protocol_schedule(int n, std::uint64_t seed) {
  if (n < 1) raise(Errc::bad_config, "pose count must be at least 1");

  const std::array<Quat, 20> faces = icosahedron_orientations();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 19);

  OrientationSchedule schedule;
  schedule.initial_hold = 40.0;
  schedule.transition_duration = 1.5;
  schedule.min_consecutive_angle_deg = 41.5;
  int previous = -1;
  for (int i = 0; i < n; ++i) {
    int face;
    if (i < 20) {
      face = i;
    } else {
      do {
        face = pick(rng);
      } while (face == previous);
    }
    schedule.orientations.push_back(faces[static_cast<std::size_t>(face)]);
    schedule.hold_durations.push_back(3.0);
    previous = face;
  }
  return schedule;
}

SampleStream make_protocol_sequence(int n, const GroundTruth& truth, std::uint64_t seed) {
  // Split the seed stream: one half orders the poses, the other drives noise.
  std::mt19937_64 mix(seed);
  const std::uint64_t schedule_seed = mix();
  const std::uint64_t noise_seed = mix();
  return generate(make_protocol_schedule(n, schedule_seed), truth, noise_seed);
}

}  // namespace imucal
