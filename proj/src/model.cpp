/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/model.hpp"

#include "imucal/error.hpp"

namespace imucal {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse_error: return "parse_error";
    case Errc::bad_config: return "bad_config";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::underdetermined: return "underdetermined";
    case Errc::diverged: return "diverged";
    case Errc::missing_motion_data: return "missing_motion_data";
    case Errc::inconsistent_parity: return "inconsistent_parity";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

Mat3 AccelParams::misalignment_matrix() const {
  Mat3 t;
  t << 1.0, -misalignment(0), misalignment(1),
       0.0, 1.0, -misalignment(2),
       0.0, 0.0, 1.0;
  return t;
}

Mat3 GyroParams::misalignment_matrix() const {
  Mat3 t;
  t << 1.0, -misalignment(0), misalignment(1),
       misalignment(2), 1.0, -misalignment(3),
       -misalignment(4), misalignment(5), 1.0;
  return t;
}

Vec3 correct_accel(const Vec3& raw, const AccelParams& p) {
  return p.misalignment_matrix() * (p.scale.asDiagonal() * (raw - p.bias));
}

Vec3 uncorrect_accel(const Vec3& value, const AccelParams& p) {
  return p.scale.cwiseInverse().asDiagonal() * (p.misalignment_matrix().inverse() * value) +
         p.bias;
}

Vec3 correct_gyro(const Vec3& raw, const GyroParams& p) {
  return p.misalignment_matrix() * (p.scale.asDiagonal() * (raw - p.bias));
}

Vec3 uncorrect_gyro(const Vec3& value, const GyroParams& p) {
  return p.scale.cwiseInverse().asDiagonal() * (p.misalignment_matrix().inverse() * value) +
         p.bias;
}

namespace {

void check_common(const Vec3& scale, double max_misalignment, const char* what) {
  if (!(scale.array() > 0.0).all())
    raise(Errc::bad_config, std::string(what) + " scale factors must be strictly positive");
  if (max_misalignment >= 0.2)
    raise(Errc::bad_config,
          std::string(what) + " misalignment exceeds the 0.2 rad sanity bound");
}

}  // namespace

void validate(const AccelParams& p) {
  check_common(p.scale, p.misalignment.cwiseAbs().maxCoeff(), "accel");
}

void validate(const GyroParams& p) {
  check_common(p.scale, p.misalignment.cwiseAbs().maxCoeff(), "gyro");
}

}  // namespace imucal
