/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace imucal {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Quat = Eigen::Quaterniond;

/// Which accelerometer channel drives detection and calibration.
enum class AccelSource { primary, secondary };

/// One sample as it arrives over the air: packet index, both accelerometer
/// channels, and the gyroscope. Units follow the stream's unit header
/// (physical by default, raw LSB if the source emits that).
struct Record {
  std::int64_t packet_index = 0;
  double timestamp = 0.0;  // seconds
  Vec3 accel_primary = Vec3::Zero();
  Vec3 accel_secondary = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

/// Time-ordered raw stream. packet_index is strictly increasing; a jump of
/// more than one marks lost packets (the rows simply do not exist).
struct SampleStream {
  std::vector<Record> records;
  double sample_rate = 100.0;  // Hz
  std::string device_id = "synth";
  std::string accel_unit = "m/s^2";
  std::string gyro_unit = "rad/s";
  AccelSource accel_source = AccelSource::primary;

  const Vec3& accel(std::size_t i) const {
    return accel_source == AccelSource::primary ? records[i].accel_primary
                                                : records[i].accel_secondary;
  }
  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  double duration() const {
    return records.empty()
               ? 0.0
               : records.back().timestamp - records.front().timestamp + 1.0 / sample_rate;
  }
};

}  // namespace imucal
