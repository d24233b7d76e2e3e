/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "imucal/calibration.hpp"
#include "imucal/ec_codec.hpp"
#include "imucal/eval.hpp"
#include "imucal/model.hpp"
#include "imucal/static_detector.hpp"
#include "imucal/types.hpp"

namespace imucal {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

// ---- raw sample streams ----------------------------------------------------
//
// Canonical CSV layout, one packet per row:
//
//   packet_index,t,ax1,ay1,az1,ax2,ay2,az2,gx,gy,gz
//   # units: t=s accel=m/s^2 gyro=rad/s rate_hz=100 device=synth
//   0,0,...
//
// Column group 1 is the high-precision accelerometer, group 2 the IMU-chip
// accelerometer, g the gyroscope. Lost packets are simply absent rows; the
// index gap is preserved on read. Accepted units: accel m/s^2 or lsb, gyro
// rad/s or lsb (raw streams declare lsb and the datasheet scale seeds absorb
// the conversion).

SampleStream read_stream(const std::string& path, AccelSource source = AccelSource::primary);
void write_stream(const std::string& path, const SampleStream& stream);

// ---- calibration parameters ------------------------------------------------
//
// Flat key = value text (one scalar per line, keys like accel.scale.x) or a
// nested JSON mirror; the extension picks the format (.json for JSON).

CalibrationParams load_params(const std::string& path);
void save_params(const std::string& path, const CalibrationParams& params);
std::string params_to_json(const CalibrationParams& params);
std::string params_to_text(const CalibrationParams& params);

// ---- run configuration -----------------------------------------------------

struct RunConfig {
  DetectorConfig detector;
  SolverConfig solver;
  AccelSource accel_source = AccelSource::primary;
  int ec_window = 4;
};

/// Flat key = value text, '#' comments. Unknown keys are rejected.
RunConfig load_config(const std::string& path);

// ---- erasure-code wire files -------------------------------------------
//
// Payload file:  packet_index,payload       (12 lowercase hex chars)
// Encoded file:  packet_index,payload,parity

std::vector<std::pair<std::int64_t, EcPayload>> read_payload_csv(const std::string& path);
void write_payload_csv(const std::string& path,
                       const std::vector<std::pair<std::int64_t, EcPayload>>& payloads);
std::vector<EcPacket> read_ec_csv(const std::string& path);
void write_ec_csv(const std::string& path, const std::vector<EcPacket>& packets);

// ---- detector / evaluation reports ------------------------------------

void write_segments_csv(const std::string& path, const std::vector<StaticSegment>& segments,
                        const SampleStream& stream);
void write_eval_csv(const std::string& path, const EvalReport& report);
void write_eval_json(const std::string& path, const EvalReport& report);

std::string result_to_json(const CalibrationResult& result);

}  // namespace imucal
