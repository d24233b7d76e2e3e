/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <functional>
#include <vector>

#include "imucal/types.hpp"

namespace imucal {

struct DetectorConfig {
  double window_halfwidth = 0.5;             // seconds, each side of the center sample
  int k_max = 225;                           // threshold factor sweep upper bound
  double min_segment_duration = 1.0;         // seconds, after trimming
  double init_phase_duration = 30.0;         // seconds of guaranteed-static lead-in
  double direction_angle_threshold_deg = 10.0;
  int required_min_segments = 9;
  // Keeps k * baseline meaningful when the baseline variance is (numerically)
  // zero, e.g. on noiseless synthetic data. Far below any real sensor noise.
  double variance_floor = 1e-9;
};

/// A quasi-static interval. Indices are record positions, [start_index,
/// end_index). Because classification uses centered windows, segments keep a
/// guard of one window halfwidth to the surrounding motion; the guard samples
/// belong to the between-segment motion intervals.
struct StaticSegment {
  Eigen::Index start_index = 0;
  Eigen::Index end_index = 0;
  // Mean over a guarded interior of the run (edges can carry sub-threshold
  // drift), in raw units; the direction is its identity-bootstrap unit form.
  Vec3 mean_accel = Vec3::Zero();
  Vec3 mean_gravity_dir = Vec3::Zero();
  double duration = 0.0;                // seconds
};

/// Centered-window variance magnitude: per-axis accel variances summed, one
/// value per record. Samples whose window does not fit are unavailable.
struct VarianceSeries {
  Eigen::ArrayXd sq;          // NaN outside [first_valid, last_valid]
  Eigen::Index half_window = 0;
  Eigen::Index first_valid = 0;
  Eigen::Index last_valid = -1;

  bool available(Eigen::Index i) const { return i >= first_valid && i <= last_valid; }
};

VarianceSeries rolling_variance_magnitude(const SampleStream& stream, double window_halfwidth);

/// Variance magnitude of the opening static phase, the threshold baseline.
double baseline_variance(const SampleStream& stream, const DetectorConfig& config);

/// Raw per-sample classification at factor k, before trimming and rejection.
/// Monotone in k: anything static at k1 stays static at every k2 > k1.
std::vector<bool> classify_static(const VarianceSeries& variance, double baseline_sq, int k,
                                  const DetectorConfig& config);

std::vector<StaticSegment> extract_segments(const SampleStream& stream, int k,
                                            double baseline_sq, const DetectorConfig& config);

using AccelResidualFn = std::function<double(const std::vector<StaticSegment>&)>;

struct ThresholdSelection {
  int k = 0;
  std::vector<StaticSegment> segments;
};

/// Sweep k = 1..k_max and keep the factor producing the most usable segments.
/// Ties fall back to the smallest accelerometer-fit residual (computed via
/// the callback, once per distinct segment list), then to the smallest k.
/// Throws underdetermined when no k reaches required_min_segments.
ThresholdSelection select_threshold(const SampleStream& stream, const DetectorConfig& config,
                                    const AccelResidualFn& accel_residual);

}  // namespace imucal
