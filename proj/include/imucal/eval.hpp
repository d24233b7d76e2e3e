/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imucal/calibration.hpp"

namespace imucal {

/// Mean absolute difference to the reference, one value per coefficient
/// subset, in reporting units (mg, percent, degrees).
struct SubsetDiffs {
  double accel_bias_mg = 0.0;
  double accel_scale_pct = 0.0;
  double accel_misalignment_deg = 0.0;
  double gyro_scale_pct = 0.0;
  double gyro_misalignment_deg = 0.0;
};

SubsetDiffs subset_diffs(const CalibrationParams& params, const CalibrationParams& reference);

struct EvalCell {
  int n_eff = 0;
  int run_id = 0;
  std::optional<SubsetDiffs> diffs;  // empty = calibration failed at this cell
  std::string error;                 // failure reason when diffs is empty
};

struct EvalMeanRow {
  int n_eff = 0;
  int runs_ok = 0;
  SubsetDiffs diffs;
};

struct EvalReport {
  std::vector<int> n_values;
  std::vector<EvalCell> cells;      // run-major, n_eff-minor
  std::vector<EvalMeanRow> means;   // aggregated over the runs that succeeded
};

/// Element-wise mean of the optimized parameters and the gyro bias.
CalibrationParams reference_params(std::span<const CalibrationResult> runs);

/// The orientation-count study: calibrate each sequence in full, average the
/// results into the reference, then truncate every sequence after its
/// n_eff-th segment (plus one detector window) and re-calibrate. n_values
/// must be strictly increasing. Per-cell failures become missing cells.
EvalReport truncation_sweep(std::span<const SampleStream> sequences,
                            std::span<const int> n_values,
                            const DetectorConfig& detector_config,
                            const SolverConfig& solver_config);

}  // namespace imucal
