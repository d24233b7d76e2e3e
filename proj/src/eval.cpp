/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/eval.hpp"

#include <cmath>

#include "imucal/error.hpp"

namespace imucal {

namespace {

constexpr double rad_to_deg = 180.0 / M_PI;

double mean_abs(const Eigen::VectorXd& delta) { return delta.cwiseAbs().mean(); }

}  // namespace

SubsetDiffs subset_diffs(const CalibrationParams& params, const CalibrationParams& reference) {
  SubsetDiffs d;
  d.accel_bias_mg = mean_abs(params.accel.bias - reference.accel.bias) / mg_to_mps2;
  d.accel_scale_pct =
      100.0 *
      ((params.accel.scale - reference.accel.scale).cwiseQuotient(reference.accel.scale))
          .cwiseAbs()
          .mean();
  d.accel_misalignment_deg =
      mean_abs(params.accel.misalignment - reference.accel.misalignment) * rad_to_deg;
  d.gyro_scale_pct =
      100.0 *
      ((params.gyro.scale - reference.gyro.scale).cwiseQuotient(reference.gyro.scale))
          .cwiseAbs()
          .mean();
  d.gyro_misalignment_deg =
      mean_abs(params.gyro.misalignment - reference.gyro.misalignment) * rad_to_deg;
  return d;
}

CalibrationParams reference_params(std::span<const CalibrationResult> runs) {
  if (runs.empty()) raise(Errc::insufficient_data, "no calibration runs to average");
  CalibrationParams mean;
  mean.accel.misalignment.setZero();
  mean.accel.scale.setZero();
  mean.accel.bias.setZero();
  mean.gyro.misalignment.setZero();
  mean.gyro.scale.setZero();
  mean.gyro.bias.setZero();
  for (const CalibrationResult& run : runs) {
    mean.accel.misalignment += run.params.accel.misalignment;
    mean.accel.scale += run.params.accel.scale;
    mean.accel.bias += run.params.accel.bias;
    mean.gyro.misalignment += run.params.gyro.misalignment;
    mean.gyro.scale += run.params.gyro.scale;
    mean.gyro.bias += run.params.gyro.bias;
  }
  const double inv = 1.0 / static_cast<double>(runs.size());
  mean.accel.misalignment *= inv;
  mean.accel.scale *= inv;
  mean.accel.bias *= inv;
  mean.gyro.misalignment *= inv;
  mean.gyro.scale *= inv;
  mean.gyro.bias *= inv;
  return mean;
}

EvalReport truncation_sweep(std::span<const SampleStream> sequences,
                            std::span<const int> n_values,
                            const DetectorConfig& detector_config,
                            const SolverConfig& solver_config) {
  if (sequences.empty()) raise(Errc::insufficient_data, "no sequences to evaluate");
  if (n_values.empty()) raise(Errc::bad_config, "no n_eff values requested");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1])
      raise(Errc::bad_config, "n_eff values must be strictly increasing");

  std::vector<CalibrationResult> full_runs;
  full_runs.reserve(sequences.size());
  for (const SampleStream& stream : sequences)
    full_runs.push_back(calibrate(stream, detector_config, solver_config));

  const CalibrationParams reference = reference_params(full_runs);
  const auto window_samples = static_cast<Eigen::Index>(
      2 * std::lround(detector_config.window_halfwidth * sequences[0].sample_rate) + 1);

  EvalReport report;
  report.n_values.assign(n_values.begin(), n_values.end());

  for (std::size_t run = 0; run < sequences.size(); ++run) {
    const SampleStream& stream = sequences[run];
    const std::vector<StaticSegment>& segments = full_runs[run].segments;
    for (int n_eff : n_values) {
      EvalCell cell;
      cell.n_eff = n_eff;
      cell.run_id = static_cast<int>(run);
      if (n_eff > static_cast<int>(segments.size())) {
        cell.error = "sequence has only " + std::to_string(segments.size()) + " segments";
        report.cells.push_back(std::move(cell));
        continue;
      }

      // Cut just after the n_eff-th segment, leaving one full window so the
      // final segment stays detectable in the truncated stream.
      const Eigen::Index cut =
          std::min(static_cast<Eigen::Index>(stream.size()),
                   segments[static_cast<std::size_t>(n_eff - 1)].end_index + window_samples);
      SampleStream truncated;
      truncated.sample_rate = stream.sample_rate;
      truncated.device_id = stream.device_id;
      truncated.accel_unit = stream.accel_unit;
      truncated.gyro_unit = stream.gyro_unit;
      truncated.accel_source = stream.accel_source;
      truncated.records.assign(stream.records.begin(),
                               stream.records.begin() + static_cast<std::ptrdiff_t>(cut));

      try {
        const CalibrationResult result =
            calibrate(truncated, detector_config, solver_config);
        cell.diffs = subset_diffs(result.params, reference);
      } catch (const Error& e) {
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }

  for (int n_eff : n_values) {
    EvalMeanRow row;
    row.n_eff = n_eff;
    for (const EvalCell& cell : report.cells) {
      if (cell.n_eff != n_eff || !cell.diffs) continue;
      row.diffs.accel_bias_mg += cell.diffs->accel_bias_mg;
      row.diffs.accel_scale_pct += cell.diffs->accel_scale_pct;
      row.diffs.accel_misalignment_deg += cell.diffs->accel_misalignment_deg;
      row.diffs.gyro_scale_pct += cell.diffs->gyro_scale_pct;
      row.diffs.gyro_misalignment_deg += cell.diffs->gyro_misalignment_deg;
      ++row.runs_ok;
    }
    if (row.runs_ok > 0) {
      const double inv = 1.0 / row.runs_ok;
      row.diffs.accel_bias_mg *= inv;
      row.diffs.accel_scale_pct *= inv;
      row.diffs.accel_misalignment_deg *= inv;
      row.diffs.gyro_scale_pct *= inv;
      row.diffs.gyro_misalignment_deg *= inv;
    }
    report.means.push_back(row);
  }
  return report;
}

}  // namespace imucal
