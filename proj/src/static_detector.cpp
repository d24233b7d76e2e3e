/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "imucal/static_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "imucal/error.hpp"

namespace imucal {

namespace {

// Prefix sums of the selected accel channel, shifted by the first sample so
// that windowed variances of constant data come out exactly zero.
struct AccelPrefix {
  Eigen::Matrix<double, Eigen::Dynamic, 3> sum;    // row i = sum of rows [0, i)
  Eigen::Matrix<double, Eigen::Dynamic, 3> sum_sq;
  Vec3 reference;

  explicit AccelPrefix(const SampleStream& stream) {
    const auto n = static_cast<Eigen::Index>(stream.size());
    reference = n > 0 ? stream.accel(0) : Vec3::Zero();
    sum.resize(n + 1, 3);
    sum_sq.resize(n + 1, 3);
    sum.row(0).setZero();
    sum_sq.row(0).setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 x = stream.accel(static_cast<std::size_t>(i)) - reference;
      sum.row(i + 1) = sum.row(i) + x.transpose();
      sum_sq.row(i + 1) = sum_sq.row(i) + x.cwiseProduct(x).transpose();
    }
  }

  // Unbiased per-axis variances over [a, b), summed across axes.
  double variance_sq(Eigen::Index a, Eigen::Index b) const {
    const double m = static_cast<double>(b - a);
    const Eigen::RowVector3d s = sum.row(b) - sum.row(a);
    const Eigen::RowVector3d s2 = sum_sq.row(b) - sum_sq.row(a);
    const Eigen::RowVector3d var = (s2 - s.cwiseProduct(s) / m) / (m - 1.0);
    return var.cwiseMax(0.0).sum();
  }

  Vec3 mean(Eigen::Index a, Eigen::Index b) const {
    return reference + (sum.row(b) - sum.row(a)).transpose() / static_cast<double>(b - a);
  }
};

VarianceSeries rolling_variance(const AccelPrefix& prefix, Eigen::Index n, double halfwidth,
                                double sample_rate) {
  const auto half = static_cast<Eigen::Index>(std::lround(halfwidth * sample_rate));
  if (half < 1) raise(Errc::bad_config, "window halfwidth shorter than one sample");
  if (n < 2 * half + 1)
    raise(Errc::insufficient_data, "insufficient data: stream shorter than one window");

  VarianceSeries series;
  series.half_window = half;
  series.first_valid = half;
  series.last_valid = n - 1 - half;
  series.sq = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = series.first_valid; i <= series.last_valid; ++i)
    series.sq(i) = prefix.variance_sq(i - half, i + half + 1);
  return series;
}

std::vector<StaticSegment> segments_from_series(const SampleStream& stream,
                                                const AccelPrefix& prefix,
                                                const VarianceSeries& series, int k,
                                                double baseline_sq,
                                                const DetectorConfig& config) {
  const auto n = static_cast<Eigen::Index>(stream.size());
  const double threshold =
      static_cast<double>(k) * std::max(baseline_sq, config.variance_floor);
  const double cos_threshold = std::cos(config.direction_angle_threshold_deg * M_PI / 180.0);

  std::vector<StaticSegment> segments;
  const Vec3* last_dir = nullptr;
  Vec3 last_dir_storage;

  Eigen::Index i = series.first_valid;
  while (i <= series.last_valid) {
    if (!(series.sq(i) <= threshold)) {
      ++i;
      continue;
    }
    Eigen::Index run_end = i;
    while (run_end + 1 <= series.last_valid && series.sq(run_end + 1) <= threshold) ++run_end;

    // A sample only classifies static when its whole centered window does,
    // so runs already sit one window halfwidth clear of any motion.
    const Eigen::Index a = i;
    const Eigen::Index b = run_end + 1;
    i = run_end + 1;
    if (b - a < 2) continue;

    StaticSegment seg;
    seg.start_index = a;
    seg.end_index = b;
    seg.duration = stream.records[static_cast<std::size_t>(b - 1)].timestamp -
                   stream.records[static_cast<std::size_t>(a)].timestamp +
                   1.0 / stream.sample_rate;
    if (seg.duration < config.min_segment_duration) continue;

    // Run edges may ride a slow drift that stays under the variance
    // threshold; average over a guarded interior so means stay clean.
    const Eigen::Index guard = std::min(series.half_window, (b - a) / 4);
    seg.mean_accel = prefix.mean(a + guard, b - guard);
    const double norm = seg.mean_accel.norm();
    seg.mean_gravity_dir = norm > 1e-12 ? Vec3(seg.mean_accel / norm) : Vec3::Zero();

    // Reject segments whose gravity direction matches the previously
    // accepted one; repeated poses add no information.
    if (last_dir != nullptr && norm > 1e-12 &&
        seg.mean_gravity_dir.dot(*last_dir) > cos_threshold)
      continue;

    last_dir_storage = seg.mean_gravity_dir;
    last_dir = &last_dir_storage;
    segments.push_back(seg);
  }
  (void)n;
  return segments;
}

}  // namespace

VarianceSeries rolling_variance_magnitude(const SampleStream& stream, double window_halfwidth) {
  const AccelPrefix prefix(stream);
  return rolling_variance(prefix, static_cast<Eigen::Index>(stream.size()), window_halfwidth,
                          stream.sample_rate);
}

double baseline_variance(const SampleStream& stream, const DetectorConfig& config) {
  const auto init_n =
      static_cast<Eigen::Index>(std::lround(config.init_phase_duration * stream.sample_rate));
  if (init_n < 2 || static_cast<Eigen::Index>(stream.size()) < init_n)
    raise(Errc::insufficient_data,
          "insufficient data: stream shorter than the initial static phase");
  const AccelPrefix prefix(stream);
  return prefix.variance_sq(0, init_n);
}

std::vector<bool> classify_static(const VarianceSeries& variance, double baseline_sq, int k,
                                  const DetectorConfig& config) {
  const double threshold =
      static_cast<double>(k) * std::max(baseline_sq, config.variance_floor);
  std::vector<bool> flags(static_cast<std::size_t>(variance.sq.size()), false);
  for (Eigen::Index i = variance.first_valid; i <= variance.last_valid; ++i)
    flags[static_cast<std::size_t>(i)] = variance.sq(i) <= threshold;
  return flags;
}

std::vector<StaticSegment> extract_segments(const SampleStream& stream, int k,
                                            double baseline_sq, const DetectorConfig& config) {
  if (k < 1) raise(Errc::bad_config, "threshold factor k must be at least 1");
  const AccelPrefix prefix(stream);
  const VarianceSeries series = rolling_variance(
      prefix, static_cast<Eigen::Index>(stream.size()), config.window_halfwidth,
      stream.sample_rate);
  return segments_from_series(stream, prefix, series, k, baseline_sq, config);
}

ThresholdSelection select_threshold(const SampleStream& stream, const DetectorConfig& config,
                                    const AccelResidualFn& accel_residual) {
  if (config.k_max < 1) raise(Errc::bad_config, "k_max must be at least 1");
  const double baseline_sq = baseline_variance(stream, config);
  const AccelPrefix prefix(stream);
  const VarianceSeries series = rolling_variance(
      prefix, static_cast<Eigen::Index>(stream.size()), config.window_halfwidth,
      stream.sample_rate);

  std::vector<std::size_t> counts(static_cast<std::size_t>(config.k_max) + 1, 0);
  std::size_t best_count = 0;
  for (int k = 1; k <= config.k_max; ++k) {
    const auto segs = segments_from_series(stream, prefix, series, k, baseline_sq, config);
    counts[static_cast<std::size_t>(k)] = segs.size();
    best_count = std::max(best_count, segs.size());
  }

  if (best_count < static_cast<std::size_t>(config.required_min_segments))
    raise(Errc::underdetermined,
          "no usable k: best segment count " + std::to_string(best_count) +
              " is below the required " + std::to_string(config.required_min_segments));

  std::vector<int> tied;
  for (int k = 1; k <= config.k_max; ++k)
    if (counts[static_cast<std::size_t>(k)] == best_count) tied.push_back(k);

  if (tied.size() == 1) {
    ThresholdSelection sel;
    sel.k = tied.front();
    sel.segments = segments_from_series(stream, prefix, series, sel.k, baseline_sq, config);
    return sel;
  }

  // Many tied k typically share the exact same segment list, so cache the
  // residual per distinct list. Smallest residual wins, then smallest k.
  std::map<std::vector<std::pair<Eigen::Index, Eigen::Index>>, double> residual_cache;
  ThresholdSelection best;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int k : tied) {
    auto segs = segments_from_series(stream, prefix, series, k, baseline_sq, config);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> key;
    key.reserve(segs.size());
    for (const StaticSegment& s : segs) key.emplace_back(s.start_index, s.end_index);
    auto it = residual_cache.find(key);
    if (it == residual_cache.end()) it = residual_cache.emplace(std::move(key), accel_residual(segs)).first;
    if (it->second < best_residual) {
      best_residual = it->second;
      best.k = k;
      best.segments = std::move(segs);
    }
  }
  return best;
}

}  // namespace imucal
