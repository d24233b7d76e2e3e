/*
 * SPDX-License-Identifier: Apache-2.0
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "imucal/calibration.hpp"
#include "imucal/error.hpp"
#include "imucal/levmar.hpp"
#include "imucal/synth.hpp"
#include "test_support.hpp"

using namespace imucal;

namespace {

// Segments straight from attitudes, bypassing the detector: the mean raw
// accel of a pose is the inverse-mapped body-frame gravity reaction.
std::vector<StaticSegment> segments_for(const AccelParams& truth, int count,
                                        double noise_of_mean = 0.0, std::uint64_t seed = 0) {
  const auto attitudes = icosahedron_orientations();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<StaticSegment> segments;
  for (int i = 0; i < count; ++i) {
    const Vec3 force = attitudes[static_cast<std::size_t>(i)].conjugate() *
                       Vec3(0.0, 0.0, standard_gravity);
    StaticSegment seg;
    seg.mean_accel = uncorrect_accel(force, truth);
    if (noise_of_mean > 0.0)
      seg.mean_accel += Vec3(gauss(rng), gauss(rng), gauss(rng)) * noise_of_mean;
    seg.mean_gravity_dir = seg.mean_accel.normalized();
    seg.duration = 3.0;
    segments.push_back(seg);
  }
  return segments;
}

GroundTruth exact_truth() {
  GroundTruth truth;
  truth.accel_noise_sigma = 0.0;
  truth.gyro_noise_sigma = 0.0;
  truth.accel_secondary_noise_sigma = 0.0;
  return truth;
}

SampleStream noiseless_protocol_stream(const GroundTruth& truth, int poses, std::uint64_t seed,
                                    TransitionProfile profile) {
  OrientationSchedule schedule = make_protocol_schedule(poses, seed);
  schedule.profile = profile;
  return generate(schedule, truth, seed + 1);
}

std::vector<StaticSegment> detect(const SampleStream& stream, const DetectorConfig& config,
                                  int k = 1) {
  return extract_segments(stream, k, baseline_variance(stream, config), config);
}

}  // namespace

TEST_CASE("zero angular rate integrates to the identity with no NaN") {
  const std::vector<Vec3> rates(200, Vec3::Zero());
  for (auto method : {IntegrationMethod::rk4, IntegrationMethod::euler}) {
    const Quat q = integrate_orientation(rates, GyroParams{}, 0.01, method);
    CHECK(std::isfinite(q.w()));
    CHECK(q.angularDistance(Quat::Identity()) == doctest::Approx(0.0));
    CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  // A single all-zero sample embedded in real motion must not poison it.
  std::vector<Vec3> mixed(101, Vec3(0.0, 0.0, 0.3));
  mixed[50] = Vec3::Zero();
  const Quat q = integrate_orientation(mixed, GyroParams{}, 0.01, IntegrationMethod::euler);
  CHECK(q.coeffs().allFinite());
}

TEST_CASE("constant rate produces the closed-form rotation") {
  const std::vector<Vec3> rates(101, Vec3(0.0, 0.0, M_PI / 2.0));
  const Quat expected(Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitZ()));
  for (auto method : {IntegrationMethod::rk4, IntegrationMethod::euler}) {
    const Quat q = integrate_orientation(rates, GyroParams{}, 0.01, method);
    CHECK(q.angularDistance(expected) < 1e-6);
  }
}

TEST_CASE("integration reverses exactly") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> rates;
    for (int block = 0; block < 40; ++block) {
      const Vec3 rate = test::random_vec3(rng, 2.0);
      for (int rep = 0; rep < 4; ++rep) rates.push_back(rate);
    }
    std::vector<Vec3> reversed(rates.rbegin(), rates.rend());
    for (Vec3& r : reversed) r = -r;
    const Quat fwd = integrate_orientation(rates, GyroParams{}, 0.01, IntegrationMethod::rk4);
    const Quat back =
        integrate_orientation(reversed, GyroParams{}, 0.01, IntegrationMethod::rk4);
    CHECK((fwd * back).angularDistance(Quat::Identity()) < 1e-6);
  }
}

TEST_CASE("integration output stays unit norm") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec3> rates;
    const int n = 2 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) rates.push_back(test::random_vec3(rng, 6.0));
    const Quat q = integrate_orientation(rates, GyroParams{}, 0.01,
                                         trial % 2 == 0 ? IntegrationMethod::rk4
                                                        : IntegrationMethod::euler);
    CHECK(std::abs(q.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("accel fit: identity fixed point") {
  const auto segments = segments_for(AccelParams{}, 12);
  const auto [params, cost] = calibrate_accel(segments, AccelParams{}, SolverConfig{});
  CHECK(params.misalignment.cwiseAbs().maxCoeff() < 1e-8);
  CHECK((params.scale - Vec3::Ones()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(params.bias.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(cost < 1e-16);
}

TEST_CASE("accel fit: recovers a known non-identity truth from exact means") {
  AccelParams truth;
  truth.scale = Vec3(1.01, 0.99, 1.012);
  truth.misalignment = Vec3(0.0087, -0.0087, 0.0055);  // ~0.5 deg
  truth.bias = Vec3(0.196, -0.196, 0.098);             // ~20 mg
  const auto segments = segments_for(truth, 20);
  const auto [params, cost] = calibrate_accel(segments, AccelParams{}, SolverConfig{});
  CHECK((params.scale - truth.scale).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((params.misalignment - truth.misalignment).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((params.bias - truth.bias).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(cost < 1e-12);
}

TEST_CASE("accel fit: bias error stays under 1 mg at the ADXL noise floor") {
  AccelParams truth;
  truth.scale = Vec3(1.005, 0.995, 1.002);
  truth.misalignment = Vec3(0.005, 0.004, -0.006);
  truth.bias = Vec3(0.1, -0.15, 0.05);
  const double sigma_mean = 200e-6 * standard_gravity / std::sqrt(300.0);  // 3 s at 100 Hz
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto segments = segments_for(truth, 20, sigma_mean, seed);
    const auto [params, cost] = calibrate_accel(segments, AccelParams{}, SolverConfig{});
    CHECK((params.bias - truth.bias).cwiseAbs().maxCoeff() < mg_to_mps2);
  }
}

TEST_CASE("accel fit: fewer than nine segments is underdetermined") {
  const auto segments = segments_for(AccelParams{}, 8);
  try {
    (void)calibrate_accel(segments, AccelParams{}, SolverConfig{});
    FAIL("expected underdetermined");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::underdetermined);
  }
}

TEST_CASE("accepted LM steps never increase the cost") {
  AccelParams truth;
  truth.scale = Vec3(1.01, 0.99, 1.005);
  truth.bias = Vec3(0.2, -0.1, 0.15);
  const auto segments = segments_for(truth, 15, 5e-4, 3);
  const double g_sq = standard_gravity * standard_gravity;
  ResidualFn fn = [&](const Eigen::VectorXd& x) {
    AccelParams p;
    p.misalignment = x.segment<3>(0);
    p.scale = x.segment<3>(3);
    p.bias = x.segment<3>(6);
    Eigen::VectorXd r(static_cast<Eigen::Index>(segments.size()));
    for (std::size_t i = 0; i < segments.size(); ++i)
      r(static_cast<Eigen::Index>(i)) =
          g_sq - correct_accel(segments[i].mean_accel, p).squaredNorm();
    return r;
  };
  Eigen::VectorXd x0(9);
  x0 << 0, 0, 0, 1, 1, 1, 0, 0, 0;
  const LmResult fit = lm_minimize(fn, x0);
  CHECK(fit.converged);
  for (std::size_t i = 1; i < fit.cost_trace.size(); ++i)
    CHECK(fit.cost_trace[i] <= fit.cost_trace[i - 1]);
}

TEST_CASE("numeric jacobian agrees with an independent stencil") {
  ResidualFn fn = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(3);
    r << x(0) * x(0) + std::sin(x(1)), x(0) * x(1), std::exp(0.3 * x(1)) - x(0);
    return r;
  };
  Eigen::VectorXd x(2);
  x << 1.3, -0.7;
  const Eigen::MatrixXd jac = numeric_jacobian(fn, x, 1e-7);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd hi = x, lo = x;
    hi(j) += h;
    lo(j) -= h;
    const Eigen::VectorXd col = (fn(hi) - fn(lo)) / (2.0 * h);
    CHECK((jac.col(j) - col).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, col.norm()));
  }
}

TEST_CASE("gyro bias estimation") {
  SampleStream stream;
  stream.sample_rate = 100.0;
  const Vec3 bias(0.01, -0.02, 0.005);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1e-3);
  for (int i = 0; i < 4000; ++i) {
    Record rec;
    rec.packet_index = i;
    rec.timestamp = i / 100.0;
    rec.accel_primary = Vec3(0, 0, standard_gravity);
    rec.gyro = bias + Vec3(gauss(rng), gauss(rng), gauss(rng));
    stream.records.push_back(rec);
  }
  StaticSegment seg;
  seg.start_index = 0;
  seg.end_index = 4000;
  seg.duration = 40.0;

  const Vec3 estimated = estimate_gyro_bias(stream, seg);
  CHECK((estimated - bias).cwiseAbs().maxCoeff() < 3.0 * 1e-3 / std::sqrt(4000.0));

  for (Record& rec : stream.records) rec.gyro = bias;
  CHECK((estimate_gyro_bias(stream, seg) - bias).norm() == doctest::Approx(0.0));

  seg.duration = 5.0;
  CHECK_THROWS_AS((void)estimate_gyro_bias(stream, seg), Error);
}

TEST_CASE("gyro fit: identity fixed point on an exactly sampled profile") {
  const SampleStream stream =
      noiseless_protocol_stream(exact_truth(), 12, 21, TransitionProfile::triangle);
  const auto segments = detect(stream, DetectorConfig{});
  REQUIRE(segments.size() == 12);

  const auto [params, cost] =
      calibrate_gyro(stream, segments, AccelParams{}, Vec3::Zero(), GyroParams{},
                     SolverConfig{});
  CHECK(params.misalignment.cwiseAbs().maxCoeff() < 1e-6);
  CHECK((params.scale - Vec3::Ones()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gyro fit: recovers a known truth on an exactly sampled profile") {
  GroundTruth truth = exact_truth();
  truth.params.gyro.scale = Vec3(1.01, 0.99, 1.008);
  truth.params.gyro.misalignment << 0.0087, -0.0060, 0.0045, -0.0087, 0.0070, -0.0050;
  const SampleStream stream =
      noiseless_protocol_stream(truth, 12, 33, TransitionProfile::triangle);
  const auto segments = detect(stream, DetectorConfig{});
  REQUIRE(segments.size() == 12);

  const auto [params, cost] = calibrate_gyro(stream, segments, AccelParams{}, Vec3::Zero(),
                                             GyroParams{}, SolverConfig{});
  CHECK((params.scale - truth.params.gyro.scale).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((params.misalignment - truth.params.gyro.misalignment).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("gyro fit: smoothstep sampling error behaves like a tiny scale offset") {
  const SampleStream stream =
      noiseless_protocol_stream(exact_truth(), 12, 55, TransitionProfile::smoothstep);
  const auto segments = detect(stream, DetectorConfig{});
  REQUIRE(segments.size() == 12);
  const auto [params, cost] = calibrate_gyro(stream, segments, AccelParams{}, Vec3::Zero(),
                                             GyroParams{}, SolverConfig{});
  CHECK((params.scale - Vec3::Ones()).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(params.misalignment.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("full pipeline on the generator default sequence") {
  GroundTruth truth;
  truth.params.accel.scale = Vec3(1.01, 0.988, 1.004);
  truth.params.accel.misalignment = Vec3(0.006, -0.007, 0.009);
  truth.params.accel.bias = Vec3(0.15, -0.2, 0.1);
  truth.params.gyro.scale = Vec3(0.995, 1.006, 1.012);
  truth.params.gyro.misalignment << 0.004, -0.006, 0.008, -0.003, 0.007, -0.005;
  truth.params.gyro.bias = Vec3(0.01, -0.02, 0.005);

  const SampleStream stream = make_protocol_sequence(12, truth, 101);
  const CalibrationResult result = calibrate(stream, DetectorConfig{}, SolverConfig{});

  CHECK(result.segments_used == 12);
  CHECK(result.accel_converged);
  CHECK(result.gyro_converged);
  CHECK((result.params.accel.bias - truth.params.accel.bias).cwiseAbs().maxCoeff() <
        mg_to_mps2);
  CHECK((result.params.accel.scale - truth.params.accel.scale).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((result.params.gyro.bias - truth.params.gyro.bias).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((result.params.gyro.scale - truth.params.gyro.scale).cwiseAbs().maxCoeff() < 1e-3);

  // Every corrected segment mean should sit on the gravity sphere to within
  // three times the propagated mean noise. The fit weights all segments
  // equally, so the binding noise scale is the shortest segment's.
  double shortest_mean_count = 1e18;
  for (const StaticSegment& seg : result.segments) {
    const Eigen::Index n_run = seg.end_index - seg.start_index;
    shortest_mean_count = std::min(
        shortest_mean_count,
        static_cast<double>(n_run - 2 * std::min<Eigen::Index>(50, n_run / 4)));
  }
  const double noise_of_mean = truth.accel_noise_sigma / std::sqrt(shortest_mean_count);
  for (const StaticSegment& seg : result.segments) {
    const double deviation =
        std::abs(correct_accel(seg.mean_accel, result.params.accel).norm() - standard_gravity);
    CHECK(deviation < 3.0 * noise_of_mean);
  }

  // Bit-identical on a second run.
  const CalibrationResult again = calibrate(stream, DetectorConfig{}, SolverConfig{});
  CHECK(again.params.accel.bias == result.params.accel.bias);
  CHECK(again.params.gyro.scale == result.params.gyro.scale);
  CHECK(again.k_selected == result.k_selected);
}

TEST_CASE("the secondary accelerometer channel can drive calibration") {
  GroundTruth truth;
  truth.params.accel.scale = Vec3(1.012, 0.991, 1.006);
  truth.params.accel.bias = Vec3(0.1, -0.12, 0.08);
  SampleStream stream = make_protocol_sequence(12, truth, 909);
  stream.accel_source = AccelSource::secondary;

  const CalibrationResult result = calibrate(stream, DetectorConfig{}, SolverConfig{});
  CHECK(result.segments_used == 12);
  // The IMU-chip channel is an order of magnitude noisier, so the tolerance
  // scales accordingly.
  CHECK((result.params.accel.bias - truth.params.accel.bias).cwiseAbs().maxCoeff() <
        10.0 * mg_to_mps2);
  CHECK((result.params.accel.scale - truth.params.accel.scale).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("eight poses fail as underdetermined") {
  const SampleStream stream = make_protocol_sequence(8, GroundTruth{}, 7);
  try {
    (void)calibrate(stream, DetectorConfig{}, SolverConfig{});
    FAIL("expected underdetermined");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::underdetermined);
  }
}

TEST_CASE("a gyro gap mid-rotation is missing motion data") {
  const SampleStream full = make_protocol_sequence(12, GroundTruth{}, 13);
  // Knock a hole into the middle of the first transition (43.0 s + a bit).
  SampleStream gapped = full;
  const auto cut = static_cast<std::ptrdiff_t>(43.6 * 100);
  gapped.records.erase(gapped.records.begin() + cut, gapped.records.begin() + cut + 10);
  try {
    (void)calibrate(gapped, DetectorConfig{}, SolverConfig{});
    FAIL("expected missing_motion_data");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_motion_data);
    CHECK(std::string(e.what()).find("gyro") != std::string::npos);
  }
}

TEST_CASE("gaps inside a static phase are tolerated") {
  const SampleStream full = make_protocol_sequence(12, GroundTruth{}, 29);
  SampleStream gapped = full;
  // Drop half a second from the middle of the opening static phase.
  const auto cut = static_cast<std::ptrdiff_t>(15.0 * 100);
  gapped.records.erase(gapped.records.begin() + cut, gapped.records.begin() + cut + 50);
  const CalibrationResult result = calibrate(gapped, DetectorConfig{}, SolverConfig{});
  CHECK(result.segments_used == 12);
  CHECK(result.gyro_converged);
}
